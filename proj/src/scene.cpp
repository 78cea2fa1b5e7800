#include "cms/scene.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>

#include "cms/errors.hpp"
#include "cms/rng.hpp"

namespace cms {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kPedestalHeight = 0.6;
constexpr double kPedestalHalfWidth = 0.15;

double deg2rad(double d) { return d * kPi / 180.0; }
double rad2deg(double r) { return r * 180.0 / kPi; }

struct Sampler {
  ColoredPointCloud& cloud;
  CounterRng rng;
  std::uint64_t counter = 0;

  double jitter(double d) { return (rng.uniform(counter, 0) - 0.5) * 0.6 * d; }
  double phase() { return rng.uniform(counter, 1); }

  void add(const Vec3& p, const std::array<float, 3>& color) {
    ++counter;
    cloud.push_back(Point3::from(p), std::span<const float>(color.data(), 3));
  }
};

using ColorFn = std::array<float, 3> (*)(const Vec3&, const std::array<float, 3>&);

std::array<float, 3> flat(const Vec3&, const std::array<float, 3>& c) { return c; }

std::array<float, 3> checker(const Vec3& p, const std::array<float, 3>& c) {
  const auto cell = static_cast<long long>(std::floor(p[0] / 0.25)) + static_cast<long long>(std::floor(p[1] / 0.25));
  const float s = (cell & 1) ? 0.8f : 1.0f;
  return {c[0] * s, c[1] * s, c[2] * s};
}

// Rectangle origin + a*u + b*v, a in [0, len_u], b in [0, len_v].
void sample_rect(Sampler& s, const Vec3& origin, const Vec3& u, double len_u, const Vec3& v, double len_v,
                 double d, const std::array<float, 3>& color, ColorFn shade = flat) {
  const auto nu = static_cast<std::size_t>(std::max(1.0, std::round(len_u / d)));
  const auto nv = static_cast<std::size_t>(std::max(1.0, std::round(len_v / d)));
  const double du = len_u / static_cast<double>(nu);
  const double dv = len_v / static_cast<double>(nv);
  for (std::size_t j = 0; j < nv; ++j)
    for (std::size_t i = 0; i < nu; ++i) {
      const double a = std::clamp((static_cast<double>(i) + 0.5) * du + s.jitter(du), 0.0, len_u);
      const double b = std::clamp((static_cast<double>(j) + 0.5) * dv + s.jitter(dv), 0.0, len_v);
      const Vec3 p = origin + a * u + b * v;
      s.add(p, shade(p, color));
    }
}

// Horizontal disk at height z, rings at spacing d.
void sample_disk(Sampler& s, double radius, double z, double d, const std::array<float, 3>& color) {
  const auto rings = static_cast<std::size_t>(std::max(1.0, std::round(radius / d)));
  const double dr = radius / static_cast<double>(rings);
  for (std::size_t j = 0; j < rings; ++j) {
    const double rho = (static_cast<double>(j) + 0.5) * dr;
    const auto n = static_cast<std::size_t>(std::max(1.0, std::round(2.0 * kPi * rho / d)));
    const double off = s.phase();
    for (std::size_t i = 0; i < n; ++i) {
      const double phi = 2.0 * kPi * (static_cast<double>(i) + off) / static_cast<double>(n);
      s.add({rho * std::cos(phi), rho * std::sin(phi), z}, color);
    }
  }
}

std::array<float, 3> shade_by_height(const std::array<float, 3>& c, double z, double radius) {
  const float k = static_cast<float>(0.75 + 0.25 * std::clamp((z + radius) / (2.0 * radius), 0.0, 1.0));
  return {c[0] * k, c[1] * k, c[2] * k};
}

void sample_object(Sampler& s, const SceneSpec& spec) {
  const double r = spec.object_radius;
  const double d = spec.object_density();
  const auto& col = spec.object_color;
  switch (spec.shape) {
    case Shape::Sphere: {
      // Fibonacci lattice, one point per d^2 of surface.
      const auto n = static_cast<std::size_t>(std::max(1.0, std::round(4.0 * kPi * r * r / (d * d))));
      const double golden = kPi * (3.0 - std::sqrt(5.0));
      const double off = 2.0 * kPi * s.phase();
      for (std::size_t i = 0; i < n; ++i) {
        const double z = 1.0 - (2.0 * static_cast<double>(i) + 1.0) / static_cast<double>(n);
        const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
        const double phi = golden * static_cast<double>(i) + off;
        const Vec3 p{r * rho * std::cos(phi), r * rho * std::sin(phi), r * z};
        s.add(p, shade_by_height(col, p[2], r));
      }
      break;
    }
    case Shape::Box: {
      const double a = r / std::sqrt(3.0);
      const double e = 2.0 * a;
      const std::array<float, 3> top = shade_by_height(col, a, r), mid = shade_by_height(col, 0.0, r),
                                 bot = shade_by_height(col, -a, r);
      sample_rect(s, {-a, -a, a}, {1, 0, 0}, e, {0, 1, 0}, e, d, top);
      sample_rect(s, {-a, -a, -a}, {1, 0, 0}, e, {0, 1, 0}, e, d, bot);
      sample_rect(s, {-a, -a, -a}, {1, 0, 0}, e, {0, 0, 1}, e, d, mid);
      sample_rect(s, {-a, a, -a}, {1, 0, 0}, e, {0, 0, 1}, e, d, mid);
      sample_rect(s, {-a, -a, -a}, {0, 1, 0}, e, {0, 0, 1}, e, d, mid);
      sample_rect(s, {a, -a, -a}, {0, 1, 0}, e, {0, 0, 1}, e, d, mid);
      break;
    }
    case Shape::Cylinder: {
      const double rc = 0.7 * r;
      const double hh = std::sqrt(r * r - rc * rc);
      const auto nphi = static_cast<std::size_t>(std::max(3.0, std::round(2.0 * kPi * rc / d)));
      const auto nz = static_cast<std::size_t>(std::max(1.0, std::round(2.0 * hh / d)));
      for (std::size_t j = 0; j < nz; ++j) {
        const double z = -hh + (static_cast<double>(j) + 0.5) * 2.0 * hh / static_cast<double>(nz);
        const double off = s.phase();
        for (std::size_t i = 0; i < nphi; ++i) {
          const double phi = 2.0 * kPi * (static_cast<double>(i) + off) / static_cast<double>(nphi);
          s.add({rc * std::cos(phi), rc * std::sin(phi), z}, shade_by_height(col, z, r));
        }
      }
      sample_disk(s, rc, hh, d, shade_by_height(col, hh, r));
      sample_disk(s, rc, -hh, d, shade_by_height(col, -hh, r));
      break;
    }
    case Shape::Cone: {
      const double rb = 0.7 * r;
      const double hh = std::sqrt(r * r - rb * rb);
      const double slant = std::sqrt(rb * rb + 4.0 * hh * hh);
      const auto rings = static_cast<std::size_t>(std::max(1.0, std::round(slant / d)));
      for (std::size_t j = 0; j < rings; ++j) {
        const double frac = (static_cast<double>(j) + 0.5) / static_cast<double>(rings);  // 0 at base
        const double rho = rb * (1.0 - frac);
        const double z = -hh + 2.0 * hh * frac;
        const auto n = static_cast<std::size_t>(std::max(1.0, std::round(2.0 * kPi * rho / d)));
        const double off = s.phase();
        for (std::size_t i = 0; i < n; ++i) {
          const double phi = 2.0 * kPi * (static_cast<double>(i) + off) / static_cast<double>(n);
          s.add({rho * std::cos(phi), rho * std::sin(phi), z}, shade_by_height(col, z, r));
        }
      }
      sample_disk(s, rb, -hh, d, shade_by_height(col, -hh, r));
      break;
    }
    case Shape::Torus: {
      const double major = 0.65 * r;
      const double minor = 0.35 * r;
      const auto nv = static_cast<std::size_t>(std::max(3.0, std::round(2.0 * kPi * minor / d)));
      for (std::size_t j = 0; j < nv; ++j) {
        const double v = 2.0 * kPi * (static_cast<double>(j) + 0.5) / static_cast<double>(nv);
        const double rho = major + minor * std::cos(v);
        const double z = minor * std::sin(v);
        const auto nu = static_cast<std::size_t>(std::max(3.0, std::round(2.0 * kPi * rho / d)));
        const double off = s.phase();
        for (std::size_t i = 0; i < nu; ++i) {
          const double u = 2.0 * kPi * (static_cast<double>(i) + off) / static_cast<double>(nu);
          s.add({rho * std::cos(u), rho * std::sin(u), z}, shade_by_height(col, z, r));
        }
      }
      break;
    }
  }
}

double object_area(const SceneSpec& spec) {
  const double r = spec.object_radius;
  switch (spec.shape) {
    case Shape::Sphere: return 4.0 * kPi * r * r;
    case Shape::Box: { const double e = 2.0 * r / std::sqrt(3.0); return 6.0 * e * e; }
    case Shape::Cylinder: { const double rc = 0.7 * r, hh = std::sqrt(r * r - rc * rc); return 2.0 * kPi * rc * 2.0 * hh + 2.0 * kPi * rc * rc; }
    case Shape::Cone: { const double rb = 0.7 * r, hh = std::sqrt(r * r - rb * rb); return kPi * rb * std::sqrt(rb * rb + 4.0 * hh * hh) + kPi * rb * rb; }
    case Shape::Torus: return 4.0 * kPi * kPi * 0.65 * r * 0.35 * r;
  }
  return 0.0;
}

double floor_z(const SceneSpec& spec) { return -(spec.object_radius + kPedestalHeight); }

double background_area(const SceneSpec& spec) {
  const double l = spec.room_half_extent;
  const double height = l - floor_z(spec);
  const double pedestal = 4.0 * 2.0 * kPedestalHalfWidth * kPedestalHeight + 4.0 * kPedestalHalfWidth * kPedestalHalfWidth;
  return 4.0 * 2.0 * l * height + 2.0 * 4.0 * l * l + pedestal;
}

}  // namespace

std::string_view to_string(Shape shape) {
  switch (shape) {
    case Shape::Sphere: return "sphere";
    case Shape::Box: return "box";
    case Shape::Cylinder: return "cylinder";
    case Shape::Cone: return "cone";
    case Shape::Torus: return "torus";
  }
  return "?";
}

Shape parse_shape(std::string_view name) {
  for (Shape s : {Shape::Sphere, Shape::Box, Shape::Cylinder, Shape::Cone, Shape::Torus})
    if (to_string(s) == name) return s;
  throw InvalidArgument("unknown shape '" + std::string(name) + "'");
}

void SceneSpec::validate() const {
  if (!(point_density > 0.0) || !std::isfinite(point_density)) throw InvalidArgument("point_density must be positive");
  if (!(object_point_density >= 0.0) || !std::isfinite(object_point_density))
    throw InvalidArgument("object_point_density must be >= 0");
  if (!(object_radius > 0.0)) throw InvalidArgument("object_radius must be positive");
  if (!(room_half_extent > object_radius + kPedestalHalfWidth))
    throw InvalidArgument("room_half_extent must exceed the object bounding radius");
  for (float c : object_color)
    if (!(c >= 0.0f && c <= 1.0f)) throw InvalidArgument("object_color channels must lie in [0, 1]");
}

SceneSpec default_scene_spec(std::uint32_t class_id, std::uint64_t seed) {
  static constexpr std::array<std::array<float, 3>, 5> kPalette{{{0.85f, 0.15f, 0.10f},
                                                                 {0.10f, 0.70f, 0.20f},
                                                                 {0.15f, 0.30f, 0.85f},
                                                                 {0.90f, 0.80f, 0.10f},
                                                                 {0.80f, 0.20f, 0.75f}}};
  static constexpr Shape kShapes[] = {Shape::Sphere, Shape::Box, Shape::Cylinder, Shape::Cone, Shape::Torus};
  SceneSpec s;
  s.class_id = class_id;
  s.shape = kShapes[class_id % 5];
  s.object_color = kPalette[(class_id + class_id / 5) % 5];
  s.rng_seed = splitmix64(seed + class_id);
  return s;
}

ColoredPointCloud generate_object(const SceneSpec& spec) {
  spec.validate();
  const double estimate = object_area(spec) / (spec.object_density() * spec.object_density());
  if (estimate > static_cast<double>(spec.max_points)) throw BudgetError("object exceeds the point budget");
  ColoredPointCloud cloud(3);
  cloud.reserve(static_cast<std::size_t>(estimate * 1.1) + 16);
  Sampler s{cloud, CounterRng(spec.rng_seed, 1)};
  sample_object(s, spec);
  return cloud;
}

ColoredPointCloud generate_scene(const SceneSpec& spec) {
  spec.validate();
  const double estimate = object_area(spec) / (spec.object_density() * spec.object_density()) +
                          background_area(spec) / (spec.point_density * spec.point_density);
  if (estimate > static_cast<double>(spec.max_points))
    throw BudgetError("scene needs about " + std::to_string(static_cast<std::size_t>(estimate)) +
                      " points, budget is " + std::to_string(spec.max_points));

  ColoredPointCloud cloud(3);
  cloud.reserve(static_cast<std::size_t>(estimate * 1.1) + 16);
  const double d = spec.point_density;
  const double l = spec.room_half_extent;
  const double fz = floor_z(spec);
  const double height = l - fz;

  Sampler room{cloud, CounterRng(spec.rng_seed, 2)};
  sample_rect(room, {-l, -l, fz}, {1, 0, 0}, 2 * l, {0, 1, 0}, 2 * l, d, {0.45f, 0.35f, 0.25f}, checker);
  sample_rect(room, {-l, -l, l}, {1, 0, 0}, 2 * l, {0, 1, 0}, 2 * l, d, {0.9f, 0.9f, 0.88f});
  sample_rect(room, {-l, -l, fz}, {1, 0, 0}, 2 * l, {0, 0, 1}, height, d, {0.72f, 0.72f, 0.66f});
  sample_rect(room, {-l, l, fz}, {1, 0, 0}, 2 * l, {0, 0, 1}, height, d, {0.66f, 0.70f, 0.74f});
  sample_rect(room, {-l, -l, fz}, {0, 1, 0}, 2 * l, {0, 0, 1}, height, d, {0.74f, 0.68f, 0.68f});
  sample_rect(room, {l, -l, fz}, {0, 1, 0}, 2 * l, {0, 0, 1}, height, d, {0.68f, 0.74f, 0.68f});

  const double w = kPedestalHalfWidth;
  const double top = -spec.object_radius;
  const std::array<float, 3> stone{0.55f, 0.50f, 0.45f};
  Sampler ped{cloud, CounterRng(spec.rng_seed, 3)};
  sample_rect(ped, {-w, -w, top}, {1, 0, 0}, 2 * w, {0, 1, 0}, 2 * w, d, stone);
  sample_rect(ped, {-w, -w, fz}, {1, 0, 0}, 2 * w, {0, 0, 1}, kPedestalHeight, d, stone);
  sample_rect(ped, {-w, w, fz}, {1, 0, 0}, 2 * w, {0, 0, 1}, kPedestalHeight, d, stone);
  sample_rect(ped, {-w, -w, fz}, {0, 1, 0}, 2 * w, {0, 0, 1}, kPedestalHeight, d, stone);
  sample_rect(ped, {w, -w, fz}, {0, 1, 0}, 2 * w, {0, 0, 1}, kPedestalHeight, d, stone);

  Sampler obj{cloud, CounterRng(spec.rng_seed, 1)};
  sample_object(obj, spec);
  return cloud;
}

// ---------------------------------------------------------------------------
// Poses

std::string_view to_string(Split split) { return split == Split::Train ? "train" : "test"; }

MotionParams look_at_pose(const PoseAngles& a) {
  const double yaw = deg2rad(a.yaw_deg);
  const double pitch = deg2rad(a.pitch_deg);
  const double roll = deg2rad(a.roll_deg);
  const Vec3 center{a.radius * std::cos(pitch) * std::cos(yaw), a.radius * std::cos(pitch) * std::sin(yaw),
                    a.radius * std::sin(pitch)};
  const Vec3 forward = (-1.0 / norm(center)) * center;
  Vec3 right0 = cross(forward, {0, 0, 1});
  right0 = (1.0 / norm(right0)) * right0;
  const Vec3 down0 = cross(forward, right0);
  const Vec3 right = std::cos(roll) * right0 + std::sin(roll) * down0;
  const Vec3 down = -std::sin(roll) * right0 + std::cos(roll) * down0;
  const Mat3 r{{right[0], down[0], forward[0], right[1], down[1], forward[1], right[2], down[2], forward[2]}};
  return {axis_angle_from_rotation(r), center};
}

PoseAngles angles_from_pose(const MotionParams& pose) {
  const Mat3 r = rotation_from_axis_angle(pose.rotvec);
  const Vec3 right{r(0, 0), r(1, 0), r(2, 0)};
  const Vec3 forward{r(0, 2), r(1, 2), r(2, 2)};
  PoseAngles a;
  a.radius = norm(pose.translation);
  a.yaw_deg = rad2deg(std::atan2(-forward[1], -forward[0]));
  if (a.yaw_deg < 0.0) a.yaw_deg += 360.0;
  a.pitch_deg = rad2deg(std::asin(std::clamp(-forward[2], -1.0, 1.0)));
  Vec3 right0 = cross(forward, {0, 0, 1});
  right0 = (1.0 / norm(right0)) * right0;
  const Vec3 down0 = cross(forward, right0);
  a.roll_deg = rad2deg(std::atan2(dot(right, down0), dot(right, right0)));
  return a;
}

double angular_distance_deg(double a, double b) {
  double d = std::fmod(std::abs(a - b), 360.0);
  return d > 180.0 ? 360.0 - d : d;
}

std::vector<PoseSample> sample_poses(Split split, std::size_t count, double gap_degrees, std::uint64_t rng_seed,
                                     const PoseSamplerConfig& cfg, std::size_t test_count) {
  if (count == 0) throw InvalidArgument("sample_poses: count must be >= 1");
  if (!(gap_degrees >= 0.0)) throw InvalidArgument("sample_poses: gap must be >= 0");

  auto test_angles = [&](std::size_t n) {
    std::vector<PoseAngles> out;
    for (std::size_t i = 0; i < n; ++i)
      out.push_back({360.0 * static_cast<double>(i) / static_cast<double>(n), cfg.test_pitch_deg, 0.0, cfg.test_radius});
    return out;
  };

  std::vector<PoseSample> poses;
  poses.reserve(count);
  if (split == Split::Test) {
    for (const PoseAngles& a : test_angles(count)) poses.push_back({look_at_pose(a), Split::Test, a});
    return poses;
  }

  if (test_count == 0) throw InvalidArgument("sample_poses: test_count must be >= 1");
  const auto tests = test_angles(test_count);
  const CounterRng rng(rng_seed, 0x7472'6169'6eull);
  std::uint64_t attempt = 0;
  while (poses.size() < count) {
    if (attempt >= cfg.retry_budget)
      throw InfeasibleError("sample_poses: angular gap of " + std::to_string(gap_degrees) +
                            " degrees not reachable within the retry budget");
    PoseAngles a;
    a.yaw_deg = 360.0 * rng.uniform(attempt, 0);
    a.pitch_deg = cfg.train_pitch_min_deg + (cfg.train_pitch_max_deg - cfg.train_pitch_min_deg) * rng.uniform(attempt, 1);
    a.roll_deg = cfg.train_roll_max_deg * (2.0 * rng.uniform(attempt, 2) - 1.0);
    a.radius = cfg.train_radius_min + (cfg.train_radius_max - cfg.train_radius_min) * rng.uniform(attempt, 3);
    ++attempt;
    const bool separated = std::all_of(tests.begin(), tests.end(), [&](const PoseAngles& t) {
      return angular_distance_deg(a.yaw_deg, t.yaw_deg) >= gap_degrees &&
             std::abs(a.pitch_deg - t.pitch_deg) >= gap_degrees && std::abs(a.roll_deg - t.roll_deg) >= gap_degrees;
    });
    if (separated) poses.push_back({look_at_pose(a), Split::Train, a});
  }
  return poses;
}

}  // namespace cms
