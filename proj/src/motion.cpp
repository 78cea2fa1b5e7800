#include "cms/motion.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "cms/errors.hpp"
#include "cms/rng.hpp"

namespace cms {

std::string_view to_string(MotionAxis axis) {
  switch (axis) {
    case MotionAxis::Tx: return "Tx";
    case MotionAxis::Ty: return "Ty";
    case MotionAxis::Tz: return "Tz";
    case MotionAxis::Rx: return "Rx";
    case MotionAxis::Ry: return "Ry";
    case MotionAxis::Rz: return "Rz";
  }
  return "?";
}

MotionAxis parse_axis(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  for (MotionAxis a : kAllAxes) {
    std::string candidate(to_string(a));
    std::transform(candidate.begin(), candidate.end(), candidate.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (candidate == lower) return a;
  }
  throw InvalidArgument("unknown motion axis '" + std::string(name) + "'");
}

bool is_rotation(MotionAxis axis) {
  return axis == MotionAxis::Rx || axis == MotionAxis::Ry || axis == MotionAxis::Rz;
}

Vec3 axis_unit(MotionAxis axis) {
  switch (axis) {
    case MotionAxis::Tx:
    case MotionAxis::Rx: return {1, 0, 0};
    case MotionAxis::Ty:
    case MotionAxis::Ry: return {0, 1, 0};
    case MotionAxis::Tz:
    case MotionAxis::Rz: return {0, 0, 1};
  }
  return {0, 0, 0};
}

SmoothingSpec SmoothingSpec::one_axis(MotionAxis axis, double sigma) {
  SmoothingSpec s;
  switch (axis) {
    case MotionAxis::Tx: s.sigma_x = sigma; break;
    case MotionAxis::Ty: s.sigma_y = sigma; break;
    case MotionAxis::Tz: s.sigma_z = sigma; break;
    default:
      s.sigma_theta = sigma;
      s.fixed_axis = axis_unit(axis);
      break;
  }
  return s;
}

void SmoothingSpec::validate() const {
  for (double s : {sigma_x, sigma_y, sigma_z, sigma_theta})
    if (!(s >= 0.0) || !std::isfinite(s)) throw InvalidArgument("smoothing sigmas must be finite and >= 0");
  if (sigma_theta > 0.0) {
    if (!fixed_axis) throw InvalidArgument("rotational smoothing needs a fixed axis");
    if (std::abs(norm(*fixed_axis) - 1.0) > 1e-9) throw InvalidArgument("fixed axis must be a unit vector");
  }
}

double SmoothingSpec::sigma_for(MotionAxis axis) const {
  switch (axis) {
    case MotionAxis::Tx: return sigma_x;
    case MotionAxis::Ty: return sigma_y;
    case MotionAxis::Tz: return sigma_z;
    default:
      if (fixed_axis && std::abs(dot(*fixed_axis, axis_unit(axis)) - 1.0) <= 1e-9) return sigma_theta;
      return 0.0;
  }
}

MotionParams compose(const MotionParams& first, const MotionParams& second) {
  if (first.rotvec == Vec3{0, 0, 0})
    return canonicalize({second.rotvec, second.translation + first.translation});
  if (second.rotvec == Vec3{0, 0, 0}) {
    const Mat3 r1 = rotation_from_axis_angle(first.rotvec);
    return canonicalize({first.rotvec, r1 * second.translation + first.translation});
  }
  const Mat3 r1 = rotation_from_axis_angle(first.rotvec);
  const Mat3 r2 = rotation_from_axis_angle(second.rotvec);
  MotionParams out;
  out.translation = r1 * second.translation + first.translation;

  // Parallel axes compose additively; keep that exact instead of round-tripping
  // through the matrix log.
  const double a1 = norm(first.rotvec);
  const double a2 = norm(second.rotvec);
  const Vec3 c = cross(first.rotvec, second.rotvec);
  if (norm(c) <= 1e-15 * a1 * a2 && dot(first.rotvec, second.rotvec) != 0.0) {
    out.rotvec = first.rotvec + second.rotvec;
    return canonicalize(out);
  }
  out.rotvec = axis_angle_from_rotation(r1 * r2);
  return out;
}

MotionParams inverse(const MotionParams& motion) {
  const Mat3 rt = rotation_from_axis_angle(motion.rotvec).transposed();
  const Vec3 t = rt * motion.translation;
  return canonicalize({-1.0 * motion.rotvec, -1.0 * t});
}

MotionParams axis_motion(MotionAxis axis, double value) {
  if (!std::isfinite(value)) throw InvalidArgument("axis motion value must be finite");
  MotionParams m;
  const Vec3 e = axis_unit(axis);
  if (value == 0.0) return m;
  if (is_rotation(axis))
    m.rotvec = value * e;
  else
    m.translation = value * e;
  return m;
}

double axis_value(const MotionParams& motion, MotionAxis axis) {
  const Vec3 e = axis_unit(axis);
  return is_rotation(axis) ? dot(motion.rotvec, e) : dot(motion.translation, e);
}

MotionParams sample_gaussian(const SmoothingSpec& spec, const SeedSpec& seed, std::uint64_t index) {
  MotionParams m;
  if (spec.is_zero()) return m;
  const CounterRng rng(seed.master_seed, seed.stream_id);
  // Fixed slot per coordinate: zero-sigma coordinates stay exactly zero and
  // turning one sigma on does not reshuffle the others.
  if (spec.sigma_x > 0.0) m.translation[0] = spec.sigma_x * rng.normal(index, 0);
  if (spec.sigma_y > 0.0) m.translation[1] = spec.sigma_y * rng.normal(index, 1);
  if (spec.sigma_z > 0.0) m.translation[2] = spec.sigma_z * rng.normal(index, 2);
  if (spec.sigma_theta > 0.0) {
    const double theta = spec.sigma_theta * rng.normal(index, 3);
    m.rotvec = theta * *spec.fixed_axis;
    m = canonicalize(m);
  }
  return m;
}

std::vector<MotionParams> sample_uniform_grid(MotionAxis axis, double radius, std::size_t k) {
  if (!(radius > 0.0) || !std::isfinite(radius)) throw InvalidArgument("grid radius must be positive");
  if (k == 0) throw InvalidArgument("grid needs at least one sample");
  std::vector<MotionParams> out;
  out.reserve(k);
  if (k == 1) {
    out.push_back(MotionParams::identity());
    return out;
  }
  const double step = 2.0 * radius / static_cast<double>(k - 1);
  for (std::size_t i = 0; i < k; ++i) {
    double v = -radius + step * static_cast<double>(i);
    if (i == k - 1) v = radius;
    if (2 * i + 1 == k) v = 0.0;
    out.push_back(axis_motion(axis, v));
  }
  return out;
}

std::vector<MotionParams> sample_uniform_random(MotionAxis axis, double radius, std::size_t k,
                                                const SeedSpec& seed) {
  if (!(radius > 0.0) || !std::isfinite(radius)) throw InvalidArgument("radius must be positive");
  if (k == 0) throw InvalidArgument("need at least one sample");
  const CounterRng rng(seed.master_seed, seed.stream_id);
  std::vector<MotionParams> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) out.push_back(axis_motion(axis, radius * (2.0 * rng.uniform(i, 0) - 1.0)));
  return out;
}

}  // namespace cms
