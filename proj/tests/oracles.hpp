#pragma once

// Reference implementations used only by tests. Each one is written from the
// textbook definition, independently of the library code it checks.

#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "cms/geometry.hpp"
#include "cms/motion.hpp"
#include "cms/pointcloud.hpp"
#include "cms/renderer.hpp"

namespace oracle {

struct Pixel {
  double u, v, depth;
};

// Closed-form projections of a camera-frame point P0 = (X, Y, Z) after a
// single-axis motion of magnitude a.
inline Pixel single_axis(cms::MotionAxis axis, double a, double X, double Y, double Z,
                         const cms::CameraIntrinsics& k) {
  const double fx = k.fx, fy = k.fy, cx = k.cx, cy = k.cy;
  const double c = std::cos(a), s = std::sin(a);
  switch (axis) {
    case cms::MotionAxis::Tz:
      return {(fx * X + cx * (Z - a)) / (Z - a), (fy * Y + cy * (Z - a)) / (Z - a), Z - a};
    case cms::MotionAxis::Tx:
      return {(fx * (X - a) + cx * Z) / Z, (fy * Y + cy * Z) / Z, Z};
    case cms::MotionAxis::Ty:
      return {(fx * X + cx * Z) / Z, (fy * (Y - a) + cy * Z) / Z, Z};
    case cms::MotionAxis::Rz:
      // Sign of the X term in v follows from R^T; see the decisions ledger.
      return {(fx * c * X + fx * s * Y) / Z + cx, (fy * c * Y - fy * s * X) / Z + cy, Z};
    case cms::MotionAxis::Rx: {
      const double d = -s * Y + c * Z;
      return {fx * X / d + cx, (Y * c + Z * s) / d * fy + cy, d};
    }
    case cms::MotionAxis::Ry: {
      const double d = s * X + c * Z;
      return {(X * c - Z * s) / d * fx + cx, fy * Y / d + cy, d};
    }
  }
  return {};
}

// Rotation matrix from a unit quaternion built from the rotation vector.
inline cms::Mat3 quaternion_rotation(const cms::Vec3& w) {
  const double theta = std::sqrt(w[0] * w[0] + w[1] * w[1] + w[2] * w[2]);
  double qw = 1.0, qx = 0.0, qy = 0.0, qz = 0.0;
  if (theta > 0.0) {
    const double s = std::sin(theta / 2) / theta;
    qw = std::cos(theta / 2);
    qx = w[0] * s;
    qy = w[1] * s;
    qz = w[2] * s;
  }
  cms::Mat3 r;
  r.m = {1 - 2 * (qy * qy + qz * qz), 2 * (qx * qy - qz * qw),     2 * (qx * qz + qy * qw),
         2 * (qx * qy + qz * qw),     1 - 2 * (qx * qx + qz * qz), 2 * (qy * qz - qx * qw),
         2 * (qx * qz - qy * qw),     2 * (qy * qz + qx * qw),     1 - 2 * (qx * qx + qy * qy)};
  return r;
}

// Per-pixel z-buffer: for every pixel, scan all points and keep the nearest
// one whose floor-splat lands there; ties within 1e-12 go to the lower index.
inline cms::ProjectedImage brute_force_render(const cms::ColoredPointCloud& cloud, const cms::MotionParams& pose,
                                              const cms::CameraIntrinsics& k) {
  const cms::Mat3 r = cms::rotation_from_axis_angle(pose.rotvec);
  const std::size_t n = cloud.size();
  std::vector<long> col(n, -1), row(n, -1);
  std::vector<double> depth(n);
  for (std::size_t i = 0; i < n; ++i) {
    // q = R^T (P - t), summed in the same order as the production kernels so
    // the comparison can be bit-exact.
    const cms::Point3 p = cloud.position(i);
    const double dx = p.x - pose.translation[0], dy = p.y - pose.translation[1], dz = p.z - pose.translation[2];
    const double q[3] = {(r(0, 0) * dx + r(1, 0) * dy) + r(2, 0) * dz, (r(0, 1) * dx + r(1, 1) * dy) + r(2, 1) * dz,
                         (r(0, 2) * dx + r(1, 2) * dy) + r(2, 2) * dz};
    depth[i] = q[2];
    if (!(q[2] > cms::kDepthEpsilon)) continue;
    const double u = k.fx * (q[0] / q[2]) + k.cx;
    const double v = k.fy * (q[1] / q[2]) + k.cy;
    if (u >= 0 && u < k.width && v >= 0 && v < k.height) {
      col[i] = static_cast<long>(std::floor(u));
      row[i] = static_cast<long>(std::floor(v));
    }
  }
  cms::ProjectedImage img(k, cloud.channel_count());
  for (long y = 0; y < static_cast<long>(k.height); ++y)
    for (long x = 0; x < static_cast<long>(k.width); ++x) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < n; ++i)
        if (row[i] == y && col[i] == x && depth[i] < best) best = depth[i];
      if (std::isinf(best)) continue;
      for (std::size_t i = 0; i < n; ++i)
        if (row[i] == y && col[i] == x && depth[i] <= best + 1e-12) {
          const auto c = cloud.color(i);
          for (std::uint32_t ch = 0; ch < cloud.channel_count(); ++ch)
            img.pixels[(static_cast<std::size_t>(y) * k.width + x) * cloud.channel_count() + ch] = c[ch];
          img.coverage[static_cast<std::size_t>(y) * k.width + x] = 1;
          break;
        }
    }
  return img;
}

// P[Binom(n, p) <= k] by direct summation of log-gamma terms.
inline double binom_cdf(std::uint64_t k, std::uint64_t n, double p) {
  if (p <= 0.0) return 1.0;
  if (p >= 1.0) return k >= n ? 1.0 : 0.0;
  long double total = 0.0L;
  for (std::uint64_t i = 0; i <= k && i <= n; ++i) {
    const long double lt = std::lgamma(static_cast<long double>(n) + 1) - std::lgamma(static_cast<long double>(i) + 1) -
                           std::lgamma(static_cast<long double>(n - i) + 1) +
                           static_cast<long double>(i) * std::log(static_cast<long double>(p)) +
                           static_cast<long double>(n - i) * std::log1p(-static_cast<long double>(p));
    total += std::exp(lt);
  }
  return static_cast<double>(total);
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

inline double normal_quantile(double p) {
  return boost::math::quantile(boost::math::normal_distribution<double>(0.0, 1.0), p);
}

}  // namespace oracle
