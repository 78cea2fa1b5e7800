#include "cms/geometry.hpp"

#include <cmath>
#include <numbers>

#include "cms/errors.hpp"

namespace cms {

Mat3 Mat3::transposed() const {
  Mat3 t;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) t(c, r) = (*this)(r, c);
  return t;
}

Mat3 operator*(const Mat3& a, const Mat3& b) {
  Mat3 out;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) out(r, c) = a(r, 0) * b(0, c) + a(r, 1) * b(1, c) + a(r, 2) * b(2, c);
  return out;
}

Vec3 operator*(const Mat3& a, const Vec3& v) {
  return {a(0, 0) * v[0] + a(0, 1) * v[1] + a(0, 2) * v[2],
          a(1, 0) * v[0] + a(1, 1) * v[1] + a(1, 2) * v[2],
          a(2, 0) * v[0] + a(2, 1) * v[1] + a(2, 2) * v[2]};
}

Vec3 operator+(const Vec3& a, const Vec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
Vec3 operator-(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
Vec3 operator*(double s, const Vec3& v) { return {s * v[0], s * v[1], s * v[2]}; }
double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}
double norm(const Vec3& v) { return std::sqrt(dot(v, v)); }

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) throw InvalidArgument("intrinsics: focal lengths must be positive");
  if (width < 1 || height < 1) throw InvalidArgument("intrinsics: image grid must be non-empty");
  if (!(cx >= 0.0 && cx < width) || !(cy >= 0.0 && cy < height))
    throw InvalidArgument("intrinsics: principal point outside the image grid");
}

bool MotionParams::is_identity() const {
  return rotvec == Vec3{0, 0, 0} && translation == Vec3{0, 0, 0};
}

Mat3 hat(const Vec3& w) { return Mat3{{0, -w[2], w[1], w[2], 0, -w[0], -w[1], w[0], 0}}; }

Mat3 rotation_from_axis_angle(const Vec3& rotvec) {
  for (double c : rotvec)
    if (!std::isfinite(c)) throw InvalidArgument("rotation vector must be finite");

  const double theta = norm(rotvec);
  if (theta < 1e-6) {
    // I + w^ + w^2 / 2; exact identity at zero.
    const Mat3 k = hat(rotvec);
    const Mat3 k2 = k * k;
    Mat3 r = Mat3::identity();
    for (std::size_t i = 0; i < 9; ++i) r.m[i] += k.m[i] + 0.5 * k2.m[i];
    return r;
  }

  const Vec3 n = (1.0 / theta) * rotvec;
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  const double v = 1.0 - c;
  return Mat3{{c + v * n[0] * n[0], v * n[0] * n[1] - s * n[2], v * n[0] * n[2] + s * n[1],
               v * n[0] * n[1] + s * n[2], c + v * n[1] * n[1], v * n[1] * n[2] - s * n[0],
               v * n[0] * n[2] - s * n[1], v * n[1] * n[2] + s * n[0], c + v * n[2] * n[2]}};
}

Vec3 axis_angle_from_rotation(const Mat3& r) {
  // Shepperd: pick the largest quaternion component to divide by.
  const double trace = r(0, 0) + r(1, 1) + r(2, 2);
  double w, x, y, z;
  if (trace >= r(0, 0) && trace >= r(1, 1) && trace >= r(2, 2)) {
    const double s = 2.0 * std::sqrt(1.0 + trace);
    w = 0.25 * s;
    x = (r(2, 1) - r(1, 2)) / s;
    y = (r(0, 2) - r(2, 0)) / s;
    z = (r(1, 0) - r(0, 1)) / s;
  } else if (r(0, 0) >= r(1, 1) && r(0, 0) >= r(2, 2)) {
    const double s = 2.0 * std::sqrt(1.0 + r(0, 0) - r(1, 1) - r(2, 2));
    w = (r(2, 1) - r(1, 2)) / s;
    x = 0.25 * s;
    y = (r(0, 1) + r(1, 0)) / s;
    z = (r(0, 2) + r(2, 0)) / s;
  } else if (r(1, 1) >= r(2, 2)) {
    const double s = 2.0 * std::sqrt(1.0 + r(1, 1) - r(0, 0) - r(2, 2));
    w = (r(0, 2) - r(2, 0)) / s;
    x = (r(0, 1) + r(1, 0)) / s;
    y = 0.25 * s;
    z = (r(1, 2) + r(2, 1)) / s;
  } else {
    const double s = 2.0 * std::sqrt(1.0 + r(2, 2) - r(0, 0) - r(1, 1));
    w = (r(1, 0) - r(0, 1)) / s;
    x = (r(0, 2) + r(2, 0)) / s;
    y = (r(1, 2) + r(2, 1)) / s;
    z = 0.25 * s;
  }
  if (w < 0.0) {
    w = -w;
    x = -x;
    y = -y;
    z = -z;
  }
  const double vn = std::sqrt(x * x + y * y + z * z);
  if (vn < 1e-300) return {0.0, 0.0, 0.0};
  const double theta = 2.0 * std::atan2(vn, w);
  const double scale = theta / vn;
  return {scale * x, scale * y, scale * z};
}

MotionParams canonicalize(const MotionParams& motion) {
  const double theta = norm(motion.rotvec);
  if (theta <= std::numbers::pi) return motion;
  const double two_pi = 2.0 * std::numbers::pi;
  double reduced = std::fmod(theta, two_pi);
  if (reduced > std::numbers::pi) reduced -= two_pi;
  MotionParams out = motion;
  out.rotvec = (reduced / theta) * motion.rotvec;
  return out;
}

Vec3 to_camera_frame(const Point3& p, const Mat3& r, const Vec3& t) {
  const double dx = p.x - t[0];
  const double dy = p.y - t[1];
  const double dz = p.z - t[2];
  // R^T d, summed in a fixed order shared with the projection kernels.
  return {(r(0, 0) * dx + r(1, 0) * dy) + r(2, 0) * dz, (r(0, 1) * dx + r(1, 1) * dy) + r(2, 1) * dz,
          (r(0, 2) * dx + r(1, 2) * dy) + r(2, 2) * dz};
}

Point3 to_camera_frame(const Point3& point, const MotionParams& motion) {
  return Point3::from(to_camera_frame(point, rotation_from_axis_angle(motion.rotvec), motion.translation));
}

Projection project_point(const Point3& point, const Mat3& rotation, const Vec3& translation,
                         const CameraIntrinsics& k) {
  const Vec3 q = to_camera_frame(point, rotation, translation);
  if (!(q[2] > kDepthEpsilon)) throw BehindCamera(q[2]);
  return {k.fx * (q[0] / q[2]) + k.cx, k.fy * (q[1] / q[2]) + k.cy, q[2]};
}

Projection project_point(const Point3& point, const MotionParams& motion, const CameraIntrinsics& k) {
  return project_point(point, rotation_from_axis_angle(motion.rotvec), motion.translation, k);
}

}  // namespace cms
