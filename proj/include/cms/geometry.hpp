#pragma once

// Pinhole camera model, axis-angle rotations and the point-level projection.
//
// Conventions: camera frame has x to the right, y down and z along the optical
// axis. A motion (R, t) is the camera pose relative to its origin, so a point P
// expressed in the origin frame is seen at R^T (P - t) after the motion.

#include <array>
#include <cstdint>

namespace cms {

using Vec3 = std::array<double, 3>;

/// Row-major 3x3 matrix.
struct Mat3 {
  std::array<double, 9> m{};

  static Mat3 identity() { return Mat3{{1, 0, 0, 0, 1, 0, 0, 0, 1}}; }

  double& operator()(int r, int c) { return m[static_cast<std::size_t>(r * 3 + c)]; }
  double operator()(int r, int c) const { return m[static_cast<std::size_t>(r * 3 + c)]; }

  Mat3 transposed() const;
  friend Mat3 operator*(const Mat3& a, const Mat3& b);
  friend Vec3 operator*(const Mat3& a, const Vec3& v);
  friend bool operator==(const Mat3&, const Mat3&) = default;
};

Vec3 operator+(const Vec3& a, const Vec3& b);
Vec3 operator-(const Vec3& a, const Vec3& b);
Vec3 operator*(double s, const Vec3& v);
double dot(const Vec3& a, const Vec3& b);
Vec3 cross(const Vec3& a, const Vec3& b);
double norm(const Vec3& v);

struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  Vec3 vec() const { return {x, y, z}; }
  static Point3 from(const Vec3& v) { return {v[0], v[1], v[2]}; }
  friend bool operator==(const Point3&, const Point3&) = default;
};

struct CameraIntrinsics {
  double fx = 386.274;
  double fy = 386.274;
  double cx = 80.0;
  double cy = 45.0;
  std::uint32_t width = 160;
  std::uint32_t height = 90;

  /// Throws InvalidArgument unless fx, fy > 0, the grid is non-empty and the
  /// principal point lies inside it.
  void validate() const;
  friend bool operator==(const CameraIntrinsics&, const CameraIntrinsics&) = default;
};

/// 6-DoF camera motion: axis-angle rotation (angle = norm, radians) and a
/// translation in meters.
struct MotionParams {
  Vec3 rotvec{0.0, 0.0, 0.0};
  Vec3 translation{0.0, 0.0, 0.0};

  static MotionParams identity() { return {}; }
  bool is_identity() const;
  double angle() const { return norm(rotvec); }
  friend bool operator==(const MotionParams&, const MotionParams&) = default;
};

/// Points closer than this (meters, along the optical axis) are treated as
/// behind the camera.
inline constexpr double kDepthEpsilon = 1e-6;

Mat3 hat(const Vec3& w);

/// exp(w^) for a rotation vector. Below 1e-6 rad a second order series is used.
Mat3 rotation_from_axis_angle(const Vec3& rotvec);

/// Inverse of rotation_from_axis_angle with the angle in [0, pi].
Vec3 axis_angle_from_rotation(const Mat3& rotation);

/// Maps the rotation vector to the equivalent one with angle in [0, pi].
MotionParams canonicalize(const MotionParams& motion);

/// R^-1 (P - t): coordinates of P in the camera frame after the motion.
Vec3 to_camera_frame(const Point3& point, const Mat3& rotation, const Vec3& translation);
Point3 to_camera_frame(const Point3& point, const MotionParams& motion);

struct Projection {
  double u = 0.0;  ///< continuous column coordinate
  double v = 0.0;  ///< continuous row coordinate
  double depth = 0.0;
};

/// Pixel position and depth of P under the motion. Throws BehindCamera when
/// depth <= kDepthEpsilon.
Projection project_point(const Point3& point, const MotionParams& motion,
                         const CameraIntrinsics& intrinsics);

/// Same as project_point with the rotation matrix already evaluated.
Projection project_point(const Point3& point, const Mat3& rotation, const Vec3& translation,
                         const CameraIntrinsics& intrinsics);

}  // namespace cms
