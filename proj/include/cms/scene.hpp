#pragma once

// Procedural desk-scale scenes: a room shell, a pedestal and one primitive
// object whose shape and color determine the class label. Cameras sit on a
// shell around the object and look at its center (the world origin, z up).

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "cms/motion.hpp"
#include "cms/pointcloud.hpp"

namespace cms {

enum class Shape { Sphere, Box, Cylinder, Cone, Torus };

std::string_view to_string(Shape shape);
Shape parse_shape(std::string_view name);

struct SceneSpec {
  std::uint32_t class_id = 0;
  Shape shape = Shape::Sphere;
  std::array<float, 3> object_color{1.0f, 0.0f, 0.0f};
  double object_radius = 0.2;      ///< bounding radius of the object, meters
  double room_half_extent = 1.6;   ///< meters
  double point_density = 0.02;     ///< spacing between surface samples, meters
  double object_point_density = 0.0;  ///< object spacing, meters (0 = point_density)
  std::uint64_t rng_seed = 0;
  std::size_t max_points = 1'000'000;

  void validate() const;
  double object_density() const { return object_point_density > 0.0 ? object_point_density : point_density; }
};

/// Default spec for class `class_id` of the built-in label set (shapes cycle
/// through the five primitives, colors through a fixed palette).
SceneSpec default_scene_spec(std::uint32_t class_id, std::uint64_t seed);

/// Surface samples of the class object alone, centered at the origin.
ColoredPointCloud generate_object(const SceneSpec& spec);

/// Room shell + pedestal + object. Throws BudgetError when the estimated point
/// count exceeds spec.max_points.
ColoredPointCloud generate_scene(const SceneSpec& spec);

enum class Split { Train, Test };
std::string_view to_string(Split split);

/// Shell coordinates of a camera. Angles in degrees: yaw about world z, pitch
/// as elevation above the horizontal (positive looks down), roll about the
/// optical axis after look-at alignment.
struct PoseAngles {
  double yaw_deg = 0.0;
  double pitch_deg = 0.0;
  double roll_deg = 0.0;
  double radius = 1.0;
};

struct PoseSample {
  MotionParams pose;  ///< camera-to-world pose (rotation columns = camera axes)
  Split split = Split::Test;
  PoseAngles angles;
};

MotionParams look_at_pose(const PoseAngles& angles);

/// Recovers shell angles from a look-at pose.
PoseAngles angles_from_pose(const MotionParams& pose);

struct PoseSamplerConfig {
  double test_radius = 1.1;
  double test_pitch_deg = 10.0;
  double train_radius_min = 0.95;
  double train_radius_max = 1.25;
  double train_pitch_min_deg = 0.0;
  double train_pitch_max_deg = 60.0;
  double train_roll_max_deg = 30.0;
  std::size_t retry_budget = 1'000'000;
};

/// Signed angular difference folded into [0, 180].
double angular_distance_deg(double a, double b);

/// Test poses: `count` evenly spaced yaws starting at 0, fixed pitch, zero
/// roll. Train poses: rejection sampled until yaw, pitch and roll each differ
/// by at least gap_degrees from every test pose (against the test set built
/// with `test_count`).
std::vector<PoseSample> sample_poses(Split split, std::size_t count, double gap_degrees, std::uint64_t rng_seed,
                                     const PoseSamplerConfig& config = {}, std::size_t test_count = 6);

}  // namespace cms
