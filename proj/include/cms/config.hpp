#pragma once

// Run configuration. JSON field names carry their units (sigma_z_m,
// sigma_theta_rad, gap_deg) so degrees and radians cannot be confused.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cms/geometry.hpp"
#include "cms/motion.hpp"
#include "cms/scene.hpp"

namespace cms {

struct SceneConfig {
  std::size_t classes = 5;
  std::size_t train_poses_per_class = 50;
  std::size_t test_poses_per_class = 12;
  double gap_deg = 10.0;
  double point_density_m = 0.02;
  double object_point_density_m = 0.004;
  double object_radius_m = 0.12;
  std::size_t max_points = 1'000'000;
  std::size_t uniform_k = 1;  ///< keep every k-th point (1 = all)
  double voxel_m = 0.0;       ///< voxel downsampling edge (0 = off)
  PoseSamplerConfig poses;
};

struct ClassifierConfig {
  std::string kind = "centroid";  ///< "centroid" or "external"
  std::string model;              ///< centroid model path (default <out>/model.json)
  std::uint32_t block = 10;
  double temperature = 1.0;
  std::size_t augment_samples = 0;  ///< extra Gaussian-motion renders per train pose
  std::string command;              ///< external classifier command line
};

struct RunConfig {
  SceneConfig scene;
  std::string manifest;  ///< default <out>/manifest.json
  CameraIntrinsics intrinsics;
  MotionAxis axis = MotionAxis::Tz;
  double sigma_x_m = 0.0;
  double sigma_y_m = 0.0;
  double sigma_z_m = 0.1;
  double sigma_theta_rad = 0.0;
  std::optional<MotionAxis> fixed_axis;  ///< rotation smoothing axis (defaults to `axis` when rotational)
  double radius = 0.1;                   ///< attack / target radius in the axis unit
  std::uint64_t n0 = 100;
  std::uint64_t n = 1000;
  double alpha = 0.01;
  std::vector<std::size_t> attack_k{5, 100};
  std::vector<double> sweep_radii;  ///< empty = 0..2*radius in 21 steps
  std::uint64_t seed = 0;
  ClassifierConfig classifier;
  std::string render_split = "test";
  std::string out = "out";
  std::size_t workers = 1;

  /// Throws ConfigError naming the offending field.
  void validate() const;
  SmoothingSpec smoothing() const;
  std::string manifest_path() const;
  std::string model_path() const;
  std::vector<double> resolved_sweep_radii() const;
  /// Sets the sigma that smooths `axis`.
  void set_axis_sigma(double sigma);
};

/// Parses a config document. Unknown fields are rejected.
RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::string& path);

/// Full resolved config as pretty JSON (deterministic key order).
std::string config_to_json(const RunConfig& config, bool include_workers = true);

}  // namespace cms
