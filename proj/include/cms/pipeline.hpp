#pragma once

// Batch stages behind the command line: scene generation, rendering,
// training, certification, evaluation and reporting. Every stage reads a
// RunConfig and writes its artifacts under config.out.

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "cms/classifier.hpp"
#include "cms/config.hpp"
#include "cms/evaluate.hpp"
#include "cms/renderer.hpp"
#include "cms/scene.hpp"
#include "cms/smoothing.hpp"

namespace cms {

struct ManifestClass {
  std::uint32_t class_id = 0;
  Shape shape = Shape::Sphere;
  std::array<float, 3> color{};
  std::string ply;  ///< as written in the manifest (relative to its directory)
  std::string ply_path;
  std::size_t points = 0;
};

struct ManifestPose {
  std::uint64_t pose_id = 0;
  std::uint32_t class_id = 0;
  Split split = Split::Test;
  PoseAngles angles;
  MotionParams pose;
};

struct Manifest {
  std::vector<ManifestClass> classes;
  std::vector<ManifestPose> poses;
};

/// Throws ConfigError naming the manifest field on schema errors or missing
/// PLY files.
Manifest load_manifest(const std::string& path);
void save_manifest(const Manifest& manifest, const std::string& path);

/// Loaded clouds plus the manifest they came from.
struct Dataset {
  Manifest manifest;
  std::vector<std::shared_ptr<const ColoredPointCloud>> clouds;  ///< indexed by class id

  SceneFrame frame(const ManifestPose& pose) const;
  std::vector<const ManifestPose*> poses(Split split) const;
};

Dataset load_dataset(const RunConfig& config);

/// Sample streams per pose: stream id = pose_id * kStreamsPerPose + purpose.
inline constexpr std::uint64_t kStreamsPerPose = 8;
enum class StreamPurpose : std::uint64_t { Select = 0, Estimate = 1, Attack = 2, Augment = 3 };
SeedSpec pose_seed(std::uint64_t master, std::uint64_t pose_id, StreamPurpose purpose);

std::unique_ptr<Classifier> make_classifier(const RunConfig& config, std::size_t class_count);

/// Everything the smoothed model says about one test pose. With
/// `with_attacks`, the grid attacks on the base and smoothed models are run
/// too.
EvalRecord evaluate_pose(SmoothingEngine& engine, const SceneFrame& frame, std::uint32_t label,
                         std::uint64_t pose_id, const RunConfig& config, bool with_attacks);

void run_gen_scene(const RunConfig& config);
void run_render(const RunConfig& config);
CentroidModel run_train(const RunConfig& config);
std::vector<EvalRecord> run_certify(const RunConfig& config);
std::vector<EvalRecord> run_evaluate(const RunConfig& config);
/// Formats the evaluation summary as an aligned text table.
std::string run_report(const RunConfig& config);

/// Certificate records as written to certificates.json.
std::string certificates_to_json(const std::vector<EvalRecord>& records);

}  // namespace cms
