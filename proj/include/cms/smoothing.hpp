#pragma once

// Monte-Carlo estimate of the motion-smoothed classifier. Sample i always
// uses the motion drawn from (seed, i), so counts do not depend on how the
// samples are split across workers.

#include <cstdint>
#include <memory>
#include <vector>

#include "cms/classifier.hpp"
#include "cms/counts.hpp"
#include "cms/motion.hpp"
#include "cms/renderer.hpp"

namespace cms {

struct SmoothedPrediction {
  std::uint32_t top_class = 0;
  std::uint32_t runner_up_class = 0;
  SampleCounts counts;
  double pvalue = 1.0;
  bool abstained = true;
};

class SmoothingEngine {
 public:
  /// `workers` independent classifier clones share the sampling load.
  SmoothingEngine(const Classifier& classifier, const CameraIntrinsics& intrinsics, std::size_t workers = 1);
  ~SmoothingEngine();
  SmoothingEngine(const SmoothingEngine&) = delete;
  SmoothingEngine& operator=(const SmoothingEngine&) = delete;

  std::size_t workers() const;
  std::size_t class_count() const { return class_count_; }
  const CameraIntrinsics& intrinsics() const { return intrinsics_; }

  /// Base prediction of the frame rendered under `motion`.
  Prediction predict(const SceneFrame& frame, const MotionParams& motion = {});

  /// Argmax tallies over n Gaussian motions. Any classifier failure aborts the
  /// whole count.
  SampleCounts sample_counts(const SceneFrame& frame, const SmoothingSpec& spec, std::uint64_t n,
                             const SeedSpec& seed);

  /// Top two classes from n0 samples; abstains when the two-sided binomial
  /// test of the top count against the runner-up is not significant at
  /// alpha.
  SmoothedPrediction smoothed_predict(const SceneFrame& frame, const SmoothingSpec& spec, std::uint64_t n0,
                                      double alpha, const SeedSpec& seed);

  /// Mean soft probabilities over n samples. Diagnostic only; certificates
  /// always come from hard counts.
  std::vector<double> soft_mean(const SceneFrame& frame, const SmoothingSpec& spec, std::uint64_t n,
                                const SeedSpec& seed);

 private:
  struct Worker;
  template <class Fn>
  void run(std::uint64_t n, Fn&& per_sample_range);

  CameraIntrinsics intrinsics_;
  std::size_t class_count_;
  std::vector<std::unique_ptr<Worker>> workers_;
};

/// Decision rule used by smoothed_predict, exposed for testing on raw counts.
SmoothedPrediction decide(const SampleCounts& counts, double alpha);

}  // namespace cms
