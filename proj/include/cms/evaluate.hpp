#pragma once

// Benign, empirical-robust and certified accuracy over a set of test poses.
// Abstentions always count as wrong.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cms/certify.hpp"
#include "cms/motion.hpp"
#include "cms/renderer.hpp"

namespace cms {

/// Grid attack on one pose: robust iff every attack motion is classified as
/// the true label.
struct EmpiricalResult {
  std::size_t k = 0;
  bool robust = false;
};

struct EvalRecord {
  std::uint64_t pose_id = 0;
  std::uint32_t true_label = 0;
  std::uint32_t benign_pred = 0;
  MotionAxis axis = MotionAxis::Tz;
  double attack_radius = 0.0;
  std::vector<EmpiricalResult> base_empirical;
  std::vector<EmpiricalResult> smoothed_empirical;
  std::optional<std::uint32_t> smoothed_pred;  ///< nullopt when abstained
  Certificate certificate;

  bool smoothed_correct() const { return smoothed_pred && *smoothed_pred == true_label; }
};

/// Fraction of records whose base (or, with `smoothed`, smoothed) prediction
/// is correct.
double benign_accuracy(std::span<const EvalRecord> records, bool smoothed = false);

/// Attack motions for a k-sample grid: the k-point grid merged with the
/// 5-point grid, so a larger k never attacks fewer motions than k = 5.
/// Radius 0 yields only the identity.
std::vector<MotionParams> attack_motions(MotionAxis axis, double radius, std::size_t k);

/// Prediction under a motion; nullopt means the model abstained.
using MotionPredictor = std::function<std::optional<std::uint32_t>(std::size_t item, const MotionParams& motion)>;

/// True iff `predict(item, m)` returns `label` for every attack motion m.
bool robust_under_attack(std::size_t item, std::uint32_t label, std::span<const MotionParams> attacks,
                         const MotionPredictor& predict);

/// Fraction of items robust against attack_motions(axis, radius, k).
double empirical_robust_accuracy(std::span<const std::uint32_t> labels, const MotionPredictor& predict,
                                 MotionAxis axis, double radius, std::size_t k);

/// Fraction of records that are correct, not abstained, and certified beyond
/// target_radius.
double certified_accuracy(std::span<const EvalRecord> records, double target_radius);

/// Fraction of records robust at grid size k (base or smoothed).
double empirical_accuracy(std::span<const EvalRecord> records, std::size_t k, bool smoothed);

struct SweepRow {
  double radius = 0.0;
  double certified_accuracy = 0.0;
};

std::vector<SweepRow> radius_sweep(std::span<const EvalRecord> records, std::span<const double> radii);

void write_records_csv(std::span<const EvalRecord> records, const std::string& path);
void write_sweep_csv(std::span<const SweepRow> rows, const std::string& path);

/// Benign / empirical / certified columns per model, one row per (axis, model).
struct SummaryRow {
  std::string axis;
  double radius = 0.0;
  std::string model;  ///< "base" or "smoothed"
  double benign = 0.0;
  std::vector<double> empirical;  ///< one entry per requested k
  std::optional<double> certified;
};

std::vector<SummaryRow> summarize(std::span<const EvalRecord> records, std::span<const std::size_t> ks);
void write_summary_csv(std::span<const SummaryRow> rows, std::span<const std::size_t> ks, const std::string& path);

}  // namespace cms
