#include "cms/evaluate.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include "cms/errors.hpp"

namespace cms {

namespace {

void require_records(std::span<const EvalRecord> records, const char* what) {
  if (records.empty()) throw InvalidArgument(std::string(what) + ": no records");
}

// Shortest text that parses back to the same double.
std::string fmt(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string fmt4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

const EmpiricalResult* find_k(const std::vector<EmpiricalResult>& results, std::size_t k) {
  for (const auto& r : results)
    if (r.k == k) return &r;
  return nullptr;
}

std::ofstream open_csv(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path + "'");
  return out;
}

}  // namespace

double benign_accuracy(std::span<const EvalRecord> records, bool smoothed) {
  require_records(records, "benign_accuracy");
  std::size_t ok = 0;
  for (const auto& r : records) ok += smoothed ? r.smoothed_correct() : r.benign_pred == r.true_label;
  return static_cast<double>(ok) / static_cast<double>(records.size());
}

std::vector<MotionParams> attack_motions(MotionAxis axis, double radius, std::size_t k) {
  if (k == 0) throw InvalidArgument("attack needs k >= 1");
  if (!(radius >= 0.0) || !std::isfinite(radius)) throw InvalidArgument("attack radius must be finite and >= 0");
  if (radius == 0.0) return {MotionParams::identity()};
  std::vector<MotionParams> out = sample_uniform_grid(axis, radius, k);
  if (k > 5) {
    std::set<double> seen;
    for (const auto& m : out) seen.insert(axis_value(m, axis));
    for (const auto& m : sample_uniform_grid(axis, radius, 5))
      if (seen.insert(axis_value(m, axis)).second) out.push_back(m);
  }
  return out;
}

bool robust_under_attack(std::size_t item, std::uint32_t label, std::span<const MotionParams> attacks,
                         const MotionPredictor& predict) {
  for (const auto& m : attacks) {
    const auto p = predict(item, m);
    if (!p || *p != label) return false;
  }
  return true;
}

double empirical_robust_accuracy(std::span<const std::uint32_t> labels, const MotionPredictor& predict,
                                 MotionAxis axis, double radius, std::size_t k) {
  if (labels.empty()) throw InvalidArgument("empirical_robust_accuracy: no items");
  const auto attacks = attack_motions(axis, radius, k);
  std::size_t ok = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) ok += robust_under_attack(i, labels[i], attacks, predict);
  return static_cast<double>(ok) / static_cast<double>(labels.size());
}

double certified_accuracy(std::span<const EvalRecord> records, double target_radius) {
  require_records(records, "certified_accuracy");
  std::size_t ok = 0;
  for (const auto& r : records)
    ok += r.smoothed_correct() && !r.certificate.abstained && r.certificate.radius > target_radius;
  return static_cast<double>(ok) / static_cast<double>(records.size());
}

double empirical_accuracy(std::span<const EvalRecord> records, std::size_t k, bool smoothed) {
  require_records(records, "empirical_accuracy");
  std::size_t ok = 0;
  for (const auto& r : records) {
    const auto* e = find_k(smoothed ? r.smoothed_empirical : r.base_empirical, k);
    if (!e) throw InvalidArgument("record " + std::to_string(r.pose_id) + " has no attack result for k=" +
                                  std::to_string(k));
    ok += e->robust;
  }
  return static_cast<double>(ok) / static_cast<double>(records.size());
}

std::vector<SweepRow> radius_sweep(std::span<const EvalRecord> records, std::span<const double> radii) {
  std::vector<SweepRow> rows;
  rows.reserve(radii.size());
  for (double r : radii) rows.push_back({r, records.empty() ? 0.0 : certified_accuracy(records, r)});
  return rows;
}

void write_records_csv(std::span<const EvalRecord> records, const std::string& path) {
  auto out = open_csv(path);
  std::vector<std::size_t> ks;
  if (!records.empty())
    for (const auto& e : records.front().base_empirical) ks.push_back(e.k);
  out << "pose_id,axis,true_label,benign_pred,attack_radius";
  for (auto k : ks) out << ",base_robust_k" << k;
  for (auto k : ks) out << ",smoothed_robust_k" << k;
  out << ",smoothed_pred,abstained,pA_lower,pB_upper,certified_radius,sigma,confidence\n";
  for (const auto& r : records) {
    out << r.pose_id << ',' << to_string(r.axis) << ',' << r.true_label << ',' << r.benign_pred << ','
        << fmt(r.attack_radius);
    for (auto k : ks) {
      const auto* e = find_k(r.base_empirical, k);
      out << ',' << (e ? (e->robust ? "1" : "0") : "");
    }
    for (auto k : ks) {
      const auto* e = find_k(r.smoothed_empirical, k);
      out << ',' << (e ? (e->robust ? "1" : "0") : "");
    }
    out << ',' << (r.smoothed_pred ? std::to_string(*r.smoothed_pred) : std::string("abstain")) << ','
        << (r.certificate.abstained ? 1 : 0) << ',' << fmt(r.certificate.pA_lower) << ','
        << fmt(r.certificate.pB_upper) << ',' << fmt(r.certificate.radius) << ',' << fmt(r.certificate.sigma) << ','
        << fmt(r.certificate.confidence) << '\n';
  }
}

void write_sweep_csv(std::span<const SweepRow> rows, const std::string& path) {
  auto out = open_csv(path);
  out << "radius,certified_accuracy\n";
  for (const auto& r : rows) out << fmt(r.radius) << ',' << fmt(r.certified_accuracy) << '\n';
}

std::vector<SummaryRow> summarize(std::span<const EvalRecord> records, std::span<const std::size_t> ks) {
  require_records(records, "summarize");
  const std::string axis(to_string(records.front().axis));
  const double radius = records.front().attack_radius;
  SummaryRow base{axis, radius, "base", benign_accuracy(records, false), {}, std::nullopt};
  SummaryRow smooth{axis, radius, "smoothed", benign_accuracy(records, true), {}, certified_accuracy(records, radius)};
  for (auto k : ks) {
    base.empirical.push_back(empirical_accuracy(records, k, false));
    smooth.empirical.push_back(empirical_accuracy(records, k, true));
  }
  return {base, smooth};
}

void write_summary_csv(std::span<const SummaryRow> rows, std::span<const std::size_t> ks, const std::string& path) {
  auto out = open_csv(path);
  out << "axis,radius,model,benign";
  for (auto k : ks) out << ",empirical_k" << k;
  out << ",certified\n";
  for (const auto& r : rows) {
    out << r.axis << ',' << fmt(r.radius) << ',' << r.model << ',' << fmt4(r.benign);
    for (double e : r.empirical) out << ',' << fmt4(e);
    out << ',' << (r.certified ? fmt4(*r.certified) : std::string("-")) << '\n';
  }
}

}  // namespace cms
