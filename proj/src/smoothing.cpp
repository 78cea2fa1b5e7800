#include "cms/smoothing.hpp"

#include <exception>
#include <thread>

#include "cms/certify.hpp"
#include "cms/errors.hpp"

namespace cms {

struct SmoothingEngine::Worker {
  std::unique_ptr<Classifier> classifier;
  RenderScratch scratch;
  ProjectedImage image;
  SampleCounts counts;
  std::vector<double> soft;
};

SmoothingEngine::SmoothingEngine(const Classifier& classifier, const CameraIntrinsics& intrinsics,
                                 std::size_t workers)
    : intrinsics_(intrinsics), class_count_(classifier.class_count()) {
  intrinsics_.validate();
  if (workers == 0) throw InvalidArgument("smoothing needs at least one worker");
  if (class_count_ == 0) throw InvalidArgument("classifier reports zero classes");
  for (std::size_t w = 0; w < workers; ++w) {
    auto worker = std::make_unique<Worker>();
    worker->classifier = classifier.clone();
    workers_.push_back(std::move(worker));
  }
}

SmoothingEngine::~SmoothingEngine() = default;

std::size_t SmoothingEngine::workers() const { return workers_.size(); }

template <class Fn>
void SmoothingEngine::run(std::uint64_t n, Fn&& per_sample_range) {
  const std::size_t w = std::min<std::uint64_t>(workers_.size(), n);
  if (w <= 1) {
    per_sample_range(*workers_[0], 0, n);
    return;
  }
  std::vector<std::exception_ptr> errors(w);
  std::vector<std::thread> threads;
  threads.reserve(w - 1);
  auto body = [&](std::size_t i) {
    try {
      per_sample_range(*workers_[i], n * i / w, n * (i + 1) / w);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  for (std::size_t i = 1; i < w; ++i) threads.emplace_back(body, i);
  body(0);
  for (auto& t : threads) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

Prediction SmoothingEngine::predict(const SceneFrame& frame, const MotionParams& motion) {
  Worker& w = *workers_[0];
  render_into(frame, motion, intrinsics_, w.scratch, w.image);
  return w.classifier->predict(w.image);
}

SampleCounts SmoothingEngine::sample_counts(const SceneFrame& frame, const SmoothingSpec& spec, std::uint64_t n,
                                            const SeedSpec& seed) {
  if (n == 0) throw InvalidArgument("sample_counts needs n >= 1");
  spec.validate();
  run(n, [&](Worker& w, std::uint64_t begin, std::uint64_t end) {
    w.counts = SampleCounts(class_count_);
    for (std::uint64_t i = begin; i < end; ++i) {
      render_into(frame, sample_gaussian(spec, seed, i), intrinsics_, w.scratch, w.image);
      w.counts.add(w.classifier->predict(w.image).label);
    }
  });
  SampleCounts total(class_count_);
  for (std::size_t i = 0; i < std::min<std::uint64_t>(workers_.size(), n); ++i) total += workers_[i]->counts;
  return total;
}

SmoothedPrediction decide(const SampleCounts& counts, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("smoothed_predict needs 0 < alpha < 1");
  if (counts.n == 0) throw InvalidArgument("smoothed_predict needs at least one sample");
  SmoothedPrediction p;
  p.counts = counts;
  p.top_class = counts.top();
  p.runner_up_class = counts.counts.size() > 1 ? counts.runner_up() : p.top_class;
  const std::uint64_t na = counts[p.top_class];
  const std::uint64_t nb = p.runner_up_class == p.top_class ? 0 : counts[p.runner_up_class];
  p.pvalue = binom_two_sided_pvalue(na, na + nb);
  p.abstained = p.pvalue > alpha;
  return p;
}

SmoothedPrediction SmoothingEngine::smoothed_predict(const SceneFrame& frame, const SmoothingSpec& spec,
                                                     std::uint64_t n0, double alpha, const SeedSpec& seed) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("smoothed_predict needs 0 < alpha < 1");
  return decide(sample_counts(frame, spec, n0, seed), alpha);
}

std::vector<double> SmoothingEngine::soft_mean(const SceneFrame& frame, const SmoothingSpec& spec, std::uint64_t n,
                                               const SeedSpec& seed) {
  if (n == 0) throw InvalidArgument("soft_mean needs n >= 1");
  spec.validate();
  run(n, [&](Worker& w, std::uint64_t begin, std::uint64_t end) {
    w.soft.assign(class_count_, 0.0);
    for (std::uint64_t i = begin; i < end; ++i) {
      render_into(frame, sample_gaussian(spec, seed, i), intrinsics_, w.scratch, w.image);
      const auto probs = w.classifier->probabilities(w.image).probs;
      for (std::size_t c = 0; c < class_count_; ++c) w.soft[c] += probs.at(c);
    }
  });
  std::vector<double> mean(class_count_, 0.0);
  for (std::size_t i = 0; i < std::min<std::uint64_t>(workers_.size(), n); ++i)
    for (std::size_t c = 0; c < class_count_; ++c) mean[c] += workers_[i]->soft[c];
  for (double& m : mean) m /= static_cast<double>(n);
  return mean;
}

}  // namespace cms
