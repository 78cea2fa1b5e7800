#pragma once

// Small classifiers with known behavior, shared by unit and acceptance tests.

#include <memory>

#include "cms/classifier.hpp"

namespace testing_support {

/// Always answers `label`.
class ConstantClassifier final : public cms::Classifier {
 public:
  ConstantClassifier(std::uint32_t label, std::size_t classes) : label_(label), classes_(classes) {}
  std::size_t class_count() const override { return classes_; }
  cms::LabelDistribution probabilities(const cms::ProjectedImage&) override {
    cms::LabelDistribution d;
    d.probs.assign(classes_, 0.0);
    d.probs[label_] = 1.0;
    return d;
  }
  std::unique_ptr<cms::Classifier> clone() const override { return std::make_unique<ConstantClassifier>(*this); }

 private:
  std::uint32_t label_;
  std::size_t classes_;
};

/// Two classes: 1 when any covered pixel has column >= `boundary`, else 0.
/// On a one-point scene this is a threshold on the camera motion.
class ColumnThresholdClassifier final : public cms::Classifier {
 public:
  explicit ColumnThresholdClassifier(std::uint32_t boundary) : boundary_(boundary) {}
  std::size_t class_count() const override { return 2; }
  cms::LabelDistribution probabilities(const cms::ProjectedImage& img) override {
    bool hit = false;
    for (std::uint32_t r = 0; r < img.height() && !hit; ++r)
      for (std::uint32_t c = boundary_; c < img.width(); ++c)
        if (img.covered(r, c)) {
          hit = true;
          break;
        }
    return {{hit ? 0.0 : 1.0, hit ? 1.0 : 0.0}};
  }
  std::unique_ptr<cms::Classifier> clone() const override {
    return std::make_unique<ColumnThresholdClassifier>(*this);
  }

 private:
  std::uint32_t boundary_;
};

}  // namespace testing_support
