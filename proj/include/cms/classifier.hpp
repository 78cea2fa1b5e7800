#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "cms/renderer.hpp"

namespace cms {

struct LabelDistribution {
  std::vector<double> probs;

  /// Highest probability; the lowest index wins ties.
  std::uint32_t argmax() const;
};

struct Prediction {
  std::uint32_t label = 0;
  LabelDistribution distribution;
};

/// Base classifier interface. Instances may hold per-connection state, so a
/// worker thread gets its own instance through clone().
class Classifier {
 public:
  virtual ~Classifier() = default;
  virtual std::size_t class_count() const = 0;
  virtual LabelDistribution probabilities(const ProjectedImage& image) = 0;
  virtual std::unique_ptr<Classifier> clone() const = 0;

  Prediction predict(const ProjectedImage& image);
};

/// Block-average pooling over covered pixels.
struct FeatureSpec {
  std::uint32_t block = 10;
  std::uint32_t width = 160;
  std::uint32_t height = 90;
  std::uint32_t channels = 3;

  std::size_t feature_count() const;
  friend bool operator==(const FeatureSpec&, const FeatureSpec&) = default;
};

/// Feature layout: (block_row, block_col, channel). A block without covered
/// pixels emits 0 on every channel.
std::vector<double> featurize(const ProjectedImage& image, const FeatureSpec& spec);

struct CentroidModel {
  FeatureSpec features;
  double temperature = 1.0;
  std::vector<std::vector<double>> centroids;

  std::size_t class_count() const { return centroids.size(); }
  friend bool operator==(const CentroidModel&, const CentroidModel&) = default;
};

/// Per-class mean feature. Throws TrainingError if a class in
/// [0, class_count) has no example.
CentroidModel train_centroid(std::span<const ProjectedImage> images, std::span<const std::uint32_t> labels,
                             std::size_t class_count, const FeatureSpec& spec, double temperature = 1.0);

/// Same as above from precomputed feature vectors.
CentroidModel train_centroid_features(std::span<const std::vector<double>> features,
                                      std::span<const std::uint32_t> labels, std::size_t class_count,
                                      const FeatureSpec& spec, double temperature = 1.0);

std::string centroid_model_to_json(const CentroidModel& model);
CentroidModel centroid_model_from_json(const std::string& text);
void save_centroid_model(const CentroidModel& model, const std::string& path);
CentroidModel load_centroid_model(const std::string& path);

/// softmax(-||f - c||^2 / temperature) over the class centroids.
class CentroidClassifier final : public Classifier {
 public:
  explicit CentroidClassifier(std::shared_ptr<const CentroidModel> model);

  std::size_t class_count() const override { return model_->class_count(); }
  LabelDistribution probabilities(const ProjectedImage& image) override;
  std::unique_ptr<Classifier> clone() const override;
  const CentroidModel& model() const { return *model_; }

 private:
  std::shared_ptr<const CentroidModel> model_;
};

/// Black-box classifier running as a child process (`/bin/sh -c command`).
/// Request: "CMSCLS01", u32 H, u32 W, u32 C, H*W*C f32. Response: u32 count,
/// count f32 probabilities. All integers and floats little-endian.
class ExternalClassifier final : public Classifier {
 public:
  ExternalClassifier(std::string command, std::size_t class_count);
  ~ExternalClassifier() override;
  ExternalClassifier(const ExternalClassifier&) = delete;
  ExternalClassifier& operator=(const ExternalClassifier&) = delete;

  std::size_t class_count() const override { return class_count_; }
  LabelDistribution probabilities(const ProjectedImage& image) override;
  std::unique_ptr<Classifier> clone() const override;

 private:
  void start();
  void stop();

  std::string command_;
  std::size_t class_count_;
  int pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::vector<std::uint8_t> buffer_;
};

std::vector<std::uint8_t> encode_classifier_request(const ProjectedImage& image);
/// Parses a complete response; throws ClassifierIoError on malformed input.
LabelDistribution decode_classifier_response(std::span<const std::uint8_t> bytes, std::size_t expected_classes);

}  // namespace cms
