#include "cms/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "cms/errors.hpp"
#include "cms/kernels.hpp"
#include "json.hpp"

namespace cms {

std::uint32_t LabelDistribution::argmax() const {
  if (probs.empty()) throw InvalidArgument("empty label distribution");
  std::uint32_t best = 0;
  for (std::uint32_t i = 1; i < probs.size(); ++i)
    if (probs[i] > probs[best]) best = i;
  return best;
}

Prediction Classifier::predict(const ProjectedImage& image) {
  Prediction p;
  p.distribution = probabilities(image);
  p.label = p.distribution.argmax();
  return p;
}

std::size_t FeatureSpec::feature_count() const {
  return static_cast<std::size_t>((height + block - 1) / block) * ((width + block - 1) / block) * channels;
}

std::vector<double> featurize(const ProjectedImage& image, const FeatureSpec& spec) {
  if (spec.block == 0) throw InvalidArgument("featurize: block size must be >= 1");
  if (image.width() != spec.width || image.height() != spec.height || image.channels != spec.channels)
    throw InvalidArgument("featurize: image does not match the feature spec");
  const std::uint32_t brows = (spec.height + spec.block - 1) / spec.block;
  const std::uint32_t bcols = (spec.width + spec.block - 1) / spec.block;
  const std::uint32_t c = spec.channels;
  std::vector<double> sums(static_cast<std::size_t>(brows) * bcols * c, 0.0);
  std::vector<std::uint32_t> counts(static_cast<std::size_t>(brows) * bcols, 0);
  for (std::uint32_t r = 0; r < spec.height; ++r) {
    const std::uint32_t br = r / spec.block;
    for (std::uint32_t col = 0; col < spec.width; ++col) {
      if (!image.covered(r, col)) continue;
      const std::size_t b = static_cast<std::size_t>(br) * bcols + col / spec.block;
      ++counts[b];
      const float* px = image.pixels.data() + (static_cast<std::size_t>(r) * spec.width + col) * c;
      for (std::uint32_t ch = 0; ch < c; ++ch) sums[b * c + ch] += px[ch];
    }
  }
  for (std::size_t b = 0; b < counts.size(); ++b)
    for (std::uint32_t ch = 0; ch < c; ++ch) sums[b * c + ch] = counts[b] ? sums[b * c + ch] / counts[b] : 0.0;
  return sums;
}

CentroidModel train_centroid_features(std::span<const std::vector<double>> features,
                                      std::span<const std::uint32_t> labels, std::size_t class_count,
                                      const FeatureSpec& spec, double temperature) {
  if (features.size() != labels.size()) throw InvalidArgument("train_centroid: features and labels differ in length");
  if (class_count == 0) throw TrainingError("train_centroid: no classes");
  if (!(temperature > 0.0)) throw InvalidArgument("train_centroid: temperature must be positive");
  const std::size_t dim = spec.feature_count();

  // Fixed-point sums (quantum 2^-96) make the mean independent of example
  // order and of duplicating the training set. Any double of magnitude above
  // 2^-44 converts exactly, so a single example reproduces its feature.
  constexpr double kScale = 0x1.0p96;
  constexpr std::size_t kMaxPerClass = 2'000'000;  // keeps |sum| below 2^127
  std::vector<std::vector<__int128>> acc(class_count, std::vector<__int128>(dim, 0));
  std::vector<std::uint64_t> count(class_count, 0);
  for (std::size_t i = 0; i < features.size(); ++i) {
    const std::uint32_t y = labels[i];
    if (y >= class_count) throw TrainingError("train_centroid: label " + std::to_string(y) + " out of range");
    if (features[i].size() != dim) throw InvalidArgument("train_centroid: feature dimension mismatch");
    for (std::size_t j = 0; j < dim; ++j) {
      const double f = features[i][j];
      if (!std::isfinite(f) || std::abs(f) > 1e3) throw TrainingError("train_centroid: feature out of range");
      acc[y][j] += static_cast<__int128>(f * kScale);
    }
    if (++count[y] > kMaxPerClass) throw TrainingError("train_centroid: too many examples for one class");
  }
  CentroidModel model;
  model.features = spec;
  model.temperature = temperature;
  model.centroids.resize(class_count);
  for (std::size_t y = 0; y < class_count; ++y) {
    if (count[y] == 0) throw TrainingError("train_centroid: class " + std::to_string(y) + " has no examples");
    model.centroids[y].resize(dim);
    for (std::size_t j = 0; j < dim; ++j)
      model.centroids[y][j] = static_cast<double>(acc[y][j]) / static_cast<double>(count[y]) / kScale;
  }
  return model;
}

CentroidModel train_centroid(std::span<const ProjectedImage> images, std::span<const std::uint32_t> labels,
                             std::size_t class_count, const FeatureSpec& spec, double temperature) {
  std::vector<std::vector<double>> feats;
  feats.reserve(images.size());
  for (const auto& img : images) feats.push_back(featurize(img, spec));
  return train_centroid_features(feats, labels, class_count, spec, temperature);
}

std::string centroid_model_to_json(const CentroidModel& model) {
  nlohmann::json j;
  j["kind"] = "centroid";
  j["block"] = model.features.block;
  j["width"] = model.features.width;
  j["height"] = model.features.height;
  j["channels"] = model.features.channels;
  j["temperature"] = model.temperature;
  j["centroids"] = model.centroids;
  return j.dump(1);
}

CentroidModel centroid_model_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("model", std::string("invalid JSON: ") + e.what());
  }
  auto field = [&](const char* name) -> const nlohmann::json& {
    if (!j.contains(name)) throw ConfigError(std::string("model.") + name, "missing");
    return j.at(name);
  };
  if (field("kind") != "centroid") throw ConfigError("model.kind", "expected \"centroid\"");
  CentroidModel m;
  try {
    m.features.block = field("block").get<std::uint32_t>();
    m.features.width = field("width").get<std::uint32_t>();
    m.features.height = field("height").get<std::uint32_t>();
    m.features.channels = field("channels").get<std::uint32_t>();
    m.temperature = field("temperature").get<double>();
    m.centroids = field("centroids").get<std::vector<std::vector<double>>>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("model", std::string("bad field type: ") + e.what());
  }
  if (m.centroids.empty()) throw ConfigError("model.centroids", "no classes");
  for (const auto& c : m.centroids)
    if (c.size() != m.features.feature_count()) throw ConfigError("model.centroids", "dimension mismatch");
  return m;
}

void save_centroid_model(const CentroidModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write model '" + path + "'");
  out << centroid_model_to_json(model) << '\n';
}

CentroidModel load_centroid_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("classifier.model", "cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return centroid_model_from_json(ss.str());
}

CentroidClassifier::CentroidClassifier(std::shared_ptr<const CentroidModel> model) : model_(std::move(model)) {
  if (!model_ || model_->centroids.empty()) throw InvalidArgument("centroid classifier needs a trained model");
}

LabelDistribution CentroidClassifier::probabilities(const ProjectedImage& image) {
  const auto f = featurize(image, model_->features);
  const auto& k = kernels::active();
  LabelDistribution out;
  out.probs.resize(model_->class_count());
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < out.probs.size(); ++c) {
    out.probs[c] = -k.squared_distance(f, model_->centroids[c]) / model_->temperature;
    best = std::max(best, out.probs[c]);
  }
  double total = 0.0;
  for (double& p : out.probs) total += (p = std::exp(p - best));
  for (double& p : out.probs) p /= total;
  return out;
}

std::unique_ptr<Classifier> CentroidClassifier::clone() const { return std::make_unique<CentroidClassifier>(model_); }

}  // namespace cms
