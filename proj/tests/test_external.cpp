#include <cstring>
#include <string>

#include "cms/classifier.hpp"
#include "cms/errors.hpp"
#include "cms/smoothing.hpp"
#include "doctest.h"

using namespace cms;

namespace {

std::string fake(const std::string& args) { return std::string("'") + CMS_FAKE_CLASSIFIER + "' " + args; }

ProjectedImage image(float value) {
  ProjectedImage img(CameraIntrinsics{100, 100, 4, 3, 8, 6}, 3);
  std::fill(img.pixels.begin(), img.pixels.end(), value);
  std::fill(img.coverage.begin(), img.coverage.end(), 1);
  return img;
}

std::vector<std::uint8_t> response(std::initializer_list<float> probs) {
  std::vector<std::uint8_t> out(4 + 4 * probs.size());
  const std::uint32_t n = static_cast<std::uint32_t>(probs.size());
  std::memcpy(out.data(), &n, 4);
  std::size_t at = 4;
  for (float p : probs) {
    std::memcpy(out.data() + at, &p, 4);
    at += 4;
  }
  return out;
}

}  // namespace

TEST_SUITE("external") {
  TEST_CASE("request layout") {
    const auto bytes = encode_classifier_request(image(0.25f));
    REQUIRE(bytes.size() == 20 + 6 * 8 * 3 * 4);
    CHECK(std::string(bytes.begin(), bytes.begin() + 8) == "CMSCLS01");
    CHECK(bytes[8] == 6);
    CHECK(bytes[12] == 8);
    CHECK(bytes[16] == 3);
    float first;
    std::memcpy(&first, bytes.data() + 20, 4);
    CHECK(first == 0.25f);
  }

  TEST_CASE("response validation") {
    CHECK(decode_classifier_response(response({0.25f, 0.75f}), 2).probs[1] == 0.75);
    CHECK_THROWS_AS(decode_classifier_response(response({0.25f, 0.75f}), 3), ClassifierIoError);
    CHECK_THROWS_AS(decode_classifier_response(response({0.5f, 0.9f}), 2), ClassifierIoError);
    CHECK_THROWS_AS(decode_classifier_response(response({-0.5f, 1.5f}), 2), ClassifierIoError);
    auto cut = response({0.25f, 0.75f});
    cut.pop_back();
    CHECK_THROWS_AS(decode_classifier_response(cut, 2), ClassifierIoError);
  }

  TEST_CASE("constant external classifier") {
    ExternalClassifier clf(fake("constant 3 5"), 5);
    for (int i = 0; i < 5; ++i) CHECK(clf.predict(image(0.1f)).label == 3);
  }

  TEST_CASE("external classifier sees the pixels") {
    ExternalClassifier clf(fake("brightness 2"), 2);
    CHECK(clf.predict(image(0.2f)).label == 0);
    CHECK(clf.predict(image(0.8f)).label == 1);
    auto copy = clf.clone();
    CHECK(copy->predict(image(0.8f)).label == 1);
  }

  TEST_CASE("protocol failures raise classifier-io errors") {
    for (const char* mode : {"crash 3", "badsum 3", "wrongcount 3", "silent"}) {
      CAPTURE(mode);
      ExternalClassifier clf(fake(mode), 3);
      CHECK_THROWS_AS(clf.predict(image(0.5f)), ClassifierIoError);
    }
    ExternalClassifier missing("/nonexistent/classifier-binary", 3);
    CHECK_THROWS_AS(missing.predict(image(0.5f)), ClassifierIoError);
  }

  TEST_CASE("a failing classifier aborts the whole count") {
    ExternalClassifier clf(fake("crash 2"), 2);
    SmoothingEngine engine(clf, CameraIntrinsics{100, 100, 4, 3, 8, 6}, 2);
    auto cloud = std::make_shared<ColoredPointCloud>();
    cloud->push_back({0, 0, 1}, {1, 1, 1});
    CHECK_THROWS_AS(engine.sample_counts(SceneFrame(cloud), SmoothingSpec::one_axis(MotionAxis::Tz, 0.1), 10, {}),
                    ClassifierIoError);
  }

  TEST_CASE("external and built-in classifiers share one smoothing path") {
    ExternalClassifier clf(fake("constant 1 4"), 4);
    SmoothingEngine engine(clf, CameraIntrinsics{100, 100, 4, 3, 8, 6}, 3);
    auto cloud = std::make_shared<ColoredPointCloud>();
    cloud->push_back({0, 0, 1}, {1, 1, 1});
    const auto counts = engine.sample_counts(SceneFrame(cloud), SmoothingSpec::one_axis(MotionAxis::Tz, 0.1), 30, {});
    CHECK(counts.counts == std::vector<std::uint64_t>{0, 30, 0, 0});
  }
}
