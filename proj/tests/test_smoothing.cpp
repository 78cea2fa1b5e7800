#include <cmath>
#include <memory>

#include "cms/certify.hpp"
#include "cms/errors.hpp"
#include "cms/smoothing.hpp"
#include "doctest.h"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace cms;
using testing_support::ColumnThresholdClassifier;
using testing_support::ConstantClassifier;

namespace {

const CameraIntrinsics kCamera{};  // 160 x 90, focal 386.274

// One point whose column crosses 119 exactly when the depth translation
// changes sign: h = [t_z > 0].
SceneFrame depth_threshold_frame() {
  auto cloud = std::make_shared<ColoredPointCloud>();
  cloud->push_back({(119.0 - kCamera.cx) / kCamera.fx, 0.0, 1.0}, {1, 1, 1});
  return SceneFrame(cloud);
}

SampleCounts counts_of(std::initializer_list<std::uint64_t> c) {
  SampleCounts s(c.size());
  s.counts = c;
  for (auto v : c) s.n += v;
  return s;
}

}  // namespace

TEST_SUITE("smoothing") {
  TEST_CASE("constant classifier puts every sample in one class") {
    ConstantClassifier clf(3, 5);
    SmoothingEngine engine(clf, kCamera, 2);
    const auto c = engine.sample_counts(depth_threshold_frame(), SmoothingSpec::one_axis(MotionAxis::Tz, 0.1), 200, {1, 1});
    CHECK(c.n == 200);
    CHECK(c[3] == 200);
  }

  TEST_CASE("zero noise counts only the benign prediction") {
    ColumnThresholdClassifier clf(119);
    SmoothingEngine engine(clf, kCamera);
    const auto frame = depth_threshold_frame();
    const auto benign = engine.predict(frame).label;
    const auto c = engine.sample_counts(frame, SmoothingSpec{}, 50, {5, 0});
    CHECK(c[benign] == 50);
    const auto p = engine.smoothed_predict(frame, SmoothingSpec{}, 8, 0.01, {5, 0});
    CHECK(!p.abstained);
    CHECK(p.top_class == benign);
  }

  TEST_CASE("threshold classifier estimates its smoothed probability") {
    ColumnThresholdClassifier clf(119);
    SmoothingEngine engine(clf, kCamera, 3);
    const auto c =
        engine.sample_counts(depth_threshold_frame(), SmoothingSpec::one_axis(MotionAxis::Tz, 0.1), 10000, {77, 0});
    // q = Phi(0 / sigma) = 1/2.
    CHECK(std::abs(static_cast<double>(c[1]) / 10000.0 - 0.5) <= 0.02);
  }

  TEST_CASE("counts do not depend on the worker count") {
    ColumnThresholdClassifier clf(119);
    const auto spec = SmoothingSpec::one_axis(MotionAxis::Tz, 0.1);
    SmoothingEngine one(clf, kCamera, 1), many(clf, kCamera, 7);
    CHECK(one.sample_counts(depth_threshold_frame(), spec, 997, {3, 9}) ==
          many.sample_counts(depth_threshold_frame(), spec, 997, {3, 9}));
  }

  TEST_CASE("decision rule on raw counts") {
    const auto clear = decide(counts_of({100, 0, 0, 0, 0}), 0.01);
    CHECK(!clear.abstained);
    CHECK(clear.top_class == 0);

    const auto close = decide(counts_of({51, 49}), 0.01);
    CHECK(close.abstained);
    // Two-sided exact p-value for 51 of 100.
    const double p = 2.0 * (1.0 - oracle::binom_cdf(50, 100, 0.5));
    CHECK(close.pvalue == doctest::Approx(p).epsilon(1e-9));

    CHECK(decide(counts_of({1, 0}), 0.01).abstained);
    CHECK(decide(counts_of({0, 1, 0}), 0.01).abstained);
    CHECK(decide(counts_of({7, 0}), 0.01).abstained);
    CHECK(!decide(counts_of({8, 0}), 0.01).abstained);
  }

  TEST_CASE("top and runner-up use the lowest index on ties") {
    const auto t = decide(counts_of({10, 30, 30, 5}), 0.01);
    CHECK(t.top_class == 1);
    CHECK(t.runner_up_class == 2);
    CHECK(t.abstained);
  }

  TEST_CASE("soft mean is a distribution") {
    ColumnThresholdClassifier clf(119);
    SmoothingEngine engine(clf, kCamera, 2);
    const auto m = engine.soft_mean(depth_threshold_frame(), SmoothingSpec::one_axis(MotionAxis::Tz, 0.1), 400, {2, 2});
    CHECK(m[0] + m[1] == doctest::Approx(1.0));
  }

  TEST_CASE("argument checks") {
    ConstantClassifier clf(0, 2);
    SmoothingEngine engine(clf, kCamera);
    CHECK_THROWS_AS(engine.sample_counts(depth_threshold_frame(), {}, 0, {}), InvalidArgument);
    CHECK_THROWS_AS(engine.smoothed_predict(depth_threshold_frame(), {}, 10, 0.0, {}), InvalidArgument);
    CHECK_THROWS_AS(engine.smoothed_predict(depth_threshold_frame(), {}, 10, 1.0, {}), InvalidArgument);
  }
}
