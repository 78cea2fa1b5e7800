#include <climits>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <string>
#include <tuple>

#include "cms/errors.hpp"
#include "cms/pointcloud.hpp"
#include "doctest.h"

using namespace cms;

namespace {

std::vector<std::uint8_t> bytes_of(const std::string& s) { return {s.begin(), s.end()}; }

ColoredPointCloud random_cloud(std::size_t n, std::uint64_t seed, double extent = 1.0) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(-extent, extent);
  std::uniform_int_distribution<int> c(0, 255);
  ColoredPointCloud cloud;
  for (std::size_t i = 0; i < n; ++i)
    cloud.push_back({u(gen), u(gen), u(gen)}, {c(gen) / 255.0f, c(gen) / 255.0f, c(gen) / 255.0f});
  return cloud;
}

const char* kOnePoint =
    "ply\nformat ascii 1.0\nelement vertex 1\n"
    "property float x\nproperty float y\nproperty float z\n"
    "property uchar red\nproperty uchar green\nproperty uchar blue\n"
    "end_header\n0 0 2 255 0 0\n";

}  // namespace

TEST_SUITE("pointcloud") {
  TEST_CASE("one ASCII vertex") {
    const auto cloud = parse_ply(bytes_of(kOnePoint));
    REQUIRE(cloud.size() == 1);
    CHECK(cloud.position(0) == Point3{0, 0, 2});
    CHECK(cloud.color(0)[0] == 1.0f);
    CHECK(cloud.color(0)[1] == 0.0f);
    CHECK(cloud.color(0)[2] == 0.0f);
  }

  TEST_CASE("binary round trip keeps positions and colors") {
    const auto cloud = random_cloud(1000, 3);
    const auto back = parse_ply(write_ply(cloud));
    REQUIRE(back.size() == cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      CHECK(norm(back.position(i).vec() - cloud.position(i).vec()) < 1e-6);
      for (int c = 0; c < 3; ++c) CHECK(back.color(i)[c] == cloud.color(i)[c]);
    }
    CHECK(parse_ply(write_ply(back)) == back);
  }

  TEST_CASE("empty cloud writes a valid file") {
    const auto bytes = write_ply(ColoredPointCloud{});
    const std::string text(bytes.begin(), bytes.end());
    CHECK(text.find("element vertex 0\n") != std::string::npos);
    CHECK(parse_ply(bytes).empty());
  }

  TEST_CASE("color quantization rounds half up") {
    CHECK(quantize_channel(1.0f) == 255);
    CHECK(quantize_channel(0.5f) == 128);
    CHECK(quantize_channel(0.0f) == 0);
  }

  TEST_CASE("too few vertex rows is a truncation") {
    std::string s =
        "ply\nformat ascii 1.0\nelement vertex 10\nproperty float x\nproperty float y\nproperty float z\n"
        "property uchar red\nproperty uchar green\nproperty uchar blue\nend_header\n";
    for (int i = 0; i < 9; ++i) s += "0 0 1 10 20 30\n";
    try {
      parse_ply(bytes_of(s));
      FAIL("expected a truncation error");
    } catch (const PlyError& e) {
      CHECK(e.kind() == PlyError::Kind::Truncated);
    }
    auto bin = write_ply(random_cloud(10, 1));
    bin.resize(bin.size() - 5);
    CHECK_THROWS_AS(parse_ply(bin), PlyError);
  }

  TEST_CASE("malformed header reports its line") {
    const std::string s = "ply\nformat ascii 1.0\nelement vertex one\nend_header\n";
    try {
      parse_ply(bytes_of(s));
      FAIL("expected a parse error");
    } catch (const PlyError& e) {
      CHECK(e.kind() == PlyError::Kind::Malformed);
      CHECK(e.line() == 3);
    }
    CHECK_THROWS_AS(parse_ply(bytes_of("plx\n")), PlyError);
  }

  TEST_CASE("missing color property is a schema error") {
    const std::string s =
        "ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nproperty float y\nproperty float z\n"
        "property uchar red\nproperty uchar green\nend_header\n0 0 1 1 2\n";
    try {
      parse_ply(bytes_of(s));
      FAIL("expected a schema error");
    } catch (const PlyError& e) {
      CHECK(e.kind() == PlyError::Kind::Schema);
    }
  }

  TEST_CASE("push_back rejects invalid points") {
    ColoredPointCloud c;
    CHECK_THROWS_AS(c.push_back({0, 0, NAN}, {0, 0, 0}), InvalidArgument);
    CHECK_THROWS_AS(c.push_back({0, 0, 1}, {1.5f, 0, 0}), InvalidArgument);
    CHECK_THROWS_AS(c.push_back({0, 0, 1}, {0.5f, 0}), InvalidArgument);
  }

  TEST_CASE("uniform downsampling keeps every k-th point") {
    const auto cloud = random_cloud(21, 2);
    const auto d = uniform_downsample(cloud, 7);
    REQUIRE(d.size() == 3);
    CHECK(d.position(0) == cloud.position(0));
    CHECK(d.position(1) == cloud.position(7));
    CHECK(d.position(2) == cloud.position(14));
    CHECK(uniform_downsample(cloud, 1) == cloud);
    CHECK(uniform_downsample(random_cloud(100, 4), 7).size() == 15);
    CHECK_THROWS_AS(uniform_downsample(cloud, 0), InvalidArgument);
  }

  TEST_CASE("voxel downsampling merges points sharing a voxel") {
    ColoredPointCloud c;
    c.push_back({0.001, 0.002, 0.003}, {1, 0, 0});
    c.push_back({0.004, 0.005, 0.006}, {0, 1, 0});
    c.push_back({0.007, 0.008, 0.009}, {0, 0, 1});
    const auto d = voxel_downsample(c, 0.01);
    REQUIRE(d.size() == 1);
    CHECK(d.position(0).x == doctest::Approx(0.004));
    CHECK(d.position(0).y == doctest::Approx(0.005));
    CHECK(d.position(0).z == doctest::Approx(0.006));
    CHECK(d.color(0)[0] == doctest::Approx(1.0 / 3));

    ColoredPointCloud far;
    far.push_back({0.005, 0.005, 0.005}, {1, 0, 0});
    far.push_back({1.005, 0.005, 0.005}, {0, 1, 0});
    const auto f = voxel_downsample(far, 0.01);
    REQUIRE(f.size() == 2);
    CHECK(f.position(0) == far.position(0));
    CHECK(f.position(1) == far.position(1));
    CHECK_THROWS_AS(voxel_downsample(far, 0.0), InvalidArgument);
  }

  TEST_CASE("voxel output matches a bucketing oracle") {
    const double v = 0.0133;
    const auto cloud = random_cloud(10000, 9, 0.3);
    std::set<std::tuple<long, long, long>> buckets;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      const Point3 p = cloud.position(i);
      buckets.insert({std::lround(std::floor(p.z / v)), std::lround(std::floor(p.y / v)), std::lround(std::floor(p.x / v))});
    }
    const auto d = voxel_downsample(cloud, v);
    CHECK(d.size() == buckets.size());
    std::set<std::tuple<long, long, long>> seen;
    std::tuple<long, long, long> prev{LONG_MIN, LONG_MIN, LONG_MIN};
    for (std::size_t i = 0; i < d.size(); ++i) {
      const Point3 p = d.position(i);
      const std::tuple<long, long, long> key{std::lround(std::floor(p.z / v)), std::lround(std::floor(p.y / v)),
                                             std::lround(std::floor(p.x / v))};
      CHECK(seen.insert(key).second);
      CHECK(prev < key);
      prev = key;
      CHECK(std::abs(p.x) <= 0.3);
      CHECK(std::abs(p.y) <= 0.3);
      CHECK(std::abs(p.z) <= 0.3);
    }
  }

  TEST_CASE("two-stage downsampling composes both stages") {
    const auto cloud = random_cloud(5000, 12, 0.2);
    CHECK(two_stage_downsample(cloud, 7, 0.0133) == voxel_downsample(uniform_downsample(cloud, 7), 0.0133));
    CHECK(two_stage_downsample(cloud, 1, 0.0) == cloud);
  }
}
