#include <cmath>

#include "cms/rng.hpp"
#include "doctest.h"

using namespace cms;

TEST_SUITE("rng") {
  // Known-answer vectors from the Random123 distribution.
  TEST_CASE("Philox4x32-10 known answers") {
    using A4 = std::array<std::uint32_t, 4>;
    CHECK(philox4x32_10({0, 0, 0, 0}, {0, 0}) == A4{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
    CHECK(philox4x32_10({~0u, ~0u, ~0u, ~0u}, {~0u, ~0u}) == A4{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
    CHECK(philox4x32_10({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
          A4{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
  }

  TEST_CASE("uniform draws lie in (0, 1] and are reproducible") {
    const CounterRng a(123, 4), b(123, 4), c(123, 5);
    double sum = 0;
    for (std::uint64_t i = 0; i < 20000; ++i) {
      const double u = a.uniform(i, 0);
      REQUIRE(u > 0.0);
      REQUIRE(u <= 1.0);
      CHECK(u == b.uniform(i, 0));
      sum += u;
    }
    CHECK(std::abs(sum / 20000 - 0.5) < 0.01);
    CHECK(a.uniform(0, 0) != c.uniform(0, 0));
    CHECK(a.uniform(0, 0) != a.uniform(0, 1));
  }

  TEST_CASE("normal draws have unit variance") {
    const CounterRng r(7, 0);
    const int n = 50000;
    double s = 0, s2 = 0;
    for (int i = 0; i < n; ++i) {
      const double z = r.normal(static_cast<std::uint64_t>(i), 2);
      REQUIRE(std::isfinite(z));
      s += z;
      s2 += z * z;
    }
    CHECK(std::abs(s / n) < 0.03);
    CHECK(std::abs(s2 / n - 1.0) < 0.03);
  }

  TEST_CASE("splitmix64 reference value") {
    // First output of the reference generator seeded with 0.
    CHECK(splitmix64(0) == 0xe220a8397b1dcdafull);
  }
}
