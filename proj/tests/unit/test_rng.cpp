#include <cmath>
#include <set>
#include <vector>

#include "doctest.h"
#include "renewal_ldp/rng.hpp"

using rldp::Philox;

TEST_CASE("philox4x32-10 known answers") {
  const auto zero = Philox::bijection({0, 0, 0, 0}, {0, 0});
  CHECK(zero == Philox::Block{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
  const auto ones = Philox::bijection({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu});
  CHECK(ones == Philox::Block{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
  const auto digits = Philox::bijection({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u});
  CHECK(digits == Philox::Block{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("same seed and stream reproduce the sequence") {
  Philox a(42, 3), b(42, 3);
  for (int i = 0; i < 1000; ++i) CHECK(a() == b());
}

TEST_CASE("substreams differ") {
  Philox a = Philox::substream(42, 0), b = Philox::substream(42, 1), c(43, 0);
  int same_ab = 0, same_ac = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto va = a();
    same_ab += va == b();
    same_ac += va == c();
  }
  CHECK(same_ab == 0);
  CHECK(same_ac == 0);
}

TEST_CASE("open unit uniforms have the right moments") {
  Philox rng(7);
  const int n = 200000;
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = rldp::uniform_open01(rng);
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
    s += u;
    s2 += u * u;
  }
  CHECK(std::abs(s / n - 0.5) < 5.0 * std::sqrt(1.0 / 12.0 / n));
  CHECK(std::abs(s2 / n - 1.0 / 3.0) < 5.0 * std::sqrt(4.0 / 45.0 / n));
}
