#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>
#include <vector>

#include "essmc/rng.hpp"

using essmc::RngStream;

// Published known-answer vectors for the Philox 4x32-10 block function.
TEST_CASE("philox core matches reference vectors", "[rng]") {
  using essmc::detail::philox4x32_10;

  auto out = philox4x32_10({0u, 0u, 0u, 0u}, {0u, 0u});
  CHECK(out[0] == 0x6627e8d5u);
  CHECK(out[1] == 0xe169c58du);
  CHECK(out[2] == 0xbc57ac4cu);
  CHECK(out[3] == 0x9b00dbd8u);

  out = philox4x32_10({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                      {0xffffffffu, 0xffffffffu});
  CHECK(out[0] == 0x408f276du);
  CHECK(out[1] == 0x41c83b0eu);
  CHECK(out[2] == 0xa20bc7c6u);
  CHECK(out[3] == 0x6d5451fdu);

  out = philox4x32_10({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                      {0xa4093822u, 0x299f31d0u});
  CHECK(out[0] == 0xd16cfe09u);
  CHECK(out[1] == 0x94fdccebu);
  CHECK(out[2] == 0x5001e420u);
  CHECK(out[3] == 0x24126ea1u);
}

TEST_CASE("identical stream coordinates replay identical sequences", "[rng]") {
  RngStream a(12345, 7, 42);
  RngStream b(12345, 7, 42);
  for (int i = 0; i < 100; ++i) REQUIRE(a.next_u64() == b.next_u64());
}

TEST_CASE("any coordinate change decorrelates the stream", "[rng]") {
  RngStream base(12345, 7, 42);
  RngStream seed(12346, 7, 42);
  RngStream id(12345, 8, 42);
  RngStream iter(12345, 7, 43);
  const auto v = base.next_u64();
  CHECK(v != seed.next_u64());
  CHECK(v != id.next_u64());
  CHECK(v != iter.next_u64());
}

TEST_CASE("uniform stays in [0,1) and uniform_open in (0,1)", "[rng]") {
  RngStream r(99, essmc::kStreamScratch, 0);
  for (int i = 0; i < 10000; ++i) {
    const double u = r.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    const double v = r.uniform_open();
    REQUIRE(v > 0.0);
    REQUIRE(v < 1.0);
  }
}

TEST_CASE("uniform_int is exact on its range", "[rng]") {
  RngStream r(4, essmc::kStreamScratch, 1);
  std::vector<long> counts(7, 0);
  for (int i = 0; i < 70000; ++i) ++counts[r.uniform_int(7)];
  for (long c : counts) {
    CHECK(c > 9000);
    CHECK(c < 11000);
  }
  CHECK_THROWS_AS(r.uniform_int(0), essmc::Error);
}

// First draw across many distinct stream ids behaves like an iid uniform
// sample: chi-square over 16 bins stays below a generous 0.999 quantile.
TEST_CASE("first draws across streams are equidistributed", "[rng]") {
  const int n_streams = 4096, bins = 16;
  std::vector<long> counts(bins, 0);
  for (int s = 0; s < n_streams; ++s) {
    RngStream r(2024, std::uint32_t(s), 0);
    ++counts[int(r.uniform() * bins)];
  }
  const double expected = double(n_streams) / bins;
  double chi2 = 0;
  for (long c : counts) chi2 += (c - expected) * (c - expected) / expected;
  // chi2(15) 0.999 quantile is 37.7
  CHECK(chi2 < 37.7);
}

TEST_CASE("normal draws have the right first two moments", "[rng]") {
  RngStream r(7, essmc::kStreamScratch, 2);
  const int n = 200000;
  double s = 0, s2 = 0;
  for (int i = 0; i < n; ++i) {
    const double z = r.normal();
    s += z;
    s2 += z * z;
  }
  const double mean = s / n, var = s2 / n - mean * mean;
  CHECK(std::abs(mean) < 0.01);
  CHECK(std::abs(var - 1.0) < 0.02);
}

TEST_CASE("draw counter advances per 64-bit draw", "[rng]") {
  RngStream r(1, 2, 3);
  CHECK(r.draws_consumed() == 0);
  r.uniform();
  CHECK(r.draws_consumed() == 1);
  r.normal();  // two uniforms
  CHECK(r.draws_consumed() == 3);
}
