#include <doctest.h>

#include <cmath>
#include <random>

#include "hdrzsq/error.hpp"
#include "hdrzsq/tonemap.hpp"
#include "support.hpp"

using namespace hdrzsq;

TEST_CASE("forward curve follows the closed form") {
  const TmoParams p{2.0, 0.5, 1000};
  const ToneCurve curve(p, SampleMapping::integer(), 65535);
  // 255 * (2 * x / 1000)^0.5, rounded half up, clamped.
  CHECK(curve.forward(0) == 0);
  CHECK(curve.forward(500) == 255);
  CHECK(curve.forward(65535) == 255);
  CHECK(curve.forward(125) == 128);  // 255 * 0.5 = 127.5 -> 128
  CHECK(curve.forward(8) == 32);     // 255 * sqrt(0.016) = 32.26
}

TEST_CASE("half mapping tone maps the float value, not the bit pattern") {
  const TmoParams p{1.0, 1.0, float_to_half_bits(4.0f)};
  const ToneCurve curve(p, SampleMapping::half(), kMaxFiniteHalfBits);
  CHECK(curve.forward(float_to_half_bits(1.0f)) == 64);  // 63.75
  CHECK(curve.forward(float_to_half_bits(2.0f)) == 128);  // 127.5
  CHECK(curve.forward(float_to_half_bits(4.0f)) == 255);
}

TEST_CASE("forward is monotone and inverse lands in the forward bucket") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.1, 4.0);
  for (int trial = 0; trial < 40; ++trial) {
    const bool half = trial % 2 == 0;
    const SampleMapping m = half ? SampleMapping::half() : SampleMapping::integer();
    const unsigned depth = half ? 16 : 9 + trial % 8;
    const HdrImage shape(1, 1, depth, m);
    const std::uint32_t top = shape.max_sample();
    TmoParams p;
    p.exposure = u(rng);
    p.gamma = 1.0 / u(rng);
    p.white_point = 1 + static_cast<std::uint32_t>(rng() % top);
    const ToneCurve curve(p, m, top);
    for (std::uint32_t x = 1; x <= top; ++x) REQUIRE(curve.forward(x - 1) <= curve.forward(x));
    for (std::uint32_t x = 0; x <= top; ++x) {
      const std::uint8_t v = curve.forward(x);
      REQUIRE(curve.forward(curve.inverse(v)) == v);
    }
    for (int v = 0; v < 256; ++v) REQUIRE(curve.inverse(static_cast<std::uint8_t>(v)) <= top);
  }
}

TEST_CASE("image-level operators and parameter checks") {
  std::mt19937_64 rng(6);
  const HdrImage img = testsupport::random_image(rng, 17, 11, 14);
  const TmoParams p = default_tmo_params(img);
  // 99th percentile: at most 1% of samples exceed it.
  std::size_t above = 0;
  for (const auto& pl : img.planes) {
    for (auto v : pl.data) above += v > p.white_point;
  }
  CHECK(above <= img.width * img.height * 3 / 100 + 1);

  const LdrImage ldr = forward_tmo(img, p);
  const HdrImage back = inverse_tmo(ldr, p, img.depth, img.mapping);
  CHECK(forward_tmo(back, p) == ldr);

  const ToneCurve dec = ToneCurve::from_inverse_table(ToneCurve(p, img.mapping, img.max_sample()).inverse_table(), img.max_sample());
  CHECK_FALSE(dec.has_forward());
  CHECK(inverse_tmo(ldr, dec, img.depth, img.mapping) == back);

  TmoParams bad = p;
  bad.white_point = 0;
  CHECK_THROWS_AS(forward_tmo(img, bad), Error);
  bad = p;
  bad.gamma = -1;
  CHECK_THROWS_AS(forward_tmo(img, bad), Error);

  std::array<std::uint16_t, 256> table{};
  table[7] = 20000;
  CHECK_THROWS_AS(ToneCurve::from_inverse_table(table, 4095), Error);
}
