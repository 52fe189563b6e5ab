#include <doctest.h>

#include <random>

#include "hdrzsq/error.hpp"
#include "hdrzsq/residual.hpp"
#include "support.hpp"

using namespace hdrzsq;

namespace {

std::array<std::int32_t, 3> rct(std::int32_t r, std::int32_t g, std::int32_t b) {
  const std::vector<std::int32_t> R{r}, G{g}, B{b};
  const SignedTriple t = color_forward(R, G, B);
  return {t.a[0], t.b[0], t.c[0]};
}

std::array<std::int32_t, 3> irct(std::int32_t y, std::int32_t cb, std::int32_t cr) {
  const std::vector<std::int32_t> Y{y}, CB{cb}, CR{cr};
  const SignedTriple t = color_inverse(Y, CB, CR);
  return {t.a[0], t.b[0], t.c[0]};
}

}  // namespace

TEST_CASE("reversible color transform is exact") {
  CHECK(rct(10, 20, 30) == std::array<std::int32_t, 3>{20, 10, -10});
  CHECK(rct(-1, -1, -1) == std::array<std::int32_t, 3>{-1, 0, 0});
  CHECK(rct(-3, 0, 0) == std::array<std::int32_t, 3>{-1, 0, -3});  // floor(-3/4) = -1
  for (int r = -40; r <= 40; ++r) {
    for (int g = -40; g <= 40; ++g) {
      for (int b = -40; b <= 40; ++b) {
        const auto t = rct(r, g, b);
        REQUIRE(irct(t[0], t[1], t[2]) == std::array<std::int32_t, 3>{r, g, b});
      }
    }
  }
}

TEST_CASE("component errors within delta give RGB errors within 2 delta") {
  for (int delta = 1; delta <= 4; ++delta) {
    int worst = 0;
    for (int r = -6; r <= 6; r += 3) {
      for (int g = -7; g <= 7; ++g) {
        for (int b = -5; b <= 5; b += 2) {
          const auto t = rct(r, g, b);
          for (int dy = -delta; dy <= delta; ++dy) {
            for (int db = -delta; db <= delta; ++db) {
              for (int dr = -delta; dr <= delta; ++dr) {
                const auto back = irct(t[0] + dy, t[1] + db, t[2] + dr);
                const int e = std::max({std::abs(back[0] - r), std::abs(back[1] - g),
                                        std::abs(back[2] - b)});
                worst = std::max(worst, e);
              }
            }
          }
        }
      }
    }
    CAPTURE(delta);
    CHECK(worst <= static_cast<int>(rgb_error_bound(ColorTransform::kReversible, delta)));
    CHECK(worst == 2 * delta);  // the bound is attained
  }
}

TEST_CASE("unquantized residuals reconstruct the image exactly") {
  std::mt19937_64 rng(14);
  for (auto t : {ColorTransform::kNone, ColorTransform::kReversible}) {
    for (unsigned depth : {10u, 16u}) {
      const HdrImage img = testsupport::random_image(rng, 19, 13, depth);
      const TmoParams tmo = default_tmo_params(img);
      const ToneCurve curve(tmo, img.mapping, img.max_sample());
      LdrImage base = forward_tmo(img, curve);
      for (auto& p : base.planes) {
        for (auto& v : p.data) v = static_cast<std::uint8_t>(std::clamp(v + int(rng() % 7) - 3, 0, 255));
      }
      const ResidualPlanes res = compute_residual(img, base, curve, t);
      std::array<std::vector<std::uint32_t>, 3> stored;
      for (int c = 0; c < 3; ++c) {
        stored[c] = res.planes[c].data;
        const auto top = *std::max_element(stored[c].begin(), stored[c].end());
        CHECK(*std::min_element(stored[c].begin(), stored[c].end()) == 0);
        CHECK(top < (1u << res.domain_bits[c]));
      }
      const ToneCurve dec = ToneCurve::from_inverse_table(curve.inverse_table(), img.max_sample());
      CHECK(reconstruct_hdr(stored, res.bias, t, base, dec, img.depth, img.mapping) == img);
    }
  }
}

TEST_CASE("plane codec round trip") {
  std::mt19937_64 rng(15);
  for (std::uint32_t bins : {1u, 2u, 255u, 256u, 257u, 70000u}) {
    for (auto codec : {LosslessCodecId::kRaw, LosslessCodecId::kPredictiveDeflate}) {
      IndexImage idx{1 + rng() % 30, 1 + rng() % 30, bins, {}};
      idx.indices.resize(idx.width * idx.height);
      std::uint32_t walk = 0;
      for (auto& q : idx.indices) {
        walk = static_cast<std::uint32_t>((walk + rng() % 5) % bins);
        q = rng() % 10 == 0 ? static_cast<std::uint32_t>(rng() % bins) : walk;
      }
      const Bytes enc = encode_plane(idx, codec);
      CHECK(enc[0] == static_cast<std::uint8_t>(codec));
      CHECK(decode_plane(enc) == idx);
    }
  }
  // Smooth planes actually compress.
  IndexImage flat{64, 64, 300, std::vector<std::uint32_t>(4096, 123)};
  CHECK(encode_plane(flat, LosslessCodecId::kPredictiveDeflate).size() < 200);
}

TEST_CASE("plane codec rejects damaged payloads") {
  IndexImage idx{16, 16, 40, {}};
  for (std::uint32_t i = 0; i < 256; ++i) idx.indices.push_back(i * 7 % 40);
  const Bytes enc = encode_plane(idx, LosslessCodecId::kPredictiveDeflate);
  CHECK_THROWS_AS(decode_plane(Bytes(enc.begin(), enc.begin() + 10)), Error);
  CHECK_THROWS_AS(decode_plane(Bytes(enc.begin(), enc.end() - 3)), Error);
  Bytes bad = enc;
  bad[0] = 9;
  CHECK_THROWS_AS(decode_plane(bad), Error);
  bad = enc;
  bad.back() ^= 0x5A;
  CHECK_THROWS_AS(decode_plane(bad), Error);

  IndexImage wrong{2, 2, 3, {0, 1, 2, 3}};
  CHECK_THROWS_AS(encode_plane(wrong, LosslessCodecId::kRaw), Error);
  CHECK(parse_codec("raw") == LosslessCodecId::kRaw);
  CHECK(parse_codec("predictive-deflate") == LosslessCodecId::kPredictiveDeflate);
  CHECK_THROWS_AS(parse_codec("bzip2"), Error);
}
