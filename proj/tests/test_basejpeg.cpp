#include <doctest.h>

#include <random>

#include "hdrzsq/basejpeg.hpp"
#include "hdrzsq/error.hpp"
#include "jpeg_oracle.hpp"

using namespace hdrzsq;

namespace {

LdrImage random_ldr(std::mt19937_64& rng, std::size_t w, std::size_t h, int smooth) {
  LdrImage img(w, h);
  std::uniform_int_distribution<int> d(0, 255);
  for (int c = 0; c < 3; ++c) {
    const int base = d(rng);
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        const int v = smooth ? base + static_cast<int>((x * 7 + y * 3 * (c + 1)) % 97) - 48 +
                                   d(rng) % (smooth + 1)
                             : d(rng);
        img.planes[c].at(x, y) = static_cast<std::uint8_t>(std::clamp(v, 0, 255));
      }
    }
  }
  return img;
}

int max_diff(const LdrImage& a, const LdrImage& b) {
  int m = 0;
  for (int c = 0; c < 3; ++c) {
    for (std::size_t i = 0; i < a.planes[c].data.size(); ++i) {
      m = std::max(m, std::abs(a.planes[c].data[i] - b.planes[c].data[i]));
    }
  }
  return m;
}

ErrorKind decode_error(const Bytes& s) {
  try {
    decode_base(s);
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::kUsage;
}

}  // namespace

TEST_CASE("scaled quantization tables match libjpeg for every quality") {
  for (int q = 1; q <= 100; ++q) {
    CAPTURE(q);
    CHECK(scaled_quant_table(false, JpegQuality(q)) == oracle::libjpeg_quant_table(0, q));
    CHECK(scaled_quant_table(true, JpegQuality(q)) == oracle::libjpeg_quant_table(1, q));
  }
  CHECK_THROWS_AS(JpegQuality(0), Error);
  CHECK_THROWS_AS(JpegQuality(101), Error);
}

TEST_CASE("encoder coefficients equal libjpeg's for the same pixels") {
  std::mt19937_64 rng(7);
  struct Case {
    std::size_t w, h;
    ChromaSubsampling sub;
    int q;
  };
  for (const Case& k : {Case{8, 8, ChromaSubsampling::k444, 75}, Case{37, 21, ChromaSubsampling::k444, 90},
                        Case{64, 48, ChromaSubsampling::k444, 10}, Case{32, 32, ChromaSubsampling::k420, 80},
                        Case{48, 16, ChromaSubsampling::k420, 100}}) {
    for (int smooth : {0, 4}) {
      CAPTURE(k.w);
      CAPTURE(k.h);
      CAPTURE(k.q);
      const LdrImage img = random_ldr(rng, k.w, k.h, smooth);
      const Bytes ours = encode_base(img, JpegQuality(k.q), k.sub);
      const Bytes theirs =
          oracle::libjpeg_encode(img, k.q, k.sub == ChromaSubsampling::k420);
      const auto a = oracle::libjpeg_coefficients(ours);
      const auto b = oracle::libjpeg_coefficients(theirs);
      CHECK(a.quant == b.quant);
      REQUIRE(a.components.size() == b.components.size());
      for (std::size_t c = 0; c < a.components.size(); ++c) {
        CHECK(a.components[c] == b.components[c]);
      }
    }
  }
}

TEST_CASE("decoder output equals libjpeg's") {
  std::mt19937_64 rng(8);
  for (std::size_t w : {1u, 2u, 3u, 4u, 5u, 8u, 13u, 40u}) {
    for (std::size_t h : {1u, 9u, 24u}) {
      for (auto sub : {ChromaSubsampling::k444, ChromaSubsampling::k420}) {
        CAPTURE(w);
        CAPTURE(h);
        CAPTURE(int(sub));
        const LdrImage img = random_ldr(rng, w, h, 8);
        const Bytes ours = encode_base(img, JpegQuality(85), sub);
        CHECK(decode_base(ours) == oracle::libjpeg_decode(ours));
        const Bytes theirs =
            oracle::libjpeg_encode(img, 60, sub == ChromaSubsampling::k420, false, 3);
        CHECK(decode_base(theirs) == oracle::libjpeg_decode(theirs));
      }
    }
  }
}

TEST_CASE("high quality encoding stays close to the input") {
  std::mt19937_64 rng(9);
  const LdrImage img = random_ldr(rng, 33, 17, 2);
  CHECK(max_diff(decode_base(encode_base(img, JpegQuality(100))), img) <= 3);
  // With all-ones tables a flat gray survives exactly.
  LdrImage gray(20, 12);
  for (auto& p : gray.planes) std::fill(p.data.begin(), p.data.end(), 77);
  CHECK(decode_base(encode_base(gray, JpegQuality(100))) == gray);
}

TEST_CASE("encoding is deterministic and starts with SOI, APP0") {
  std::mt19937_64 rng(10);
  const LdrImage img = random_ldr(rng, 16, 16, 0);
  const Bytes a = encode_base(img, JpegQuality(70));
  CHECK(a == encode_base(img, JpegQuality(70)));
  REQUIRE(a.size() > 4);
  CHECK(a[0] == 0xFF);
  CHECK(a[1] == 0xD8);
  CHECK(a[2] == 0xFF);
  CHECK(a[3] == 0xE0);
  CHECK(a[a.size() - 2] == 0xFF);
  CHECK(a[a.size() - 1] == 0xD9);
}

TEST_CASE("malformed and unsupported streams are format errors") {
  std::mt19937_64 rng(11);
  const LdrImage img = random_ldr(rng, 24, 24, 4);
  const Bytes good = encode_base(img, JpegQuality(80));
  CHECK(decode_error(Bytes{}) == ErrorKind::kFormat);
  CHECK(decode_error(Bytes(good.begin(), good.begin() + good.size() / 2)) == ErrorKind::kFormat);
  CHECK(decode_error(Bytes(good.begin(), good.end() - 2)) == ErrorKind::kFormat);
  Bytes no_soi = good;
  no_soi[1] = 0x00;
  CHECK(decode_error(no_soi) == ErrorKind::kFormat);

  const Bytes prog = oracle::libjpeg_encode(img, 80, false, true);
  try {
    decode_base(prog);
    FAIL("progressive stream accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kFormat);
    CHECK(std::string(e.what()).find("unsupported") != std::string::npos);
  }
}
