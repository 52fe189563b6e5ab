#include <doctest.h>

#include <cmath>
#include <cstring>
#include <functional>
#include <random>

#include "hdrzsq/byte_io.hpp"
#include "hdrzsq/error.hpp"
#include "hdrzsq/pixels.hpp"
#include "support.hpp"

using namespace hdrzsq;

namespace {

// binary16 decoded straight from its bit fields.
double half_reference(std::uint16_t bits) {
  const int sign = bits >> 15;
  const int exp = (bits >> 10) & 0x1F;
  const int mant = bits & 0x3FF;
  double v;
  if (exp == 0) {
    v = std::ldexp(mant, -24);
  } else if (exp == 31) {
    v = mant ? NAN : INFINITY;
  } else {
    v = std::ldexp(1024 + mant, exp - 25);
  }
  return sign ? -v : v;
}

Bytes bytes_of(const std::string& s) { return Bytes(s.begin(), s.end()); }

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error thrown");
  return ErrorKind::kIo;
}

}  // namespace

TEST_CASE("half decoding agrees with bit-field arithmetic for every pattern") {
  for (std::uint32_t b = 0; b < 65536; ++b) {
    const double ref = half_reference(static_cast<std::uint16_t>(b));
    const float got = half_bits_to_float(static_cast<std::uint16_t>(b));
    if (std::isnan(ref)) {
      CHECK(std::isnan(got));
    } else {
      REQUIRE(static_cast<double>(got) == ref);
    }
  }
}

TEST_CASE("half encoding is round-to-nearest-even over all finite positives") {
  // Every finite half round-trips, and midpoints between neighbours go to
  // the even mantissa.
  for (std::uint16_t b = 0; b < 0x7BFF; ++b) {
    const double lo = half_reference(b);
    const double hi = half_reference(static_cast<std::uint16_t>(b + 1));
    REQUIRE(float_to_half_bits(static_cast<float>(lo)) == b);
    const float mid = static_cast<float>((lo + hi) / 2);
    if (static_cast<double>(mid) == (lo + hi) / 2) {
      const std::uint16_t even = (b & 1) ? static_cast<std::uint16_t>(b + 1) : b;
      REQUIRE(float_to_half_bits(mid) == even);
    }
  }
}

TEST_CASE("sample mappings") {
  const SampleMapping half = SampleMapping::half();
  CHECK(half.to_sample(1.0f) == 0x3C00);
  CHECK(half.to_sample(-3.0f) == 0);
  CHECK(half.to_sample(-0.0f) == 0);
  CHECK(half.to_sample(1e9f) == kMaxFiniteHalfBits);
  CHECK(half.to_float(0x3C00) == 1.0f);
  CHECK(kind_of([&] { half.to_sample(NAN); }) == ErrorKind::kFormat);
  CHECK(kind_of([&] { half.to_sample(INFINITY); }) == ErrorKind::kFormat);

  const SampleMapping fx = SampleMapping::fixed(100.0);
  CHECK(fx.to_sample(1.234f) == 123);
  CHECK(fx.to_sample(1.235f) == 124);
  CHECK(fx.to_sample(1e6f) == 65535);
  CHECK(fx.linear(500) == 500.0);

  CHECK(parse_mapping("half") == half);
  CHECK(parse_mapping("integer") == SampleMapping::integer());
  CHECK(parse_mapping("fixed:64") == SampleMapping::fixed(64));
  CHECK(parse_mapping(to_string(SampleMapping::fixed(2.5))) == SampleMapping::fixed(2.5));
  CHECK(kind_of([] { parse_mapping("fixed:-1"); }) == ErrorKind::kUsage);
  CHECK(kind_of([] { parse_mapping("log"); }) == ErrorKind::kUsage);
}

TEST_CASE("max sample and validation") {
  CHECK(HdrImage(1, 1, 12, SampleMapping::integer()).max_sample() == 4095);
  CHECK(HdrImage(1, 1, 16, SampleMapping::integer()).max_sample() == 65535);
  CHECK(HdrImage(1, 1, 16, SampleMapping::half()).max_sample() == kMaxFiniteHalfBits);
  HdrImage img(2, 2, 12, SampleMapping::integer());
  img.validate();
  img.planes[1].at(1, 1) = 4096;
  CHECK(kind_of([&] { img.validate(); }) == ErrorKind::kUsage);
  CHECK(kind_of([] { HdrImage(2, 2, 8, SampleMapping::integer()).validate(); }) ==
        ErrorKind::kUsage);
}

TEST_CASE("PNM round trip and parsing") {
  std::mt19937_64 rng(1);
  for (unsigned depth : {9u, 12u, 16u}) {
    const HdrImage img = testsupport::random_image(rng, 13, 7, depth);
    const HdrImage back = decode_hdr(encode_hdr(img, FileFormat::kPnm), SampleMapping::half());
    CHECK(back == img);
  }
  // 12-bit PPM: maxval 4095, one pixel (1, 2, 4095) big-endian.
  Bytes p6 = bytes_of("P6\n# comment\n1 1\n4095\n");
  for (int v : {1, 2, 4095}) {
    p6.push_back(static_cast<std::uint8_t>(v >> 8));
    p6.push_back(static_cast<std::uint8_t>(v));
  }
  const HdrImage one = decode_hdr(p6, SampleMapping::half());
  CHECK(one.depth == 12);
  CHECK(one.mapping == SampleMapping::integer());
  CHECK(one.planes[0].data[0] == 1);
  CHECK(one.planes[2].data[0] == 4095);

  Bytes pgm = bytes_of("P5 2 1 65535\n");
  for (int v : {0x1234, 0xFFFF}) {
    pgm.push_back(static_cast<std::uint8_t>(v >> 8));
    pgm.push_back(static_cast<std::uint8_t>(v));
  }
  const HdrImage g = decode_hdr(pgm, SampleMapping::half());
  for (int c = 0; c < 3; ++c) CHECK(g.planes[c].data == std::vector<std::uint16_t>{0x1234, 0xFFFF});

  CHECK(kind_of([] { decode_hdr(bytes_of("P6 1 1 255\nabc"), SampleMapping::half()); }) ==
        ErrorKind::kFormat);
  CHECK(kind_of([] { decode_hdr(bytes_of("P6 2 2 65535\n\x01\x02"), SampleMapping::half()); }) ==
        ErrorKind::kFormat);
}

TEST_CASE("PFM round trip, byte order and row order") {
  // 1x2 little-endian PFM: bottom row first.
  Bytes pfm = bytes_of("PF\n1 2\n-1.0\n");
  auto push = [&](float f, bool big) {
    std::uint32_t u;
    std::memcpy(&u, &f, 4);
    for (int i = 0; i < 4; ++i) {
      const int shift = big ? 24 - 8 * i : 8 * i;
      pfm.push_back(static_cast<std::uint8_t>(u >> shift));
    }
  };
  for (float f : {2.0f, 3.0f, 4.0f, 0.5f, 0.25f, 1.0f}) push(f, false);
  HdrImage img = decode_hdr(pfm, SampleMapping::half());
  CHECK(img.width == 1);
  CHECK(img.height == 2);
  CHECK(img.planes[0].at(0, 0) == 0x3800);  // 0.5, top row
  CHECK(img.planes[2].at(0, 1) == 0x4400);  // 4.0, bottom row

  pfm = bytes_of("Pf\n1 1\n1.0\n");
  push(65504.0f, true);
  img = decode_hdr(pfm, SampleMapping::half());
  CHECK(img.planes[1].data[0] == kMaxFiniteHalfBits);

  std::mt19937_64 rng(2);
  HdrImage h = testsupport::random_image(rng, 9, 5, 16);
  h.mapping = SampleMapping::half();
  for (auto& p : h.planes) {
    for (auto& v : p.data) v = std::min(v, kMaxFiniteHalfBits);
  }
  CHECK(decode_hdr(encode_hdr(h, FileFormat::kPfm), SampleMapping::half()) == h);

  Bytes nan_pfm = bytes_of("Pf\n1 1\n-1.0\n");
  nan_pfm.insert(nan_pfm.end(), {0x00, 0x00, 0xC0, 0x7F});
  CHECK(kind_of([&] { decode_hdr(nan_pfm, SampleMapping::half()); }) == ErrorKind::kFormat);
}

TEST_CASE("RGBE decoding of a hand-built pixel") {
  // (128, 64, 32, e=129): value = m * 2^(e - 136) -> 1.0, 0.5, 0.25
  Bytes hdr = bytes_of("#?RADIANCE\nFORMAT=32-bit_rle_rgbe\n\n-Y 1 +X 1\n");
  hdr.insert(hdr.end(), {128, 64, 32, 129});
  const HdrImage img = decode_hdr(hdr, SampleMapping::half());
  CHECK(img.planes[0].data[0] == float_to_half_bits(1.0f));
  CHECK(img.planes[1].data[0] == float_to_half_bits(0.5f));
  CHECK(img.planes[2].data[0] == float_to_half_bits(0.25f));

  Bytes flipped = bytes_of("#?RADIANCE\n\n+Y 1 +X 1\n");
  flipped.insert(flipped.end(), {128, 64, 32, 129});
  CHECK(kind_of([&] { decode_hdr(flipped, SampleMapping::half()); }) == ErrorKind::kFormat);
}

TEST_CASE("RGBE round trip is idempotent after one pass") {
  std::mt19937_64 rng(3);
  for (std::size_t w : {5u, 40u}) {  // flat and run-length scanlines
    HdrImage h = testsupport::random_image(rng, w, 6, 16);
    h.mapping = SampleMapping::fixed(256.0);
    const HdrImage once = decode_hdr(encode_hdr(h, FileFormat::kRgbe), h.mapping);
    const HdrImage twice = decode_hdr(encode_hdr(once, FileFormat::kRgbe), h.mapping);
    CHECK(once == twice);
    // Shared exponent keeps ~8 significant bits of the largest component.
    for (int c = 0; c < 3; ++c) {
      for (std::size_t i = 0; i < h.planes[c].data.size(); ++i) {
        const int m = std::max({h.planes[0].data[i], h.planes[1].data[i], h.planes[2].data[i]});
        REQUIRE(std::abs(int{h.planes[c].data[i]} - int{once.planes[c].data[i]}) <= m / 128 + 1);
      }
    }
  }
}

TEST_CASE("format detection and atomic writes") {
  CHECK(format_from_extension("a.PFM") == FileFormat::kPfm);
  CHECK(format_from_extension("a.hdr") == FileFormat::kRgbe);
  CHECK(format_from_extension("a.pgm") == FileFormat::kPnm);
  CHECK(kind_of([] { format_from_extension("a.png"); }) == ErrorKind::kUsage);
  CHECK(sniff_format(bytes_of("#?RGBE\n")) == FileFormat::kRgbe);
  CHECK(sniff_format(bytes_of("PF\n")) == FileFormat::kPfm);
  CHECK(sniff_format(bytes_of("P6\n")) == FileFormat::kPnm);

  const auto dir = std::filesystem::temp_directory_path() / "hdrzsq_pixels_test";
  std::filesystem::create_directories(dir);
  const Bytes data = bytes_of("hello");
  write_file_atomic(dir / "x.bin", data);
  CHECK(read_file(dir / "x.bin") == data);
  CHECK(kind_of([&] { read_file(dir / "missing.bin"); }) == ErrorKind::kIo);
  std::filesystem::remove_all(dir);
}

TEST_CASE("corpus files load") {
  for (const auto& path : testsupport::corpus_files()) {
    CAPTURE(path);
    const HdrImage img = load_hdr(path);
    img.validate();
    CHECK(img.width > 0);
  }
}
