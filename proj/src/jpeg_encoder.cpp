#include <algorithm>
#include <cstdlib>
#include <vector>

#include "hdrzsq/basejpeg.hpp"
#include "hdrzsq/error.hpp"
#include "jpeg_common.hpp"

namespace hdrzsq {

namespace {

using namespace jpeg;

struct HuffmanCode {
  std::uint16_t code = 0;
  std::uint8_t length = 0;
};

// Canonical code assignment (T.81 Annex C).
std::array<HuffmanCode, 256> build_codes(const HuffmanSpec& spec) {
  std::array<HuffmanCode, 256> table{};
  std::uint32_t code = 0;
  int k = 0;
  for (int len = 1; len <= 16; ++len) {
    for (int i = 0; i < spec.counts[len - 1]; ++i, ++k) {
      table[spec.values[k]] = {static_cast<std::uint16_t>(code), static_cast<std::uint8_t>(len)};
      ++code;
    }
    code <<= 1;
  }
  return table;
}

class BitWriter {
 public:
  explicit BitWriter(Bytes& out) : out_(out) {}

  void put(std::uint32_t bits, int count) {
    acc_ = (acc_ << count) | (bits & ((1u << count) - 1));
    nbits_ += count;
    while (nbits_ >= 8) {
      nbits_ -= 8;
      emit(static_cast<std::uint8_t>(acc_ >> nbits_));
    }
  }

  // Pads the final partial byte with 1-bits.
  void flush() {
    if (nbits_ > 0) put(0x7F, 8 - nbits_);
  }

 private:
  void emit(std::uint8_t byte) {
    out_.push_back(byte);
    if (byte == 0xFF) out_.push_back(0x00);
  }

  Bytes& out_;
  std::uint64_t acc_ = 0;
  int nbits_ = 0;
};

int magnitude_bits(int v) {
  unsigned a = static_cast<unsigned>(std::abs(v));
  int n = 0;
  while (a) {
    ++n;
    a >>= 1;
  }
  return n;
}

// IJG accurate integer forward DCT; output is scaled up by 8.
void forward_dct(std::int32_t data[64]) {
  for (int row = 0; row < 8; ++row) {
    std::int32_t* d = data + row * 8;
    std::int32_t tmp0 = d[0] + d[7], tmp7 = d[0] - d[7];
    std::int32_t tmp1 = d[1] + d[6], tmp6 = d[1] - d[6];
    std::int32_t tmp2 = d[2] + d[5], tmp5 = d[2] - d[5];
    std::int32_t tmp3 = d[3] + d[4], tmp4 = d[3] - d[4];

    std::int32_t tmp10 = tmp0 + tmp3, tmp13 = tmp0 - tmp3;
    std::int32_t tmp11 = tmp1 + tmp2, tmp12 = tmp1 - tmp2;
    d[0] = (tmp10 + tmp11) << kPass1Bits;
    d[4] = (tmp10 - tmp11) << kPass1Bits;
    std::int32_t z1 = (tmp12 + tmp13) * kFix0_541196100;
    d[2] = descale(z1 + tmp13 * kFix0_765366865, kConstBits - kPass1Bits);
    d[6] = descale(z1 - tmp12 * kFix1_847759065, kConstBits - kPass1Bits);

    z1 = tmp4 + tmp7;
    std::int32_t z2 = tmp5 + tmp6, z3 = tmp4 + tmp6, z4 = tmp5 + tmp7;
    std::int32_t z5 = (z3 + z4) * kFix1_175875602;
    tmp4 *= kFix0_298631336;
    tmp5 *= kFix2_053119869;
    tmp6 *= kFix3_072711026;
    tmp7 *= kFix1_501321110;
    z1 *= -kFix0_899976223;
    z2 *= -kFix2_562915447;
    z3 = z3 * -kFix1_961570560 + z5;
    z4 = z4 * -kFix0_390180644 + z5;
    d[7] = descale(tmp4 + z1 + z3, kConstBits - kPass1Bits);
    d[5] = descale(tmp5 + z2 + z4, kConstBits - kPass1Bits);
    d[3] = descale(tmp6 + z2 + z3, kConstBits - kPass1Bits);
    d[1] = descale(tmp7 + z1 + z4, kConstBits - kPass1Bits);
  }
  for (int col = 0; col < 8; ++col) {
    std::int32_t* d = data + col;
    std::int32_t tmp0 = d[0] + d[56], tmp7 = d[0] - d[56];
    std::int32_t tmp1 = d[8] + d[48], tmp6 = d[8] - d[48];
    std::int32_t tmp2 = d[16] + d[40], tmp5 = d[16] - d[40];
    std::int32_t tmp3 = d[24] + d[32], tmp4 = d[24] - d[32];

    std::int32_t tmp10 = tmp0 + tmp3, tmp13 = tmp0 - tmp3;
    std::int32_t tmp11 = tmp1 + tmp2, tmp12 = tmp1 - tmp2;
    d[0] = descale(tmp10 + tmp11, kPass1Bits);
    d[32] = descale(tmp10 - tmp11, kPass1Bits);
    std::int32_t z1 = (tmp12 + tmp13) * kFix0_541196100;
    d[16] = descale(z1 + tmp13 * kFix0_765366865, kConstBits + kPass1Bits);
    d[48] = descale(z1 - tmp12 * kFix1_847759065, kConstBits + kPass1Bits);

    z1 = tmp4 + tmp7;
    std::int32_t z2 = tmp5 + tmp6, z3 = tmp4 + tmp6, z4 = tmp5 + tmp7;
    std::int32_t z5 = (z3 + z4) * kFix1_175875602;
    tmp4 *= kFix0_298631336;
    tmp5 *= kFix2_053119869;
    tmp6 *= kFix3_072711026;
    tmp7 *= kFix1_501321110;
    z1 *= -kFix0_899976223;
    z2 *= -kFix2_562915447;
    z3 = z3 * -kFix1_961570560 + z5;
    z4 = z4 * -kFix0_390180644 + z5;
    d[56] = descale(tmp4 + z1 + z3, kConstBits + kPass1Bits);
    d[40] = descale(tmp5 + z2 + z4, kConstBits + kPass1Bits);
    d[24] = descale(tmp6 + z2 + z3, kConstBits + kPass1Bits);
    d[8] = descale(tmp7 + z1 + z4, kConstBits + kPass1Bits);
  }
}

struct ComponentPlane {
  std::size_t width = 0;  // padded to whole blocks
  std::size_t height = 0;
  std::vector<std::uint8_t> samples;
};

// Fixed-point RGB -> YCbCr with 16 fractional bits (JFIF full range).
void rgb_to_ycc(const LdrImage& img, std::size_t pw, std::size_t ph, ComponentPlane out[3]) {
  constexpr std::int32_t kHalf = 1 << 15;
  constexpr std::int32_t kOffset = 128 << 16;
  for (int c = 0; c < 3; ++c) {
    out[c].width = pw;
    out[c].height = ph;
    out[c].samples.resize(pw * ph);
  }
  for (std::size_t y = 0; y < ph; ++y) {
    const std::size_t sy = std::min(y, img.height - 1);
    for (std::size_t x = 0; x < pw; ++x) {
      const std::size_t sx = std::min(x, img.width - 1);
      const std::int32_t r = img.planes[0].at(sx, sy);
      const std::int32_t g = img.planes[1].at(sx, sy);
      const std::int32_t b = img.planes[2].at(sx, sy);
      const std::size_t i = y * pw + x;
      out[0].samples[i] = static_cast<std::uint8_t>((19595 * r + 38470 * g + 7471 * b + kHalf) >> 16);
      out[1].samples[i] = static_cast<std::uint8_t>(
          (-11059 * r - 21709 * g + 32768 * b + kOffset + kHalf - 1) >> 16);
      out[2].samples[i] = static_cast<std::uint8_t>(
          (32768 * r - 27439 * g - 5329 * b + kOffset + kHalf - 1) >> 16);
    }
  }
}

// 2x2 box filter with the alternating 1,2 rounding bias of the IJG encoder.
ComponentPlane downsample_2x2(const ComponentPlane& in) {
  ComponentPlane out;
  out.width = in.width / 2;
  out.height = in.height / 2;
  out.samples.resize(out.width * out.height);
  for (std::size_t y = 0; y < out.height; ++y) {
    const std::uint8_t* r0 = &in.samples[(2 * y) * in.width];
    const std::uint8_t* r1 = r0 + in.width;
    int bias = 1;
    for (std::size_t x = 0; x < out.width; ++x) {
      out.samples[y * out.width + x] = static_cast<std::uint8_t>(
          (r0[2 * x] + r0[2 * x + 1] + r1[2 * x] + r1[2 * x + 1] + bias) >> 2);
      bias ^= 3;
    }
  }
  return out;
}

class ScanEncoder {
 public:
  ScanEncoder(Bytes& out, const std::array<std::uint16_t, 64>& luma_q,
              const std::array<std::uint16_t, 64>& chroma_q)
      : bits_(out),
        dc_codes_{build_codes(std_dc_luma()), build_codes(std_dc_chroma())},
        ac_codes_{build_codes(std_ac_luma()), build_codes(std_ac_chroma())},
        quant_{&luma_q, &chroma_q} {}

  void encode_block(const ComponentPlane& plane, std::size_t bx, std::size_t by, int comp) {
    std::int32_t block[64];
    for (int y = 0; y < 8; ++y) {
      const std::uint8_t* row = &plane.samples[(by * 8 + y) * plane.width + bx * 8];
      for (int x = 0; x < 8; ++x) block[y * 8 + x] = static_cast<std::int32_t>(row[x]) - 128;
    }
    forward_dct(block);

    const int table = comp == 0 ? 0 : 1;
    const auto& q = *quant_[table];
    std::int32_t coef[64];
    for (int i = 0; i < 64; ++i) {
      const std::int32_t div = static_cast<std::int32_t>(q[i]) * 8;
      std::int32_t v = block[i];
      coef[i] = v < 0 ? -((-v + (div >> 1)) / div) : (v + (div >> 1)) / div;
    }

    const int diff = coef[0] - last_dc_[comp];
    last_dc_[comp] = coef[0];
    put_value(dc_codes_[table], 0, diff);

    int run = 0;
    for (int k = 1; k < 64; ++k) {
      const int v = coef[kZigzag[k]];
      if (v == 0) {
        ++run;
        continue;
      }
      while (run > 15) {
        put_symbol(ac_codes_[table], 0xF0);
        run -= 16;
      }
      put_value(ac_codes_[table], run, v);
      run = 0;
    }
    if (run > 0) put_symbol(ac_codes_[table], 0x00);
  }

  void finish() { bits_.flush(); }

 private:
  void put_symbol(const std::array<HuffmanCode, 256>& codes, int symbol) {
    const HuffmanCode& hc = codes[symbol];
    bits_.put(hc.code, hc.length);
  }

  void put_value(const std::array<HuffmanCode, 256>& codes, int run, int v) {
    const int nbits = magnitude_bits(v);
    put_symbol(codes, (run << 4) | nbits);
    if (nbits) {
      const int raw = v < 0 ? v - 1 : v;
      bits_.put(static_cast<std::uint32_t>(raw), nbits);
    }
  }

  BitWriter bits_;
  std::array<std::array<HuffmanCode, 256>, 2> dc_codes_;
  std::array<std::array<HuffmanCode, 256>, 2> ac_codes_;
  std::array<const std::array<std::uint16_t, 64>*, 2> quant_;
  int last_dc_[3] = {0, 0, 0};
};

void put_marker(ByteWriter& w, std::uint8_t marker) {
  w.u8(0xFF);
  w.u8(marker);
}

void write_dht(ByteWriter& w) {
  const std::pair<std::uint8_t, const HuffmanSpec*> tables[4] = {
      {0x00, &std_dc_luma()}, {0x10, &std_ac_luma()},
      {0x01, &std_dc_chroma()}, {0x11, &std_ac_chroma()}};
  std::size_t len = 2;
  for (const auto& t : tables) len += 17 + t.second->num_values;
  put_marker(w, kDHT);
  w.u16(static_cast<std::uint16_t>(len));
  for (const auto& [id, spec] : tables) {
    w.u8(id);
    for (std::uint8_t c : spec->counts) w.u8(c);
    w.bytes(ByteView(spec->values, spec->num_values));
  }
}

}  // namespace

Bytes encode_base(const LdrImage& ldr, JpegQuality q, ChromaSubsampling subsampling) {
  if (ldr.width == 0 || ldr.height == 0) fail(ErrorKind::kUsage, "cannot encode an empty image");
  if (ldr.width > 65535 || ldr.height > 65535) {
    fail(ErrorKind::kUsage, "image too large for baseline JPEG");
  }
  const bool sub = subsampling == ChromaSubsampling::k420;
  const std::size_t mcu = sub ? 16 : 8;
  const std::size_t pw = (ldr.width + mcu - 1) / mcu * mcu;
  const std::size_t ph = (ldr.height + mcu - 1) / mcu * mcu;

  ComponentPlane planes[3];
  rgb_to_ycc(ldr, pw, ph, planes);
  if (sub) {
    planes[1] = downsample_2x2(planes[1]);
    planes[2] = downsample_2x2(planes[2]);
  }

  const auto luma_q = scaled_quant_table(false, q);
  const auto chroma_q = scaled_quant_table(true, q);

  ByteWriter w;
  put_marker(w, kSOI);

  put_marker(w, kAPP0);
  w.u16(16);
  w.text(std::string_view("JFIF\0", 5));
  w.u8(1);
  w.u8(1);
  w.u8(0);  // no density units
  w.u16(1);
  w.u16(1);
  w.u8(0);
  w.u8(0);

  put_marker(w, kDQT);
  w.u16(2 + 2 * 65);
  for (int t = 0; t < 2; ++t) {
    const auto& table = t == 0 ? luma_q : chroma_q;
    w.u8(static_cast<std::uint8_t>(t));
    for (int k = 0; k < 64; ++k) w.u8(static_cast<std::uint8_t>(table[kZigzag[k]]));
  }

  put_marker(w, kSOF0);
  w.u16(8 + 3 * 3);
  w.u8(8);
  w.u16(static_cast<std::uint16_t>(ldr.height));
  w.u16(static_cast<std::uint16_t>(ldr.width));
  w.u8(3);
  for (int c = 0; c < 3; ++c) {
    w.u8(static_cast<std::uint8_t>(c + 1));
    w.u8(c == 0 && sub ? 0x22 : 0x11);
    w.u8(c == 0 ? 0 : 1);
  }

  write_dht(w);

  put_marker(w, kSOS);
  w.u16(6 + 2 * 3);
  w.u8(3);
  for (int c = 0; c < 3; ++c) {
    w.u8(static_cast<std::uint8_t>(c + 1));
    w.u8(c == 0 ? 0x00 : 0x11);
  }
  w.u8(0);
  w.u8(63);
  w.u8(0);

  Bytes& out = w.buffer();
  ScanEncoder scan(out, luma_q, chroma_q);
  const std::size_t mcus_x = pw / mcu;
  const std::size_t mcus_y = ph / mcu;
  for (std::size_t my = 0; my < mcus_y; ++my) {
    for (std::size_t mx = 0; mx < mcus_x; ++mx) {
      if (sub) {
        for (std::size_t dy = 0; dy < 2; ++dy) {
          for (std::size_t dx = 0; dx < 2; ++dx) {
            scan.encode_block(planes[0], mx * 2 + dx, my * 2 + dy, 0);
          }
        }
      } else {
        scan.encode_block(planes[0], mx, my, 0);
      }
      scan.encode_block(planes[1], mx, my, 1);
      scan.encode_block(planes[2], mx, my, 2);
    }
  }
  scan.finish();

  put_marker(w, kEOI);
  return w.take();
}

}  // namespace hdrzsq
