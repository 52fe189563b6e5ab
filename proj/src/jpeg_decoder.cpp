#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "hdrzsq/basejpeg.hpp"
#include "hdrzsq/error.hpp"
#include "jpeg_common.hpp"

namespace hdrzsq {

namespace {

using namespace jpeg;

[[noreturn]] void malformed(const std::string& why) {
  fail(ErrorKind::kFormat, "malformed stream: " + why);
}

[[noreturn]] void unsupported(const std::string& why) {
  fail(ErrorKind::kFormat, "unsupported JPEG: " + why);
}

// Canonical Huffman decoding tables (T.81 Annex F.2.2.3).
struct HuffmanTable {
  bool defined = false;
  std::int32_t maxcode[18];
  std::int32_t valptr[17];
  std::int32_t mincode[17];
  std::vector<std::uint8_t> values;

  void build(const std::uint8_t counts[16], std::vector<std::uint8_t> vals) {
    values = std::move(vals);
    std::int32_t code = 0;
    int k = 0;
    for (int len = 1; len <= 16; ++len) {
      const int n = counts[len - 1];
      if (n) {
        valptr[len] = k;
        mincode[len] = code;
        code += n;
        k += n;
        maxcode[len] = code - 1;
      } else {
        maxcode[len] = -1;
      }
      if (code > (1 << len)) malformed("oversubscribed Huffman table");
      code <<= 1;
    }
    maxcode[17] = 0x7FFFFFFF;
    defined = true;
  }
};

struct Component {
  int id = 0;
  int h = 1;
  int v = 1;
  int quant_id = 0;
  int dc_table = 0;
  int ac_table = 0;
  std::size_t blocks_w = 0;  // in the padded MCU grid
  std::size_t blocks_h = 0;
  std::size_t sampled_w = 0;  // ceil(image_w * h / hmax)
  std::size_t sampled_h = 0;
  std::vector<std::uint8_t> pixels;  // blocks_w*8 x blocks_h*8
  int dc_pred = 0;
};

class BitReader {
 public:
  BitReader(ByteView data, std::size_t pos) : data_(data), pos_(pos) {}

  int bit() {
    if (nbits_ == 0) fill();
    --nbits_;
    if (nbits_ < padded_) malformed("premature end of entropy-coded data");
    return static_cast<int>((acc_ >> nbits_) & 1);
  }

  int bits(int n) {
    int v = 0;
    for (int i = 0; i < n; ++i) v = (v << 1) | bit();
    return v;
  }

  int decode(const HuffmanTable& t) {
    if (!t.defined) malformed("scan references an undefined Huffman table");
    std::int32_t code = bit();
    int len = 1;
    while (code > t.maxcode[len]) {
      code = (code << 1) | bit();
      if (++len > 16) malformed("bad Huffman code");
    }
    const std::int32_t idx = t.valptr[len] + code - t.mincode[len];
    if (idx < 0 || static_cast<std::size_t>(idx) >= t.values.size()) {
      malformed("Huffman code outside table");
    }
    return t.values[idx];
  }

  // Drops buffered bits and consumes an expected RSTn marker.
  void restart(int expected) {
    nbits_ = 0;
    padded_ = 0;
    while (pos_ + 1 < data_.size() && data_[pos_] == 0xFF && data_[pos_ + 1] == 0xFF) ++pos_;
    if (pos_ + 1 >= data_.size() || data_[pos_] != 0xFF ||
        data_[pos_ + 1] != 0xD0 + expected) {
      malformed("missing restart marker");
    }
    pos_ += 2;
  }

  std::size_t position() const { return pos_; }

 private:
  void fill() {
    std::uint8_t byte = 0;
    if (pos_ < data_.size() && data_[pos_] != 0xFF) {
      byte = data_[pos_++];
    } else if (pos_ + 1 < data_.size() && data_[pos_] == 0xFF && data_[pos_ + 1] == 0x00) {
      byte = 0xFF;
      pos_ += 2;
    } else {
      // Marker or end of data: feed zeros, which must never be consumed.
      padded_ += 8;
    }
    acc_ = (acc_ << 8) | byte;
    nbits_ += 8;
  }

  ByteView data_;
  std::size_t pos_;
  std::uint32_t acc_ = 0;
  int nbits_ = 0;
  int padded_ = 0;
};

int extend(int v, int n) { return v < (1 << (n - 1)) ? v - (1 << n) + 1 : v; }

// IJG accurate integer IDCT with its wrap-around range limiting.
void inverse_dct(const std::int32_t coef[64], const std::uint16_t quant[64], std::uint8_t* out,
                 std::size_t stride) {
  std::int32_t ws[64];
  for (int col = 0; col < 8; ++col) {
    const std::int32_t* in = coef + col;
    const std::uint16_t* q = quant + col;
    std::int32_t* w = ws + col;
    if (!in[8] && !in[16] && !in[24] && !in[32] && !in[40] && !in[48] && !in[56]) {
      const std::int32_t dc = (in[0] * q[0]) << kPass1Bits;
      for (int r = 0; r < 8; ++r) w[r * 8] = dc;
      continue;
    }
    std::int32_t z2 = in[16] * q[16];
    std::int32_t z3 = in[48] * q[48];
    std::int32_t z1 = (z2 + z3) * kFix0_541196100;
    std::int32_t tmp2 = z1 - z3 * kFix1_847759065;
    std::int32_t tmp3 = z1 + z2 * kFix0_765366865;
    z2 = in[0] * q[0];
    z3 = in[32] * q[32];
    std::int32_t tmp0 = (z2 + z3) * (1 << kConstBits);
    std::int32_t tmp1 = (z2 - z3) * (1 << kConstBits);
    const std::int32_t tmp10 = tmp0 + tmp3, tmp13 = tmp0 - tmp3;
    const std::int32_t tmp11 = tmp1 + tmp2, tmp12 = tmp1 - tmp2;

    tmp0 = in[56] * q[56];
    tmp1 = in[40] * q[40];
    tmp2 = in[24] * q[24];
    tmp3 = in[8] * q[8];
    z1 = tmp0 + tmp3;
    z2 = tmp1 + tmp2;
    z3 = tmp0 + tmp2;
    std::int32_t z4 = tmp1 + tmp3;
    const std::int32_t z5 = (z3 + z4) * kFix1_175875602;
    tmp0 *= kFix0_298631336;
    tmp1 *= kFix2_053119869;
    tmp2 *= kFix3_072711026;
    tmp3 *= kFix1_501321110;
    z1 *= -kFix0_899976223;
    z2 *= -kFix2_562915447;
    z3 = z3 * -kFix1_961570560 + z5;
    z4 = z4 * -kFix0_390180644 + z5;
    tmp0 += z1 + z3;
    tmp1 += z2 + z4;
    tmp2 += z2 + z3;
    tmp3 += z1 + z4;

    constexpr int n = kConstBits - kPass1Bits;
    w[0] = descale(tmp10 + tmp3, n);
    w[56] = descale(tmp10 - tmp3, n);
    w[8] = descale(tmp11 + tmp2, n);
    w[48] = descale(tmp11 - tmp2, n);
    w[16] = descale(tmp12 + tmp1, n);
    w[40] = descale(tmp12 - tmp1, n);
    w[24] = descale(tmp13 + tmp0, n);
    w[32] = descale(tmp13 - tmp0, n);
  }

  // The reference decoder indexes a 1024-entry table with the low 10 bits;
  // mirror that, then clamp to 8 bits.
  auto limit = [](std::int32_t v) -> std::uint8_t {
    const std::int32_t wrapped = ((v + 512) & 1023) - 512;
    return static_cast<std::uint8_t>(std::clamp(wrapped + 128, 0, 255));
  };

  constexpr int n2 = kConstBits + kPass1Bits + 3;
  for (int row = 0; row < 8; ++row) {
    const std::int32_t* w = ws + row * 8;
    std::uint8_t* o = out + row * stride;
    if (!w[1] && !w[2] && !w[3] && !w[4] && !w[5] && !w[6] && !w[7]) {
      const std::uint8_t v = limit(descale(w[0], kPass1Bits + 3));
      std::fill(o, o + 8, v);
      continue;
    }
    std::int32_t z2 = w[2];
    std::int32_t z3 = w[6];
    std::int32_t z1 = (z2 + z3) * kFix0_541196100;
    std::int32_t tmp2 = z1 - z3 * kFix1_847759065;
    std::int32_t tmp3 = z1 + z2 * kFix0_765366865;
    std::int32_t tmp0 = (w[0] + w[4]) * (1 << kConstBits);
    std::int32_t tmp1 = (w[0] - w[4]) * (1 << kConstBits);
    const std::int32_t tmp10 = tmp0 + tmp3, tmp13 = tmp0 - tmp3;
    const std::int32_t tmp11 = tmp1 + tmp2, tmp12 = tmp1 - tmp2;

    tmp0 = w[7];
    tmp1 = w[5];
    tmp2 = w[3];
    tmp3 = w[1];
    z1 = tmp0 + tmp3;
    z2 = tmp1 + tmp2;
    z3 = tmp0 + tmp2;
    std::int32_t z4 = tmp1 + tmp3;
    const std::int32_t z5 = (z3 + z4) * kFix1_175875602;
    tmp0 *= kFix0_298631336;
    tmp1 *= kFix2_053119869;
    tmp2 *= kFix3_072711026;
    tmp3 *= kFix1_501321110;
    z1 *= -kFix0_899976223;
    z2 *= -kFix2_562915447;
    z3 = z3 * -kFix1_961570560 + z5;
    z4 = z4 * -kFix0_390180644 + z5;
    tmp0 += z1 + z3;
    tmp1 += z2 + z4;
    tmp2 += z2 + z3;
    tmp3 += z1 + z4;

    o[0] = limit(descale(tmp10 + tmp3, n2));
    o[7] = limit(descale(tmp10 - tmp3, n2));
    o[1] = limit(descale(tmp11 + tmp2, n2));
    o[6] = limit(descale(tmp11 - tmp2, n2));
    o[2] = limit(descale(tmp12 + tmp1, n2));
    o[5] = limit(descale(tmp12 - tmp1, n2));
    o[3] = limit(descale(tmp13 + tmp0, n2));
    o[4] = limit(descale(tmp13 - tmp0, n2));
  }
}

// Triangle-filter upsampling of the IJG decoder. Edges replicate the last
// real sample of the downsampled component. Like libjpeg-turbo, components
// at most two samples wide fall back to plain replication.
std::vector<std::uint8_t> upsample(const Component& c, int hfac, int vfac, std::size_t out_w,
                                   std::size_t out_h) {
  const std::size_t stride = c.blocks_w * 8;
  const std::size_t sw = c.sampled_w;
  const std::size_t sh = c.sampled_h;
  auto in = [&](std::size_t x, std::size_t y) -> int { return c.pixels[y * stride + x]; };
  std::vector<std::uint8_t> out(out_w * out_h);

  if (hfac == 1 && vfac == 1) {
    for (std::size_t y = 0; y < out_h; ++y) {
      std::copy_n(&c.pixels[y * stride], out_w, &out[y * out_w]);
    }
    return out;
  }
  const bool fancy = sw > 2;
  if (fancy && hfac == 2 && vfac == 1) {
    std::vector<std::uint8_t> row(2 * sw);
    for (std::size_t y = 0; y < out_h; ++y) {
      row[0] = static_cast<std::uint8_t>(in(0, y));
      row[1] = static_cast<std::uint8_t>((in(0, y) * 3 + in(1, y) + 2) >> 2);
      for (std::size_t x = 1; x + 1 < sw; ++x) {
        const int cur = in(x, y) * 3;
        row[2 * x] = static_cast<std::uint8_t>((cur + in(x - 1, y) + 1) >> 2);
        row[2 * x + 1] = static_cast<std::uint8_t>((cur + in(x + 1, y) + 2) >> 2);
      }
      row[2 * sw - 2] = static_cast<std::uint8_t>((in(sw - 1, y) * 3 + in(sw - 2, y) + 1) >> 2);
      row[2 * sw - 1] = static_cast<std::uint8_t>(in(sw - 1, y));
      std::copy_n(row.begin(), out_w, &out[y * out_w]);
    }
    return out;
  }
  if (fancy && hfac == 2 && vfac == 2) {
    std::vector<int> colsum(sw);
    std::vector<std::uint8_t> row(2 * sw);
    for (std::size_t oy = 0; oy < out_h; ++oy) {
      const std::size_t y = oy / 2;
      const bool below = oy & 1;
      const std::size_t ny = below ? std::min(y + 1, sh - 1) : (y == 0 ? 0 : y - 1);
      for (std::size_t x = 0; x < sw; ++x) colsum[x] = in(x, y) * 3 + in(x, ny);
      row[0] = static_cast<std::uint8_t>((colsum[0] * 4 + 8) >> 4);
      row[1] = static_cast<std::uint8_t>((colsum[0] * 3 + colsum[1] + 7) >> 4);
      for (std::size_t x = 1; x + 1 < sw; ++x) {
        row[2 * x] = static_cast<std::uint8_t>((colsum[x] * 3 + colsum[x - 1] + 8) >> 4);
        row[2 * x + 1] = static_cast<std::uint8_t>((colsum[x] * 3 + colsum[x + 1] + 7) >> 4);
      }
      row[2 * sw - 2] = static_cast<std::uint8_t>((colsum[sw - 1] * 3 + colsum[sw - 2] + 8) >> 4);
      row[2 * sw - 1] = static_cast<std::uint8_t>((colsum[sw - 1] * 4 + 7) >> 4);
      std::copy_n(row.begin(), out_w, &out[oy * out_w]);
    }
    return out;
  }
  for (std::size_t y = 0; y < out_h; ++y) {
    for (std::size_t x = 0; x < out_w; ++x) {
      out[y * out_w + x] = static_cast<std::uint8_t>(in(x / hfac, y / vfac));
    }
  }
  return out;
}

std::uint8_t range_limit(int v) { return static_cast<std::uint8_t>(std::clamp(v, 0, 255)); }

class Decoder {
 public:
  explicit Decoder(ByteView data) : data_(data) {}

  LdrImage run() {
    if (data_.size() < 2 || data_[0] != 0xFF || data_[1] != kSOI) malformed("missing SOI");
    pos_ = 2;
    bool scanned = false;
    for (;;) {
      const std::uint8_t marker = next_marker();
      if (marker == kEOI) break;
      if (marker >= 0xD0 && marker <= 0xD7) malformed("stray restart marker");
      if (marker == 0x01) continue;  // TEM, no payload
      const ByteView seg = segment();
      switch (marker) {
        case kSOF0:
        case kSOF1:
          read_frame(seg);
          break;
        case 0xC2:
        case 0xC6:
        case 0xCA:
        case 0xCE:
          unsupported("progressive mode");
        case 0xC3:
        case 0xC7:
        case 0xCB:
        case 0xCF:
          unsupported("lossless mode");
        case 0xC5:
        case 0xC9:
        case 0xCD:
          unsupported("arithmetic or hierarchical coding");
        case 0xCC:
          unsupported("arithmetic coding");
        case kDHT:
          read_dht(seg);
          break;
        case kDQT:
          read_dqt(seg);
          break;
        case kDRI:
          if (seg.size() != 2) malformed("bad DRI length");
          restart_interval_ = (seg[0] << 8) | seg[1];
          break;
        case kSOS:
          if (scanned) unsupported("multiple scans");
          read_scan(seg);
          scanned = true;
          break;
        default:
          break;  // APPn, COM and others are skipped
      }
    }
    if (!scanned) malformed("no scan before EOI");
    return to_rgb();
  }

 private:
  std::uint8_t next_marker() {
    if (pos_ >= data_.size() || data_[pos_] != 0xFF) {
      if (pos_ >= data_.size()) malformed("missing EOI");
      malformed("expected a marker");
    }
    while (pos_ < data_.size() && data_[pos_] == 0xFF) ++pos_;
    if (pos_ >= data_.size()) malformed("missing EOI");
    return data_[pos_++];
  }

  ByteView segment() {
    if (pos_ + 2 > data_.size()) malformed("truncated marker segment");
    const std::size_t len = (data_[pos_] << 8) | data_[pos_ + 1];
    if (len < 2 || pos_ + len > data_.size()) malformed("truncated marker segment");
    ByteView seg = data_.subspan(pos_ + 2, len - 2);
    pos_ += len;
    return seg;
  }

  void read_frame(ByteView seg) {
    if (frame_) malformed("duplicate frame header");
    if (seg.size() < 6) malformed("short SOF");
    if (seg[0] != 8) unsupported("sample precision " + std::to_string(seg[0]));
    height_ = (seg[1] << 8) | seg[2];
    width_ = (seg[3] << 8) | seg[4];
    const int n = seg[5];
    if (height_ == 0) unsupported("DNL-defined height");
    if (width_ == 0) malformed("zero image width");
    if (n != 1 && n != 3) unsupported(std::to_string(n) + " components");
    if (seg.size() != 6u + 3u * n) malformed("bad SOF length");
    comps_.resize(n);
    for (int i = 0; i < n; ++i) {
      Component& c = comps_[i];
      c.id = seg[6 + 3 * i];
      c.h = seg[7 + 3 * i] >> 4;
      c.v = seg[7 + 3 * i] & 15;
      c.quant_id = seg[8 + 3 * i];
      if (c.h < 1 || c.h > 2 || c.v < 1 || c.v > 2) unsupported("sampling factors above 2");
      if (c.quant_id > 3) malformed("bad quantization table id");
      hmax_ = std::max(hmax_, c.h);
      vmax_ = std::max(vmax_, c.v);
    }
    if (n == 1) hmax_ = vmax_ = comps_[0].h = comps_[0].v = 1;
    mcus_x_ = (width_ + 8 * hmax_ - 1) / (8 * hmax_);
    mcus_y_ = (height_ + 8 * vmax_ - 1) / (8 * vmax_);
    for (Component& c : comps_) {
      c.blocks_w = mcus_x_ * c.h;
      c.blocks_h = mcus_y_ * c.v;
      c.sampled_w = (width_ * c.h + hmax_ - 1) / hmax_;
      c.sampled_h = (height_ * c.v + vmax_ - 1) / vmax_;
      c.pixels.assign(c.blocks_w * 8 * c.blocks_h * 8, 0);
    }
    frame_ = true;
  }

  void read_dht(ByteView seg) {
    std::size_t p = 0;
    while (p < seg.size()) {
      if (p + 17 > seg.size()) malformed("short DHT");
      const int tc = seg[p] >> 4;
      const int th = seg[p] & 15;
      if (tc > 1 || th > 3) malformed("bad Huffman table id");
      std::uint8_t counts[16];
      int total = 0;
      for (int i = 0; i < 16; ++i) total += counts[i] = seg[p + 1 + i];
      p += 17;
      if (total > 256 || p + total > seg.size()) malformed("bad DHT length");
      std::vector<std::uint8_t> vals(seg.begin() + p, seg.begin() + p + total);
      p += total;
      (tc == 0 ? dc_tables_ : ac_tables_)[th].build(counts, std::move(vals));
    }
  }

  void read_dqt(ByteView seg) {
    std::size_t p = 0;
    while (p < seg.size()) {
      const int pq = seg[p] >> 4;
      const int tq = seg[p] & 15;
      if (pq > 1 || tq > 3) malformed("bad quantization table id");
      const std::size_t need = 1 + 64 * (pq + 1);
      if (p + need > seg.size()) malformed("short DQT");
      for (int k = 0; k < 64; ++k) {
        const std::size_t at = p + 1 + k * (pq + 1);
        const std::uint16_t v = pq ? static_cast<std::uint16_t>((seg[at] << 8) | seg[at + 1])
                                   : seg[at];
        quant_[tq][kZigzag[k]] = v;
      }
      quant_defined_[tq] = true;
      p += need;
    }
  }

  void read_scan(ByteView seg) {
    if (!frame_) malformed("SOS before SOF");
    if (seg.empty()) malformed("short SOS");
    const std::size_t ns = seg[0];
    if (seg.size() != 4 + 2 * ns) malformed("bad SOS length");
    if (ns != comps_.size()) unsupported("non-interleaved scans");
    for (std::size_t i = 0; i < ns; ++i) {
      auto it = std::find_if(comps_.begin(), comps_.end(),
                             [&](const Component& c) { return c.id == seg[1 + 2 * i]; });
      if (it == comps_.end()) malformed("scan references unknown component");
      it->dc_table = seg[2 + 2 * i] >> 4;
      it->ac_table = seg[2 + 2 * i] & 15;
      if (it->dc_table > 3 || it->ac_table > 3) malformed("bad Huffman table selector");
    }
    const std::size_t tail = 1 + 2 * ns;
    if (seg[tail] != 0 || seg[tail + 1] != 63 || seg[tail + 2] != 0) {
      unsupported("spectral selection or successive approximation");
    }
    for (const Component& c : comps_) {
      if (!quant_defined_[c.quant_id]) malformed("undefined quantization table");
    }

    BitReader bits(data_, pos_);
    std::int32_t coef[64];
    int next_rst = 0;
    std::size_t mcu_count = 0;
    for (std::size_t my = 0; my < mcus_y_; ++my) {
      for (std::size_t mx = 0; mx < mcus_x_; ++mx) {
        if (restart_interval_ && mcu_count && mcu_count % restart_interval_ == 0) {
          bits.restart(next_rst);
          next_rst = (next_rst + 1) & 7;
          for (Component& c : comps_) c.dc_pred = 0;
        }
        for (Component& c : comps_) {
          for (int by = 0; by < c.v; ++by) {
            for (int bx = 0; bx < c.h; ++bx) {
              decode_block(bits, c, coef);
              const std::size_t stride = c.blocks_w * 8;
              const std::size_t px = (mx * c.h + bx) * 8;
              const std::size_t py = (my * c.v + by) * 8;
              inverse_dct(coef, quant_[c.quant_id].data(), &c.pixels[py * stride + px], stride);
            }
          }
        }
        ++mcu_count;
      }
    }
    pos_ = bits.position();
  }

  void decode_block(BitReader& bits, Component& c, std::int32_t coef[64]) {
    std::fill(coef, coef + 64, 0);
    const int s = bits.decode(dc_tables_[c.dc_table]);
    if (s > 11) malformed("DC magnitude category out of range");
    const int diff = s ? extend(bits.bits(s), s) : 0;
    c.dc_pred += diff;
    coef[0] = c.dc_pred;
    for (int k = 1; k < 64;) {
      const int rs = bits.decode(ac_tables_[c.ac_table]);
      const int r = rs >> 4;
      const int sz = rs & 15;
      if (sz == 0) {
        if (r != 15) break;  // EOB
        k += 16;
        continue;
      }
      k += r;
      if (k > 63) malformed("AC coefficient index past 63");
      coef[kZigzag[k]] = extend(bits.bits(sz), sz);
      ++k;
    }
  }

  LdrImage to_rgb() {
    LdrImage out(width_, height_);
    std::vector<std::uint8_t> planes[3];
    for (std::size_t i = 0; i < comps_.size(); ++i) {
      const Component& c = comps_[i];
      planes[i] = upsample(c, hmax_ / c.h, vmax_ / c.v, width_, height_);
    }
    if (comps_.size() == 1) {
      for (int ch = 0; ch < 3; ++ch) out.planes[ch].data = planes[0];
      return out;
    }
    constexpr int kScale = 16;
    constexpr std::int32_t kHalf = 1 << (kScale - 1);
    for (std::size_t i = 0; i < width_ * height_; ++i) {
      const int y = planes[0][i];
      const int cb = planes[1][i] - 128;
      const int cr = planes[2][i] - 128;
      const int r_off = (91881 * cr + kHalf) >> kScale;
      const int b_off = (116130 * cb + kHalf) >> kScale;
      const int g_off = (-22554 * cb + kHalf - 46802 * cr) >> kScale;
      out.planes[0].data[i] = range_limit(y + r_off);
      out.planes[1].data[i] = range_limit(y + g_off);
      out.planes[2].data[i] = range_limit(y + b_off);
    }
    return out;
  }

  ByteView data_;
  std::size_t pos_ = 0;
  bool frame_ = false;
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  int hmax_ = 1;
  int vmax_ = 1;
  std::size_t mcus_x_ = 0;
  std::size_t mcus_y_ = 0;
  std::vector<Component> comps_;
  std::array<std::array<std::uint16_t, 64>, 4> quant_{};
  std::array<bool, 4> quant_defined_{};
  std::array<HuffmanTable, 4> dc_tables_;
  std::array<HuffmanTable, 4> ac_tables_;
  unsigned restart_interval_ = 0;
};

}  // namespace

LdrImage decode_base(ByteView stream) { return Decoder(stream).run(); }

}  // namespace hdrzsq
