#include "hdrzsq/residual.hpp"

#include <algorithm>
#include <bit>
#include <limits>
#include <string>

#include "hdrzsq/error.hpp"

namespace hdrzsq {

SignedTriple color_forward(std::span<const std::int32_t> r, std::span<const std::int32_t> g,
                           std::span<const std::int32_t> b) {
  SignedTriple out;
  const std::size_t n = r.size();
  out.a.resize(n);
  out.b.resize(n);
  out.c.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.a[i] = (r[i] + 2 * g[i] + b[i]) >> 2;  // arithmetic shift == floor
    out.b[i] = b[i] - g[i];
    out.c[i] = r[i] - g[i];
  }
  return out;
}

SignedTriple color_inverse(std::span<const std::int32_t> y, std::span<const std::int32_t> cb,
                           std::span<const std::int32_t> cr) {
  SignedTriple out;
  const std::size_t n = y.size();
  out.a.resize(n);
  out.b.resize(n);
  out.c.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::int32_t g = y[i] - ((cb[i] + cr[i]) >> 2);
    out.a[i] = cr[i] + g;
    out.b[i] = g;
    out.c[i] = cb[i] + g;
  }
  return out;
}

ResidualPlanes compute_residual(const HdrImage& hdr, const LdrImage& base, const ToneCurve& curve,
                                ColorTransform transform) {
  if (hdr.width != base.width || hdr.height != base.height) {
    fail(ErrorKind::kUsage, "base layer and HDR image dimensions differ");
  }
  const std::size_t n = hdr.width * hdr.height;
  std::array<std::vector<std::int32_t>, 3> diff;
  for (int c = 0; c < 3; ++c) {
    diff[c].resize(n);
    const auto& h = hdr.planes[c].data;
    const auto& l = base.planes[c].data;
    for (std::size_t i = 0; i < n; ++i) {
      diff[c][i] = static_cast<std::int32_t>(h[i]) - curve.inverse(l[i]);
    }
  }
  if (transform == ColorTransform::kReversible) {
    SignedTriple t = color_forward(diff[0], diff[1], diff[2]);
    diff = {std::move(t.a), std::move(t.b), std::move(t.c)};
  }

  ResidualPlanes out;
  out.width = hdr.width;
  out.height = hdr.height;
  out.transform = transform;
  for (int c = 0; c < 3; ++c) {
    const auto [lo, hi] = std::minmax_element(diff[c].begin(), diff[c].end());
    out.bias[c] = -*lo;
    const auto span = static_cast<std::uint32_t>(*hi - *lo);
    out.domain_bits[c] = std::max(1u, static_cast<unsigned>(std::bit_width(span)));
    if (out.domain_bits[c] > kMaxDomainBits) fail(ErrorKind::kUsage, "residual range too wide");
    out.planes[c] = Plane<std::uint32_t>(hdr.width, hdr.height);
    for (std::size_t i = 0; i < n; ++i) {
      out.planes[c].data[i] = static_cast<std::uint32_t>(diff[c][i] + out.bias[c]);
    }
  }
  return out;
}

ResidualPlanes compute_residual(const HdrImage& hdr, const LdrImage& base, const TmoParams& tmo,
                                ColorTransform transform) {
  tmo.validate(hdr);
  return compute_residual(hdr, base, ToneCurve(tmo, hdr.mapping, hdr.max_sample()), transform);
}

HdrImage reconstruct_hdr(const std::array<std::vector<std::uint32_t>, 3>& stored,
                         const std::array<std::int32_t, 3>& bias, ColorTransform transform,
                         const LdrImage& base, const ToneCurve& curve, unsigned depth,
                         const SampleMapping& mapping) {
  const std::size_t n = base.width * base.height;
  std::array<std::vector<std::int32_t>, 3> res;
  for (int c = 0; c < 3; ++c) {
    if (stored[c].size() != n) fail(ErrorKind::kIntegrity, "residual plane size mismatch");
    res[c].resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      res[c][i] = static_cast<std::int32_t>(static_cast<std::int64_t>(stored[c][i]) - bias[c]);
    }
  }
  if (transform == ColorTransform::kReversible) {
    SignedTriple t = color_inverse(res[0], res[1], res[2]);
    res = {std::move(t.a), std::move(t.b), std::move(t.c)};
  }
  HdrImage out(base.width, base.height, depth, mapping);
  const auto limit = static_cast<std::int64_t>(out.max_sample());
  for (int c = 0; c < 3; ++c) {
    const auto& l = base.planes[c].data;
    auto& dst = out.planes[c].data;
    for (std::size_t i = 0; i < n; ++i) {
      const std::int64_t v = static_cast<std::int64_t>(curve.inverse(l[i])) + res[c][i];
      dst[i] = static_cast<std::uint16_t>(std::clamp<std::int64_t>(v, 0, limit));
    }
  }
  return out;
}

const char* to_string(LosslessCodecId id) {
  switch (id) {
    case LosslessCodecId::kRaw:
      return "raw";
    case LosslessCodecId::kPredictiveDeflate:
      return "deflate";
  }
  return "?";
}

LosslessCodecId parse_codec(const std::string& text) {
  if (text == "raw") return LosslessCodecId::kRaw;
  if (text == "deflate" || text == "predictive-deflate") return LosslessCodecId::kPredictiveDeflate;
  fail(ErrorKind::kUsage, "unknown lossless codec '" + text + "' (deflate, raw)");
}

namespace {

enum : std::uint8_t { kStored = 0, kDeflated = 1 };

int symbol_bytes(std::uint32_t bin_count) {
  const std::uint32_t top = bin_count > 0 ? bin_count - 1 : 0;
  return std::max(1, (static_cast<int>(std::bit_width(top)) + 7) / 8);
}

std::uint32_t med_predict(const std::vector<std::uint32_t>& v, std::size_t w, std::size_t x,
                          std::size_t y) {
  if (y == 0) return x == 0 ? 0 : v[x - 1];
  if (x == 0) return v[(y - 1) * w];
  const std::int64_t a = v[y * w + x - 1];
  const std::int64_t b = v[(y - 1) * w + x];
  const std::int64_t c = v[(y - 1) * w + x - 1];
  if (c >= std::max(a, b)) return static_cast<std::uint32_t>(std::min(a, b));
  if (c <= std::min(a, b)) return static_cast<std::uint32_t>(std::max(a, b));
  return static_cast<std::uint32_t>(a + b - c);
}

// Residual modulo n folded into [0, n): small magnitudes -> small symbols.
std::uint32_t fold(std::uint32_t value, std::uint32_t pred, std::uint32_t n) {
  const std::uint64_t d = (std::uint64_t{value} + n - pred) % n;
  if (d >= (std::uint64_t{n} + 1) / 2) return static_cast<std::uint32_t>(2 * (n - d) - 1);
  return static_cast<std::uint32_t>(2 * d);
}

std::uint32_t unfold(std::uint32_t symbol, std::uint32_t pred, std::uint32_t n) {
  std::uint64_t d = symbol & 1 ? n - (std::uint64_t{symbol} + 1) / 2 : symbol / 2;
  return static_cast<std::uint32_t>((pred + d) % n);
}

// Symbols laid out as byte planes, most significant first, for the
// general-purpose compressor.
Bytes to_byte_planes(const std::vector<std::uint32_t>& symbols, int width) {
  Bytes out(symbols.size() * width);
  for (int b = 0; b < width; ++b) {
    const int shift = 8 * (width - 1 - b);
    std::uint8_t* dst = out.data() + b * symbols.size();
    for (std::size_t i = 0; i < symbols.size(); ++i) {
      dst[i] = static_cast<std::uint8_t>(symbols[i] >> shift);
    }
  }
  return out;
}

std::vector<std::uint32_t> from_byte_planes(ByteView raw, std::size_t count, int width) {
  std::vector<std::uint32_t> out(count, 0);
  for (int b = 0; b < width; ++b) {
    const std::uint8_t* src = raw.data() + b * count;
    for (std::size_t i = 0; i < count; ++i) out[i] = (out[i] << 8) | src[i];
  }
  return out;
}

}  // namespace

Bytes encode_plane(const IndexImage& idx, LosslessCodecId codec) {
  if (idx.indices.size() != idx.width * idx.height) {
    fail(ErrorKind::kUsage, "index image size does not match dimensions");
  }
  if (idx.bin_count == 0) fail(ErrorKind::kUsage, "index image has no bins");
  for (std::uint32_t q : idx.indices) {
    if (q >= idx.bin_count) fail(ErrorKind::kUsage, "index exceeds bin count");
  }
  const int width = symbol_bytes(idx.bin_count);

  ByteWriter w;
  w.u8(static_cast<std::uint8_t>(codec));
  w.u32(static_cast<std::uint32_t>(idx.width));
  w.u32(static_cast<std::uint32_t>(idx.height));
  w.u32(idx.bin_count);
  w.u8(static_cast<std::uint8_t>(width));

  if (codec == LosslessCodecId::kRaw) {
    w.u8(kStored);
    w.bytes(to_byte_planes(idx.indices, width));
    return w.take();
  }
  if (codec != LosslessCodecId::kPredictiveDeflate) fail(ErrorKind::kUsage, "unknown codec id");

  std::vector<std::uint32_t> symbols(idx.indices.size());
  for (std::size_t y = 0; y < idx.height; ++y) {
    for (std::size_t x = 0; x < idx.width; ++x) {
      const std::size_t i = y * idx.width + x;
      symbols[i] = fold(idx.indices[i], med_predict(idx.indices, idx.width, x, y), idx.bin_count);
    }
  }
  Bytes raw = to_byte_planes(symbols, width);
  Bytes packed = deflate_bytes(raw);
  if (packed.size() + 4 < raw.size()) {
    w.u8(kDeflated);
    w.u32(static_cast<std::uint32_t>(raw.size()));
    w.bytes(packed);
  } else {
    w.u8(kStored);
    w.bytes(raw);
  }
  return w.take();
}

IndexImage decode_plane(ByteView payload) {
  ByteReader r(payload, "index plane");
  const auto codec = static_cast<LosslessCodecId>(r.u8());
  if (codec != LosslessCodecId::kRaw && codec != LosslessCodecId::kPredictiveDeflate) {
    fail(ErrorKind::kFormat, "unknown lossless codec id " + std::to_string(static_cast<int>(codec)));
  }
  IndexImage idx;
  idx.width = r.u32();
  idx.height = r.u32();
  idx.bin_count = r.u32();
  const int width = r.u8();
  const std::uint8_t mode = r.u8();
  if (idx.bin_count == 0 || width != symbol_bytes(idx.bin_count)) {
    fail(ErrorKind::kFormat, "inconsistent index plane header");
  }
  const std::size_t count = idx.width * idx.height;
  if (idx.width == 0 || idx.height == 0 || count / idx.width != idx.height ||
      count > (std::size_t{1} << 32)) {
    fail(ErrorKind::kFormat, "bad index plane dimensions");
  }
  const std::size_t raw_size = count * width;

  Bytes raw;
  if (mode == kStored) {
    ByteView data = r.take(raw_size);
    raw.assign(data.begin(), data.end());
  } else if (mode == kDeflated) {
    const std::uint32_t declared = r.u32();
    if (declared != raw_size) fail(ErrorKind::kFormat, "index plane size mismatch");
    raw = inflate_bytes(r.take(r.remaining()), raw_size);
  } else {
    fail(ErrorKind::kFormat, "unknown index plane mode");
  }
  if (!r.done()) fail(ErrorKind::kFormat, "trailing bytes after index plane");

  std::vector<std::uint32_t> symbols = from_byte_planes(raw, count, width);
  if (codec == LosslessCodecId::kRaw) {
    idx.indices = std::move(symbols);
  } else {
    idx.indices.resize(count);
    for (std::size_t y = 0; y < idx.height; ++y) {
      for (std::size_t x = 0; x < idx.width; ++x) {
        const std::size_t i = y * idx.width + x;
        if (symbols[i] >= idx.bin_count) fail(ErrorKind::kIntegrity, "index symbol out of range");
        idx.indices[i] =
            unfold(symbols[i], med_predict(idx.indices, idx.width, x, y), idx.bin_count);
      }
    }
  }
  for (std::uint32_t q : idx.indices) {
    if (q >= idx.bin_count) fail(ErrorKind::kIntegrity, "index exceeds bin count");
  }
  return idx;
}

}  // namespace hdrzsq
