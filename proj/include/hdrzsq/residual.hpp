#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hdrzsq/byte_io.hpp"
#include "hdrzsq/pixels.hpp"
#include "hdrzsq/tonemap.hpp"
#include "hdrzsq/zsq.hpp"

namespace hdrzsq {

enum class ColorTransform : std::uint8_t {
  kNone = 0,
  kReversible = 1,  // integer RCT: y = floor((r+2g+b)/4), cb = b-g, cr = r-g
};

// Worst-case per-RGB-sample error when every transformed component is
// reconstructed within `delta`.
constexpr std::uint32_t rgb_error_bound(ColorTransform t, std::uint32_t delta) {
  return t == ColorTransform::kNone ? delta : 2 * delta;
}

// Residual planes shifted to be non-negative: stored = signed + bias.
struct ResidualPlanes {
  std::size_t width = 0;
  std::size_t height = 0;
  ColorTransform transform = ColorTransform::kNone;
  std::array<Plane<std::uint32_t>, 3> planes;
  std::array<std::int32_t, 3> bias{};
  std::array<unsigned, 3> domain_bits{};  // bits needed by each stored plane
};

struct SignedTriple {
  std::vector<std::int32_t> a, b, c;
};

SignedTriple color_forward(std::span<const std::int32_t> r, std::span<const std::int32_t> g,
                           std::span<const std::int32_t> b);
SignedTriple color_inverse(std::span<const std::int32_t> y, std::span<const std::int32_t> cb,
                           std::span<const std::int32_t> cr);

// residual = hdr - inverse_tmo(base) per RGB plane, then the optional color
// transform, then a per-plane bias of -min so every stored sample is >= 0.
ResidualPlanes compute_residual(const HdrImage& hdr, const LdrImage& base, const ToneCurve& curve,
                                ColorTransform transform);
ResidualPlanes compute_residual(const HdrImage& hdr, const LdrImage& base, const TmoParams& tmo,
                                ColorTransform transform);

// Inverse of compute_residual given (possibly quantized) stored planes:
// removes the bias, inverts the color transform, adds inverse_tmo(base) and
// clamps to the legal sample range.
HdrImage reconstruct_hdr(const std::array<std::vector<std::uint32_t>, 3>& stored,
                         const std::array<std::int32_t, 3>& bias, ColorTransform transform,
                         const LdrImage& base, const ToneCurve& curve, unsigned depth,
                         const SampleMapping& mapping);

enum class LosslessCodecId : std::uint8_t {
  kRaw = 0,
  kPredictiveDeflate = 1,  // MED prediction + zlib
};

const char* to_string(LosslessCodecId id);
LosslessCodecId parse_codec(const std::string& text);

// Self-describing payload: codec id, dimensions, bin count, then data.
Bytes encode_plane(const IndexImage& idx, LosslessCodecId codec);
IndexImage decode_plane(ByteView payload);

}  // namespace hdrzsq
