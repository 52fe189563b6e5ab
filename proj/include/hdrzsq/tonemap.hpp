#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "hdrzsq/pixels.hpp"

namespace hdrzsq {

// Global exposure + gamma operator:
//   ldr = clamp(round(255 * (exposure * linear(x) / linear(white_point))^gamma))
// with round-half-up.
struct TmoParams {
  double exposure = 1.0;
  double gamma = 1.0 / 2.2;
  std::uint32_t white_point = 1;  // HDR-domain sample mapped to 255

  // Throws a usage error unless all fields are positive and white_point fits.
  void validate(const HdrImage& img) const;

  bool operator==(const TmoParams&) const = default;
};

// exposure 1, gamma 1/2.2, white point at the 99th percentile of all samples.
TmoParams default_tmo_params(const HdrImage& img);

// Lookup-table form of the operator for one (params, mapping, depth) triple.
// The inverse table is the part the decoder needs; it is serialized in the
// container so decoding never re-evaluates floating-point pow().
class ToneCurve {
 public:
  ToneCurve(const TmoParams& params, const SampleMapping& mapping, std::uint32_t max_sample);

  // Decoder-side curve: inverse table only.
  static ToneCurve from_inverse_table(const std::array<std::uint16_t, 256>& table,
                                      std::uint32_t max_sample);

  std::uint8_t forward(std::uint32_t x) const { return forward_[x]; }
  std::uint16_t inverse(std::uint8_t v) const { return inverse_[v]; }
  const std::array<std::uint16_t, 256>& inverse_table() const { return inverse_; }
  bool has_forward() const { return !forward_.empty(); }

 private:
  ToneCurve() = default;

  std::vector<std::uint8_t> forward_;  // indexed by sample, size max_sample + 1
  std::array<std::uint16_t, 256> inverse_{};
};

LdrImage forward_tmo(const HdrImage& img, const TmoParams& params);
LdrImage forward_tmo(const HdrImage& img, const ToneCurve& curve);

// Per-sample inverse in the integer HDR domain of `depth` bits. The result
// always lies inside the forward bucket of its LDR value when that bucket is
// non-empty, so forward(inverse(forward(x))) == forward(x).
HdrImage inverse_tmo(const LdrImage& ldr, const TmoParams& params, unsigned depth,
                     const SampleMapping& mapping);
HdrImage inverse_tmo(const LdrImage& ldr, const ToneCurve& curve, unsigned depth,
                     const SampleMapping& mapping);

}  // namespace hdrzsq
