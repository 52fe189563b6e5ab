#include "hdrzsq/tonemap.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hdrzsq/error.hpp"

namespace hdrzsq {

void TmoParams::validate(const HdrImage& img) const {
  if (!(exposure > 0.0) || !std::isfinite(exposure)) {
    fail(ErrorKind::kUsage, "TMO exposure must be positive");
  }
  if (!(gamma > 0.0) || !std::isfinite(gamma)) {
    fail(ErrorKind::kUsage, "TMO gamma must be positive");
  }
  if (white_point == 0 || white_point > img.max_sample()) {
    fail(ErrorKind::kUsage, "TMO white point " + std::to_string(white_point) +
                                " outside [1, " + std::to_string(img.max_sample()) + "]");
  }
}

TmoParams default_tmo_params(const HdrImage& img) {
  std::vector<std::uint16_t> all;
  all.reserve(img.width * img.height * 3);
  for (const auto& p : img.planes) all.insert(all.end(), p.data.begin(), p.data.end());
  const std::size_t k = (all.size() - 1) * 99 / 100;
  std::nth_element(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end());
  TmoParams params;
  params.white_point = std::max<std::uint32_t>(1, all[k]);
  return params;
}

ToneCurve::ToneCurve(const TmoParams& params, const SampleMapping& mapping,
                     std::uint32_t max_sample)
    : forward_(max_sample + 1) {
  const double white = mapping.linear(params.white_point);
  for (std::uint32_t x = 0; x <= max_sample; ++x) {
    const double y = 255.0 * std::pow(params.exposure * mapping.linear(x) / white, params.gamma);
    forward_[x] = static_cast<std::uint8_t>(std::clamp(std::floor(y + 0.5), 0.0, 255.0));
  }

  for (int v = 0; v < 256; ++v) {
    const double lin = white * std::pow(v / 255.0, 1.0 / params.gamma) / params.exposure;
    std::uint32_t x = 0;
    if (mapping.kind == MappingKind::kHalf) {
      x = float_to_half_bits(static_cast<float>(std::min(lin, 65504.0)));
    } else {
      x = static_cast<std::uint32_t>(std::clamp(std::floor(lin + 0.5), 0.0, 65535.0));
    }
    x = std::min(x, max_sample);
    // The forward table is monotone; snap into the bucket of v if it exists.
    auto lo = std::lower_bound(forward_.begin(), forward_.end(), static_cast<std::uint8_t>(v));
    if (lo != forward_.end() && *lo == v) {
      auto hi = std::upper_bound(lo, forward_.end(), static_cast<std::uint8_t>(v));
      const auto first = static_cast<std::uint32_t>(lo - forward_.begin());
      const auto last = static_cast<std::uint32_t>(hi - forward_.begin()) - 1;
      x = std::clamp(x, first, last);
    }
    inverse_[v] = static_cast<std::uint16_t>(x);
  }
}

ToneCurve ToneCurve::from_inverse_table(const std::array<std::uint16_t, 256>& table,
                                        std::uint32_t max_sample) {
  ToneCurve curve;
  for (int v = 0; v < 256; ++v) {
    if (table[v] > max_sample) fail(ErrorKind::kFormat, "inverse tone table exceeds sample range");
  }
  curve.inverse_ = table;
  return curve;
}

LdrImage forward_tmo(const HdrImage& img, const ToneCurve& curve) {
  if (!curve.has_forward()) fail(ErrorKind::kUsage, "tone curve has no forward table");
  LdrImage out(img.width, img.height);
  for (int c = 0; c < 3; ++c) {
    const auto& src = img.planes[c].data;
    auto& dst = out.planes[c].data;
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = curve.forward(src[i]);
  }
  return out;
}

LdrImage forward_tmo(const HdrImage& img, const TmoParams& params) {
  params.validate(img);
  return forward_tmo(img, ToneCurve(params, img.mapping, img.max_sample()));
}

HdrImage inverse_tmo(const LdrImage& ldr, const ToneCurve& curve, unsigned depth,
                     const SampleMapping& mapping) {
  HdrImage out(ldr.width, ldr.height, depth, mapping);
  for (int c = 0; c < 3; ++c) {
    const auto& src = ldr.planes[c].data;
    auto& dst = out.planes[c].data;
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = curve.inverse(src[i]);
  }
  return out;
}

HdrImage inverse_tmo(const LdrImage& ldr, const TmoParams& params, unsigned depth,
                     const SampleMapping& mapping) {
  HdrImage shape(1, 1, depth, mapping);
  params.validate(shape);
  return inverse_tmo(ldr, ToneCurve(params, mapping, shape.max_sample()), depth, mapping);
}

}  // namespace hdrzsq
