#pragma once

// Thin wrappers over the system libjpeg, used as an independent reference.

#include <array>
#include <cstdint>
#include <vector>

#include "hdrzsq/byte_io.hpp"
#include "hdrzsq/pixels.hpp"

namespace oracle {

// Decodes with the library defaults (islow IDCT, fancy upsampling) to RGB.
hdrzsq::LdrImage libjpeg_decode(hdrzsq::ByteView stream);

// Baseline encode with the standard tables scaled by `quality`; 4:4:4 when
// `subsample` is false, else 2x2 chroma.
hdrzsq::Bytes libjpeg_encode(const hdrzsq::LdrImage& img, int quality, bool subsample,
                             bool progressive = false, unsigned restart_interval = 0);

// Quantized DCT coefficients per component, blocks in raster order, each
// block in natural order.
struct Coefficients {
  std::vector<std::vector<std::array<std::int16_t, 64>>> components;
  std::vector<std::array<std::uint16_t, 64>> quant;  // per component, natural order
};
Coefficients libjpeg_coefficients(hdrzsq::ByteView stream);

// The library's own scaled tables for `quality`, natural order.
std::array<std::uint16_t, 64> libjpeg_quant_table(int which, int quality);

}  // namespace oracle
