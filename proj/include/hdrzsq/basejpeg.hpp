#pragma once

#include <array>
#include <cstdint>

#include "hdrzsq/byte_io.hpp"
#include "hdrzsq/pixels.hpp"

namespace hdrzsq {

// Baseline JPEG quality factor, 1..100.
class JpegQuality {
 public:
  explicit JpegQuality(int q);
  int value() const { return q_; }

 private:
  int q_;
};

enum class ChromaSubsampling : std::uint8_t { k444 = 0, k420 = 1 };

// Annex K example table scaled by the usual quality convention:
// scale = 5000/q below 50, else 200 - 2q; entries clamped to [1, 255].
// Natural (row-major) order.
std::array<std::uint16_t, 64> scaled_quant_table(bool chroma, JpegQuality q);

// Encodes a JFIF 1.01 baseline sequential stream with the standard Huffman
// tables. Output is deterministic. No refinement scans, 8-bit only.
Bytes encode_base(const LdrImage& ldr, JpegQuality q,
                  ChromaSubsampling subsampling = ChromaSubsampling::k444);

// Decodes a baseline (or extended-Huffman 8-bit) sequential stream. Uses the
// accurate integer IDCT, the fixed-point YCbCr->RGB conversion and "fancy"
// triangle upsampling of the IJG reference decoder, so 4:4:4 output matches
// that implementation bit for bit. Grayscale streams are replicated to RGB.
// Throws a format error on malformed or unsupported (progressive,
// arithmetic, lossless, 12-bit) streams.
LdrImage decode_base(ByteView stream);

}  // namespace hdrzsq
