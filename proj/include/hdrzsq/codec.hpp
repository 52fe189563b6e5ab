#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "hdrzsq/basejpeg.hpp"
#include "hdrzsq/container.hpp"
#include "hdrzsq/pixels.hpp"
#include "hdrzsq/residual.hpp"
#include "hdrzsq/tonemap.hpp"
#include "hdrzsq/zsq.hpp"

namespace hdrzsq {

struct EncodeOptions {
  std::uint32_t delta = 1;
  Parity parity = Parity::kOdd;
  int quality = 80;
  ColorTransform transform = ColorTransform::kReversible;
  ChromaSubsampling subsampling = ChromaSubsampling::k444;
  LosslessCodecId codec = LosslessCodecId::kPredictiveDeflate;
  TableCompressor table_compressor = TableCompressor::kDeflate;
  std::optional<TmoParams> tmo;  // default_tmo_params() when unset
};

struct EncodeResult {
  Bytes file;
  Container container;
  LdrImage base;  // decoded base layer the residual was taken against
  std::array<ZsqCodebook, 3> codebooks;
  std::array<IndexImage, 3> index_planes;
  SectionSizes sizes;
};

EncodeResult encode_image(const HdrImage& img, const EncodeOptions& options,
                          FileFormat source_format = FileFormat::kPfm);

struct DecodedImage {
  HdrImage image;
  ContainerHeader header;
};

DecodedImage decode_image(ByteView file);

struct Distortion {
  std::uint32_t max_abs_error = 0;
  double psnr_db = 0.0;  // +inf when identical
};

// Per-sample comparison in the integer domain; peak is a.max_sample().
Distortion measure_distortion(const HdrImage& a, const HdrImage& b);

struct RdPoint {
  std::uint32_t epsilon = 0;
  std::uint32_t delta = 0;
  int q = 0;
  ColorTransform transform = ColorTransform::kNone;
  double bpp = 0.0;
  std::uint32_t max_abs_error = 0;
  double psnr_db = 0.0;
  std::size_t bytes_base = 0;
  std::size_t bytes_tables = 0;
  std::size_t bytes_payload = 0;  // header and index-plane segments
  std::uint32_t bound = 0;        // guaranteed max_abs_error for this mode

  std::size_t total_bytes() const { return bytes_base + bytes_tables + bytes_payload; }
};

// Decodes `enc.file` (never trusting encoder state) and measures it against
// `img`.
RdPoint measure_encoded(const HdrImage& img, const EncodeResult& enc,
                        const EncodeOptions& options);
RdPoint encode_and_measure(const HdrImage& img, const EncodeOptions& options,
                           EncodeResult* result = nullptr);

RdPoint encode_file(const std::filesystem::path& input, const std::filesystem::path& output,
                    const EncodeOptions& options, SampleMapping mapping = SampleMapping::half());

// Writes in the format implied by `output`'s extension. Nothing is written
// when decoding fails.
void decode_file(const std::filesystem::path& input, const std::filesystem::path& output);

struct SweepOptions {
  std::uint32_t delta_min = 0;
  std::uint32_t delta_max = 14;
  Parity parity = Parity::kOdd;
  EncodeOptions base;  // delta and parity are overridden per point
  unsigned jobs = 1;
};

// One point per delta in [delta_min, delta_max], ordered by epsilon. Even
// parity skips delta = 0.
std::vector<RdPoint> sweep(const HdrImage& img, const SweepOptions& options);

inline constexpr const char* kCsvHeader =
    "epsilon,delta,q,transform,bpp,max_abs_err,psnr_db,bytes_base,bytes_tables,bytes_payload";
std::string csv_row(const RdPoint& p);
void write_csv(std::ostream& out, const std::vector<RdPoint>& points);

// Human-readable dump of header, tables and chunk layout.
std::string inspect(ByteView file);

const char* to_string(ColorTransform t);

}  // namespace hdrzsq
