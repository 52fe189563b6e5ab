#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace hdrzsq {

// A row-major single-component raster.
template <typename T>
struct Plane {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<T> data;

  Plane() = default;
  Plane(std::size_t w, std::size_t h, T fill = T{})
      : width(w), height(h), data(w * h, fill) {}

  std::size_t size() const { return data.size(); }
  T& at(std::size_t x, std::size_t y) { return data[y * width + x]; }
  const T& at(std::size_t x, std::size_t y) const { return data[y * width + x]; }

  bool operator==(const Plane&) const = default;
};

// How float radiance becomes the integer samples the codec operates on.
enum class MappingKind : std::uint8_t {
  kInteger = 0,  // samples were integers already (PNM input)
  kHalf = 1,     // IEEE binary16 bit pattern of the clamped value
  kFixed = 2,    // round(value * scale)
};

struct SampleMapping {
  MappingKind kind = MappingKind::kHalf;
  double scale = 1.0;  // used by kFixed only

  static SampleMapping integer() { return {MappingKind::kInteger, 1.0}; }
  static SampleMapping half() { return {MappingKind::kHalf, 1.0}; }
  static SampleMapping fixed(double scale) { return {MappingKind::kFixed, scale}; }

  // Float value that sample `x` stands for. For kInteger and kFixed this is x
  // itself, so tone mapping behaves identically across integer mappings.
  double linear(std::uint32_t x) const;
  // Float -> sample. Negative inputs clamp to 0, overflow clamps to the
  // largest representable sample. Throws on non-finite input.
  std::uint16_t to_sample(float value) const;
  // Sample -> float written to float file formats.
  float to_float(std::uint16_t x) const;

  bool operator==(const SampleMapping&) const = default;
};

// "half", "fixed:<scale>" or "integer".
SampleMapping parse_mapping(const std::string& text);
std::string to_string(const SampleMapping& m);

// binary16 helpers; backed by Eigen::half.
std::uint16_t float_to_half_bits(float value);
float half_bits_to_float(std::uint16_t bits);
inline constexpr std::uint16_t kMaxFiniteHalfBits = 0x7BFF;

struct HdrImage {
  std::size_t width = 0;
  std::size_t height = 0;
  unsigned depth = 16;  // bits per sample, 9..16
  SampleMapping mapping = SampleMapping::integer();
  std::array<Plane<std::uint16_t>, 3> planes;  // R, G, B

  HdrImage() = default;
  HdrImage(std::size_t w, std::size_t h, unsigned depth, SampleMapping mapping);

  // Largest legal sample: 2^depth - 1, or the largest finite binary16 pattern
  // under the half mapping.
  std::uint32_t max_sample() const;
  // Throws a usage error if any invariant is broken.
  void validate() const;

  bool operator==(const HdrImage&) const = default;
};

struct LdrImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::array<Plane<std::uint8_t>, 3> planes;  // R, G, B

  LdrImage() = default;
  LdrImage(std::size_t w, std::size_t h);

  bool operator==(const LdrImage&) const = default;
};

enum class FileFormat { kPfm, kRgbe, kPnm };

// Picks the format from the file extension (.pfm, .hdr/.rgbe/.pic,
// .ppm/.pgm/.pnm).
FileFormat format_from_extension(const std::filesystem::path& path);
FileFormat sniff_format(std::span<const std::uint8_t> data);

// Reads a PFM, Radiance RGBE or 16-bit PNM file. `mapping` applies to float
// formats; PNM input always yields MappingKind::kInteger.
HdrImage load_hdr(const std::filesystem::path& path,
                  SampleMapping mapping = SampleMapping::half());
HdrImage decode_hdr(std::span<const std::uint8_t> data, SampleMapping mapping);

// Writes in the format implied by the extension. Float formats convert
// samples through img.mapping.
void store_hdr(const HdrImage& img, const std::filesystem::path& path);
std::vector<std::uint8_t> encode_hdr(const HdrImage& img, FileFormat format);

// 8-bit binary PPM, used for dumping base layers.
void store_ldr_ppm(const LdrImage& img, const std::filesystem::path& path);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
// Writes through a temporary sibling and renames, so a failed write never
// leaves a partial file behind.
void write_file_atomic(const std::filesystem::path& path,
                       std::span<const std::uint8_t> data);

}  // namespace hdrzsq
