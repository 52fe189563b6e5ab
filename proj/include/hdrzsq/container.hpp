#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "hdrzsq/basejpeg.hpp"
#include "hdrzsq/byte_io.hpp"
#include "hdrzsq/pixels.hpp"
#include "hdrzsq/residual.hpp"
#include "hdrzsq/tonemap.hpp"
#include "hdrzsq/zsq.hpp"

namespace hdrzsq {

// Layout of a multiplexed file (all integers big-endian):
//
//   SOI, APP0 (JFIF), APP11 header box, APP11 table boxes x3,
//   APP11 payload boxes xN, remainder of the base JPEG stream, EOI
//
// Every APP11 segment body is
//
//   "ZSQ0" | version u8 | kind u8 | plane u8 | seq u16 | count u16 |
//   total_len u32 | crc32 u32 | data
//
// where a logical box (kind, plane) of total_len bytes is split into `count`
// chunks numbered 0..count-1 and crc32 covers the reassembled box. Legacy
// decoders skip APP11, so deleting these segments recovers the base stream
// byte for byte.

inline constexpr std::uint8_t kContainerVersion = 1;
inline constexpr std::size_t kMaxSegmentPayload = 65533;
inline constexpr std::size_t kBoxHeaderSize = 19;
inline constexpr std::size_t kMaxChunkData = kMaxSegmentPayload - kBoxHeaderSize;

enum class BoxKind : std::uint8_t { kHeader = 1, kTable = 2, kPayload = 3 };

enum class TableCompressor : std::uint8_t { kNone = 0, kDeflate = 1 };

struct ContainerHeader {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::uint8_t depth = 16;
  SampleMapping mapping;
  FileFormat source_format = FileFormat::kPfm;
  std::uint8_t quality = 80;
  TmoParams tmo;
  std::array<std::uint16_t, 256> inverse_tone{};
  ColorTransform transform = ColorTransform::kNone;
  std::uint32_t epsilon = 1;
  std::uint32_t delta = 0;
  Parity parity = Parity::kOdd;
  std::array<std::int32_t, 3> bias{};
  std::array<std::uint8_t, 3> domain_bits{};
  std::array<LosslessCodecId, 3> codecs{};
  TableCompressor table_compressor = TableCompressor::kDeflate;

  bool operator==(const ContainerHeader&) const = default;
};

Bytes serialize_header(const ContainerHeader& h);
ContainerHeader parse_header(ByteView data);

struct Container {
  Bytes base;  // complete baseline JPEG stream, SOI..EOI
  ContainerHeader header;
  std::array<Bytes, 3> tables;    // encode_table output per plane
  std::array<Bytes, 3> payloads;  // encode_plane output per plane

  bool operator==(const Container&) const = default;
};

// DPCM over a strictly increasing table: first value verbatim, then the
// (strictly positive) successive differences.
std::vector<std::uint32_t> dpcm_encode(std::span<const std::uint32_t> table);
std::vector<std::uint32_t> dpcm_decode(std::span<const std::uint32_t> deltas);

// Unpacking table -> DPCM -> LEB128 varints -> general-purpose compressor.
// Throws a usage error if the table is not strictly increasing.
Bytes encode_table(std::span<const std::uint32_t> table,
                   TableCompressor compressor = TableCompressor::kDeflate);
inline Bytes encode_table(const ZsqCodebook& cb,
                          TableCompressor compressor = TableCompressor::kDeflate) {
  return encode_table(cb.unpacking_table(), compressor);
}
std::vector<std::uint32_t> decode_table(ByteView data);

Bytes mux(const Container& c);
// Throws a format error if no ZSQ0 header is present and an integrity error
// for gaps, duplicates, length or checksum mismatches.
Container demux(ByteView data);

// Deletes every APP11 segment ahead of the first SOS.
Bytes strip_app11(ByteView data);

struct SectionSizes {
  std::size_t base = 0;     // bytes outside ZSQ0 segments
  std::size_t header = 0;   // ZSQ0 header segments, marker and length included
  std::size_t tables = 0;   // ZSQ0 table segments
  std::size_t payload = 0;  // ZSQ0 payload segments
  std::size_t total() const { return base + header + tables + payload; }
};
SectionSizes section_sizes(ByteView data);

struct ChunkInfo {
  std::size_t offset = 0;  // of the 0xFF marker byte
  std::size_t segment_size = 0;
  BoxKind kind = BoxKind::kHeader;
  std::uint8_t plane = 0;
  std::uint16_t seq = 0;
  std::uint16_t count = 0;
  std::uint32_t total_len = 0;
  std::uint32_t crc = 0;
};
std::vector<ChunkInfo> chunk_map(ByteView data);

const char* to_string(BoxKind kind);

}  // namespace hdrzsq
