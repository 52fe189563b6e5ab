#include "hdrzsq/byte_io.hpp"

#include <zlib.h>

#include <bit>
#include <limits>
#include <string>

namespace hdrzsq {

void ByteWriter::f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

double ByteReader::f64() { return std::bit_cast<double>(u64()); }

Bytes deflate_bytes(ByteView raw) {
  uLongf bound = compressBound(static_cast<uLong>(raw.size()));
  Bytes out(bound);
  int rc = compress2(out.data(), &bound, raw.data(),
                     static_cast<uLong>(raw.size()), Z_BEST_COMPRESSION);
  if (rc != Z_OK) fail(ErrorKind::kFormat, "deflate failed");
  out.resize(bound);
  return out;
}

Bytes inflate_bytes(ByteView packed, std::size_t expected_size) {
  if (expected_size > std::numeric_limits<uLong>::max()) {
    fail(ErrorKind::kFormat, "inflate: declared size too large");
  }
  Bytes out(expected_size);
  uLongf size = static_cast<uLongf>(expected_size);
  int rc = uncompress(out.data(), &size, packed.data(),
                      static_cast<uLong>(packed.size()));
  if (rc != Z_OK || size != expected_size) {
    fail(ErrorKind::kIntegrity,
         "inflate: corrupt compressed data (zlib code " + std::to_string(rc) +
             ")");
  }
  return out;
}

std::uint32_t crc32_of(ByteView data) {
  uLong crc = crc32(0L, Z_NULL, 0);
  return static_cast<std::uint32_t>(
      crc32(crc, data.data(), static_cast<uInt>(data.size())));
}

}  // namespace hdrzsq
