#include "hdrzsq/container.hpp"

#include <algorithm>
#include <map>
#include <string>
#include <utility>

#include "hdrzsq/error.hpp"

namespace hdrzsq {

namespace {

constexpr std::uint8_t kMagic[4] = {'Z', 'S', 'Q', '0'};

[[noreturn]] void integrity(const std::string& why) {
  fail(ErrorKind::kIntegrity, "container integrity: " + why);
}

struct Segment {
  std::size_t offset;  // of 0xFF
  std::size_t size;    // marker + length + body
  std::uint8_t marker;
  ByteView body;
};

// Marker segments from after SOI up to (not including) SOS. `rest` receives
// the offset of the SOS marker.
std::vector<Segment> header_segments(ByteView data, std::size_t& rest) {
  if (data.size() < 4 || data[0] != 0xFF || data[1] != 0xD8) {
    fail(ErrorKind::kFormat, "not a JPEG stream (missing SOI)");
  }
  std::vector<Segment> segs;
  std::size_t pos = 2;
  for (;;) {
    if (pos + 1 >= data.size() || data[pos] != 0xFF) {
      fail(ErrorKind::kFormat, "malformed JPEG marker sequence");
    }
    std::size_t m = pos + 1;
    while (m < data.size() && data[m] == 0xFF) ++m;  // fill bytes
    if (m >= data.size()) fail(ErrorKind::kFormat, "malformed JPEG marker sequence");
    const std::uint8_t marker = data[m];
    if (marker == 0xDA || marker == 0xD9) {
      rest = pos;
      return segs;
    }
    if (m + 2 >= data.size()) fail(ErrorKind::kFormat, "truncated JPEG marker segment");
    const std::size_t len = (data[m + 1] << 8) | data[m + 2];
    if (len < 2 || m + 1 + len > data.size()) {
      fail(ErrorKind::kFormat, "truncated JPEG marker segment");
    }
    segs.push_back({pos, m + 1 + len - pos, marker, data.subspan(m + 3, len - 2)});
    pos = m + 1 + len;
  }
}

bool is_zsq_box(const Segment& s) {
  return s.marker == 0xEB && s.body.size() >= kBoxHeaderSize &&
         std::equal(std::begin(kMagic), std::end(kMagic), s.body.begin());
}

ChunkInfo parse_chunk(const Segment& s) {
  ByteReader r(s.body, "APP11 box");
  r.take(4);
  const std::uint8_t version = r.u8();
  if (version != kContainerVersion) {
    fail(ErrorKind::kFormat, "unsupported container version " + std::to_string(version));
  }
  ChunkInfo c;
  c.offset = s.offset;
  c.segment_size = s.size;
  const std::uint8_t kind = r.u8();
  if (kind < 1 || kind > 3) integrity("unknown box kind " + std::to_string(kind));
  c.kind = static_cast<BoxKind>(kind);
  c.plane = r.u8();
  c.seq = r.u16();
  c.count = r.u16();
  c.total_len = r.u32();
  c.crc = r.u32();
  return c;
}

void write_box(ByteWriter& w, BoxKind kind, std::uint8_t plane, ByteView data) {
  const std::size_t count = std::max<std::size_t>(1, (data.size() + kMaxChunkData - 1) / kMaxChunkData);
  if (count > 0xFFFF) fail(ErrorKind::kUsage, "extension box too large");
  const std::uint32_t crc = crc32_of(data);
  for (std::size_t seq = 0; seq < count; ++seq) {
    const std::size_t off = seq * kMaxChunkData;
    const std::size_t len = std::min(kMaxChunkData, data.size() - off);
    w.u8(0xFF);
    w.u8(0xEB);
    w.u16(static_cast<std::uint16_t>(2 + kBoxHeaderSize + len));
    w.bytes(ByteView(kMagic, 4));
    w.u8(kContainerVersion);
    w.u8(static_cast<std::uint8_t>(kind));
    w.u8(plane);
    w.u16(static_cast<std::uint16_t>(seq));
    w.u16(static_cast<std::uint16_t>(count));
    w.u32(static_cast<std::uint32_t>(data.size()));
    w.u32(crc);
    w.bytes(data.subspan(off, len));
  }
}

}  // namespace

const char* to_string(BoxKind kind) {
  switch (kind) {
    case BoxKind::kHeader:
      return "header";
    case BoxKind::kTable:
      return "table";
    case BoxKind::kPayload:
      return "payload";
  }
  return "?";
}

Bytes serialize_header(const ContainerHeader& h) {
  ByteWriter w;
  w.u32(h.width);
  w.u32(h.height);
  w.u8(h.depth);
  w.u8(static_cast<std::uint8_t>(h.mapping.kind));
  w.f64(h.mapping.scale);
  w.u8(static_cast<std::uint8_t>(h.source_format));
  w.u8(h.quality);
  w.f64(h.tmo.exposure);
  w.f64(h.tmo.gamma);
  w.u32(h.tmo.white_point);
  for (std::uint16_t v : h.inverse_tone) w.u16(v);
  w.u8(static_cast<std::uint8_t>(h.transform));
  w.u32(h.epsilon);
  w.u32(h.delta);
  w.u8(static_cast<std::uint8_t>(h.parity));
  for (int c = 0; c < 3; ++c) {
    w.i32(h.bias[c]);
    w.u8(h.domain_bits[c]);
    w.u8(static_cast<std::uint8_t>(h.codecs[c]));
  }
  w.u8(static_cast<std::uint8_t>(h.table_compressor));
  return w.take();
}

ContainerHeader parse_header(ByteView data) {
  ByteReader r(data, "container header");
  ContainerHeader h;
  h.width = r.u32();
  h.height = r.u32();
  h.depth = r.u8();
  const std::uint8_t mapping = r.u8();
  if (mapping > 2) fail(ErrorKind::kFormat, "unknown sample mapping in header");
  h.mapping.kind = static_cast<MappingKind>(mapping);
  h.mapping.scale = r.f64();
  const std::uint8_t fmt = r.u8();
  if (fmt > 2) fail(ErrorKind::kFormat, "unknown source format in header");
  h.source_format = static_cast<FileFormat>(fmt);
  h.quality = r.u8();
  h.tmo.exposure = r.f64();
  h.tmo.gamma = r.f64();
  h.tmo.white_point = r.u32();
  for (auto& v : h.inverse_tone) v = r.u16();
  const std::uint8_t transform = r.u8();
  if (transform > 1) fail(ErrorKind::kFormat, "unknown color transform in header");
  h.transform = static_cast<ColorTransform>(transform);
  h.epsilon = r.u32();
  h.delta = r.u32();
  const std::uint8_t parity = r.u8();
  if (parity > 1) fail(ErrorKind::kFormat, "bad parity in header");
  h.parity = static_cast<Parity>(parity);
  for (int c = 0; c < 3; ++c) {
    h.bias[c] = r.i32();
    h.domain_bits[c] = r.u8();
    const std::uint8_t codec = r.u8();
    if (codec > 1) fail(ErrorKind::kFormat, "unknown lossless codec in header");
    h.codecs[c] = static_cast<LosslessCodecId>(codec);
  }
  const std::uint8_t comp = r.u8();
  if (comp > 1) fail(ErrorKind::kFormat, "unknown table compressor in header");
  h.table_compressor = static_cast<TableCompressor>(comp);
  if (!r.done()) fail(ErrorKind::kFormat, "trailing bytes in container header");
  if (h.width == 0 || h.height == 0 || h.depth < 9 || h.depth > 16 || h.epsilon == 0 ||
      h.delta != max_error_for_step(h.epsilon)) {
    fail(ErrorKind::kFormat, "inconsistent container header");
  }
  return h;
}

std::vector<std::uint32_t> dpcm_encode(std::span<const std::uint32_t> table) {
  std::vector<std::uint32_t> out(table.size());
  for (std::size_t i = 0; i < table.size(); ++i) {
    if (i > 0 && table[i] <= table[i - 1]) {
      fail(ErrorKind::kUsage, "unpacking table is not strictly increasing");
    }
    out[i] = i == 0 ? table[0] : table[i] - table[i - 1];
  }
  return out;
}

std::vector<std::uint32_t> dpcm_decode(std::span<const std::uint32_t> deltas) {
  std::vector<std::uint32_t> out(deltas.size());
  std::uint64_t acc = 0;
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    if (i > 0 && deltas[i] == 0) integrity("zero step in unpacking table");
    acc += deltas[i];
    if (acc > UINT32_MAX) integrity("unpacking table overflows");
    out[i] = static_cast<std::uint32_t>(acc);
  }
  return out;
}

Bytes encode_table(std::span<const std::uint32_t> table, TableCompressor compressor) {
  ByteWriter body;
  for (std::uint32_t d : dpcm_encode(table)) body.varint(d);
  Bytes raw = body.take();

  ByteWriter w;
  w.u8(static_cast<std::uint8_t>(compressor));
  w.u32(static_cast<std::uint32_t>(table.size()));
  w.u32(static_cast<std::uint32_t>(raw.size()));
  if (compressor == TableCompressor::kDeflate) {
    w.bytes(deflate_bytes(raw));
  } else {
    w.bytes(raw);
  }
  return w.take();
}

std::vector<std::uint32_t> decode_table(ByteView data) {
  ByteReader r(data, "unpacking table");
  const std::uint8_t comp = r.u8();
  const std::uint32_t count = r.u32();
  const std::uint32_t raw_len = r.u32();
  if (raw_len > count * std::size_t{5} || raw_len < count) {
    fail(ErrorKind::kFormat, "inconsistent unpacking table header");
  }
  Bytes raw;
  if (comp == static_cast<std::uint8_t>(TableCompressor::kDeflate)) {
    raw = inflate_bytes(r.take(r.remaining()), raw_len);
  } else if (comp == static_cast<std::uint8_t>(TableCompressor::kNone)) {
    ByteView v = r.take(raw_len);
    raw.assign(v.begin(), v.end());
    if (!r.done()) fail(ErrorKind::kFormat, "trailing bytes after unpacking table");
  } else {
    fail(ErrorKind::kFormat, "unknown table compressor id " + std::to_string(comp));
  }
  ByteReader body(raw, "unpacking table body");
  std::vector<std::uint32_t> deltas(count);
  for (auto& d : deltas) {
    const std::uint64_t v = body.varint();
    if (v > UINT32_MAX) integrity("unpacking table value overflows");
    d = static_cast<std::uint32_t>(v);
  }
  if (!body.done()) fail(ErrorKind::kFormat, "trailing bytes in unpacking table body");
  return dpcm_decode(deltas);
}

Bytes mux(const Container& c) {
  std::size_t rest = 0;
  const std::vector<Segment> segs = header_segments(c.base, rest);
  for (const Segment& s : segs) {
    if (s.marker == 0xEB) fail(ErrorKind::kUsage, "base stream already carries APP11 data");
  }
  // Extension boxes go right after SOI and a leading APP0.
  std::size_t insert = 2;
  if (!segs.empty() && segs.front().marker == 0xE0) insert = segs.front().offset + segs.front().size;

  ByteWriter w;
  w.bytes(ByteView(c.base).first(insert));
  write_box(w, BoxKind::kHeader, 0, serialize_header(c.header));
  for (std::uint8_t p = 0; p < 3; ++p) write_box(w, BoxKind::kTable, p, c.tables[p]);
  for (std::uint8_t p = 0; p < 3; ++p) write_box(w, BoxKind::kPayload, p, c.payloads[p]);
  w.bytes(ByteView(c.base).subspan(insert));
  return w.take();
}

Container demux(ByteView data) {
  std::size_t rest = 0;
  const std::vector<Segment> segs = header_segments(data, rest);

  struct Pending {
    std::uint16_t count = 0;
    std::uint32_t total_len = 0;
    std::uint32_t crc = 0;
    std::map<std::uint16_t, ByteView> chunks;
  };
  std::map<std::pair<std::uint8_t, std::uint8_t>, Pending> boxes;

  Container c;
  std::size_t copied = 0;
  for (const Segment& s : segs) {
    if (!is_zsq_box(s)) continue;
    c.base.insert(c.base.end(), data.begin() + copied, data.begin() + s.offset);
    copied = s.offset + s.size;

    const ChunkInfo info = parse_chunk(s);
    const auto key = std::make_pair(static_cast<std::uint8_t>(info.kind), info.plane);
    Pending& p = boxes[key];
    if (p.chunks.empty()) {
      p.count = info.count;
      p.total_len = info.total_len;
      p.crc = info.crc;
    } else if (p.count != info.count || p.total_len != info.total_len || p.crc != info.crc) {
      integrity(std::string("conflicting chunk headers in ") + to_string(info.kind) + " box");
    }
    if (info.seq >= info.count) integrity("chunk sequence number out of range");
    if (!p.chunks.emplace(info.seq, s.body.subspan(kBoxHeaderSize)).second) {
      integrity("duplicate chunk sequence number");
    }
  }
  c.base.insert(c.base.end(), data.begin() + copied, data.end());

  auto assemble = [&](BoxKind kind, std::uint8_t plane) -> Bytes {
    auto it = boxes.find({static_cast<std::uint8_t>(kind), plane});
    if (it == boxes.end()) {
      if (kind == BoxKind::kHeader) {
        fail(ErrorKind::kFormat, "no ZSQ0 extension data (plain JPEG?)");
      }
      integrity(std::string("missing ") + to_string(kind) + " box for plane " +
                std::to_string(plane));
    }
    const Pending& p = it->second;
    if (p.chunks.size() != p.count) {
      integrity(std::string("sequence gap in ") + to_string(kind) + " box for plane " +
                std::to_string(plane));
    }
    Bytes out;
    out.reserve(p.total_len);
    for (const auto& [seq, body] : p.chunks) out.insert(out.end(), body.begin(), body.end());
    if (out.size() != p.total_len) integrity("box length mismatch");
    if (crc32_of(out) != p.crc) {
      integrity(std::string("checksum mismatch in ") + to_string(kind) + " box for plane " +
                std::to_string(plane));
    }
    return out;
  };

  c.header = parse_header(assemble(BoxKind::kHeader, 0));
  for (std::uint8_t p = 0; p < 3; ++p) {
    c.tables[p] = assemble(BoxKind::kTable, p);
    c.payloads[p] = assemble(BoxKind::kPayload, p);
  }
  if (boxes.size() != 7) integrity("unexpected extra extension boxes");
  return c;
}

Bytes strip_app11(ByteView data) {
  std::size_t rest = 0;
  const std::vector<Segment> segs = header_segments(data, rest);
  Bytes out;
  out.reserve(data.size());
  std::size_t copied = 0;
  for (const Segment& s : segs) {
    if (s.marker != 0xEB) continue;
    out.insert(out.end(), data.begin() + copied, data.begin() + s.offset);
    copied = s.offset + s.size;
  }
  out.insert(out.end(), data.begin() + copied, data.end());
  return out;
}

std::vector<ChunkInfo> chunk_map(ByteView data) {
  std::size_t rest = 0;
  std::vector<ChunkInfo> out;
  for (const Segment& s : header_segments(data, rest)) {
    if (is_zsq_box(s)) out.push_back(parse_chunk(s));
  }
  return out;
}

SectionSizes section_sizes(ByteView data) {
  SectionSizes sizes;
  std::size_t ext = 0;
  for (const ChunkInfo& c : chunk_map(data)) {
    ext += c.segment_size;
    switch (c.kind) {
      case BoxKind::kHeader:
        sizes.header += c.segment_size;
        break;
      case BoxKind::kTable:
        sizes.tables += c.segment_size;
        break;
      case BoxKind::kPayload:
        sizes.payload += c.segment_size;
        break;
    }
  }
  sizes.base = data.size() - ext;
  return sizes;
}

}  // namespace hdrzsq
