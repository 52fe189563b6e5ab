#include <doctest.h>

#include <algorithm>
#include <functional>
#include <random>

#include "hdrzsq/basejpeg.hpp"
#include "hdrzsq/container.hpp"
#include "hdrzsq/error.hpp"
#include "jpeg_oracle.hpp"

using namespace hdrzsq;

namespace {

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::kIo;  // nothing thrown
}

Bytes random_bytes(std::mt19937_64& rng, std::size_t n) {
  Bytes b(n);
  for (auto& v : b) v = static_cast<std::uint8_t>(rng());
  return b;
}

Container sample_container(std::mt19937_64& rng, std::size_t payload_size) {
  LdrImage ldr(24, 16);
  for (auto& p : ldr.planes) {
    for (auto& v : p.data) v = static_cast<std::uint8_t>(rng());
  }
  Container c;
  c.base = encode_base(ldr, JpegQuality(75));
  c.header.width = 24;
  c.header.height = 16;
  c.header.depth = 12;
  c.header.mapping = SampleMapping::integer();
  c.header.source_format = FileFormat::kPnm;
  c.header.tmo = {1.5, 0.4, 3000};
  for (int v = 0; v < 256; ++v) c.header.inverse_tone[v] = static_cast<std::uint16_t>(v * 16);
  c.header.transform = ColorTransform::kReversible;
  c.header.epsilon = 5;
  c.header.delta = 2;
  c.header.parity = Parity::kOdd;
  c.header.bias = {100, -3, 0};
  c.header.domain_bits = {13, 14, 2};
  c.header.codecs = {LosslessCodecId::kRaw, LosslessCodecId::kPredictiveDeflate,
                     LosslessCodecId::kPredictiveDeflate};
  for (int p = 0; p < 3; ++p) {
    c.tables[p] = encode_table(std::vector<std::uint32_t>{1, 5, 9, 200u + p});
    c.payloads[p] = random_bytes(rng, p == 1 ? payload_size : 50 + p);
  }
  return c;
}

// The file cut into [prefix][APP11 segments...][suffix].
struct Pieces {
  Bytes prefix, suffix;
  std::vector<Bytes> segments;
  Bytes join() const {
    Bytes out = prefix;
    for (const auto& s : segments) out.insert(out.end(), s.begin(), s.end());
    out.insert(out.end(), suffix.begin(), suffix.end());
    return out;
  }
};

Pieces split(const Bytes& file) {
  const auto map = chunk_map(file);
  Pieces p;
  p.prefix.assign(file.begin(), file.begin() + map.front().offset);
  for (const auto& ch : map) {
    p.segments.emplace_back(file.begin() + ch.offset, file.begin() + ch.offset + ch.segment_size);
  }
  const auto& last = map.back();
  p.suffix.assign(file.begin() + last.offset + last.segment_size, file.end());
  return p;
}

}  // namespace

TEST_CASE("DPCM of a monotone table") {
  const std::vector<std::uint32_t> t{4, 5, 9, 100};
  CHECK(dpcm_encode(t) == std::vector<std::uint32_t>{4, 1, 4, 91});
  CHECK(dpcm_decode(dpcm_encode(t)) == t);
  CHECK(dpcm_encode(std::vector<std::uint32_t>{}).empty());
  CHECK(kind_of([] { dpcm_encode(std::vector<std::uint32_t>{3, 3}); }) == ErrorKind::kUsage);
  CHECK(kind_of([] { dpcm_encode(std::vector<std::uint32_t>{3, 2}); }) == ErrorKind::kUsage);
}

TEST_CASE("table coding round trip") {
  std::mt19937_64 rng(16);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<std::uint32_t> t;
    std::uint32_t v = static_cast<std::uint32_t>(rng() % 1000);
    const std::size_t n = 1 + rng() % 300;
    for (std::size_t i = 0; i < n; ++i) {
      t.push_back(v);
      v += 1 + static_cast<std::uint32_t>(rng() % (trial % 2 ? 3 : 900));
    }
    for (auto comp : {TableCompressor::kNone, TableCompressor::kDeflate}) {
      REQUIRE(decode_table(encode_table(t, comp)) == t);
    }
  }
  Bytes bad = encode_table(std::vector<std::uint32_t>{1, 2, 3});
  bad[0] = 7;
  CHECK(kind_of([&] { decode_table(bad); }) == ErrorKind::kFormat);
}

TEST_CASE("header round trip and validation") {
  std::mt19937_64 rng(17);
  const Container c = sample_container(rng, 10);
  const Bytes h = serialize_header(c.header);
  CHECK(parse_header(h) == c.header);
  Bytes bad = h;
  bad.push_back(0);
  CHECK(kind_of([&] { parse_header(bad); }) == ErrorKind::kFormat);
  ContainerHeader wrong = c.header;
  wrong.delta = 1;  // eps 5 implies delta 2
  CHECK(kind_of([&] { parse_header(serialize_header(wrong)); }) == ErrorKind::kFormat);
  CHECK(kind_of([&] { parse_header(Bytes(h.begin(), h.begin() + 9)); }) == ErrorKind::kFormat);
}

TEST_CASE("mux and demux") {
  std::mt19937_64 rng(18);
  const Container c = sample_container(rng, 200 * 1024);
  const Bytes file = mux(c);
  CHECK(demux(file) == c);
  CHECK(strip_app11(file) == c.base);

  // 200 KB in 65514-byte chunks -> 4 chunks, numbered 0..3.
  std::vector<std::uint16_t> seqs;
  for (const auto& ch : chunk_map(file)) {
    CHECK(ch.segment_size <= kMaxSegmentPayload + 4);  // marker and length field
    if (ch.kind == BoxKind::kPayload && ch.plane == 1) {
      seqs.push_back(ch.seq);
      CHECK(ch.count == 4);
    }
  }
  CHECK(seqs == std::vector<std::uint16_t>{0, 1, 2, 3});

  const SectionSizes s = section_sizes(file);
  CHECK(s.total() == file.size());
  CHECK(s.base == c.base.size());

  // Layout: SOI, APP0, then the header box.
  CHECK(file[0] == 0xFF);
  CHECK(file[1] == 0xD8);
  CHECK(chunk_map(file).front().kind == BoxKind::kHeader);
  CHECK(chunk_map(file).front().offset == 20);

  // A legacy decoder sees only the base layer.
  CHECK(oracle::libjpeg_decode(file) == oracle::libjpeg_decode(c.base));
  CHECK(decode_base(file) == decode_base(c.base));
}

TEST_CASE("reassembly ignores segment order") {
  std::mt19937_64 rng(19);
  const Container c = sample_container(rng, 150 * 1024);
  Pieces p = split(mux(c));
  for (int trial = 0; trial < 10; ++trial) {
    std::shuffle(p.segments.begin(), p.segments.end(), rng);
    CHECK(demux(p.join()) == c);
  }
}

TEST_CASE("damaged containers") {
  std::mt19937_64 rng(20);
  const Container c = sample_container(rng, 140 * 1024);
  const Bytes file = mux(c);
  const Pieces p = split(file);

  Pieces gap = p;
  gap.segments.erase(gap.segments.begin() + 6);  // a payload chunk
  CHECK(kind_of([&] { demux(gap.join()); }) == ErrorKind::kIntegrity);

  Pieces dup = p;
  dup.segments.push_back(p.segments[6]);
  CHECK(kind_of([&] { demux(dup.join()); }) == ErrorKind::kIntegrity);

  Pieces flip = p;
  flip.segments[7][100] ^= 0x01;
  CHECK(kind_of([&] { demux(flip.join()); }) == ErrorKind::kIntegrity);

  Pieces no_table = p;
  no_table.segments.erase(no_table.segments.begin() + 2);
  CHECK(kind_of([&] { demux(no_table.join()); }) == ErrorKind::kIntegrity);

  CHECK(kind_of([&] { demux(c.base); }) == ErrorKind::kFormat);
  CHECK(kind_of([&] { demux(Bytes{1, 2, 3}); }) == ErrorKind::kFormat);
  CHECK(kind_of([&] { demux(Bytes(file.begin(), file.begin() + 30)); }) == ErrorKind::kFormat);

  Container twice = c;
  twice.base = file;
  CHECK(kind_of([&] { mux(twice); }) == ErrorKind::kUsage);
}
