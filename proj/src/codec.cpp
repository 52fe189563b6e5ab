#include "hdrzsq/codec.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <sstream>
#include <thread>

#include "hdrzsq/error.hpp"

namespace hdrzsq {

const char* to_string(ColorTransform t) {
  return t == ColorTransform::kNone ? "none" : "rct";
}

EncodeResult encode_image(const HdrImage& img, const EncodeOptions& options,
                          FileFormat source_format) {
  img.validate();
  const std::uint32_t epsilon = choose_step_size(options.delta, options.parity);
  const JpegQuality quality(options.quality);
  const TmoParams tmo = options.tmo.value_or(default_tmo_params(img));
  tmo.validate(img);
  const ToneCurve curve(tmo, img.mapping, img.max_sample());

  EncodeResult out;
  Container& c = out.container;
  c.base = encode_base(forward_tmo(img, curve), quality, options.subsampling);
  out.base = decode_base(c.base);

  const ResidualPlanes res = compute_residual(img, out.base, curve, options.transform);

  ContainerHeader& h = c.header;
  h.width = static_cast<std::uint32_t>(img.width);
  h.height = static_cast<std::uint32_t>(img.height);
  h.depth = static_cast<std::uint8_t>(img.depth);
  h.mapping = img.mapping;
  h.source_format = source_format;
  h.quality = static_cast<std::uint8_t>(options.quality);
  h.tmo = tmo;
  h.inverse_tone = curve.inverse_table();
  h.transform = options.transform;
  h.epsilon = epsilon;
  h.delta = max_error_for_step(epsilon);
  h.parity = options.parity;
  h.table_compressor = options.table_compressor;

  for (int p = 0; p < 3; ++p) {
    const auto& plane = res.planes[p];
    const Histogram hist = build_histogram(plane.data, res.domain_bits[p]);
    out.codebooks[p] = derive_codebook(hist, epsilon);
    out.index_planes[p] = pack(plane.data, plane.width, plane.height, out.codebooks[p]);
    c.tables[p] = encode_table(out.codebooks[p], options.table_compressor);
    c.payloads[p] = encode_plane(out.index_planes[p], options.codec);
    h.bias[p] = res.bias[p];
    h.domain_bits[p] = static_cast<std::uint8_t>(res.domain_bits[p]);
    h.codecs[p] = options.codec;
  }

  out.file = mux(c);
  out.sizes = section_sizes(out.file);
  return out;
}

DecodedImage decode_image(ByteView file) {
  Container c = demux(file);
  const ContainerHeader& h = c.header;
  LdrImage base = decode_base(c.base);
  if (base.width != h.width || base.height != h.height) {
    fail(ErrorKind::kIntegrity, "base layer dimensions disagree with the extension header");
  }
  HdrImage shape(1, 1, h.depth, h.mapping);
  const ToneCurve curve = ToneCurve::from_inverse_table(h.inverse_tone, shape.max_sample());

  std::array<std::vector<std::uint32_t>, 3> stored;
  for (int p = 0; p < 3; ++p) {
    const std::vector<std::uint32_t> table = decode_table(c.tables[p]);
    const IndexImage idx = decode_plane(c.payloads[p]);
    if (idx.width != h.width || idx.height != h.height) {
      fail(ErrorKind::kIntegrity, "index plane dimensions disagree with the header");
    }
    if (static_cast<LosslessCodecId>(c.payloads[p][0]) != h.codecs[p]) {
      fail(ErrorKind::kIntegrity, "index plane codec disagrees with the header");
    }
    stored[p] = unpack(idx, table);
  }
  DecodedImage out;
  out.image = reconstruct_hdr(stored, h.bias, h.transform, base, curve, h.depth, h.mapping);
  out.header = h;
  return out;
}

Distortion measure_distortion(const HdrImage& a, const HdrImage& b) {
  if (a.width != b.width || a.height != b.height) {
    fail(ErrorKind::kUsage, "cannot compare images of different sizes");
  }
  Distortion d;
  long double sse = 0;
  std::size_t n = 0;
  for (int c = 0; c < 3; ++c) {
    for (std::size_t i = 0; i < a.planes[c].data.size(); ++i) {
      const std::int64_t e =
          static_cast<std::int64_t>(a.planes[c].data[i]) - b.planes[c].data[i];
      d.max_abs_error = std::max(d.max_abs_error, static_cast<std::uint32_t>(std::llabs(e)));
      sse += static_cast<long double>(e * e);
      ++n;
    }
  }
  if (sse == 0) {
    d.psnr_db = std::numeric_limits<double>::infinity();
  } else {
    const double peak = a.max_sample();
    const double mse = static_cast<double>(sse / n);
    d.psnr_db = 10.0 * std::log10(peak * peak / mse);
  }
  return d;
}

RdPoint measure_encoded(const HdrImage& img, const EncodeResult& enc,
                        const EncodeOptions& options) {
  const DecodedImage dec = decode_image(enc.file);
  const Distortion dist = measure_distortion(img, dec.image);

  RdPoint p;
  p.epsilon = dec.header.epsilon;
  p.delta = dec.header.delta;
  p.q = options.quality;
  p.transform = options.transform;
  p.bpp = 8.0 * static_cast<double>(enc.file.size()) / static_cast<double>(img.width * img.height);
  p.max_abs_error = dist.max_abs_error;
  p.psnr_db = dist.psnr_db;
  p.bytes_base = enc.sizes.base;
  p.bytes_tables = enc.sizes.tables;
  p.bytes_payload = enc.sizes.header + enc.sizes.payload;
  p.bound = rgb_error_bound(options.transform, p.delta);
  return p;
}

RdPoint encode_and_measure(const HdrImage& img, const EncodeOptions& options,
                           EncodeResult* result) {
  EncodeResult enc = encode_image(img, options);
  RdPoint p = measure_encoded(img, enc, options);
  if (result) *result = std::move(enc);
  return p;
}

RdPoint encode_file(const std::filesystem::path& input, const std::filesystem::path& output,
                    const EncodeOptions& options, SampleMapping mapping) {
  const Bytes data = read_file(input);
  const HdrImage img = decode_hdr(data, mapping);
  const EncodeResult enc = encode_image(img, options, sniff_format(data));
  RdPoint p = measure_encoded(img, enc, options);
  write_file_atomic(output, enc.file);
  return p;
}

void decode_file(const std::filesystem::path& input, const std::filesystem::path& output) {
  const Bytes data = read_file(input);
  const DecodedImage dec = decode_image(data);
  store_hdr(dec.image, output);
}

std::vector<RdPoint> sweep(const HdrImage& img, const SweepOptions& options) {
  if (options.delta_min > options.delta_max) fail(ErrorKind::kUsage, "empty delta range");
  std::vector<std::uint32_t> deltas;
  for (std::uint32_t d = options.delta_min; d <= options.delta_max; ++d) {
    if (d == 0 && options.parity == Parity::kEven) continue;
    deltas.push_back(d);
  }
  if (deltas.empty()) fail(ErrorKind::kUsage, "empty delta range");

  std::vector<RdPoint> points(deltas.size());
  auto run = [&](std::size_t i) {
    EncodeOptions o = options.base;
    o.delta = deltas[i];
    o.parity = options.parity;
    points[i] = encode_and_measure(img, o);
  };

  const unsigned jobs = std::max(1u, std::min<unsigned>(options.jobs, deltas.size()));
  if (jobs == 1) {
    for (std::size_t i = 0; i < deltas.size(); ++i) run(i);
    return points;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::atomic<bool> failed{false};
  std::vector<std::thread> workers;
  for (unsigned t = 0; t < jobs; ++t) {
    workers.emplace_back([&] {
      for (std::size_t i; (i = next++) < deltas.size();) {
        try {
          run(i);
        } catch (...) {
          if (!failed.exchange(true)) error = std::current_exception();
        }
      }
    });
  }
  for (auto& w : workers) w.join();
  if (error) std::rethrow_exception(error);
  return points;
}

std::string csv_row(const RdPoint& p) {
  char psnr[32];
  if (std::isinf(p.psnr_db)) {
    std::snprintf(psnr, sizeof psnr, "inf");
  } else {
    std::snprintf(psnr, sizeof psnr, "%.4f", p.psnr_db);
  }
  char line[256];
  std::snprintf(line, sizeof line, "%u,%u,%d,%s,%.6f,%u,%s,%zu,%zu,%zu", p.epsilon, p.delta, p.q,
                to_string(p.transform), p.bpp, p.max_abs_error, psnr, p.bytes_base,
                p.bytes_tables, p.bytes_payload);
  return line;
}

void write_csv(std::ostream& out, const std::vector<RdPoint>& points) {
  out << kCsvHeader << '\n';
  for (const RdPoint& p : points) out << csv_row(p) << '\n';
}

std::string inspect(ByteView file) {
  const Container c = demux(file);
  const ContainerHeader& h = c.header;
  std::ostringstream os;
  os << "image        " << h.width << "x" << h.height << ", depth " << int{h.depth}
     << ", mapping " << to_string(h.mapping) << "\n";
  os << "base layer   q=" << int{h.quality} << ", " << c.base.size() << " bytes\n";
  os << "tone curve   exposure=" << h.tmo.exposure << " gamma=" << h.tmo.gamma
     << " white_point=" << h.tmo.white_point << "\n";
  os << "quantizer    epsilon=" << h.epsilon << " delta=" << h.delta
     << " parity=" << (h.parity == Parity::kOdd ? "odd" : "even")
     << " transform=" << to_string(h.transform) << "\n";
  for (int p = 0; p < 3; ++p) {
    const std::vector<std::uint32_t> table = decode_table(c.tables[p]);
    os << "plane " << p << "      bias=" << h.bias[p] << " domain_bits=" << int{h.domain_bits[p]}
       << " codec=" << to_string(h.codecs[p]) << " bins=" << table.size()
       << " table_bytes=" << c.tables[p].size() << " payload_bytes=" << c.payloads[p].size()
       << "\n";
  }
  os << "chunks\n";
  for (const ChunkInfo& ch : chunk_map(file)) {
    os << "  @" << ch.offset << " " << to_string(ch.kind) << "[" << int{ch.plane} << "] "
       << ch.seq + 1 << "/" << ch.count << " segment=" << ch.segment_size
       << " box_len=" << ch.total_len << "\n";
  }
  const SectionSizes s = section_sizes(file);
  os << "sections     base=" << s.base << " header=" << s.header << " tables=" << s.tables
     << " payload=" << s.payload << " total=" << s.total() << "\n";
  return os.str();
}

}  // namespace hdrzsq
