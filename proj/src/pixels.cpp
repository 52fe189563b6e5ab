#include "hdrzsq/pixels.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "hdrzsq/error.hpp"

namespace hdrzsq {

std::uint16_t float_to_half_bits(float value) {
  return Eigen::numext::bit_cast<std::uint16_t>(Eigen::half(value));
}

float half_bits_to_float(std::uint16_t bits) {
  return static_cast<float>(Eigen::numext::bit_cast<Eigen::half>(bits));
}

double SampleMapping::linear(std::uint32_t x) const {
  if (kind == MappingKind::kHalf) {
    return half_bits_to_float(
        static_cast<std::uint16_t>(std::min<std::uint32_t>(x, kMaxFiniteHalfBits)));
  }
  return static_cast<double>(x);
}

std::uint16_t SampleMapping::to_sample(float value) const {
  if (!std::isfinite(value)) fail(ErrorKind::kFormat, "non-finite float sample");
  if (value <= 0.0f) return 0;  // also folds -0.0
  switch (kind) {
    case MappingKind::kHalf: {
      std::uint16_t bits = float_to_half_bits(value);
      return std::min(bits, kMaxFiniteHalfBits);
    }
    case MappingKind::kFixed:
    case MappingKind::kInteger: {
      double v = std::floor(static_cast<double>(value) * scale + 0.5);
      return static_cast<std::uint16_t>(std::clamp(v, 0.0, 65535.0));
    }
  }
  return 0;
}

float SampleMapping::to_float(std::uint16_t x) const {
  switch (kind) {
    case MappingKind::kHalf:
      return half_bits_to_float(std::min(x, kMaxFiniteHalfBits));
    case MappingKind::kFixed:
      return static_cast<float>(static_cast<double>(x) / scale);
    case MappingKind::kInteger:
      return static_cast<float>(x);
  }
  return 0.0f;
}

SampleMapping parse_mapping(const std::string& text) {
  if (text == "half") return SampleMapping::half();
  if (text == "integer") return SampleMapping::integer();
  if (text.rfind("fixed:", 0) == 0) {
    double scale = 0.0;
    try {
      scale = std::stod(text.substr(6));
    } catch (const std::exception&) {
      fail(ErrorKind::kUsage, "bad fixed-point scale in mapping '" + text + "'");
    }
    if (!(scale > 0.0) || !std::isfinite(scale)) {
      fail(ErrorKind::kUsage, "fixed-point scale must be positive");
    }
    return SampleMapping::fixed(scale);
  }
  fail(ErrorKind::kUsage, "unknown mapping '" + text + "' (half, fixed:<scale>, integer)");
}

std::string to_string(const SampleMapping& m) {
  switch (m.kind) {
    case MappingKind::kHalf:
      return "half";
    case MappingKind::kInteger:
      return "integer";
    case MappingKind::kFixed: {
      std::ostringstream os;
      os << "fixed:" << m.scale;
      return os.str();
    }
  }
  return "?";
}

HdrImage::HdrImage(std::size_t w, std::size_t h, unsigned d, SampleMapping m)
    : width(w), height(h), depth(d), mapping(m) {
  for (auto& p : planes) p = Plane<std::uint16_t>(w, h);
}

std::uint32_t HdrImage::max_sample() const {
  std::uint32_t full = (1u << depth) - 1;
  return mapping.kind == MappingKind::kHalf ? std::min<std::uint32_t>(full, kMaxFiniteHalfBits)
                                            : full;
}

void HdrImage::validate() const {
  if (width == 0 || height == 0) fail(ErrorKind::kUsage, "image has zero size");
  if (depth < 9 || depth > 16) {
    fail(ErrorKind::kUsage, "sample depth " + std::to_string(depth) +
                                " outside [9, 16]");
  }
  const std::uint32_t limit = max_sample();
  for (const auto& p : planes) {
    if (p.width != width || p.height != height || p.data.size() != width * height) {
      fail(ErrorKind::kUsage, "plane dimensions differ from image dimensions");
    }
    for (std::uint16_t s : p.data) {
      if (s > limit) fail(ErrorKind::kUsage, "sample exceeds the declared depth");
    }
  }
}

LdrImage::LdrImage(std::size_t w, std::size_t h) : width(w), height(h) {
  for (auto& p : planes) p = Plane<std::uint8_t>(w, h);
}

namespace {

std::string lower_ext(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext;
}

// Whitespace-separated header tokens for PNM/PFM, skipping '#' comments.
class HeaderTokens {
 public:
  explicit HeaderTokens(std::span<const std::uint8_t> data) : data_(data) {}

  std::string next() {
    skip_space();
    std::string tok;
    while (pos_ < data_.size() && !std::isspace(data_[pos_])) {
      tok.push_back(static_cast<char>(data_[pos_++]));
    }
    if (tok.empty()) fail(ErrorKind::kFormat, "truncated image header");
    return tok;
  }

  long long next_int() {
    std::string tok = next();
    try {
      std::size_t used = 0;
      long long v = std::stoll(tok, &used);
      if (used != tok.size()) throw std::invalid_argument(tok);
      return v;
    } catch (const std::exception&) {
      fail(ErrorKind::kFormat, "bad integer '" + tok + "' in image header");
    }
  }

  // Exactly one whitespace byte separates the header from the raster.
  std::size_t raster_offset() {
    if (pos_ >= data_.size() || !std::isspace(data_[pos_])) {
      fail(ErrorKind::kFormat, "missing separator before raster");
    }
    return pos_ + 1;
  }

 private:
  void skip_space() {
    while (pos_ < data_.size()) {
      if (data_[pos_] == '#') {
        while (pos_ < data_.size() && data_[pos_] != '\n') ++pos_;
      } else if (std::isspace(data_[pos_])) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

void check_dims(long long w, long long h) {
  if (w <= 0 || h <= 0 || w > (1 << 20) || h > (1 << 20)) {
    fail(ErrorKind::kFormat, "unsupported image dimensions");
  }
}

HdrImage decode_pnm(std::span<const std::uint8_t> data) {
  HeaderTokens tok(data);
  std::string magic = tok.next();
  int channels = magic == "P6" ? 3 : magic == "P5" ? 1 : 0;
  if (channels == 0) fail(ErrorKind::kFormat, "only binary P5/P6 PNM is supported");
  long long w = tok.next_int();
  long long h = tok.next_int();
  long long maxval = tok.next_int();
  check_dims(w, h);
  if (maxval < 1 || maxval > 65535) fail(ErrorKind::kFormat, "PNM maxval out of range");
  if (maxval < 256) {
    fail(ErrorKind::kFormat, "8-bit PNM is already low dynamic range");
  }
  std::size_t off = tok.raster_offset();
  const std::size_t count = static_cast<std::size_t>(w) * h * channels;
  if (data.size() - off < count * 2) fail(ErrorKind::kFormat, "truncated PNM raster");

  HdrImage img(w, h, static_cast<unsigned>(std::bit_width(static_cast<unsigned>(maxval))),
               SampleMapping::integer());
  const std::uint8_t* p = data.data() + off;
  for (std::size_t i = 0; i < static_cast<std::size_t>(w) * h; ++i) {
    for (int c = 0; c < 3; ++c) {
      int src = channels == 3 ? c : 0;
      const std::uint8_t* s = p + (i * channels + src) * 2;
      std::uint16_t v = static_cast<std::uint16_t>((s[0] << 8) | s[1]);
      if (v > maxval) fail(ErrorKind::kFormat, "PNM sample exceeds maxval");
      img.planes[c].data[i] = v;
    }
  }
  return img;
}

std::vector<std::uint8_t> encode_pnm(const HdrImage& img) {
  std::ostringstream head;
  head << "P6\n" << img.width << ' ' << img.height << '\n'
       << ((1u << img.depth) - 1) << '\n';
  std::string h = head.str();
  std::vector<std::uint8_t> out(h.begin(), h.end());
  out.reserve(out.size() + img.width * img.height * 6);
  for (std::size_t i = 0; i < img.width * img.height; ++i) {
    for (int c = 0; c < 3; ++c) {
      std::uint16_t v = img.planes[c].data[i];
      out.push_back(static_cast<std::uint8_t>(v >> 8));
      out.push_back(static_cast<std::uint8_t>(v));
    }
  }
  return out;
}

HdrImage make_float_image(std::size_t w, std::size_t h, SampleMapping mapping) {
  if (mapping.kind == MappingKind::kInteger) mapping = SampleMapping::fixed(1.0);
  return HdrImage(w, h, 16, mapping);
}

HdrImage decode_pfm(std::span<const std::uint8_t> data, SampleMapping mapping) {
  HeaderTokens tok(data);
  std::string magic = tok.next();
  int channels = magic == "PF" ? 3 : magic == "Pf" ? 1 : 0;
  if (channels == 0) fail(ErrorKind::kFormat, "bad PFM magic");
  long long w = tok.next_int();
  long long h = tok.next_int();
  check_dims(w, h);
  std::string scale_tok = tok.next();
  double scale = 0.0;
  try {
    scale = std::stod(scale_tok);
  } catch (const std::exception&) {
    fail(ErrorKind::kFormat, "bad PFM scale");
  }
  if (scale == 0.0 || !std::isfinite(scale)) fail(ErrorKind::kFormat, "bad PFM scale");
  const bool little = scale < 0.0;
  std::size_t off = tok.raster_offset();
  const std::size_t count = static_cast<std::size_t>(w) * h * channels;
  if (data.size() - off < count * 4) fail(ErrorKind::kFormat, "truncated PFM raster");

  HdrImage img = make_float_image(w, h, mapping);
  const std::uint8_t* p = data.data() + off;
  for (long long row = 0; row < h; ++row) {
    // PFM stores the bottom row first.
    const std::size_t y = static_cast<std::size_t>(h - 1 - row);
    for (long long x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        int src = channels == 3 ? c : 0;
        const std::uint8_t* s = p + ((row * w + x) * channels + src) * 4;
        std::uint32_t bits = little ? (std::uint32_t{s[0]} | std::uint32_t{s[1]} << 8 |
                                       std::uint32_t{s[2]} << 16 | std::uint32_t{s[3]} << 24)
                                    : (std::uint32_t{s[3]} | std::uint32_t{s[2]} << 8 |
                                       std::uint32_t{s[1]} << 16 | std::uint32_t{s[0]} << 24);
        img.planes[c].at(x, y) = img.mapping.to_sample(std::bit_cast<float>(bits));
      }
    }
  }
  return img;
}

std::vector<std::uint8_t> encode_pfm(const HdrImage& img) {
  std::ostringstream head;
  head << "PF\n" << img.width << ' ' << img.height << "\n-1.0\n";
  std::string h = head.str();
  std::vector<std::uint8_t> out(h.begin(), h.end());
  out.reserve(out.size() + img.width * img.height * 12);
  for (std::size_t row = 0; row < img.height; ++row) {
    const std::size_t y = img.height - 1 - row;
    for (std::size_t x = 0; x < img.width; ++x) {
      for (int c = 0; c < 3; ++c) {
        auto bits = std::bit_cast<std::uint32_t>(img.mapping.to_float(img.planes[c].at(x, y)));
        for (int b = 0; b < 4; ++b) out.push_back(static_cast<std::uint8_t>(bits >> (8 * b)));
      }
    }
  }
  return out;
}

// Radiance RGBE: mantissa * 2^(exponent - 136).
void rgbe_to_float(const std::uint8_t* rgbe, float out[3]) {
  if (rgbe[3] == 0) {
    out[0] = out[1] = out[2] = 0.0f;
    return;
  }
  const double f = std::ldexp(1.0, static_cast<int>(rgbe[3]) - 136);
  for (int c = 0; c < 3; ++c) out[c] = static_cast<float>(rgbe[c] * f);
}

void float_to_rgbe(const float in[3], std::uint8_t* rgbe) {
  const double v = std::max({in[0], in[1], in[2]});
  if (v < 1e-32) {
    rgbe[0] = rgbe[1] = rgbe[2] = rgbe[3] = 0;
    return;
  }
  int e = 0;
  const double m = std::frexp(v, &e) * 256.0 / v;
  for (int c = 0; c < 3; ++c) {
    rgbe[c] = static_cast<std::uint8_t>(std::clamp(in[c] * m, 0.0, 255.0));
  }
  rgbe[3] = static_cast<std::uint8_t>(e + 128);
}

HdrImage decode_rgbe(std::span<const std::uint8_t> data, SampleMapping mapping) {
  std::size_t pos = 0;
  auto read_line = [&]() {
    std::string line;
    while (pos < data.size() && data[pos] != '\n') line.push_back(static_cast<char>(data[pos++]));
    if (pos >= data.size()) fail(ErrorKind::kFormat, "truncated Radiance header");
    ++pos;
    return line;
  };
  std::string first = read_line();
  if (first.rfind("#?", 0) != 0) fail(ErrorKind::kFormat, "missing Radiance signature");
  for (;;) {
    std::string line = read_line();
    if (line.empty()) break;
    if (line.rfind("FORMAT=", 0) == 0 && line != "FORMAT=32-bit_rle_rgbe") {
      fail(ErrorKind::kFormat, "unsupported Radiance pixel format " + line.substr(7));
    }
  }
  std::istringstream res(read_line());
  std::string ya, xa;
  long long h = 0, w = 0;
  res >> ya >> h >> xa >> w;
  if (!res || ya != "-Y" || xa != "+X") {
    fail(ErrorKind::kFormat, "unsupported Radiance resolution string");
  }
  check_dims(w, h);

  HdrImage img = make_float_image(w, h, mapping);
  std::vector<std::uint8_t> scan(static_cast<std::size_t>(w) * 4);
  auto need = [&](std::size_t n) {
    if (data.size() - pos < n) fail(ErrorKind::kFormat, "truncated Radiance raster");
  };
  for (long long y = 0; y < h; ++y) {
    need(4);
    const bool rle = w >= 8 && w < 0x8000 && data[pos] == 2 && data[pos + 1] == 2 &&
                     !(data[pos + 2] & 0x80);
    if (rle) {
      if (((data[pos + 2] << 8) | data[pos + 3]) != w) {
        fail(ErrorKind::kFormat, "Radiance scanline width mismatch");
      }
      pos += 4;
      for (int c = 0; c < 4; ++c) {
        long long x = 0;
        while (x < w) {
          need(2);
          int count = data[pos++];
          if (count > 128) {
            count -= 128;
            if (x + count > w) fail(ErrorKind::kFormat, "bad Radiance run length");
            std::uint8_t v = data[pos++];
            for (int k = 0; k < count; ++k) scan[(x++) * 4 + c] = v;
          } else {
            if (count == 0 || x + count > w) fail(ErrorKind::kFormat, "bad Radiance run length");
            need(count);
            for (int k = 0; k < count; ++k) scan[(x++) * 4 + c] = data[pos++];
          }
        }
      }
    } else {
      // Flat pixels, possibly with old-style (1,1,1,n) repeat codes.
      long long x = 0;
      int shift = 0;
      while (x < w) {
        need(4);
        const std::uint8_t* px = data.data() + pos;
        pos += 4;
        if (px[0] == 1 && px[1] == 1 && px[2] == 1) {
          if (x == 0) fail(ErrorKind::kFormat, "Radiance repeat code at scanline start");
          long long n = static_cast<long long>(px[3]) << shift;
          if (x + n > w) fail(ErrorKind::kFormat, "bad Radiance repeat count");
          for (long long k = 0; k < n; ++k, ++x) {
            std::memcpy(&scan[x * 4], &scan[(x - 1) * 4], 4);
          }
          shift += 8;
        } else {
          std::memcpy(&scan[x * 4], px, 4);
          ++x;
          shift = 0;
        }
      }
    }
    for (long long x = 0; x < w; ++x) {
      float rgb[3];
      rgbe_to_float(&scan[x * 4], rgb);
      for (int c = 0; c < 3; ++c) img.planes[c].at(x, y) = img.mapping.to_sample(rgb[c]);
    }
  }
  return img;
}

void write_rle_channel(std::vector<std::uint8_t>& out, const std::uint8_t* src, std::size_t n) {
  std::size_t i = 0;
  while (i < n) {
    std::size_t run = 1;
    while (i + run < n && run < 127 && src[i + run] == src[i]) ++run;
    if (run >= 3) {
      out.push_back(static_cast<std::uint8_t>(128 + run));
      out.push_back(src[i]);
      i += run;
      continue;
    }
    // Literal block up to the next run of 3 or more.
    std::size_t start = i;
    std::size_t len = 0;
    while (i < n && len < 128) {
      if (i + 2 < n && src[i] == src[i + 1] && src[i] == src[i + 2]) break;
      ++i;
      ++len;
    }
    out.push_back(static_cast<std::uint8_t>(len));
    out.insert(out.end(), src + start, src + start + len);
  }
}

std::vector<std::uint8_t> encode_rgbe(const HdrImage& img) {
  std::ostringstream head;
  head << "#?RADIANCE\nFORMAT=32-bit_rle_rgbe\n\n-Y " << img.height << " +X "
       << img.width << '\n';
  std::string h = head.str();
  std::vector<std::uint8_t> out(h.begin(), h.end());
  const std::size_t w = img.width;
  const bool rle = w >= 8 && w < 0x8000;
  std::vector<std::uint8_t> scan(w * 4);
  std::vector<std::uint8_t> channel(w);
  for (std::size_t y = 0; y < img.height; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      float rgb[3];
      for (int c = 0; c < 3; ++c) rgb[c] = img.mapping.to_float(img.planes[c].at(x, y));
      float_to_rgbe(rgb, &scan[x * 4]);
    }
    if (!rle) {
      out.insert(out.end(), scan.begin(), scan.end());
      continue;
    }
    out.push_back(2);
    out.push_back(2);
    out.push_back(static_cast<std::uint8_t>(w >> 8));
    out.push_back(static_cast<std::uint8_t>(w & 0xFF));
    for (int c = 0; c < 4; ++c) {
      for (std::size_t x = 0; x < w; ++x) channel[x] = scan[x * 4 + c];
      write_rle_channel(out, channel.data(), w);
    }
  }
  return out;
}

}  // namespace

FileFormat format_from_extension(const std::filesystem::path& path) {
  const std::string ext = lower_ext(path);
  if (ext == ".pfm") return FileFormat::kPfm;
  if (ext == ".hdr" || ext == ".rgbe" || ext == ".pic") return FileFormat::kRgbe;
  if (ext == ".ppm" || ext == ".pgm" || ext == ".pnm") return FileFormat::kPnm;
  fail(ErrorKind::kUsage, "cannot infer image format from extension '" + ext + "'");
}

FileFormat sniff_format(std::span<const std::uint8_t> data) {
  if (data.size() >= 2 && data[0] == 'P') {
    if (data[1] == 'F' || data[1] == 'f') return FileFormat::kPfm;
    if (data[1] == '5' || data[1] == '6') return FileFormat::kPnm;
  }
  if (data.size() >= 2 && data[0] == '#' && data[1] == '?') return FileFormat::kRgbe;
  fail(ErrorKind::kFormat, "unsupported image format (expected PFM, Radiance RGBE or PNM)");
}

HdrImage decode_hdr(std::span<const std::uint8_t> data, SampleMapping mapping) {
  HdrImage img;
  switch (sniff_format(data)) {
    case FileFormat::kPfm:
      img = decode_pfm(data, mapping);
      break;
    case FileFormat::kRgbe:
      img = decode_rgbe(data, mapping);
      break;
    case FileFormat::kPnm:
      img = decode_pnm(data);
      break;
  }
  img.validate();
  return img;
}

HdrImage load_hdr(const std::filesystem::path& path, SampleMapping mapping) {
  return decode_hdr(read_file(path), mapping);
}

std::vector<std::uint8_t> encode_hdr(const HdrImage& img, FileFormat format) {
  img.validate();
  switch (format) {
    case FileFormat::kPfm:
      return encode_pfm(img);
    case FileFormat::kRgbe:
      return encode_rgbe(img);
    case FileFormat::kPnm:
      return encode_pnm(img);
  }
  return {};
}

void store_hdr(const HdrImage& img, const std::filesystem::path& path) {
  write_file_atomic(path, encode_hdr(img, format_from_extension(path)));
}

void store_ldr_ppm(const LdrImage& img, const std::filesystem::path& path) {
  std::ostringstream head;
  head << "P6\n" << img.width << ' ' << img.height << "\n255\n";
  std::string h = head.str();
  std::vector<std::uint8_t> out(h.begin(), h.end());
  for (std::size_t i = 0; i < img.width * img.height; ++i) {
    for (int c = 0; c < 3; ++c) out.push_back(img.planes[c].data[i]);
  }
  write_file_atomic(path, out);
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kIo, "cannot open " + path.string());
  std::vector<std::uint8_t> data((std::istreambuf_iterator<char>(in)),
                                 std::istreambuf_iterator<char>());
  if (in.bad()) fail(ErrorKind::kIo, "read error on " + path.string());
  return data;
}

void write_file_atomic(const std::filesystem::path& path,
                       std::span<const std::uint8_t> data) {
  std::filesystem::path tmp = path;
  tmp += ".partial";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::kIo, "cannot create " + tmp.string());
    out.write(reinterpret_cast<const char*>(data.data()),
              static_cast<std::streamsize>(data.size()));
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      fail(ErrorKind::kIo, "write error on " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    fail(ErrorKind::kIo, "cannot rename into " + path.string());
  }
}

}  // namespace hdrzsq
