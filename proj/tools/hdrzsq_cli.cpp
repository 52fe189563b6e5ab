// hdrzsq: encode, decode, inspect and sweep two-layer HDR files.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>

#include "hdrzsq/codec.hpp"
#include "hdrzsq/error.hpp"

namespace {

using namespace hdrzsq;

enum Exit { kOk = 0, kUsageExit = 1, kFormatExit = 2, kIntegrityExit = 3 };

struct CodingFlags {
  std::uint32_t delta = 1;
  std::string parity = "odd";
  int quality = 80;
  bool no_ct = false;
  std::string mapping = "half";
  std::string codec = "predictive-deflate";
  std::string subsampling = "444";
};

void add_coding_flags(CLI::App* cmd, CodingFlags& f, bool with_delta) {
  if (with_delta) {
    cmd->add_option("--delta", f.delta, "max per-sample error of each coded component")
        ->capture_default_str();
  }
  cmd->add_option("--parity", f.parity, "step size parity: eps = 2*delta (even) or 2*delta+1")
      ->check(CLI::IsMember({"odd", "even"}))
      ->capture_default_str();
  cmd->add_option("--quality", f.quality, "base layer JPEG quality")
      ->check(CLI::Range(1, 100))
      ->capture_default_str();
  cmd->add_flag("--no-ct", f.no_ct, "code RGB residuals directly (error <= delta per sample)");
  cmd->add_option("--mapping", f.mapping, "float to sample mapping: half, integer, fixed:<scale>")
      ->capture_default_str();
  cmd->add_option("--codec", f.codec, "index plane codec: raw, predictive-deflate")
      ->capture_default_str();
  cmd->add_option("--subsampling", f.subsampling, "base layer chroma: 444 or 420")
      ->check(CLI::IsMember({"444", "420"}))
      ->capture_default_str();
}

EncodeOptions to_options(const CodingFlags& f) {
  EncodeOptions o;
  o.delta = f.delta;
  o.parity = f.parity == "even" ? Parity::kEven : Parity::kOdd;
  o.quality = f.quality;
  o.transform = f.no_ct ? ColorTransform::kNone : ColorTransform::kReversible;
  o.codec = parse_codec(f.codec);
  o.subsampling = f.subsampling == "420" ? ChromaSubsampling::k420 : ChromaSubsampling::k444;
  return o;
}

void emit_csv(const std::string& path, const std::vector<RdPoint>& points) {
  if (path.empty() || path == "-") {
    write_csv(std::cout, points);
    return;
  }
  std::ostringstream os;
  write_csv(os, points);
  const std::string text = os.str();
  write_file_atomic(path, ByteView(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kFormat:
      return kFormatExit;
    case ErrorKind::kIntegrity:
      return kIntegrityExit;
    default:
      return kUsageExit;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-layer near-lossless HDR codec with a baseline JPEG base layer"};
  app.require_subcommand(1);

  CodingFlags enc_flags;
  std::string enc_in, enc_out, enc_csv;
  auto* enc = app.add_subcommand("encode", "HDR image -> container");
  enc->add_option("input", enc_in, "PFM, Radiance .hdr or 16-bit PPM/PGM")->required();
  enc->add_option("output", enc_out, "container (.jpg)")->required();
  add_coding_flags(enc, enc_flags, true);
  enc->add_option("--csv", enc_csv, "write the measured point as CSV to this file ('-' for stdout)");

  std::string dec_in, dec_out;
  auto* dec = app.add_subcommand("decode", "container -> HDR image");
  dec->add_option("input", dec_in)->required();
  dec->add_option("output", dec_out, "format follows the extension (.pfm, .hdr, .ppm)")->required();

  std::string insp_in;
  auto* insp = app.add_subcommand("inspect", "dump header, tables and chunk layout");
  insp->add_option("input", insp_in)->required();

  CodingFlags sw_flags;
  std::string sw_in, sw_csv;
  std::uint32_t delta_min = 0, delta_max = 14;
  unsigned jobs = 1;
  auto* sw = app.add_subcommand("sweep", "rate/distortion points over a delta range");
  sw->add_option("input", sw_in)->required();
  add_coding_flags(sw, sw_flags, false);
  sw->add_option("--delta-min", delta_min)->capture_default_str();
  sw->add_option("--delta-max", delta_max)->capture_default_str();
  sw->add_option("--jobs", jobs, "parallel encodes")->check(CLI::Range(1u, 256u))->capture_default_str();
  sw->add_option("--csv", sw_csv, "output file, stdout when omitted");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsageExit;
  }

  try {
    if (*enc) {
      const EncodeOptions o = to_options(enc_flags);
      const RdPoint p = encode_file(enc_in, enc_out, o, parse_mapping(enc_flags.mapping));
      std::fprintf(stderr, "eps=%u delta=%u bpp=%.4f max_abs_err=%u (bound %u) psnr=%.2f dB\n",
                   p.epsilon, p.delta, p.bpp, p.max_abs_error, p.bound, p.psnr_db);
      if (!enc_csv.empty()) emit_csv(enc_csv, {p});
    } else if (*dec) {
      decode_file(dec_in, dec_out);
    } else if (*insp) {
      std::cout << inspect(read_file(insp_in));
    } else if (*sw) {
      SweepOptions so;
      so.delta_min = delta_min;
      so.delta_max = delta_max;
      so.base = to_options(sw_flags);
      so.parity = so.base.parity;
      so.jobs = jobs;
      const HdrImage img = load_hdr(sw_in, parse_mapping(sw_flags.mapping));
      emit_csv(sw_csv, sweep(img, so));
    }
  } catch (const Error& e) {
    std::cerr << "hdrzsq: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "hdrzsq: " << e.what() << "\n";
    return kUsageExit;
  }
  return kOk;
}
