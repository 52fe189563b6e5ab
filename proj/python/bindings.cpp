#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "hdrzsq/codec.hpp"
#include "hdrzsq/error.hpp"

namespace py = pybind11;
using namespace hdrzsq;

namespace {

using U16Array = py::array_t<std::uint16_t, py::array::c_style | py::array::forcecast>;
using F32Array = py::array_t<float, py::array::c_style | py::array::forcecast>;

void check_shape(const py::array& a) {
  if (a.ndim() != 3 || a.shape(2) != 3) throw py::value_error("expected an (height, width, 3) array");
  if (a.shape(0) == 0 || a.shape(1) == 0) throw py::value_error("empty image");
}

HdrImage from_samples(const U16Array& a, unsigned depth, const SampleMapping& mapping) {
  check_shape(a);
  const auto h = static_cast<std::size_t>(a.shape(0));
  const auto w = static_cast<std::size_t>(a.shape(1));
  HdrImage img(w, h, depth, mapping);
  const std::uint16_t* src = a.data();
  for (std::size_t i = 0; i < w * h; ++i) {
    for (int c = 0; c < 3; ++c) img.planes[c].data[i] = src[3 * i + c];
  }
  return img;
}

HdrImage from_floats(const F32Array& a, const SampleMapping& mapping) {
  check_shape(a);
  const auto h = static_cast<std::size_t>(a.shape(0));
  const auto w = static_cast<std::size_t>(a.shape(1));
  HdrImage img(w, h, 16, mapping);
  const float* src = a.data();
  for (std::size_t i = 0; i < w * h; ++i) {
    for (int c = 0; c < 3; ++c) img.planes[c].data[i] = mapping.to_sample(src[3 * i + c]);
  }
  return img;
}

U16Array to_samples(const HdrImage& img) {
  U16Array out({img.height, img.width, std::size_t{3}});
  std::uint16_t* dst = out.mutable_data();
  for (std::size_t i = 0; i < img.width * img.height; ++i) {
    for (int c = 0; c < 3; ++c) dst[3 * i + c] = img.planes[c].data[i];
  }
  return out;
}

F32Array to_floats(const HdrImage& img) {
  F32Array out({img.height, img.width, std::size_t{3}});
  float* dst = out.mutable_data();
  for (std::size_t i = 0; i < img.width * img.height; ++i) {
    for (int c = 0; c < 3; ++c) dst[3 * i + c] = img.mapping.to_float(img.planes[c].data[i]);
  }
  return out;
}

EncodeOptions make_options(std::uint32_t delta, const std::string& parity, int quality,
                            const std::string& transform, const std::string& codec,
                            const std::string& subsampling) {
  EncodeOptions o;
  o.delta = delta;
  if (parity != "odd" && parity != "even") throw py::value_error("parity must be 'odd' or 'even'");
  o.parity = parity == "odd" ? Parity::kOdd : Parity::kEven;
  o.quality = quality;
  if (transform != "rct" && transform != "none") throw py::value_error("transform must be 'rct' or 'none'");
  o.transform = transform == "rct" ? ColorTransform::kReversible : ColorTransform::kNone;
  o.codec = parse_codec(codec);
  if (subsampling != "444" && subsampling != "420") throw py::value_error("subsampling must be '444' or '420'");
  o.subsampling = subsampling == "420" ? ChromaSubsampling::k420 : ChromaSubsampling::k444;
  return o;
}

py::dict point_dict(const RdPoint& p) {
  py::dict d;
  d["epsilon"] = p.epsilon;
  d["delta"] = p.delta;
  d["q"] = p.q;
  d["transform"] = to_string(p.transform);
  d["bpp"] = p.bpp;
  d["max_abs_err"] = p.max_abs_error;
  d["psnr_db"] = p.psnr_db;
  d["bytes_base"] = p.bytes_base;
  d["bytes_tables"] = p.bytes_tables;
  d["bytes_payload"] = p.bytes_payload;
  d["bound"] = p.bound;
  return d;
}

py::dict header_dict(const ContainerHeader& h) {
  py::dict d;
  d["width"] = h.width;
  d["height"] = h.height;
  d["depth"] = h.depth;
  d["mapping"] = to_string(h.mapping);
  d["quality"] = h.quality;
  d["epsilon"] = h.epsilon;
  d["delta"] = h.delta;
  d["transform"] = to_string(h.transform);
  return d;
}

py::bytes as_bytes(const Bytes& b) {
  return py::bytes(reinterpret_cast<const char*>(b.data()), b.size());
}

Bytes from_bytes(const py::bytes& b) {
  const std::string_view s = b;
  return Bytes(s.begin(), s.end());
}

#define CODING_ARGS                                                                \
  py::arg("delta") = 1, py::arg("parity") = "odd", py::arg("quality") = 80,        \
  py::arg("transform") = "rct", py::arg("codec") = "predictive-deflate",           \
  py::arg("subsampling") = "444"

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Two-layer near-lossless HDR codec with a baseline JPEG base layer.";

  static py::exception<Error> base_error(m, "HdrzsqError", PyExc_ValueError);
  static py::exception<Error> usage_error(m, "UsageError", base_error.ptr());
  static py::exception<Error> format_error(m, "FormatError", base_error.ptr());
  static py::exception<Error> integrity_error(m, "IntegrityError", base_error.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      switch (e.kind()) {
        case ErrorKind::kFormat:
          py::set_error(format_error, e.what());
          break;
        case ErrorKind::kIntegrity:
          py::set_error(integrity_error, e.what());
          break;
        case ErrorKind::kIo:
          py::set_error(PyExc_OSError, e.what());
          break;
        default:
          py::set_error(usage_error, e.what());
      }
    }
  });

  m.def(
      "encode",
      [](const U16Array& samples, unsigned depth, std::uint32_t delta, const std::string& parity,
         int quality, const std::string& transform, const std::string& codec,
         const std::string& subsampling) {
        const HdrImage img = from_samples(samples, depth, SampleMapping::integer());
        const EncodeOptions o = make_options(delta, parity, quality, transform, codec, subsampling);
        Bytes file;
        {
          py::gil_scoped_release release;
          file = encode_image(img, o, FileFormat::kPnm).file;
        }
        return as_bytes(file);
      },
      py::arg("samples"), py::arg("depth") = 16, CODING_ARGS,
      "Encode an (H, W, 3) integer image of the given bit depth.");

  m.def(
      "encode_float",
      [](const F32Array& values, const std::string& mapping, std::uint32_t delta,
         const std::string& parity, int quality, const std::string& transform,
         const std::string& codec, const std::string& subsampling) {
        const HdrImage img = from_floats(values, parse_mapping(mapping));
        const EncodeOptions o = make_options(delta, parity, quality, transform, codec, subsampling);
        Bytes file;
        {
          py::gil_scoped_release release;
          file = encode_image(img, o, FileFormat::kPfm).file;
        }
        return as_bytes(file);
      },
      py::arg("values"), py::arg("mapping") = "half", CODING_ARGS,
      "Encode an (H, W, 3) float radiance image through a sample mapping.");

  m.def(
      "decode",
      [](const py::bytes& data) {
        const Bytes file = from_bytes(data);
        const DecodedImage dec = decode_image(file);
        return py::make_tuple(to_samples(dec.image), header_dict(dec.header));
      },
      py::arg("data"), "Decode to (uint16 samples, header info).");

  m.def(
      "decode_float",
      [](const py::bytes& data) { return to_floats(decode_image(from_bytes(data)).image); },
      py::arg("data"), "Decode and map samples back to float radiance.");

  m.def(
      "base_layer",
      [](const py::bytes& data) { return as_bytes(strip_app11(from_bytes(data))); },
      py::arg("data"), "The embedded baseline JPEG, extension segments removed.");

  m.def(
      "measure",
      [](const U16Array& samples, unsigned depth, std::uint32_t delta, const std::string& parity,
         int quality, const std::string& transform, const std::string& codec,
         const std::string& subsampling) {
        const HdrImage img = from_samples(samples, depth, SampleMapping::integer());
        return point_dict(encode_and_measure(
            img, make_options(delta, parity, quality, transform, codec, subsampling)));
      },
      py::arg("samples"), py::arg("depth") = 16, CODING_ARGS,
      "Encode, decode and report rate and distortion.");

  m.def(
      "sweep",
      [](const U16Array& samples, unsigned depth, std::uint32_t delta_min, std::uint32_t delta_max,
         const std::string& parity, int quality, const std::string& transform,
         const std::string& codec, unsigned jobs) {
        const HdrImage img = from_samples(samples, depth, SampleMapping::integer());
        SweepOptions so;
        so.delta_min = delta_min;
        so.delta_max = delta_max;
        so.base = make_options(0, parity, quality, transform, codec, "444");
        so.parity = so.base.parity;
        so.jobs = jobs;
        std::vector<RdPoint> points;
        {
          py::gil_scoped_release release;
          points = sweep(img, so);
        }
        std::ostringstream os;
        write_csv(os, points);
        return os.str();
      },
      py::arg("samples"), py::arg("depth") = 16, py::arg("delta_min") = 0,
      py::arg("delta_max") = 14, py::arg("parity") = "odd", py::arg("quality") = 80,
      py::arg("transform") = "rct", py::arg("codec") = "predictive-deflate", py::arg("jobs") = 1,
      "Rate/distortion sweep over a delta range, returned as CSV text.");

  m.def(
      "inspect", [](const py::bytes& data) { return inspect(from_bytes(data)); }, py::arg("data"));

  m.def(
      "encode_file",
      [](const std::string& input, const std::string& output, std::uint32_t delta,
         const std::string& parity, int quality, const std::string& transform,
         const std::string& codec, const std::string& subsampling, const std::string& mapping) {
        return point_dict(encode_file(input, output,
                                      make_options(delta, parity, quality, transform, codec, subsampling),
                                      parse_mapping(mapping)));
      },
      py::arg("input"), py::arg("output"), CODING_ARGS, py::arg("mapping") = "half");

  m.def("decode_file", &decode_file, py::arg("input"), py::arg("output"));

  m.attr("CSV_HEADER") = kCsvHeader;
}
