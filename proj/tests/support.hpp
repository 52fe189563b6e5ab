#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "hdrzsq/pixels.hpp"

namespace testsupport {

inline std::filesystem::path corpus_dir() { return HDRZSQ_CORPUS_DIR; }

inline std::vector<std::filesystem::path> corpus_files() {
  std::vector<std::filesystem::path> out;
  for (const auto& e : std::filesystem::directory_iterator(corpus_dir())) {
    if (e.is_regular_file()) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

// Random integer-mapped image: smooth field plus noise plus a few hot spots,
// with a sparse palette when `sparse` is set.
inline hdrzsq::HdrImage random_image(std::mt19937_64& rng, std::size_t w, std::size_t h,
                                     unsigned depth, bool sparse = false) {
  hdrzsq::HdrImage img(w, h, depth, hdrzsq::SampleMapping::integer());
  const double top = static_cast<double>((1u << depth) - 1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> n(0.0, 1.0);
  const double fx = 1 + 6 * u(rng), fy = 1 + 6 * u(rng), noise = 200 * u(rng);
  std::vector<std::uint16_t> palette;
  for (int i = 0; i < 24; ++i) palette.push_back(static_cast<std::uint16_t>(u(rng) * top));
  for (int c = 0; c < 3; ++c) {
    const double phase = 6.28 * u(rng);
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        double v = 0.5 + 0.45 * std::sin(fx * x / w * 3.14 + phase) * std::cos(fy * y / h * 3.14);
        v = v * v * top + noise * n(rng);
        if (u(rng) < 0.01) v = top * u(rng);
        auto s = static_cast<std::uint16_t>(std::clamp(v, 0.0, top));
        if (sparse) s = palette[s % palette.size()];
        img.planes[c].at(x, y) = s;
      }
    }
  }
  return img;
}

}  // namespace testsupport
