#include "hdrzsq/zsq.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "hdrzsq/error.hpp"

namespace hdrzsq {

std::uint32_t choose_step_size(std::uint32_t delta, Parity parity) {
  if (delta == 0 && parity == Parity::kEven) {
    fail(ErrorKind::kUsage, "delta = 0 needs odd parity (step size 0 is undefined)");
  }
  if (delta > (1u << kMaxDomainBits)) fail(ErrorKind::kUsage, "delta too large");
  return 2 * delta + (parity == Parity::kOdd ? 1 : 0);
}

std::uint64_t Histogram::total() const {
  return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

std::size_t Histogram::occupied() const {
  return static_cast<std::size_t>(
      std::count_if(counts.begin(), counts.end(), [](std::uint64_t c) { return c != 0; }));
}

Histogram build_histogram(std::span<const std::uint32_t> samples, unsigned domain_bits) {
  if (domain_bits == 0 || domain_bits > kMaxDomainBits) {
    fail(ErrorKind::kUsage, "histogram domain must be 1.." + std::to_string(kMaxDomainBits) +
                                " bits");
  }
  Histogram h;
  h.domain_bits = domain_bits;
  h.counts.assign(std::size_t{1} << domain_bits, 0);
  for (std::uint32_t s : samples) {
    if (s >= h.counts.size()) fail(ErrorKind::kUsage, "sample outside histogram domain");
    ++h.counts[s];
  }
  return h;
}

std::vector<std::uint32_t> ZsqCodebook::unpacking_table() const {
  std::vector<std::uint32_t> table(bins.size());
  std::transform(bins.begin(), bins.end(), table.begin(), [](const ZsqBin& b) { return b.rep; });
  return table;
}

ZsqCodebook derive_codebook(const Histogram& h, std::uint32_t epsilon) {
  if (epsilon == 0) fail(ErrorKind::kUsage, "step size must be at least 1");
  const std::size_t n = h.counts.size();

  // next_occ[x]: smallest occupied value >= x (n if none).
  // prev_occ[x]: largest occupied value <= x (n if none).
  std::vector<std::uint32_t> next_occ(n + 1), prev_occ(n);
  next_occ[n] = static_cast<std::uint32_t>(n);
  for (std::size_t x = n; x-- > 0;) {
    next_occ[x] = h.counts[x] ? static_cast<std::uint32_t>(x) : next_occ[x + 1];
  }
  std::uint32_t last = static_cast<std::uint32_t>(n);
  for (std::size_t x = 0; x < n; ++x) {
    if (h.counts[x]) last = static_cast<std::uint32_t>(x);
    prev_occ[x] = last;
  }
  if (next_occ[0] == n) fail(ErrorKind::kUsage, "cannot build a codebook from an empty histogram");

  ZsqCodebook cb;
  cb.epsilon = epsilon;
  cb.domain_bits = h.domain_bits;
  std::uint64_t start = next_occ[0];
  while (start < n) {
    const std::uint64_t end = start + epsilon - 1;
    const std::uint32_t top = prev_occ[std::min<std::uint64_t>(end, n - 1)];
    const auto s = static_cast<std::uint32_t>(start);
    // floor((s + t) / 2 + 0.5) == (s + t + 1) / 2 for non-negative integers.
    const auto rep = static_cast<std::uint32_t>((std::uint64_t{s} + top + 1) / 2);
    cb.bins.push_back({s, static_cast<std::uint32_t>(std::min<std::uint64_t>(end, UINT32_MAX)),
                       top, rep});
    if (end + 1 >= n) break;
    start = next_occ[end + 1];
  }
  return cb;
}

IndexImage pack(std::span<const std::uint32_t> plane, std::size_t width, std::size_t height,
                const ZsqCodebook& cb) {
  if (plane.size() != width * height) fail(ErrorKind::kUsage, "plane size does not match dimensions");
  if (cb.bins.empty()) fail(ErrorKind::kUsage, "empty codebook");
  constexpr std::uint32_t kUncovered = UINT32_MAX;
  const std::size_t n = std::size_t{1} << cb.domain_bits;
  std::vector<std::uint32_t> lut(n, kUncovered);
  for (std::uint32_t q = 0; q < cb.bins.size(); ++q) {
    const ZsqBin& b = cb.bins[q];
    const std::size_t hi = std::min<std::size_t>(b.end, n - 1);
    for (std::size_t x = b.start; x <= hi; ++x) lut[x] = q;
  }

  IndexImage out;
  out.width = width;
  out.height = height;
  out.bin_count = static_cast<std::uint32_t>(cb.bins.size());
  out.indices.resize(plane.size());
  for (std::size_t i = 0; i < plane.size(); ++i) {
    const std::uint32_t v = plane[i];
    const std::uint32_t q = v < n ? lut[v] : kUncovered;
    if (q == kUncovered) {
      fail(ErrorKind::kIntegrity, "sample " + std::to_string(v) + " not covered by the codebook");
    }
    out.indices[i] = q;
  }
  return out;
}

std::vector<std::uint32_t> unpack(const IndexImage& idx, std::span<const std::uint32_t> table) {
  if (idx.bin_count != table.size()) {
    fail(ErrorKind::kIntegrity, "index image bin count does not match the unpacking table");
  }
  std::vector<std::uint32_t> out(idx.indices.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const std::uint32_t q = idx.indices[i];
    if (q >= table.size()) fail(ErrorKind::kIntegrity, "bin index out of range");
    out[i] = table[q];
  }
  return out;
}

}  // namespace hdrzsq
