#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace hdrzsq {

// Zero-skip quantization (ZS.Q).
//
// Given the histogram H(x) of a non-negative integer plane and a step size
// eps, bins are opened left to right, each starting at an occupied value:
//
//   s_0 = min{x : H(x) != 0}
//   s_q = min{x : x > e_{q-1}, H(x) != 0}
//   e_q = s_q + eps - 1
//   t_q = max{x in [s_q, e_q] : H(x) != 0}
//   rep_q = floor((s_q + t_q) / 2 + 0.5)
//
// Samples are replaced by their bin index q (histogram packing), and decoded
// through the unpacking table rep_q. Runs of empty histogram bins never
// consume index range, and every sample is reconstructed within
// floor(eps / 2) of its original value.

// Largest sample domain handled: residual planes need depth + 2 bits.
inline constexpr unsigned kMaxDomainBits = 18;

enum class Parity : std::uint8_t { kEven = 0, kOdd = 1 };

// eps = 2*delta (even) or 2*delta + 1 (odd). delta = 0 requires odd parity.
std::uint32_t choose_step_size(std::uint32_t delta, Parity parity);

// The error bound guaranteed by a step size: floor(eps / 2).
constexpr std::uint32_t max_error_for_step(std::uint32_t epsilon) { return epsilon / 2; }

struct Histogram {
  unsigned domain_bits = 0;
  std::vector<std::uint64_t> counts;  // size 2^domain_bits

  std::uint64_t total() const;
  std::size_t occupied() const;
};

// Throws a usage error if any sample is >= 2^domain_bits.
Histogram build_histogram(std::span<const std::uint32_t> samples, unsigned domain_bits);

struct ZsqBin {
  std::uint32_t start;  // s_q
  std::uint32_t end;    // e_q
  std::uint32_t top;    // t_q
  std::uint32_t rep;    // x'_q

  bool operator==(const ZsqBin&) const = default;
};

struct ZsqCodebook {
  std::uint32_t epsilon = 1;
  unsigned domain_bits = 0;
  std::vector<ZsqBin> bins;

  std::uint32_t delta() const { return max_error_for_step(epsilon); }
  std::size_t size() const { return bins.size(); }
  // rep column, indexed by q.
  std::vector<std::uint32_t> unpacking_table() const;
};

// Throws a usage error for eps == 0 or an all-zero histogram.
ZsqCodebook derive_codebook(const Histogram& h, std::uint32_t epsilon);

struct IndexImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::uint32_t bin_count = 0;
  std::vector<std::uint32_t> indices;

  bool operator==(const IndexImage&) const = default;
};

// Value -> bin index through a dense lookup over the codebook's domain.
// Throws an integrity error for a value outside every bin.
IndexImage pack(std::span<const std::uint32_t> plane, std::size_t width, std::size_t height,
                const ZsqCodebook& cb);

// Index -> representative. Throws an integrity error for an index >= the
// table size.
std::vector<std::uint32_t> unpack(const IndexImage& idx, std::span<const std::uint32_t> table);
inline std::vector<std::uint32_t> unpack(const IndexImage& idx, const ZsqCodebook& cb) {
  return unpack(idx, cb.unpacking_table());
}

}  // namespace hdrzsq
