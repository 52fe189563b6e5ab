#pragma once

#include <array>
#include <cstdint>

namespace hdrzsq::jpeg {

inline constexpr std::uint8_t kSOI = 0xD8;
inline constexpr std::uint8_t kEOI = 0xD9;
inline constexpr std::uint8_t kSOF0 = 0xC0;
inline constexpr std::uint8_t kSOF1 = 0xC1;
inline constexpr std::uint8_t kDHT = 0xC4;
inline constexpr std::uint8_t kSOS = 0xDA;
inline constexpr std::uint8_t kDQT = 0xDB;
inline constexpr std::uint8_t kDRI = 0xDD;
inline constexpr std::uint8_t kAPP0 = 0xE0;
inline constexpr std::uint8_t kAPP11 = 0xEB;

// zigzag position -> natural (row-major) index
inline constexpr std::array<std::uint8_t, 64> kZigzag = {
    0,  1,  8,  16, 9,  2,  3,  10, 17, 24, 32, 25, 18, 11, 4,  5,
    12, 19, 26, 33, 40, 48, 41, 34, 27, 20, 13, 6,  7,  14, 21, 28,
    35, 42, 49, 56, 57, 50, 43, 36, 29, 22, 15, 23, 30, 37, 44, 51,
    58, 59, 52, 45, 38, 31, 39, 46, 53, 60, 61, 54, 47, 55, 62, 63};

struct HuffmanSpec {
  std::array<std::uint8_t, 16> counts;  // codes of length 1..16
  const std::uint8_t* values;
  int num_values;
};

const HuffmanSpec& std_dc_luma();
const HuffmanSpec& std_ac_luma();
const HuffmanSpec& std_dc_chroma();
const HuffmanSpec& std_ac_chroma();

// Fixed-point constants of the IJG accurate integer DCT (13 fractional bits).
inline constexpr int kConstBits = 13;
inline constexpr int kPass1Bits = 2;
inline constexpr std::int32_t kFix0_298631336 = 2446;
inline constexpr std::int32_t kFix0_390180644 = 3196;
inline constexpr std::int32_t kFix0_541196100 = 4433;
inline constexpr std::int32_t kFix0_765366865 = 6270;
inline constexpr std::int32_t kFix0_899976223 = 7373;
inline constexpr std::int32_t kFix1_175875602 = 9633;
inline constexpr std::int32_t kFix1_501321110 = 12299;
inline constexpr std::int32_t kFix1_847759065 = 15137;
inline constexpr std::int32_t kFix1_961570560 = 16069;
inline constexpr std::int32_t kFix2_053119869 = 16819;
inline constexpr std::int32_t kFix2_562915447 = 20995;
inline constexpr std::int32_t kFix3_072711026 = 25172;

constexpr std::int32_t descale(std::int32_t x, int n) {
  return (x + (std::int32_t{1} << (n - 1))) >> n;
}

}  // namespace hdrzsq::jpeg
