#include "lifecast/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace lifecast {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ULL;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBULL;
  z ^= z >> 31;
  return z;
}

}  // namespace

RngStream::RngStream(std::uint64_t seed) : key_(mix64(seed + kGolden)), counter_(0) {}

RngStream::RngStream(std::uint64_t key, std::uint64_t counter) : key_(key), counter_(counter) {}

std::uint64_t RngStream::next_u64() {
  ++counter_;
  return mix64(key_ + counter_ * kGolden);
}

double RngStream::uniform() {
  // 53 mantissa bits, offset by half an ulp so 0 and 1 are excluded.
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double RngStream::gaussian() {
  double u1 = uniform();
  double u2 = uniform();
  double r = std::sqrt(-2.0 * std::log(u1));
  return r * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t RngStream::uniform_index(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("uniform_index: n must be positive");
  // Modulo bias is < 2^-53 for any desk-scale n; acceptable here.
  return next_u64() % n;
}

RngStream RngStream::substream(std::uint64_t index) const {
  std::uint64_t child = mix64((key_ ^ 0x6A09E667F3BCC909ULL) + (index + 1) * kGolden);
  return RngStream(child, 0);
}

RngStream RngStream::substream(std::string_view name) const {
  std::uint64_t h = 0xCBF29CE484222325ULL;  // FNV-1a
  for (unsigned char c : name) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return substream(h);
}

}  // namespace lifecast
