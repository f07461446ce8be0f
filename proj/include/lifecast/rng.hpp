#pragma once

#include <cstdint>
#include <string_view>

namespace lifecast {

// Counter-based splittable PRNG.
//
// Output word i of a stream with key k is mix64(k + (i+1) * GOLDEN), where
// mix64 is the splitmix64 finalizer and GOLDEN = 2^64 / phi. A stream is a
// pure function of (key, counter), so substreams derived for rollouts or
// parameter groups are independent of draw order anywhere else, and the
// sequence for a given seed is identical across platforms (integer-only
// state; gaussian() additionally depends on libm sqrt/log/cos).
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed);

  std::uint64_t next_u64();

  // Uniform on the open interval (0, 1).
  double uniform();

  // Standard normal via Box-Muller; consumes two uniforms per call.
  double gaussian();

  // Uniform integer in [0, n), n > 0.
  std::uint64_t uniform_index(std::uint64_t n);

  // Child stream for rollout / sample `index`.
  RngStream substream(std::uint64_t index) const;

  // Child stream keyed by name (parameter groups, components).
  RngStream substream(std::string_view name) const;

 private:
  RngStream(std::uint64_t key, std::uint64_t counter);

  std::uint64_t key_;
  std::uint64_t counter_;
};

}  // namespace lifecast
