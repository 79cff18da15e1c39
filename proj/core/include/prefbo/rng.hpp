#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace prefbo {

/// FNV-1a hash, used to tag substream names and to build cache file names.
std::uint64_t fnv1a64(std::string_view s);

/// Deterministic random stream derived from a master seed and a substream
/// name. Streams with different names (or indices) are statistically
/// independent, and the same (seed, name, index) triple always reproduces the
/// same sequence, on any platform. All variate generation is done from raw
/// 64-bit draws so the sequences do not depend on the standard library's
/// distribution implementations.
class RngStream {
 public:
  RngStream(std::uint64_t master_seed, std::string_view name,
            std::uint64_t index = 0);

  /// Next raw 64-bit word from the underlying generator.
  std::uint64_t next_u64();

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform();

  /// Uniform double in [lo, hi). Requires lo < hi.
  double uniform(double lo, double hi);

  /// Uniform index in {0, ..., n - 1}. Requires n > 0.
  std::size_t uniform_index(std::size_t n);

  /// Standard normal variate (Box-Muller, spare value cached).
  double gaussian();

  /// Engine state as a printable string; restore() round-trips it exactly.
  std::string save_state() const;
  void restore_state(const std::string& state);

 private:
  RngStream() = default;

  std::mt19937_64 gen_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace prefbo
