#pragma once

#include <cstdint>
#include <limits>
#include <random>

namespace stvl {

namespace detail {

// SplitMix64 finalizer (Stafford variant 13).
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

}  // namespace detail

/// Counter-based random stream.
///
/// The n-th raw output is a pure function of (root_seed, stream_index, n), so a
/// stream can be recreated anywhere and parallel work partitioned by
/// stream_index gives the same numbers regardless of how it is scheduled.
/// Satisfies UniformRandomBitGenerator, so the std distributions accept it.
class RngStream {
 public:
  using result_type = std::uint64_t;

  explicit RngStream(std::uint64_t root_seed = 0, std::uint64_t stream_index = 0)
      : root_seed_(root_seed),
        stream_index_(stream_index),
        key_(detail::mix64(detail::mix64(root_seed + detail::kGolden) ^
                           detail::mix64(stream_index * 0xd1342543de82ef95ULL + 0x632be59bd9b4e019ULL))) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept { return detail::mix64(key_ + (++counter_) * detail::kGolden); }

  /// Child stream for sub-task `i`; depends only on this stream's identity, not
  /// on how many draws have been consumed.
  [[nodiscard]] RngStream substream(std::uint64_t i) const {
    return RngStream(root_seed_, detail::mix64(stream_index_ ^ detail::mix64(i + 0x2545f4914f6cdd1dULL)));
  }

  /// Uniform on the open interval (0, 1).
  double uniform_open() {
    for (;;) {
      const double u = static_cast<double>((*this)() >> 11) * 0x1.0p-53;
      if (u > 0.0) return u;
    }
  }
  double uniform(double a, double b) { return a + (b - a) * uniform_open(); }
  double normal() { return normal_(*this); }
  double exponential() { return exponential_(*this); }

  [[nodiscard]] std::uint64_t root_seed() const { return root_seed_; }
  [[nodiscard]] std::uint64_t stream_index() const { return stream_index_; }
  [[nodiscard]] std::uint64_t draws() const { return counter_; }

 private:
  std::uint64_t root_seed_;
  std::uint64_t stream_index_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::exponential_distribution<double> exponential_{1.0};
};

}  // namespace stvl
