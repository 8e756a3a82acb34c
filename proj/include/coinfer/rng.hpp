#ifndef COINFER_RNG_HPP
#define COINFER_RNG_HPP

#include <cstdint>
#include <limits>

namespace coinfer {

/// SplitMix64 (Steele, Lea, Flood 2014). Satisfies UniformRandomBitGenerator.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t state) noexcept : state_(state) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix(state_);
  }

  static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

inline constexpr const char* kRngAlgorithm = "splitmix64/trial-substream";

/// Independent stream for one Monte Carlo trial. Streams depend only on
/// (seed, trial), never on scheduling.
inline SplitMix64 trial_stream(std::uint64_t seed, std::uint64_t trial) noexcept {
  return SplitMix64(SplitMix64::mix(seed ^ 0x6a09e667f3bcc909ULL) ^
                    SplitMix64::mix(trial + 0x9e3779b97f4a7c15ULL));
}

/// Uniform double strictly inside (0, 1) from the top 53 bits.
template <class Urbg>
double uniform_open01(Urbg& gen) {
  const std::uint64_t bits = static_cast<std::uint64_t>(gen()) >> 11;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

}  // namespace coinfer

#endif  // COINFER_RNG_HPP
