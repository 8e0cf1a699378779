#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace lcvi {

/// SplitMix64 output function.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/**
 * Counter-based uniform bit generator. The n-th output is a pure function of
 * (key, n), so a stream can be recreated anywhere from its key alone.
 *
 * Satisfies UniformRandomBitGenerator. `normal()` is the common path for
 * noise draws; it uses a stateless ziggurat sampler, so a draw depends only
 * on the stream position.
 */
class RandomStream {
 public:
  using result_type = std::uint64_t;

  explicit RandomStream(std::uint64_t key) noexcept : key_(key) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return ~result_type{0}; }

  result_type operator()() noexcept {
    counter_ += kGamma;
    return mix64(key_ + counter_);
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept {
    return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
  }

  double normal();

  std::uint64_t key() const noexcept { return key_; }

 private:
  static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/**
 * Immutable, splittable seed state.
 *
 * `split(i)` derives an independent child state; every sampling site in the
 * library asks for a child keyed by its role and index (sample, target,
 * epoch) so results never depend on call interleaving.
 */
class RngState {
 public:
  explicit RngState(std::uint64_t seed) noexcept
      : key_(mix64(seed ^ 0x6a09e667f3bcc909ULL)) {}

  RngState split(std::uint64_t index) const noexcept {
    return FromKey(mix64(key_ ^ mix64(index + 0x3c6ef372fe94f82bULL)));
  }

  RandomStream stream() const noexcept { return RandomStream(key_); }

  std::uint64_t key() const noexcept { return key_; }

  friend bool operator==(const RngState&, const RngState&) = default;

 private:
  struct KeyTag {};
  RngState(KeyTag, std::uint64_t key) noexcept : key_(key) {}
  static RngState FromKey(std::uint64_t key) noexcept {
    return RngState(KeyTag{}, key);
  }

  std::uint64_t key_;
};

inline RngState seed_rng(std::uint64_t seed) noexcept { return RngState(seed); }

/// Draws from the standard normal base distribution (epsilon or delta).
struct NoiseDraw {
  std::vector<double> values;

  std::size_t size() const noexcept { return values.size(); }
};

NoiseDraw draw_noise(RandomStream& stream, std::size_t dim);

void fill_normal(RandomStream& stream, std::span<double> out);

}  // namespace lcvi
