#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>

namespace fedsim {

// Stream purposes. Keeping them distinct means e.g. the latency draw of a
// client never shifts when the drop roll for the same client changes.
enum class StreamTag : std::uint64_t {
  benchmark = 1,
  split,
  partition,
  feature_noise,
  model_init,
  availability,
  availability_prob,
  drop,
  latency,
  completeness,
  selection,
  training,
};

inline constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline constexpr std::uint64_t derive_seed(std::uint64_t seed,
                                           std::initializer_list<std::uint64_t> tags) {
  std::uint64_t h = mix64(seed ^ 0x6a09e667f3bcc909ULL);
  for (std::uint64_t t : tags) {
    h = mix64(h ^ mix64(t + 0x9e3779b97f4a7c15ULL));
  }
  return h;
}

// Counter-based generator (SplitMix64 over a keyed counter). A stream is
// identified entirely by its key, so draws for one (client, time) pair are
// independent of how many draws any other stream has consumed.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit constexpr Rng(std::uint64_t key) : key_(key) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  constexpr result_type operator()() {
    ++counter_;
    return mix64(key_ + counter_ * 0x9e3779b97f4a7c15ULL);
  }

  // Uniform in [0, 1) with 53 random bits.
  constexpr double uniform() { return static_cast<double>(operator()() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

inline Rng make_stream(std::uint64_t seed, StreamTag tag,
                       std::initializer_list<std::uint64_t> extra = {}) {
  std::uint64_t key = derive_seed(seed, {static_cast<std::uint64_t>(tag)});
  for (std::uint64_t e : extra) key = derive_seed(key, {e});
  return Rng(key);
}

}  // namespace fedsim
