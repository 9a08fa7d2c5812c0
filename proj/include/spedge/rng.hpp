#pragma once

#include <cstdint>
#include <string_view>

namespace spedge {

// SplitMix64 generator (Steele, Lea, Flood). Small state, passes BigCrush,
// and trivially reproducible across platforms. Every randomized routine in
// this project draws from a stream derived from (seed, stream index), so a
// run is fully determined by the seed recorded in its output.
struct SplitMix64 {
  std::uint64_t state = 0;

  SplitMix64() = default;
  explicit SplitMix64(std::uint64_t s) : state(s) {}

  static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

  std::uint64_t next() {
    std::uint64_t z = (state += kGolden);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform double in [0,1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Uniform double in (0,1]; safe as a log() argument.
  double uniform_pos() {
    return static_cast<double>((next() >> 11) + 1) * 0x1.0p-53;
  }

  // Independent stream for (seed, index). The seed is mixed once before the
  // per-stream offset so that consecutive seeds do not give shifted streams.
  static SplitMix64 stream(std::uint64_t seed, std::uint64_t index) {
    SplitMix64 mixer(seed);
    return SplitMix64(mixer.next() + index * kGolden);
  }
};

// Recorded in run metadata next to the seed.
inline constexpr std::string_view kRngName = "splitmix64";

}  // namespace spedge
