#pragma once

#include <cmath>
#include <cstdint>

namespace spikedwigner {
namespace rng {

/// SplitMix64 finalizer. Bijective on 64-bit words; the basis of every
/// random stream in this library so that results are identical across
/// platforms and thread schedules.
inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Stream tags keep the per-purpose substreams of one (seed, sample) pair
/// disjoint.
enum class Stream : uint64_t {
  noise = 0x6e6f697365ULL,
  spike = 0x7370696b65ULL,
  side_info = 0x73696465ULL,
  mcmc = 0x6d636d63ULL,
  bootstrap = 0x626f6f74ULL,
};

/// Counter-based substream: every draw is a pure function of
/// (master_seed, stream, sample_index, counter). No state is advanced, so
/// any entry can be generated in any order by any thread.
class Substream {
 public:
  Substream(uint64_t master_seed, Stream stream, uint64_t sample_index)
      : s0_(splitmix64(splitmix64(master_seed ^ splitmix64(static_cast<uint64_t>(stream))) +
                       sample_index)) {}

  uint64_t bits(uint64_t counter) const { return splitmix64(s0_ + counter * 0x9e3779b97f4a7c15ULL); }

  /// Uniform on (0,1), never exactly 0 or 1.
  double uniform(uint64_t counter) const {
    return (static_cast<double>(bits(2 * counter) >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller from two dedicated counters.
  double normal(uint64_t counter) const {
    const double u1 = (static_cast<double>(bits(2 * counter) >> 11) + 0.5) * 0x1.0p-53;
    const double u2 = (static_cast<double>(bits(2 * counter + 1) >> 11) + 0.5) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

 private:
  uint64_t s0_;
};

}  // namespace rng
}  // namespace spikedwigner
