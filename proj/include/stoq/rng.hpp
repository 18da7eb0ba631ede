#ifndef STOQ_RNG_HPP
#define STOQ_RNG_HPP

#include <cmath>
#include <cstdint>

namespace stoq {

/// Counter-based stream splitting: a master seed plus (stream id, key)
/// produce independent deterministic substreams, so ensemble output is
/// invariant to trajectory execution order and thread count.
namespace rng_detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace rng_detail

/// xoshiro-style generator seeded from a split of the master seed.
class Stream {
 public:
  Stream() : Stream(0, 0, 0) {}
  Stream(std::uint64_t master_seed, std::uint64_t stream_id,
         std::uint64_t key = 0) {
    using rng_detail::splitmix64;
    std::uint64_t h = splitmix64(master_seed ^ splitmix64(stream_id) ^
                                 splitmix64(key * 0x9e3779b97f4a7c15ULL + 1));
    s0_ = splitmix64(h);
    s1_ = splitmix64(s0_);
    if (s0_ == 0 && s1_ == 0) s1_ = 1;
  }

  std::uint64_t next_u64() {
    // xoroshiro128+
    const std::uint64_t a = s0_;
    std::uint64_t b = s1_;
    const std::uint64_t r = a + b;
    b ^= a;
    s0_ = ((a << 55) | (a >> 9)) ^ b ^ (b << 14);
    s1_ = (b << 36) | (b >> 28);
    return r;
  }

  /// Uniform in [0,1).
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Equal-probability +1/-1.
  int next_sign() { return (next_u64() >> 63) ? 1 : -1; }

  /// Exponential with the given mean.
  double next_exponential(double mean) {
    double u;
    do {
      u = next_double();
    } while (u <= 0.0);
    return -mean * std::log(u);
  }

 private:
  std::uint64_t s0_, s1_;
};

/// The unbiased sign variable: fresh +1/-1 with probability 1/2 each
/// microscopic step, deterministic given its stream.
struct SignProcess {
  Stream stream;
  int current_sign = 1;

  SignProcess() = default;
  explicit SignProcess(Stream s) : stream(s) {}

  int step() {
    current_sign = stream.next_sign();
    return current_sign;
  }
};

}  // namespace stoq

#endif  // STOQ_RNG_HPP
