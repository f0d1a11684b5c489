#ifndef PMCMC_RNG_HPP
#define PMCMC_RNG_HPP

#include <cmath>
#include <cstdint>
#include <numbers>

namespace pmcmc {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// xoshiro256** seeded through splitmix64. Substreams are a pure function of
// (key, a, b, c), never of the parent's position, so per-particle streams can
// be derived in any order (or in parallel) and still reproduce bit-identical
// sequences.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : key_(seed) { seed_state(seed); }

  RngStream substream(std::uint64_t a, std::uint64_t b = 0,
                      std::uint64_t c = 0) const {
    std::uint64_t s = key_;
    std::uint64_t k = splitmix64(s);
    s ^= a * 0x9e3779b97f4a7c15ULL;
    k ^= splitmix64(s);
    s ^= b * 0xbf58476d1ce4e5b9ULL;
    k ^= splitmix64(s);
    s ^= c * 0x94d049bb133111ebULL;
    k ^= splitmix64(s);
    return RngStream(k);
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform on the open interval (0,1); never returns 0, so log(u) is safe.
  double uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Box-Muller without caching: every call consumes exactly two uniforms.
  double normal() {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  // Index in [0, n) from a single uniform.
  std::size_t uniform_index(std::size_t n) {
    auto idx = static_cast<std::size_t>(uniform() * static_cast<double>(n));
    return idx < n ? idx : n - 1;
  }

  std::uint64_t key() const { return key_; }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  void seed_state(std::uint64_t seed) {
    std::uint64_t s = seed;
    for (auto& word : state_) {
      word = splitmix64(s);
    }
  }

  std::uint64_t key_;
  std::uint64_t state_[4];
};

}  // namespace pmcmc

#endif
