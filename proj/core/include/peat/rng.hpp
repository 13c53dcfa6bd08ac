#pragma once

#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <random>

namespace peat {

// Mixes a base seed with a stream tag so that independent consumers (envs,
// action sampling, minibatch shuffling, ...) get decorrelated streams that
// are still fully determined by the master seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer applied to the combined word
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

template <typename... Rest>
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream, Rest... rest) {
  return mix_seed(mix_seed(seed, stream), rest...);
}

// Deterministic random stream. All transforms are written out explicitly so
// that two runs of the same binary with the same seed draw identical values
// regardless of which standard library the binary was built against.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // uniform in [0, 1), 53-bit resolution
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // standard normal via Box-Muller; consumes exactly two engine draws
  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  // unit-mean exponential
  double exponential() { return -std::log(1.0 - uniform()); }

  bool bernoulli(double p) { return uniform() < p; }

  void save(std::ostream& os) const { os << engine_; }
  void load(std::istream& is) { is >> engine_; }

  bool operator==(const Rng& other) const { return engine_ == other.engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace peat
