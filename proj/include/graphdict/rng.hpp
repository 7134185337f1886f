#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace graphdict {

// Portable seeded generator. The engine is std::mt19937_64, whose output
// sequence is fixed by the standard; the distributions below are written out
// by hand because the std:: distributions differ between library vendors.
//
//   uniform()      (bits >> 11) * 2^-53, in [0, 1)
//   normal()       Box-Muller, both values of a pair are used
//   uniform_int    rejection sampling on the top of the 64-bit range
//   shuffle        Fisher-Yates from the back using uniform_int
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  bool bernoulli(double p) { return uniform() < p; }
  double normal();
  // Uniform integer in [0, n). n must be positive.
  std::uint64_t uniform_int(std::uint64_t n);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[uniform_int(i)]);
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// splitmix64 finalizer.
std::uint64_t splitmix64(std::uint64_t x);

// Seed for a named subsystem: splitmix64(master ^ fnv1a(name)).
// Optional index gets mixed in afterwards (per-seed, per-grid-point, ...).
std::uint64_t derive_seed(std::uint64_t master, std::string_view name, std::uint64_t index = 0);

}  // namespace graphdict
