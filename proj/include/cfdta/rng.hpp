#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Core>

#include "cfdta/error.hpp"

namespace cfdta {

// splitmix64 finalizer; used for seed derivation and hashing.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline std::uint64_t hash_combine(std::uint64_t h, std::uint64_t v) {
  return mix64(h ^ (mix64(v) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2)));
}

// mt19937_64 with the transforms pinned here. The standard library's
// distribution objects are implementation-defined, which would break
// run-to-run byte equality across toolchains.
class DetRng {
 public:
  explicit DetRng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next() { return gen_(); }

  // [0, 1) with 53 bits of the raw stream.
  double uniform01() { return double(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Unbiased enough for every use here: multiply-shift over the full word.
  int index(int n) {
    if (n <= 0) throw RuntimeError("DetRng::index: empty range");
    return int((static_cast<unsigned __int128>(next()) * std::uint64_t(n)) >> 64);
  }

  // Inverse-CDF draw; probs must be nonnegative. A sum slightly off 1.0
  // falls through to the last positive entry.
  int categorical(const Eigen::VectorXd& probs) {
    if (probs.size() == 0) throw RuntimeError("DetRng::categorical: empty distribution");
    double u = uniform01() * probs.sum();
    double acc = 0.0;
    int last = 0;
    for (int i = 0; i < probs.size(); ++i) {
      if (probs[i] <= 0.0) continue;
      acc += probs[i];
      last = i;
      if (u < acc) return i;
    }
    return last;
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace cfdta
