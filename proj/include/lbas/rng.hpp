// rng.hpp -- deterministic seeding, shuffling and variate helpers.
//
// Every randomized step in the pipeline (sampling, fold assignment, SVM
// epoch permutations, synthetic fixtures) goes through these helpers so a
// given seed produces the same bytes on every platform. std::shuffle and
// std::uniform_int_distribution are implementation-defined, so the
// Fisher-Yates loop and the bounded draw are spelled out here on top of
// std::mt19937_64, whose output sequence the standard pins down.

#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace lbas {

// splitmix64 finalizer, used to fold salts into seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// FNV-1a over bytes; stable across platforms.
inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Layered seed: each (base seed, key) pair gets an independent stream, so
// adding one stratum never perturbs the draws of another.
inline std::uint64_t layer_seed(std::uint64_t base, std::string_view key) {
  return splitmix64(base ^ fnv1a(key));
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next() { return gen_(); }

  // Uniform integer in [0, n), unbiased via the modulo-rejection method.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t threshold = (0 - n) % n;  // 2^64 mod n
    for (;;) {
      std::uint64_t r = gen_();
      if (r >= threshold) return r % n;
    }
  }

  // Uniform double in [0, 1), 53 bits.
  double unit() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  // Standard normal via Box-Muller (no cached spare; draw order is fixed).
  double gauss() {
    double u1 = 1.0 - unit();  // (0, 1]
    double u2 = unit();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
  }

 private:
  std::mt19937_64 gen_;
};

// In-place Fisher-Yates shuffle driven by Rng::below.
template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(rng.below(i));
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace lbas
