#pragma once
#include <cstdint>
#include <random>

namespace histoport {

// splitmix64 step; used for seed mixing and stream derivation.
uint64_t hash64(uint64_t x);
uint64_t hash_combine(uint64_t a, uint64_t b);

// Deterministic RNG.  mt19937_64 has a fully specified sequence, and all
// distribution transforms below are hand-rolled so results are identical
// across standard libraries and platforms.
class Rng {
 public:
  explicit Rng(uint64_t seed) : eng_(seed) {}

  uint64_t next_u64() { return eng_(); }

  // Uniform in [0, 1).
  double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [lo, hi] inclusive, via rejection-free modulo of a
  // 64-bit draw (bias < 2^-50 for any range used here, and deterministic).
  int uniform_int(int lo, int hi) {
    uint64_t span = uint64_t(hi - lo) + 1;
    return lo + int(next_u64() % span);
  }

  double normal();

  // Independent child stream keyed by `tag`; advancing the child never
  // perturbs the parent.
  Rng fork(uint64_t tag) {
    return Rng(hash_combine(hash64(next_u64()), tag));
  }

 private:
  std::mt19937_64 eng_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace histoport
