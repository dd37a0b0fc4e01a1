#pragma once

#include <cstdint>
#include <random>

#include "pproute/ring.hpp"

namespace pproute {

// splitmix64: cheap seed mixer so related seeds (seed, seed^tag) give
// unrelated streams.
constexpr u64 splitmix64(u64 x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Combine a seed with a domain tag (party id, query index, ...).
constexpr u64 mix_seed(u64 seed, u64 tag) {
    return splitmix64(seed ^ (0x9e3779b97f4a7c15ULL * (tag + 1)));
}

// Deterministic per-stream RNG.  All randomness in the engine flows through
// named streams so replays with equal seeds are bit-identical.
class Rng {
  public:
    explicit Rng(u64 seed) : gen_(splitmix64(seed)) {}

    u64 next_u64() { return gen_(); }
    u64 next_elem(const Ring &r) { return gen_() & r.mask(); }

    // uniform in [0, n)
    u64 next_below(u64 n) {
        std::uniform_int_distribution<u64> d(0, n - 1);
        return d(gen_);
    }
    double next_real(double lo, double hi) {
        std::uniform_real_distribution<double> d(lo, hi);
        return d(gen_);
    }
    double next_gaussian() {
        std::normal_distribution<double> d(0.0, 1.0);
        return d(gen_);
    }

    std::mt19937_64 &raw() { return gen_; }

  private:
    std::mt19937_64 gen_;
};

} // namespace pproute
