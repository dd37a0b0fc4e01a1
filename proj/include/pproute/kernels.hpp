#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "pproute/ring.hpp"

// Batch kernels over ring-element arrays.  Every kernel has a plain serial
// loop (the reference implementation) and an OpenMP variant; set_exec picks
// which one runs.  Tests assert both paths agree, tools/bench_kernels times
// them against each other.
namespace pproute::kernels {

enum class Exec { serial, parallel };

Exec exec();
void set_exec(Exec e);

// below this many elements the parallel path falls back to the serial loop
constexpr std::size_t kParGrain = 1 << 14;

using cspan = std::span<const u64>;
using mspan = std::span<u64>;

void add(cspan a, cspan b, u64 mask, mspan out);
void sub(cspan a, cspan b, u64 mask, mspan out);
void mul(cspan a, cspan b, u64 mask, mspan out);
void neg(cspan a, u64 mask, mspan out);
void scalar_mul(cspan a, u64 s, u64 mask, mspan out);

// z = c + d*b + e*a (+ d*e on one party): assembles Beaver products from the
// opened differences d = x-a, e = y-b.
void beaver_arith(cspan d, cspan e, cspan a, cspan b, cspan c, bool add_de,
                  u64 mask, mspan out);

// boolean (XOR/AND) counterpart on packed words
void beaver_bool(cspan d, cspan e, cspan a, cspan b, cspan c, bool add_de,
                 u64 mask, mspan out);

void xor_(cspan a, cspan b, u64 mask, mspan out);
void and_(cspan a, cspan b, u64 mask, mspan out);
void shl(cspan a, unsigned d, u64 mask, mspan out);

// share-local probabilistic truncation (arithmetic shift by ring.f)
void trunc_shift(cspan a, const Ring &r, mspan out);

void encode(std::span<const double> x, const Ring &r, mspan out);
void decode(cspan a, const Ring &r, std::span<double> out);

u64 sum(cspan a, u64 mask);

// convenience allocating wrappers
std::vector<u64> add(cspan a, cspan b, u64 mask);
std::vector<u64> sub(cspan a, cspan b, u64 mask);

} // namespace pproute::kernels
