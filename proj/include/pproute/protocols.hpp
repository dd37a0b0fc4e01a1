#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "pproute/engine.hpp"
#include "pproute/shares.hpp"

// Secure two-party operations.  All functions are SPMD: both party programs
// call them with matching arguments in the same order.  Bit shares produced
// by comparisons are arithmetic shares of {0,1} at integer scale; products of
// a bit share with a value share are exact (no truncation).
namespace pproute::proto {

// ---- round complexity, as declared; tests assert measured == declared ----
u64 rounds_cmp(const SessionConfig &cfg);
inline u64 rounds_relu(const SessionConfig &cfg) { return rounds_cmp(cfg) + 1; }
inline u64 rounds_recip(const SessionConfig &cfg) {
    return 2ull * cfg.recip_iters;
}
inline u64 rounds_softmax(const SessionConfig &cfg) {
    return rounds_cmp(cfg) + 2ull * cfg.recip_iters + 2;
}

// ---- opening ----
std::vector<u64> open_raw(PartyCtx &ctx, const ShareVector &x,
                          std::string_view label = "open");
std::vector<double> open_reals(PartyCtx &ctx, const ShareVector &x,
                               std::string_view label = "open");

// ---- private input ----
// Owner shares `vals` (publicly known length n); the other party passes {}.
ShareVector share_private(PartyCtx &ctx, int owner,
                          std::span<const double> vals, std::size_t n,
                          std::string_view label = "input");

// Both directions in a single round: party 0 contributes n0 values, party 1
// contributes n1.  Returns (shares of party0's vector, shares of party1's).
std::pair<ShareVector, ShareVector>
share_inputs(PartyCtx &ctx, std::span<const double> my_vals, std::size_t n0,
             std::size_t n1, std::string_view label = "input");

// ---- multiplication ----
// raw ring product (Beaver, 1 round); scales add: f*f -> 2f, bit*f -> f
ShareVector mul_raw(PartyCtx &ctx, const ShareVector &x, const ShareVector &y,
                    std::string_view label = "mul");
// fixed-point product: mul_raw + share-local truncation
ShareVector mul_fixed(PartyCtx &ctx, const ShareVector &x,
                      const ShareVector &y, std::string_view label = "mul");
ShareVector trunc(const Ring &r, const ShareVector &x); // local

// ---- comparison & friends ----
// bit shares of 1(x > y); exact, precondition |x - y| < 2^(l-1) raw
ShareVector cmp_gt(PartyCtx &ctx, const ShareVector &x, const ShareVector &y,
                   std::string_view label = "cmp");
ShareVector drelu(PartyCtx &ctx, const ShareVector &x,
                  std::string_view label = "cmp");
ShareVector relu(PartyCtx &ctx, const ShareVector &x,
                 std::string_view label = "cmp");
// local bit complement: 1 - b
ShareVector bit_not(const Ring &r, const ShareVector &bits);
// b ? x : y, one round, exact
ShareVector mux(PartyCtx &ctx, const ShareVector &bits, const ShareVector &x,
                const ShareVector &y, std::string_view label = "mul");

// ---- linear algebra ----
// inner product: one round for the batch of elementwise products, local
// accumulation at double precision scale, one truncation
ShareVector dot(PartyCtx &ctx, const ShareVector &x, const ShareVector &y,
                std::string_view label = "mul");

struct MatmulJob {
    const ShareVector *A; // s x k, row-major
    const ShareVector *B; // k x m, row-major
    std::size_t s, k, m;
};
// any number of matrix products share one communication round
std::vector<ShareVector> matmul_many(PartyCtx &ctx,
                                     std::span<const MatmulJob> jobs,
                                     std::string_view label = "mul");
ShareVector matmul(PartyCtx &ctx, const ShareVector &A, const ShareVector &B,
                   std::size_t s, std::size_t k, std::size_t m,
                   std::string_view label = "mul");
// M (n x d, row-major) * v (d) -> n
ShareVector matvec(PartyCtx &ctx, const ShareVector &M, const ShareVector &v,
                   std::size_t n, std::size_t d,
                   std::string_view label = "mul");

// ---- reciprocal / softmax ----
// Newton-Raphson 1/x from the public bracket hint 0 < lo <= x <= hi.  The
// default iteration count converges for hi/lo up to ~10^6; the fixed-point
// noise floor keeps the relative error under 2^-8 for x up to ~32.
ShareVector reciprocal(PartyCtx &ctx, const ShareVector &x, double lo,
                       double hi, std::string_view label = "recip");

// ReLU-normalized softmax over `rows` rows of length `m` (flattened,
// row-major).  Denominator gets the stabilizer eps = m * 2^-f.  entry_bound
// is the public magnitude bound used for the reciprocal hint; rows whose
// maximum is >= 1 normalize to 1 within ~2^-8.
ShareVector softmax_2relu(PartyCtx &ctx, const ShareVector &x,
                          std::size_t rows, std::size_t m,
                          double entry_bound = 16.0);

} // namespace pproute::proto
