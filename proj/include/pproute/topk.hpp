#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pproute/protocols.hpp"

// Constant-round oblivious top-k selection and reference baselines.  All
// selection protocols take values already passed through embed_tiebreak, so
// every element is distinct and ties resolve to the lower index.
namespace pproute::topk {

// k is public; bits are arithmetic {0,1} shares at integer scale
struct TopkMask {
    ShareVector bits;
    std::size_t k = 0;
};

// v' = v * 2^c + (n-1-i), c = ceil(log2 n): order-preserving injection that
// makes values distinct with lower-index-wins ties.  Local, no rounds.
// Precondition: |v| < 2^(l-2-f-c) so the shift cannot wrap.
ShareVector embed_tiebreak(const Ring &r, const ShareVector &v);

// all-pairs rank counting: n(n-1) comparisons, then n threshold
// comparisons against the public n-k-1.  2 * R_cmp rounds for any n >= 2.
TopkMask unsorted_topk(PartyCtx &ctx, const ShareVector &v_emb, std::size_t k);

// k repetitions of (tournament max, locate, suppress); O(nk) comparisons,
// k * (ceil(log2 n) * (R_cmp + 1) + R_cmp) rounds.
// Precondition: |v| < 2^(l-4-f-c) (suppression offset needs extra headroom).
TopkMask itermax_topk(PartyCtx &ctx, const ShareVector &v_emb, std::size_t k);

// Batcher bitonic sort, descending; input padded to a power of two with a
// low sentinel.  m(m+1)/2 stages of (R_cmp + 1) rounds, m = log2(padded n).
ShareVector bitonic_sort_desc(PartyCtx &ctx, const ShareVector &v);

// sort, then mark v_i >= (k-th sorted value)
TopkMask bitonic_topk(PartyCtx &ctx, const ShareVector &v_emb, std::size_t k);

// Argmax over the entries selected by the mask: unselected scores are pulled
// to a large negative constant, the top-1 mask is computed and opened.
// Returns the public winning index.  Requires mask.k >= 1, l > 2f + 3 and
// |scores| < 2^(l-4-2f) so live entries stay above the suppression constant.
std::size_t masked_select_max(PartyCtx &ctx, const ShareVector &scores,
                              const TopkMask &mask);

// ---- declared complexity (tests assert measured == declared) ----
u64 rounds_unsorted(const SessionConfig &cfg, std::size_t n);
u64 rounds_itermax(const SessionConfig &cfg, std::size_t n, std::size_t k);
u64 rounds_bitonic_sort(const SessionConfig &cfg, std::size_t n);
u64 rounds_bitonic_topk(const SessionConfig &cfg, std::size_t n);
u64 rounds_masked_select(const SessionConfig &cfg);
std::size_t bitonic_comparator_count(std::size_t n);

// ---- plaintext fixed-point references ----
// comparisons happen on encoded values with the same lower-index tie-break,
// so secure protocols must agree exactly
std::vector<std::size_t> plain_topk_indices(const Ring &r,
                                            std::span<const double> v,
                                            std::size_t k);
std::vector<std::uint8_t> plain_topk_mask(const Ring &r,
                                          std::span<const double> v,
                                          std::size_t k);
std::vector<double> plain_sort_desc(const Ring &r, std::span<const double> v);
std::size_t plain_argmax_masked(const Ring &r, std::span<const double> scores,
                                std::span<const std::uint8_t> mask);

} // namespace pproute::topk
