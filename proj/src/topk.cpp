#include "pproute/topk.hpp"

#include <algorithm>
#include <numeric>

namespace pproute::topk {

namespace {

void check_k(std::size_t n, std::size_t k) {
    if (n == 0)
        throw ArgError("topk: empty input");
    if (k < 1 || k > n)
        throw ArgError("topk: k out of range [1, n]");
}

ShareVector broadcast(const ShareVector &scalar, std::size_t n) {
    return {scalar.party, std::vector<u64>(n, scalar.e.at(0))};
}

} // namespace

ShareVector embed_tiebreak(const Ring &r, const ShareVector &v) {
    const std::size_t n = v.size();
    if (n == 0)
        throw ArgError("embed_tiebreak: empty input");
    const unsigned c = ceil_log2(n);
    if (c + r.f + 2 >= r.l)
        throw RangeError("embed_tiebreak: no headroom for " +
                         std::to_string(n) + " indices at l=" +
                         std::to_string(r.l));
    ShareVector out{v.party, std::vector<u64>(n)};
    kernels::scalar_mul(v.e, u64{1} << c, r.mask(), out.e);
    if (v.party == 0)
        for (std::size_t i = 0; i < n; ++i)
            out.e[i] = r.add(out.e[i], u64(n - 1 - i));
    return out;
}

TopkMask unsorted_topk(PartyCtx &ctx, const ShareVector &v_emb,
                       std::size_t k) {
    const std::size_t n = v_emb.size();
    check_k(n, k);
    const Ring &r = ctx.ring();

    // phase 1: every ordered pair once, via cyclic shifts
    ShareVector xs{ctx.party(), {}}, ys{ctx.party(), {}};
    xs.e.reserve(n * (n - 1));
    ys.e.reserve(n * (n - 1));
    for (std::size_t s = 1; s < n; ++s)
        for (std::size_t j = 0; j < n; ++j) {
            xs.e.push_back(v_emb.e[j]);
            ys.e.push_back(v_emb.e[(j + s) % n]);
        }
    ShareVector rank{ctx.party(), std::vector<u64>(n, 0)};
    if (n > 1) {
        auto c = proto::cmp_gt(ctx, xs, ys);
        // phase 2 (local): rank_j = #{i : v_j > v_i}
        for (std::size_t s = 1; s < n; ++s)
            for (std::size_t j = 0; j < n; ++j)
                rank.e[j] = r.add(rank.e[j], c.e[(s - 1) * n + j]);
    }
    // phase 3: rank_j > n-k-1 against the public threshold
    std::vector<u64> th(n, r.from_signed(i64(n) - i64(k) - 1));
    ShareVector thresh = public_share(ctx.party(), r, th);
    auto bits = proto::cmp_gt(ctx, rank, thresh);
    return {std::move(bits), k};
}

TopkMask itermax_topk(PartyCtx &ctx, const ShareVector &v_emb, std::size_t k) {
    const std::size_t n = v_emb.size();
    check_k(n, k);
    const Ring &r = ctx.ring();
    const u64 big = u64{1} << (r.l - 3); // suppression offset, below any live value

    ShareVector work = v_emb;
    ShareVector mask{ctx.party(), std::vector<u64>(n, 0)};
    std::vector<u64> tmp(n);
    for (std::size_t pass = 0; pass < k; ++pass) {
        // value-only tournament for the running maximum
        ShareVector cur = work;
        while (cur.size() > 1) {
            const std::size_t pairs = cur.size() / 2;
            ShareVector L{ctx.party(), {}}, R{ctx.party(), {}};
            L.e.reserve(pairs);
            R.e.reserve(pairs);
            for (std::size_t t = 0; t < pairs; ++t) {
                L.e.push_back(cur.e[2 * t]);
                R.e.push_back(cur.e[2 * t + 1]);
            }
            auto b = proto::cmp_gt(ctx, L, R);
            auto w = proto::mux(ctx, b, L, R);
            if (cur.size() % 2 == 1)
                w.e.push_back(cur.e.back());
            cur = std::move(w);
        }
        // locate: ge_i = 1(v_i >= max) marks exactly the winner
        auto gt = proto::cmp_gt(ctx, broadcast(cur, n), work);
        auto ge = proto::bit_not(r, gt);
        kernels::add(mask.e, ge.e, r.mask(), mask.e);
        // suppress the winner locally
        kernels::scalar_mul(ge.e, big, r.mask(), tmp);
        kernels::sub(work.e, tmp, r.mask(), work.e);
    }
    return {std::move(mask), k};
}

ShareVector bitonic_sort_desc(PartyCtx &ctx, const ShareVector &v) {
    const std::size_t n = v.size();
    if (n == 0)
        throw ArgError("bitonic_sort: empty input");
    const Ring &r = ctx.ring();
    const std::size_t P = std::size_t{1} << ceil_log2(n);

    ShareVector cur = v;
    // pad with a sentinel below every live value so it sinks to the tail
    const u64 sentinel = r.from_signed(-(i64{1} << (r.l - 3)));
    cur.e.resize(P, ctx.party() == 0 ? sentinel : 0);

    for (std::size_t kk = 2; kk <= P; kk <<= 1) {
        for (std::size_t j = kk >> 1; j > 0; j >>= 1) {
            // one network stage: disjoint comparators, one batch
            std::vector<std::size_t> lo_idx, hi_idx;
            std::vector<std::uint8_t> max_at_lo;
            for (std::size_t i = 0; i < P; ++i) {
                const std::size_t ixj = i ^ j;
                if (ixj > i) {
                    lo_idx.push_back(i);
                    hi_idx.push_back(ixj);
                    max_at_lo.push_back((i & kk) == 0 ? 1 : 0);
                }
            }
            const std::size_t m = lo_idx.size();
            ShareVector X{ctx.party(), std::vector<u64>(m)},
                Y{ctx.party(), std::vector<u64>(m)};
            for (std::size_t t = 0; t < m; ++t) {
                X.e[t] = cur.e[lo_idx[t]];
                Y.e[t] = cur.e[hi_idx[t]];
            }
            auto b = proto::cmp_gt(ctx, Y, X); // 1(y > x)
            auto hi = proto::mux(ctx, b, Y, X);
            for (std::size_t t = 0; t < m; ++t) {
                // lo = x + y - hi, no extra round
                const u64 lo =
                    r.sub(r.add(X.e[t], Y.e[t]), hi.e[t]);
                if (max_at_lo[t]) {
                    cur.e[lo_idx[t]] = hi.e[t];
                    cur.e[hi_idx[t]] = lo;
                } else {
                    cur.e[lo_idx[t]] = lo;
                    cur.e[hi_idx[t]] = hi.e[t];
                }
            }
        }
    }
    cur.e.resize(n); // descending order puts sentinels at the tail
    return cur;
}

TopkMask bitonic_topk(PartyCtx &ctx, const ShareVector &v_emb, std::size_t k) {
    const std::size_t n = v_emb.size();
    check_k(n, k);
    auto sorted = bitonic_sort_desc(ctx, v_emb);
    ShareVector kth{ctx.party(), {sorted.e[k - 1]}};
    // mask_i = 1(v_i >= kth)
    auto gt = proto::cmp_gt(ctx, broadcast(kth, n), v_emb);
    auto bits = proto::bit_not(ctx.ring(), gt);
    return {std::move(bits), k};
}

std::size_t masked_select_max(PartyCtx &ctx, const ShareVector &scores,
                              const TopkMask &mask) {
    const std::size_t n = scores.size();
    if (n == 0 || mask.bits.size() != n)
        throw ArgError("masked_select_max: size mismatch");
    if (mask.k < 1)
        throw ArgError("masked_select_max: empty selection mask");
    const Ring &r = ctx.ring();
    if (r.l <= 2 * r.f + 3)
        throw RangeError("masked_select_max: ring too narrow for the "
                         "suppression constant");

    // t' = NEG + mask * (t - NEG); NEG is far below any admissible score
    const u64 neg_raw = r.neg(u64{1} << (r.l - 3 - r.f));
    std::vector<u64> minus_neg(n, r.neg(neg_raw));
    auto shifted = add_public_raw(r, scores, minus_neg);
    auto picked = proto::mul_raw(ctx, mask.bits, shifted);
    std::vector<u64> neg_vec(n, neg_raw);
    auto t2 = add_public_raw(r, picked, neg_vec);

    auto emb = embed_tiebreak(r, t2);
    auto top1 = unsorted_topk(ctx, emb, 1);
    auto bits = proto::open_raw(ctx, top1.bits, "open");
    std::size_t idx = n;
    std::size_t ones = 0;
    for (std::size_t i = 0; i < n; ++i)
        if (bits[i] == 1) {
            ++ones;
            if (idx == n)
                idx = i;
        }
    if (ones != 1)
        throw ProtocolError("masked_select_max: opened mask is not one-hot");
    return idx;
}

// ---- declared complexity ----

u64 rounds_unsorted(const SessionConfig &cfg, std::size_t n) {
    return (n > 1 ? 2 : 1) * proto::rounds_cmp(cfg);
}

u64 rounds_itermax(const SessionConfig &cfg, std::size_t n, std::size_t k) {
    const u64 rc = proto::rounds_cmp(cfg);
    return u64(k) * (u64(ceil_log2(n)) * (rc + 1) + rc);
}

u64 rounds_bitonic_sort(const SessionConfig &cfg, std::size_t n) {
    const u64 m = ceil_log2(std::size_t{1} << ceil_log2(n));
    return m * (m + 1) / 2 * (proto::rounds_cmp(cfg) + 1);
}

u64 rounds_bitonic_topk(const SessionConfig &cfg, std::size_t n) {
    return rounds_bitonic_sort(cfg, n) + proto::rounds_cmp(cfg);
}

u64 rounds_masked_select(const SessionConfig &cfg) {
    return 1 + 2 * proto::rounds_cmp(cfg) + 1;
}

std::size_t bitonic_comparator_count(std::size_t n) {
    const std::size_t P = std::size_t{1} << ceil_log2(n);
    const std::size_t m = ceil_log2(P);
    return P / 2 * (m * (m + 1) / 2);
}

// ---- plaintext references ----

namespace {

// encoded value + lower-index-wins ordering, descending
std::vector<std::size_t> order_desc(const Ring &r, std::span<const double> v) {
    std::vector<i64> enc(v.size());
    for (std::size_t i = 0; i < v.size(); ++i)
        enc[i] = r.to_signed(r.encode(v[i]));
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        if (enc[a] != enc[b])
            return enc[a] > enc[b];
        return a < b;
    });
    return idx;
}

} // namespace

std::vector<std::size_t> plain_topk_indices(const Ring &r,
                                            std::span<const double> v,
                                            std::size_t k) {
    check_k(v.size(), k);
    auto idx = order_desc(r, v);
    idx.resize(k);
    return idx;
}

std::vector<std::uint8_t> plain_topk_mask(const Ring &r,
                                          std::span<const double> v,
                                          std::size_t k) {
    auto idx = plain_topk_indices(r, v, k);
    std::vector<std::uint8_t> mask(v.size(), 0);
    for (auto i : idx)
        mask[i] = 1;
    return mask;
}

std::vector<double> plain_sort_desc(const Ring &r, std::span<const double> v) {
    auto idx = order_desc(r, v);
    std::vector<double> out;
    out.reserve(v.size());
    for (auto i : idx)
        out.push_back(r.decode(r.encode(v[i])));
    return out;
}

std::size_t plain_argmax_masked(const Ring &r, std::span<const double> scores,
                                std::span<const std::uint8_t> mask) {
    if (scores.size() != mask.size() || scores.empty())
        throw ArgError("plain_argmax_masked: size mismatch");
    std::size_t best = scores.size();
    i64 best_enc = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (!mask[i])
            continue;
        i64 e = r.to_signed(r.encode(scores[i]));
        if (best == scores.size() || e > best_enc) {
            best = i;
            best_enc = e;
        }
    }
    if (best == scores.size())
        throw ArgError("plain_argmax_masked: empty mask");
    return best;
}

} // namespace pproute::topk
