#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "pproute/kernels.hpp"
#include "pproute/ring.hpp"
#include "pproute/rng.hpp"

namespace pproute {

// One party's half of an additively shared vector: x = (e0 + e1) mod 2^l.
// Party tags exist to catch crossed wires early, not for security.
struct ShareVector {
    int party = 0;
    std::vector<u64> e;

    std::size_t size() const { return e.size(); }
};

// Share a raw ring element: h0 uniform, h1 = v - h0.
inline std::array<u64, 2> share_elem(Rng &rng, const Ring &r, u64 v) {
    u64 h0 = rng.next_elem(r);
    return {h0, r.sub(v, h0)};
}

inline std::array<ShareVector, 2> share_vec(Rng &rng, const Ring &r,
                                            std::span<const u64> v) {
    ShareVector s0{0, {}}, s1{1, {}};
    s0.e.reserve(v.size());
    s1.e.reserve(v.size());
    for (u64 x : v) {
        auto h = share_elem(rng, r, x);
        s0.e.push_back(h[0]);
        s1.e.push_back(h[1]);
    }
    return {std::move(s0), std::move(s1)};
}

inline std::array<ShareVector, 2> share_reals(Rng &rng, const Ring &r,
                                              std::span<const double> x) {
    std::vector<u64> raw(x.size());
    kernels::encode(x, r, raw);
    return share_vec(rng, r, raw);
}

inline std::vector<u64> reconstruct(const Ring &r, const ShareVector &a,
                                    const ShareVector &b) {
    return kernels::add(a.e, b.e, r.mask());
}

inline std::vector<double> reconstruct_reals(const Ring &r,
                                             const ShareVector &a,
                                             const ShareVector &b) {
    auto raw = reconstruct(r, a, b);
    std::vector<double> out(raw.size());
    kernels::decode(raw, r, out);
    return out;
}

// A value both parties know: party 0 carries it, party 1 carries zero.
inline ShareVector public_share(int party, const Ring &r,
                                std::span<const u64> v) {
    ShareVector s{party, {}};
    s.e.assign(v.begin(), v.end());
    if (party != 0)
        std::fill(s.e.begin(), s.e.end(), 0);
    else
        for (auto &x : s.e)
            x &= r.mask();
    return s;
}

// ---- local linear algebra on shares (no communication) ----

inline ShareVector add_shares(const Ring &r, const ShareVector &a,
                              const ShareVector &b) {
    ShareVector out{a.party, kernels::add(a.e, b.e, r.mask())};
    return out;
}

inline ShareVector sub_shares(const Ring &r, const ShareVector &a,
                              const ShareVector &b) {
    ShareVector out{a.party, kernels::sub(a.e, b.e, r.mask())};
    return out;
}

inline ShareVector neg_share(const Ring &r, const ShareVector &a) {
    ShareVector out{a.party, {}};
    out.e.resize(a.size());
    kernels::neg(a.e, r.mask(), out.e);
    return out;
}

// add a public raw constant: only party 0 applies it
inline ShareVector add_public_raw(const Ring &r, const ShareVector &a,
                                  std::span<const u64> pub) {
    ShareVector out = a;
    if (a.party == 0)
        kernels::add(a.e, pub, r.mask(), out.e);
    return out;
}

inline ShareVector add_public_real(const Ring &r, const ShareVector &a,
                                   double v) {
    ShareVector out = a;
    if (a.party == 0) {
        u64 c = r.encode(v);
        for (auto &x : out.e)
            x = r.add(x, c);
    }
    return out;
}

// multiply by a public integer (exact, scale preserved)
inline ShareVector mul_public_int(const Ring &r, const ShareVector &a,
                                  i64 scalar) {
    ShareVector out{a.party, {}};
    out.e.resize(a.size());
    kernels::scalar_mul(a.e, r.from_signed(scalar), r.mask(), out.e);
    return out;
}

// multiply by a public real: encoded product at scale 2f, one local
// truncation back to f
inline ShareVector mul_public_real(const Ring &r, const ShareVector &a,
                                   double scalar) {
    ShareVector out{a.party, {}};
    out.e.resize(a.size());
    kernels::scalar_mul(a.e, r.encode(scalar), r.mask(), out.e);
    kernels::trunc_shift(out.e, r, out.e);
    return out;
}

// Linear combination sum_i coeff[i] * x_i with public real coefficients.
// All-integer coefficients take the exact path (no truncation); otherwise
// coefficients are encoded, products accumulate at scale 2f and one
// share-local truncation is applied at the end.
ShareVector lin_combine(const Ring &r, std::span<const double> coeffs,
                        std::span<const ShareVector> xs);

} // namespace pproute
