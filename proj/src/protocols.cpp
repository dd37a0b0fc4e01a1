#include "pproute/protocols.hpp"

#include <cmath>

namespace pproute::proto {

namespace {

void check_party(const PartyCtx &ctx, const ShareVector &v) {
    if (v.party != ctx.party())
        throw ProtocolError("share vector belongs to the wrong party");
}

void check_same_size(const ShareVector &a, const ShareVector &b) {
    if (a.size() != b.size())
        throw ArgError("share vector size mismatch");
}

} // namespace

u64 rounds_cmp(const SessionConfig &cfg) {
    if (cfg.backend == CmpBackend::dealer_oracle)
        return 2;
    // mask-and-open + borrow circuit levels + two B2A phases
    return 2 + ceil_log2(cfg.ring.l) + 1;
}

std::vector<u64> open_raw(PartyCtx &ctx, const ShareVector &x,
                          std::string_view label) {
    check_party(ctx, x);
    auto other = ctx.exchange_elems(label, x.e);
    if (other.size() != x.size())
        throw ProtocolError("open: peer share length mismatch");
    return kernels::add(x.e, other, ctx.ring().mask());
}

std::vector<double> open_reals(PartyCtx &ctx, const ShareVector &x,
                               std::string_view label) {
    auto raw = open_raw(ctx, x, label);
    std::vector<double> out(raw.size());
    kernels::decode(raw, ctx.ring(), out);
    return out;
}

ShareVector share_private(PartyCtx &ctx, int owner,
                          std::span<const double> vals, std::size_t n,
                          std::string_view label) {
    if (owner != 0 && owner != 1)
        throw ArgError("share_private: owner must be 0 or 1");
    const Ring &r = ctx.ring();
    if (ctx.party() == owner) {
        if (vals.size() != n)
            throw ArgError("share_private: owner value count != n");
        std::vector<u64> raw(n), mask(n);
        kernels::encode(vals, r, raw);
        for (auto &m : mask)
            m = ctx.rng().next_elem(r);
        auto mine = kernels::sub(raw, mask, r.mask());
        auto in = ctx.exchange_elems(label, mask);
        if (!in.empty())
            throw ProtocolError("share_private: unexpected payload from "
                                "non-owner");
        return {ctx.party(), std::move(mine)};
    }
    auto in = ctx.exchange_elems(label, {});
    if (in.size() != n)
        throw ProtocolError("share_private: bad mask length from owner");
    return {ctx.party(), std::move(in)};
}

std::pair<ShareVector, ShareVector>
share_inputs(PartyCtx &ctx, std::span<const double> my_vals, std::size_t n0,
             std::size_t n1, std::string_view label) {
    const Ring &r = ctx.ring();
    const int p = ctx.party();
    const std::size_t mine_n = p == 0 ? n0 : n1;
    const std::size_t theirs_n = p == 0 ? n1 : n0;
    if (my_vals.size() != mine_n)
        throw ArgError("share_inputs: value count != declared length");
    std::vector<u64> raw(mine_n), mask(mine_n);
    kernels::encode(my_vals, r, raw);
    for (auto &m : mask)
        m = ctx.rng().next_elem(r);
    ShareVector mine{p, kernels::sub(raw, mask, r.mask())};
    auto in = ctx.exchange_elems(label, mask);
    if (in.size() != theirs_n)
        throw ProtocolError("share_inputs: bad mask length from peer");
    ShareVector theirs{p, std::move(in)};
    if (p == 0)
        return {std::move(mine), std::move(theirs)};
    return {std::move(theirs), std::move(mine)};
}

ShareVector mul_raw(PartyCtx &ctx, const ShareVector &x, const ShareVector &y,
                    std::string_view label) {
    check_party(ctx, x);
    check_party(ctx, y);
    check_same_size(x, y);
    const Ring &r = ctx.ring();
    const std::size_t n = x.size();
    auto triples = ctx.take_arith_triples(n);

    std::vector<u64> de(2 * n);
    for (std::size_t i = 0; i < n; ++i) {
        de[i] = r.sub(x.e[i], triples[i].a);
        de[n + i] = r.sub(y.e[i], triples[i].b);
    }
    auto other = ctx.exchange_elems(label, de);
    if (other.size() != 2 * n)
        throw ProtocolError("mul: peer payload length mismatch");
    std::vector<u64> d(n), e(n), a(n), b(n), c(n), out(n);
    for (std::size_t i = 0; i < n; ++i) {
        d[i] = r.add(de[i], other[i]);
        e[i] = r.add(de[n + i], other[n + i]);
        a[i] = triples[i].a;
        b[i] = triples[i].b;
        c[i] = triples[i].c;
    }
    kernels::beaver_arith(d, e, a, b, c, ctx.party() == 0, r.mask(), out);
    return {ctx.party(), std::move(out)};
}

ShareVector trunc(const Ring &r, const ShareVector &x) {
    ShareVector out{x.party, std::vector<u64>(x.size())};
    kernels::trunc_shift(x.e, r, out.e);
    return out;
}

ShareVector mul_fixed(PartyCtx &ctx, const ShareVector &x,
                      const ShareVector &y, std::string_view label) {
    return trunc(ctx.ring(), mul_raw(ctx, x, y, label));
}

// ---- comparison ----

namespace {

// boolean AND on packed words via Beaver triples; both operands XOR-shared.
// One exchange for the whole batch.
std::vector<u64> and_words(PartyCtx &ctx, std::span<const u64> x,
                           std::span<const u64> y, std::string_view label) {
    const Ring &r = ctx.ring();
    const std::size_t n = x.size();
    auto triples = ctx.take_bool_triples(n);
    std::vector<u64> de(2 * n);
    for (std::size_t i = 0; i < n; ++i) {
        de[i] = (x[i] ^ triples[i].a) & r.mask();
        de[n + i] = (y[i] ^ triples[i].b) & r.mask();
    }
    auto other = ctx.exchange_elems(label, de);
    if (other.size() != 2 * n)
        throw ProtocolError("and: peer payload length mismatch");
    std::vector<u64> d(n), e(n), a(n), b(n), c(n), out(n);
    for (std::size_t i = 0; i < n; ++i) {
        d[i] = de[i] ^ other[i];
        e[i] = de[n + i] ^ other[n + i];
        a[i] = triples[i].a;
        b[i] = triples[i].b;
        c[i] = triples[i].c;
    }
    kernels::beaver_bool(d, e, a, b, c, ctx.party() == 0, r.mask(), out);
    return out;
}

// XOR-shared sign bit of z (packed per element in bit 0 of the result word),
// computed from the masked opening w = z + r and the bitwise borrow circuit.
std::vector<u64> msb_circuit(PartyCtx &ctx, const ShareVector &z,
                             std::string_view label) {
    const Ring &r = ctx.ring();
    const unsigned l = r.l;
    const std::size_t n = z.size();
    auto cr = ctx.take_cmp_rand(n);

    // open w = z + r
    std::vector<u64> w_sh(n);
    for (std::size_t i = 0; i < n; ++i)
        w_sh[i] = r.add(z.e[i], cr[i].r_arith);
    auto other = ctx.exchange_elems(label, w_sh);
    if (other.size() != n)
        throw ProtocolError("cmp: peer payload length mismatch");
    std::vector<u64> w(n);
    for (std::size_t i = 0; i < n; ++i)
        w[i] = r.add(w_sh[i], other[i]);

    // z = w - r; borrow generate g = ~w & r, propagate p = ~(w ^ r), both
    // XOR-shared (w is public, r is bit-shared)
    std::vector<u64> g(n), p(n);
    for (std::size_t i = 0; i < n; ++i) {
        g[i] = (~w[i]) & cr[i].r_bits & r.mask();
        p[i] = ctx.party() == 0 ? (~(w[i] ^ cr[i].r_bits)) & r.mask()
                                : cr[i].r_bits;
    }

    // Kogge-Stone: after all levels, bit i of g holds borrow-generate over
    // [0..i]; the borrow into the sign bit is bit l-2
    const unsigned levels = ceil_log2(l);
    std::vector<u64> t1(n), t2(n), shifted(n);
    for (unsigned lev = 0; lev < levels; ++lev) {
        const unsigned dsh = 1u << lev;
        const bool last = lev + 1 == levels;
        kernels::shl(g, dsh, r.mask(), shifted);
        if (!last) {
            // both ANDs of the level share one exchange
            std::vector<u64> lhs(2 * n), rhs(2 * n);
            std::vector<u64> pshift(n);
            kernels::shl(p, dsh, r.mask(), pshift);
            std::copy(p.begin(), p.end(), lhs.begin());
            std::copy(p.begin(), p.end(), lhs.begin() + long(n));
            std::copy(shifted.begin(), shifted.end(), rhs.begin());
            std::copy(pshift.begin(), pshift.end(), rhs.begin() + long(n));
            auto both = and_words(ctx, lhs, rhs, label);
            for (std::size_t i = 0; i < n; ++i) {
                g[i] = (g[i] ^ both[i]) & r.mask();
                p[i] = both[n + i];
            }
        } else {
            auto anded = and_words(ctx, p, shifted, label);
            for (std::size_t i = 0; i < n; ++i)
                g[i] = (g[i] ^ anded[i]) & r.mask();
        }
    }

    // sign bit of z: w_{l-1} ^ r_{l-1} ^ borrow_{l-1}
    std::vector<u64> beta(n);
    for (std::size_t i = 0; i < n; ++i) {
        u64 b = (g[i] >> (l - 2)) & 1;
        b ^= (cr[i].r_bits >> (l - 1)) & 1;
        if (ctx.party() == 0)
            b ^= (w[i] >> (l - 1)) & 1;
        beta[i] = b;
    }
    return beta;
}

// XOR-shared bits -> arithmetic bit shares: cross-share both parties' bits
// (one round), then one Beaver product for b0 + b1 - 2 b0 b1.
ShareVector b2a(PartyCtx &ctx, std::span<const u64> beta,
                std::string_view label) {
    const Ring &r = ctx.ring();
    const std::size_t n = beta.size();
    std::vector<u64> rho(n), mine_minus_rho(n);
    for (std::size_t i = 0; i < n; ++i) {
        rho[i] = ctx.rng().next_elem(r);
        mine_minus_rho[i] = r.sub(beta[i] & 1, rho[i]);
    }
    auto other_rho = ctx.exchange_elems(label, rho);
    if (other_rho.size() != n)
        throw ProtocolError("b2a: peer payload length mismatch");
    // u = shares of party0's bit, v = shares of party1's bit
    ShareVector u{ctx.party(), {}}, v{ctx.party(), {}};
    if (ctx.party() == 0) {
        u.e = mine_minus_rho;
        v.e = other_rho;
    } else {
        u.e = other_rho;
        v.e = mine_minus_rho;
    }
    auto prod = mul_raw(ctx, u, v, label);
    std::vector<u64> out(n);
    for (std::size_t i = 0; i < n; ++i)
        out[i] = r.sub(r.add(u.e[i], v.e[i]), r.mul(2, prod.e[i]));
    return {ctx.party(), std::move(out)};
}

} // namespace

ShareVector cmp_gt(PartyCtx &ctx, const ShareVector &x, const ShareVector &y,
                   std::string_view label) {
    check_party(ctx, x);
    check_party(ctx, y);
    check_same_size(x, y);
    const Ring &r = ctx.ring();
    // 1(x > y) = sign bit of y - x, exact while |x - y| does not wrap
    ShareVector z = sub_shares(r, y, x);
    if (ctx.backend() == CmpBackend::dealer_oracle) {
        auto resp = ctx.dealer_query(DealerOp::cmp_sign, label, z.e);
        if (resp.size() != z.size())
            throw ProtocolError("cmp: dealer response length mismatch");
        return {ctx.party(), std::move(resp)};
    }
    auto beta = msb_circuit(ctx, z, label);
    return b2a(ctx, beta, label);
}

ShareVector drelu(PartyCtx &ctx, const ShareVector &x, std::string_view label) {
    ShareVector zero{ctx.party(), std::vector<u64>(x.size(), 0)};
    return cmp_gt(ctx, x, zero, label);
}

ShareVector relu(PartyCtx &ctx, const ShareVector &x, std::string_view label) {
    auto bits = drelu(ctx, x, label);
    return mul_raw(ctx, bits, x, label); // bit * value: exact, no truncation
}

ShareVector bit_not(const Ring &r, const ShareVector &bits) {
    ShareVector out = bits;
    for (auto &b : out.e)
        b = bits.party == 0 ? r.sub(1, b) : r.neg(b);
    return out;
}

ShareVector mux(PartyCtx &ctx, const ShareVector &bits, const ShareVector &x,
                const ShareVector &y, std::string_view label) {
    auto diff = sub_shares(ctx.ring(), x, y);
    auto prod = mul_raw(ctx, bits, diff, label);
    return add_shares(ctx.ring(), y, prod);
}

ShareVector dot(PartyCtx &ctx, const ShareVector &x, const ShareVector &y,
                std::string_view label) {
    auto prods = mul_raw(ctx, x, y, label);
    u64 s = kernels::sum(prods.e, ctx.ring().mask());
    return {ctx.party(), {ctx.ring().shift_arith(s)}};
}

std::vector<ShareVector> matmul_many(PartyCtx &ctx,
                                     std::span<const MatmulJob> jobs,
                                     std::string_view label) {
    const Ring &r = ctx.ring();
    std::size_t total = 0;
    for (const auto &j : jobs) {
        if (j.A->size() != j.s * j.k || j.B->size() != j.k * j.m)
            throw ArgError("matmul: dimension mismatch");
        total += j.s * j.k * j.m;
    }
    ShareVector xf{ctx.party(), {}}, yf{ctx.party(), {}};
    xf.e.reserve(total);
    yf.e.reserve(total);
    for (const auto &j : jobs)
        for (std::size_t i = 0; i < j.s; ++i)
            for (std::size_t jj = 0; jj < j.m; ++jj)
                for (std::size_t t = 0; t < j.k; ++t) {
                    xf.e.push_back(j.A->e[i * j.k + t]);
                    yf.e.push_back(j.B->e[t * j.m + jj]);
                }
    auto prods = mul_raw(ctx, xf, yf, label);
    std::vector<ShareVector> outs;
    outs.reserve(jobs.size());
    std::size_t off = 0;
    for (const auto &j : jobs) {
        ShareVector out{ctx.party(), std::vector<u64>(j.s * j.m)};
        for (std::size_t cell = 0; cell < j.s * j.m; ++cell) {
            u64 acc = 0;
            for (std::size_t t = 0; t < j.k; ++t)
                acc += prods.e[off + cell * j.k + t];
            out.e[cell] = r.shift_arith(acc & r.mask());
        }
        off += j.s * j.m * j.k;
        outs.push_back(std::move(out));
    }
    return outs;
}

ShareVector matmul(PartyCtx &ctx, const ShareVector &A, const ShareVector &B,
                   std::size_t s, std::size_t k, std::size_t m,
                   std::string_view label) {
    MatmulJob j{&A, &B, s, k, m};
    return std::move(matmul_many(ctx, {&j, 1}, label)[0]);
}

ShareVector matvec(PartyCtx &ctx, const ShareVector &M, const ShareVector &v,
                   std::size_t n, std::size_t d, std::string_view label) {
    return matmul(ctx, M, v, n, d, 1, label);
}

ShareVector reciprocal(PartyCtx &ctx, const ShareVector &x, double lo,
                       double hi, std::string_view label) {
    if (!(lo > 0.0) || !(hi >= lo) || !std::isfinite(hi))
        throw ArgError("reciprocal: need 0 < lo <= hi");
    const Ring &r = ctx.ring();
    const std::size_t n = x.size();
    const double y0 = 2.0 / (lo + hi);
    std::vector<u64> y0raw(n, r.encode(y0));
    ShareVector y = public_share(ctx.party(), r, y0raw);
    for (unsigned it = 0; it < ctx.config().recip_iters; ++it) {
        auto t = mul_fixed(ctx, x, y, label);
        auto s = add_public_real(r, neg_share(r, t), 2.0);
        y = mul_fixed(ctx, y, s, label);
    }
    return y;
}

ShareVector softmax_2relu(PartyCtx &ctx, const ShareVector &x,
                          std::size_t rows, std::size_t m, double entry_bound) {
    if (rows * m != x.size())
        throw ArgError("softmax: rows*m != input length");
    if (m == 0)
        throw ArgError("softmax: empty rows");
    if (!(entry_bound > 0))
        throw ArgError("softmax: entry_bound must be positive");
    const Ring &r = ctx.ring();

    auto nums = relu(ctx, x); // exact ReLU numerators
    // denominator: row sum + eps, eps = m * 2^-f (raw integer m)
    ShareVector den{ctx.party(), std::vector<u64>(rows, 0)};
    for (std::size_t i = 0; i < rows; ++i) {
        u64 acc = 0;
        for (std::size_t j = 0; j < m; ++j)
            acc += nums.e[i * m + j];
        if (ctx.party() == 0)
            acc += u64(m);
        den.e[i] = acc & r.mask();
    }
    const double lo = std::ldexp(double(m), -int(r.f)); // the eps floor
    const double hi = double(m) * entry_bound + 1.0;
    auto rec = reciprocal(ctx, den, lo, hi, "recip");
    // broadcast each row's reciprocal across the row
    ShareVector rec_b{ctx.party(), std::vector<u64>(rows * m)};
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < m; ++j)
            rec_b.e[i * m + j] = rec.e[i];
    return mul_fixed(ctx, nums, rec_b, "mul");
}

} // namespace pproute::proto
