#include "pproute/kernels.hpp"

#include <atomic>
#include <cassert>

namespace pproute::kernels {

namespace {
std::atomic<Exec> g_exec{Exec::parallel};
} // namespace

Exec exec() { return g_exec.load(std::memory_order_relaxed); }
void set_exec(Exec e) { g_exec.store(e, std::memory_order_relaxed); }

#ifdef _OPENMP
#define PPR_OMP_FOR _Pragma("omp parallel for schedule(static)")
#else
#define PPR_OMP_FOR
#endif

// Each kernel: *_serial is the reference loop; the public entry runs an
// OpenMP copy of the same body when enabled and the batch is big enough.
// `body` sees the loop index as `i`.
#define PPR_DISPATCH(n, serial_call, body)                                     \
    do {                                                                       \
        const long long ppr_n = (long long)(n);                               \
        if (exec() == Exec::parallel && ppr_n >= (long long)kParGrain) {       \
            PPR_OMP_FOR                                                        \
            for (long long i = 0; i < ppr_n; ++i) {                           \
                body                                                           \
            }                                                                  \
        } else {                                                               \
            serial_call;                                                       \
        }                                                                      \
    } while (0)

namespace {

void add_serial(cspan a, cspan b, u64 mask, mspan out) {
    for (std::size_t i = 0; i < a.size(); ++i)
        out[i] = (a[i] + b[i]) & mask;
}
void sub_serial(cspan a, cspan b, u64 mask, mspan out) {
    for (std::size_t i = 0; i < a.size(); ++i)
        out[i] = (a[i] - b[i]) & mask;
}
void mul_serial(cspan a, cspan b, u64 mask, mspan out) {
    for (std::size_t i = 0; i < a.size(); ++i)
        out[i] = (a[i] * b[i]) & mask;
}
void neg_serial(cspan a, u64 mask, mspan out) {
    for (std::size_t i = 0; i < a.size(); ++i)
        out[i] = (~a[i] + 1) & mask;
}
void scalar_mul_serial(cspan a, u64 s, u64 mask, mspan out) {
    for (std::size_t i = 0; i < a.size(); ++i)
        out[i] = (a[i] * s) & mask;
}
void beaver_arith_serial(cspan d, cspan e, cspan a, cspan b, cspan c,
                         bool add_de, u64 mask, mspan out) {
    for (std::size_t i = 0; i < d.size(); ++i) {
        u64 z = c[i] + d[i] * b[i] + e[i] * a[i];
        if (add_de)
            z += d[i] * e[i];
        out[i] = z & mask;
    }
}
void beaver_bool_serial(cspan d, cspan e, cspan a, cspan b, cspan c,
                        bool add_de, u64 mask, mspan out) {
    for (std::size_t i = 0; i < d.size(); ++i) {
        u64 z = c[i] ^ (d[i] & b[i]) ^ (e[i] & a[i]);
        if (add_de)
            z ^= d[i] & e[i];
        out[i] = z & mask;
    }
}
void xor_serial(cspan a, cspan b, u64 mask, mspan out) {
    for (std::size_t i = 0; i < a.size(); ++i)
        out[i] = (a[i] ^ b[i]) & mask;
}
void and_serial(cspan a, cspan b, u64 mask, mspan out) {
    for (std::size_t i = 0; i < a.size(); ++i)
        out[i] = (a[i] & b[i]) & mask;
}
void shl_serial(cspan a, unsigned d, u64 mask, mspan out) {
    for (std::size_t i = 0; i < a.size(); ++i)
        out[i] = (a[i] << d) & mask;
}
void trunc_shift_serial(cspan a, const Ring &r, mspan out) {
    for (std::size_t i = 0; i < a.size(); ++i)
        out[i] = r.shift_arith(a[i]);
}
void encode_serial(std::span<const double> x, const Ring &r, mspan out) {
    for (std::size_t i = 0; i < x.size(); ++i)
        out[i] = r.encode(x[i]);
}
void decode_serial(cspan a, const Ring &r, std::span<double> out) {
    for (std::size_t i = 0; i < a.size(); ++i)
        out[i] = r.decode(a[i]);
}

} // namespace

void add(cspan a, cspan b, u64 mask, mspan out) {
    assert(a.size() == b.size() && a.size() == out.size());
    PPR_DISPATCH(a.size(), add_serial(a, b, mask, out),
                 out[i] = (a[i] + b[i]) & mask;);
}

void sub(cspan a, cspan b, u64 mask, mspan out) {
    assert(a.size() == b.size() && a.size() == out.size());
    PPR_DISPATCH(a.size(), sub_serial(a, b, mask, out),
                 out[i] = (a[i] - b[i]) & mask;);
}

void mul(cspan a, cspan b, u64 mask, mspan out) {
    assert(a.size() == b.size() && a.size() == out.size());
    PPR_DISPATCH(a.size(), mul_serial(a, b, mask, out),
                 out[i] = (a[i] * b[i]) & mask;);
}

void neg(cspan a, u64 mask, mspan out) {
    assert(a.size() == out.size());
    PPR_DISPATCH(a.size(), neg_serial(a, mask, out),
                 out[i] = (~a[i] + 1) & mask;);
}

void scalar_mul(cspan a, u64 s, u64 mask, mspan out) {
    assert(a.size() == out.size());
    PPR_DISPATCH(a.size(), scalar_mul_serial(a, s, mask, out),
                 out[i] = (a[i] * s) & mask;);
}

void beaver_arith(cspan d, cspan e, cspan a, cspan b, cspan c, bool add_de,
                  u64 mask, mspan out) {
    assert(d.size() == e.size() && d.size() == a.size() &&
           d.size() == b.size() && d.size() == c.size() &&
           d.size() == out.size());
    PPR_DISPATCH(d.size(), beaver_arith_serial(d, e, a, b, c, add_de, mask, out),
                 u64 z = c[i] + d[i] * b[i] + e[i] * a[i];
                 if (add_de) z += d[i] * e[i];
                 out[i] = z & mask;);
}

void beaver_bool(cspan d, cspan e, cspan a, cspan b, cspan c, bool add_de,
                 u64 mask, mspan out) {
    assert(d.size() == e.size() && d.size() == a.size() &&
           d.size() == b.size() && d.size() == c.size() &&
           d.size() == out.size());
    PPR_DISPATCH(d.size(), beaver_bool_serial(d, e, a, b, c, add_de, mask, out),
                 u64 z = c[i] ^ (d[i] & b[i]) ^ (e[i] & a[i]);
                 if (add_de) z ^= d[i] & e[i];
                 out[i] = z & mask;);
}

void xor_(cspan a, cspan b, u64 mask, mspan out) {
    assert(a.size() == b.size() && a.size() == out.size());
    PPR_DISPATCH(a.size(), xor_serial(a, b, mask, out),
                 out[i] = (a[i] ^ b[i]) & mask;);
}

void and_(cspan a, cspan b, u64 mask, mspan out) {
    assert(a.size() == b.size() && a.size() == out.size());
    PPR_DISPATCH(a.size(), and_serial(a, b, mask, out),
                 out[i] = (a[i] & b[i]) & mask;);
}

void shl(cspan a, unsigned d, u64 mask, mspan out) {
    assert(a.size() == out.size());
    PPR_DISPATCH(a.size(), shl_serial(a, d, mask, out),
                 out[i] = (a[i] << d) & mask;);
}

void trunc_shift(cspan a, const Ring &r, mspan out) {
    assert(a.size() == out.size());
    PPR_DISPATCH(a.size(), trunc_shift_serial(a, r, out),
                 out[i] = r.shift_arith(a[i]););
}

void encode(std::span<const double> x, const Ring &r, mspan out) {
    assert(x.size() == out.size());
    // RangeError must escape; OpenMP cannot throw across the region, so
    // encoding always takes the serial loop.
    encode_serial(x, r, out);
}

void decode(cspan a, const Ring &r, std::span<double> out) {
    assert(a.size() == out.size());
    PPR_DISPATCH(a.size(), decode_serial(a, r, out),
                 out[i] = r.decode(a[i]););
}

u64 sum(cspan a, u64 mask) {
    // u64 addition is associative mod 2^64, so a parallel reduction is still
    // deterministic.
    u64 s = 0;
    if (exec() == Exec::parallel && a.size() >= kParGrain) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static) reduction(+ : s)
#endif
        for (long long i = 0; i < (long long)a.size(); ++i)
            s += a[i];
    } else {
        for (std::size_t i = 0; i < a.size(); ++i)
            s += a[i];
    }
    return s & mask;
}

std::vector<u64> add(cspan a, cspan b, u64 mask) {
    std::vector<u64> out(a.size());
    add(a, b, mask, out);
    return out;
}
std::vector<u64> sub(cspan a, cspan b, u64 mask) {
    std::vector<u64> out(a.size());
    sub(a, b, mask, out);
    return out;
}

} // namespace pproute::kernels
