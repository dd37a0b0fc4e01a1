#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include "pproute/errors.hpp"

namespace pproute {

using u64 = std::uint64_t;
using i64 = std::int64_t;

// Ring Z_{2^l} with fixed-point encoding at scale 2^f, two's complement for
// negatives.  Elements live in the low l bits of a u64; every operation masks
// back into the ring.  l = 64 is the production width, small widths (8, 16)
// exist so tests can sweep rings exhaustively.
struct Ring {
    unsigned l = 64; // word width, 2 <= l <= 64
    unsigned f = 16; // fraction bits, 0 < f < l

    constexpr u64 mask() const {
        return l >= 64 ? ~u64{0} : ((u64{1} << l) - 1);
    }
    constexpr u64 sign_bit() const { return u64{1} << (l - 1); }

    bool valid() const { return l >= 2 && l <= 64 && f > 0 && f < l; }
    void check() const {
        if (!valid())
            throw ConfigError("ring: invalid (l=" + std::to_string(l) +
                              ", f=" + std::to_string(f) + ")");
    }

    constexpr u64 add(u64 a, u64 b) const { return (a + b) & mask(); }
    constexpr u64 sub(u64 a, u64 b) const { return (a - b) & mask(); }
    constexpr u64 mul(u64 a, u64 b) const { return (a * b) & mask(); }
    constexpr u64 neg(u64 a) const { return (~a + 1) & mask(); }

    // Interpret the low l bits as a signed value.
    constexpr i64 to_signed(u64 a) const {
        a &= mask();
        if (l >= 64)
            return static_cast<i64>(a);
        return (a & sign_bit()) ? static_cast<i64>(a | ~mask())
                                : static_cast<i64>(a);
    }
    constexpr u64 from_signed(i64 v) const {
        return static_cast<u64>(v) & mask();
    }

    constexpr unsigned msb(u64 a) const { return unsigned((a >> (l - 1)) & 1); }

    // Largest magnitude representable as a real: |x| < 2^(l-1-f).
    double max_abs_real() const { return std::ldexp(1.0, int(l - 1 - f)); }

    // encode: real -> ring, round half away from zero.  Throws RangeError when
    // the rounded value does not fit the signed range.
    u64 encode(double x) const {
        if (!std::isfinite(x))
            throw RangeError("encode: non-finite input");
        double scaled = std::ldexp(x, int(f));
        // Signed bound 2^(l-1); llround is half-away-from-zero per C99.
        if (!(std::fabs(scaled) < std::ldexp(1.0, int(l - 1))))
            throw RangeError("encode: |" + std::to_string(x) +
                             "| exceeds representable range");
        return from_signed(std::llround(scaled));
    }

    double decode(u64 a) const {
        return std::ldexp(double(to_signed(a)), -int(f));
    }

    // Share-local probabilistic truncation: arithmetic shift of one share.
    // On the reconstructed value this divides by 2^f with error in (-2, 0]
    // LSB plus a rare large wrap (prob ~ 2^(b+1-l) for |value| < 2^b).
    constexpr u64 shift_arith(u64 a) const {
        i64 s = to_signed(a);
        return from_signed(s >> f);
    }
};

// The public fixed-point configuration is the ring itself: (l, f).
using FixedPointConfig = Ring;

constexpr unsigned ceil_log2(u64 n) {
    unsigned k = 0;
    u64 v = 1;
    while (v < n) {
        v <<= 1;
        ++k;
    }
    return k;
}

} // namespace pproute
