#include <doctest.h>

#include <cmath>

#include "pproute/ring.hpp"
#include "pproute/rng.hpp"

using namespace pproute;

TEST_CASE("ring arithmetic is exhaustively consistent at l=8") {
    Ring r{8, 2};
    const u64 M = 256;
    for (u64 a = 0; a < M; ++a) {
        CHECK(r.add(a, r.neg(a)) == 0);
        CHECK(r.sub(a, a) == 0);
        CHECK(r.to_signed(r.from_signed(r.to_signed(a))) == r.to_signed(a));
        for (u64 b = 0; b < M; ++b) {
            CHECK(r.add(a, b) == ((a + b) % M));
            CHECK(r.sub(a, b) == ((a + M - b) % M));
            CHECK(r.mul(a, b) == ((a * b) % M));
            // signed interpretation is a ring homomorphism mod 2^l
            i64 s = r.to_signed(a) + r.to_signed(b);
            CHECK(r.from_signed(s) == r.add(a, b));
        }
    }
}

TEST_CASE("signed interpretation at the edges") {
    Ring r{8, 2};
    CHECK(r.to_signed(0x7f) == 127);
    CHECK(r.to_signed(0x80) == -128);
    CHECK(r.to_signed(0xff) == -1);
    CHECK(r.from_signed(-1) == 0xff);
    CHECK(r.msb(0x80) == 1);
    CHECK(r.msb(0x7f) == 0);

    Ring r64{};
    CHECK(r64.to_signed(~u64{0}) == -1);
    CHECK(r64.msb(u64{1} << 63) == 1);
}

TEST_CASE("encode/decode round-trips on the representable grid") {
    Ring r{};
    Rng rng(7);
    for (int t = 0; t < 2000; ++t) {
        // a value exactly on the 2^-f grid survives the round trip
        i64 q = i64(rng.next_below(1u << 20)) - (1 << 19);
        double x = std::ldexp(double(q), -int(r.f));
        CHECK(r.decode(r.encode(x)) == x);
    }
    CHECK(r.encode(0.0) == 0);
    CHECK(r.decode(r.encode(-1.5)) == -1.5);
}

TEST_CASE("encode rounds half away from zero") {
    Ring r{};
    const double half = std::ldexp(0.5, -int(r.f));
    CHECK(r.to_signed(r.encode(3 * half * 2 + half)) == 4); // 3.5 ulp -> 4
    CHECK(r.to_signed(r.encode(half)) == 1);
    CHECK(r.to_signed(r.encode(-half)) == -1);
    CHECK(r.to_signed(r.encode(2.5 * std::ldexp(1.0, -int(r.f)))) == 3);
    CHECK(r.to_signed(r.encode(-2.5 * std::ldexp(1.0, -int(r.f)))) == -3);
}

TEST_CASE("encode rejects out-of-range and non-finite input") {
    Ring r{};
    const double lim = r.max_abs_real();
    CHECK_THROWS_AS((void)r.encode(lim), RangeError);
    CHECK_THROWS_AS((void)r.encode(-lim - 1.0), RangeError);
    CHECK_NOTHROW((void)r.encode(lim - 1.0));
    CHECK_NOTHROW((void)r.encode(-lim + 1.0));
    CHECK_THROWS_AS((void)r.encode(std::nan("")), RangeError);
    CHECK_THROWS_AS((void)r.encode(INFINITY), RangeError);

    Ring small{16, 8};
    CHECK(small.max_abs_real() == 128.0);
    CHECK_THROWS_AS((void)small.encode(128.0), RangeError);
    CHECK(small.decode(small.encode(127.5)) == 127.5);
}

TEST_CASE("shift_arith is floor division by 2^f on signed values") {
    Ring r{16, 4};
    for (i64 v = -(1 << 11); v < (1 << 11); ++v)
        CHECK(r.to_signed(r.shift_arith(r.from_signed(v))) ==
              i64(std::floor(double(v) / 16.0)));
}

TEST_CASE("ring validation") {
    CHECK(Ring{8, 2}.valid());
    CHECK(Ring{64, 16}.valid());
    CHECK_FALSE(Ring{1, 0}.valid());
    CHECK_FALSE(Ring{65, 16}.valid());
    CHECK_FALSE(Ring{16, 16}.valid());
    CHECK_FALSE(Ring{16, 0}.valid());
    CHECK_THROWS_AS((Ring{16, 16}.check()), ConfigError);
}

TEST_CASE("ceil_log2") {
    CHECK(ceil_log2(1) == 0);
    CHECK(ceil_log2(2) == 1);
    CHECK(ceil_log2(3) == 2);
    CHECK(ceil_log2(8) == 3);
    CHECK(ceil_log2(9) == 4);
    CHECK(ceil_log2(128) == 7);
}

TEST_CASE("mix_seed separates nearby seeds and tags") {
    CHECK(mix_seed(1, 2) != mix_seed(1, 3));
    CHECK(mix_seed(1, 2) != mix_seed(2, 2));
    CHECK(mix_seed(5, 7) == mix_seed(5, 7));
}
