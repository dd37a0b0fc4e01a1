#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <vector>

#include "pproute/encoder.hpp"
#include "pproute/engine.hpp"
#include "pproute/shares.hpp"

using namespace pproute;

namespace {

std::vector<double> gauss_input(u64 seed, std::size_t n) {
    Rng rng(seed);
    std::vector<double> x(n);
    for (auto &v : x) {
        v = rng.next_gaussian() * 0.7;
        v = std::max(-2.0, std::min(2.0, v));
    }
    return x;
}

} // namespace

TEST_CASE("weights round-trip through JSON exactly") {
    auto w = encoder::random_weights(5, 6, 10);
    CHECK(encoder::flatten(w).size() == w.total_params());
    const std::string path = "/tmp/pproute_test_weights.json";
    encoder::save_weights(w, path);
    auto w2 = encoder::load_weights(path);
    CHECK(w2.d == w.d);
    CHECK(w2.d_ff == w.d_ff);
    CHECK(w2.wq == w.wq);
    CHECK(w2.wk == w.wk);
    CHECK(w2.wv == w.wv);
    CHECK(w2.w1 == w.w1);
    CHECK(w2.b1 == w.b1);
    CHECK(w2.w2 == w.w2);
    CHECK(w2.b2 == w.b2);
    std::remove(path.c_str());
    CHECK_THROWS_AS(encoder::load_weights("/tmp/pproute_no_such_file.json"),
                    ConfigError);
}

TEST_CASE("weight validation") {
    auto w = encoder::random_weights(6, 4, 8);
    CHECK_NOTHROW(encoder::validate(w));
    SUBCASE("wrong matrix size") {
        w.w1.pop_back();
        CHECK_THROWS_AS(encoder::validate(w), ConfigError);
    }
    SUBCASE("magnitude cap") {
        w.wq[0] = 9.5;
        CHECK_THROWS_AS(encoder::validate(w), ConfigError);
    }
    SUBCASE("non-finite entry") {
        w.b2[0] = std::nan("");
        CHECK_THROWS_AS(encoder::validate(w), ConfigError);
    }
    SUBCASE("zero dimension") {
        w.d = 0;
        CHECK_THROWS_AS(encoder::validate(w), ConfigError);
    }
    CHECK_THROWS_AS(encoder::random_weights(1, 0, 4), ArgError);
}

TEST_CASE("secure block tracks the plaintext block") {
    const std::size_t s = 4, d = 8, d_ff = 16;
    for (u64 seed : {u64(1), u64(2), u64(3)}) {
        CAPTURE(seed);
        auto w = encoder::random_weights(mix_seed(seed, 0xe4c0de5), d, d_ff);
        auto X = gauss_input(mix_seed(seed, 0x1de40), s * d);
        auto want = encoder::block_plain(w, X, s, Ring{});
        auto flat = encoder::flatten(w);

        SessionConfig cfg;
        cfg.seed = seed;
        Session sess(cfg);
        auto body = [&](PartyCtx &ctx) {
            std::span<const double> xin =
                ctx.party() == 0 ? std::span<const double>(X)
                                 : std::span<const double>{};
            std::span<const double> win =
                ctx.party() == 1 ? std::span<const double>(flat)
                                 : std::span<const double>{};
            auto out = encoder::block_secure(ctx, xin, win, s, d, d_ff);
            return proto::open_reals(ctx, out);
        };
        auto [got, got1] = sess.run(body, body);
        CHECK(got == got1);
        REQUIRE(got.size() == want.size());
        double worst = 0;
        for (std::size_t i = 0; i < got.size(); ++i)
            worst = std::max(worst, std::abs(got[i] - want[i]));
        CHECK(worst <= std::ldexp(1.0, -6));
        CHECK(sess.stats().total_rounds() ==
              encoder::rounds_block(cfg) + 1);
    }
}

TEST_CASE("block argument screening") {
    Session sess(SessionConfig{});
    CHECK_THROWS_AS(
        sess.run(
            [&](PartyCtx &ctx) {
                (void)encoder::block_secure(ctx, {}, {}, 0, 4, 4);
            },
            [&](PartyCtx &ctx) {
                (void)encoder::block_secure(ctx, {}, {}, 0, 4, 4);
            }),
        ArgError);
    std::vector<double> bad(3, 0.0); // wrong length for s*d
    CHECK_THROWS_AS(
        sess.run(
            [&](PartyCtx &ctx) {
                (void)encoder::block_secure(ctx, bad, {}, 2, 4, 4);
            },
            [&](PartyCtx &ctx) {
                (void)encoder::block_secure(ctx, {}, {}, 2, 4, 4);
            }),
        ArgError);
    std::vector<double> X(2 * 3, 0.1);
    CHECK_THROWS_AS(encoder::block_plain(encoder::random_weights(1, 4, 8), X,
                                         2, Ring{}),
                    ArgError);
}
