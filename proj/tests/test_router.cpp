#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "pproute/router.hpp"

using namespace pproute;

namespace {

std::vector<double> unit(std::vector<double> v) {
    double n = 0;
    for (double x : v)
        n += x * x;
    n = std::sqrt(n);
    for (double &x : v)
        x /= n;
    return v;
}

router::ModelPool hand_pool() {
    router::ModelPool pool;
    pool.dim = 2;
    pool.models.push_back({"a", {1.0, 0.0}, 10.0, {0.1, 0.8}});
    pool.models.push_back({"b", unit({0.8, 0.6}), 1.0, {0.3, 0.2}});
    pool.models.push_back({"c", {0.0, 1.0}, 2.0, {0.7, 0.05}});
    pool.centers = {1.0, 0.0, 0.0, 1.0}; // two unit centers
    return pool;
}

// random pool with unit embeddings, positive costs and full error tables
router::ModelPool random_pool(u64 seed, std::size_t n, std::size_t dim,
                              std::size_t n_centers) {
    Rng rng(seed);
    router::ModelPool pool;
    pool.dim = dim;
    for (std::size_t i = 0; i < n; ++i) {
        router::ModelEntry m;
        m.id = "m" + std::to_string(i);
        std::vector<double> e(dim);
        for (auto &x : e)
            x = rng.next_gaussian();
        m.embedding = unit(e);
        m.cost = rng.next_real(1.0, 10.0);
        for (std::size_t c = 0; c < n_centers; ++c)
            m.cluster_errors.push_back(rng.next_real(0.05, 0.95));
        pool.models.push_back(std::move(m));
    }
    for (std::size_t c = 0; c < n_centers; ++c) {
        std::vector<double> e(dim);
        for (auto &x : e)
            x = rng.next_gaussian();
        e = unit(e);
        pool.centers.insert(pool.centers.end(), e.begin(), e.end());
    }
    return pool;
}

std::vector<double> random_query(u64 seed, std::size_t dim) {
    Rng rng(seed);
    std::vector<double> q(dim);
    for (auto &x : q)
        x = rng.next_gaussian();
    return unit(q);
}

} // namespace

TEST_CASE("pool JSON round-trip") {
    auto pool = hand_pool();
    const std::string path = "/tmp/pproute_test_pool.json";
    router::save_pool(pool, path);
    auto p2 = router::load_pool(path);
    CHECK(p2.dim == pool.dim);
    REQUIRE(p2.models.size() == pool.models.size());
    for (std::size_t i = 0; i < pool.models.size(); ++i) {
        CHECK(p2.models[i].id == pool.models[i].id);
        CHECK(p2.models[i].embedding == pool.models[i].embedding);
        CHECK(p2.models[i].cost == pool.models[i].cost);
        CHECK(p2.models[i].cluster_errors == pool.models[i].cluster_errors);
    }
    CHECK(p2.centers == pool.centers);
    CHECK(p2.n_centers() == 2);
    std::remove(path.c_str());
    CHECK_THROWS_AS(router::load_pool("/tmp/pproute_no_pool.json"),
                    ConfigError);
}

TEST_CASE("pool validation") {
    SUBCASE("valid pool passes") {
        auto pool = hand_pool();
        CHECK_NOTHROW(router::validate_pool(pool));
    }
    SUBCASE("slightly off-norm embeddings are renormalized") {
        auto pool = hand_pool();
        pool.models[0].embedding = {1.0005, 0.0};
        CHECK_NOTHROW(router::validate_pool(pool));
        CHECK(pool.models[0].embedding[0] == doctest::Approx(1.0));
    }
    SUBCASE("badly scaled embeddings are rejected") {
        auto pool = hand_pool();
        pool.models[0].embedding = {1.5, 0.0};
        CHECK_THROWS_AS(router::validate_pool(pool), ConfigError);
    }
    SUBCASE("cost must be positive") {
        auto pool = hand_pool();
        pool.models[1].cost = 0.0;
        CHECK_THROWS_AS(router::validate_pool(pool), ConfigError);
    }
    SUBCASE("error table length must match the centers") {
        auto pool = hand_pool();
        pool.models[2].cluster_errors = {0.5};
        CHECK_THROWS_AS(router::validate_pool(pool), ConfigError);
    }
    SUBCASE("error values live in [0,1]") {
        auto pool = hand_pool();
        pool.models[0].cluster_errors = {0.1, 1.5};
        CHECK_THROWS_AS(router::validate_pool(pool), ConfigError);
    }
    SUBCASE("centers length multiple of dim") {
        auto pool = hand_pool();
        pool.centers.pop_back();
        CHECK_THROWS_AS(router::validate_pool(pool), ConfigError);
    }
    SUBCASE("query validation uses the same rules") {
        std::vector<double> q{0.6, 0.8};
        CHECK_NOTHROW(router::validate_unit(q, "query"));
        std::vector<double> bad{2.0, 0.0};
        CHECK_THROWS_AS(router::validate_unit(bad, "query"), ConfigError);
    }
}

TEST_CASE("policy strings") {
    using router::Policy;
    CHECK(router::policy_from_string("cscr-secure") == Policy::cscr_secure);
    CHECK(router::policy_from_string("cscr-plain") == Policy::cscr_plain);
    CHECK(router::policy_from_string("uniroute-secure") ==
          Policy::uniroute_secure);
    CHECK(router::policy_from_string("uniroute-plain") ==
          Policy::uniroute_plain);
    CHECK(router::policy_from_string("random") == Policy::random_pick);
    CHECK(router::policy_from_string("oracle") == Policy::oracle);
    CHECK_THROWS_AS(router::policy_from_string("greedy"), ConfigError);
    CHECK(router::is_secure(Policy::cscr_secure));
    CHECK(router::is_secure(Policy::uniroute_secure));
    CHECK_FALSE(router::is_secure(Policy::cscr_plain));
    CHECK_FALSE(router::is_secure(Policy::oracle));
    for (Policy p : {Policy::cscr_secure, Policy::cscr_plain,
                     Policy::uniroute_secure, Policy::uniroute_plain,
                     Policy::random_pick, Policy::oracle})
        CHECK(router::policy_from_string(router::to_string(p)) == p);
}

TEST_CASE("plain CSCR picks by similarity then trades it against cost") {
    auto pool = hand_pool();
    std::vector<double> q{1.0, 0.0}; // sims: a=1.0, b=0.8, c=0.0
    double gap = 0;
    // lambda 0: pure similarity
    CHECK(router::route_cscr_plain(pool, q, 2, 0.0, &gap) == 0);
    CHECK(gap > 0);
    // lambda 0.05 over shortlist {a,b}: a = 1 - 0.5, b = 0.8 - 0.05
    CHECK(router::route_cscr_plain(pool, q, 2, 0.05, &gap) == 1);
    // k = 1 ignores cost entirely here
    CHECK(router::route_cscr_plain(pool, q, 1, 0.05) == 0);
    CHECK_THROWS_AS(router::route_cscr_plain(pool, q, 0, 0.0), ArgError);
    CHECK_THROWS_AS(router::route_cscr_plain(pool, q, 4, 0.0), ArgError);
}

TEST_CASE("plain UniRoute picks by clustered error plus cost") {
    auto pool = hand_pool();
    std::vector<double> q{1.0, 0.0}; // nearest center 0
    // errors col 0: a=0.1, b=0.3, c=0.7
    CHECK(router::route_uniroute_plain(pool, q, 0.0) == 0);
    // lambda 0.03: a = 0.1+0.3, b = 0.3+0.03, c = 0.7+0.06
    CHECK(router::route_uniroute_plain(pool, q, 0.03) == 1);
    std::vector<double> q2{0.0, 1.0}; // center 1: a=0.8, b=0.2, c=0.05
    CHECK(router::route_uniroute_plain(pool, q2, 0.0) == 2);
    double gap = 0;
    (void)router::route_uniroute_plain(pool, q2, 0.0, &gap);
    CHECK(gap > 0);
}

TEST_CASE("secure CSCR matches the plaintext decision") {
    std::size_t agree = 0, total = 0, confident = 0, confident_agree = 0;
    for (u64 i = 0; i < 60; ++i) {
        auto pool = random_pool(mix_seed(9, i), 8, 8, 3);
        auto q = random_query(mix_seed(10, i), 8);
        router::RouteConfig cfg;
        cfg.k = 3;
        cfg.lambda = (i % 3) * 0.02;
        cfg.seed = i + 1;
        double gap = 0;
        std::size_t want =
            router::route_cscr_plain(pool, q, cfg.k, cfg.lambda, &gap);
        auto got = router::route_cscr_secure(pool, q, cfg);
        ++total;
        agree += got.model_index == want;
        if (gap > std::ldexp(1.0, -6)) {
            ++confident;
            confident_agree += got.model_index == want;
        }
        CHECK(got.model_id == pool.models[got.model_index].id);
        SessionConfig sc;
        sc.backend = cfg.backend;
        CHECK(got.stats.total_rounds() ==
              router::rounds_cscr(sc, pool.n_models()));
    }
    CHECK(confident > 20); // the gap condition must actually bite
    CHECK(confident_agree == confident);
    CHECK(agree >= total - 1); // unconditional agreement is near-perfect
}

TEST_CASE("secure UniRoute matches the plaintext decision") {
    std::size_t confident = 0, confident_agree = 0;
    for (u64 i = 0; i < 40; ++i) {
        auto pool = random_pool(mix_seed(11, i), 6, 8, 3);
        auto q = random_query(mix_seed(12, i), 8);
        router::RouteConfig cfg;
        cfg.lambda = (i % 2) * 0.05;
        cfg.seed = i + 1;
        double gap = 0;
        std::size_t want =
            router::route_uniroute_plain(pool, q, cfg.lambda, &gap);
        auto got = router::route_uniroute_secure(pool, q, cfg);
        if (gap > std::ldexp(1.0, -6)) {
            ++confident;
            confident_agree += got.model_index == want;
        }
        SessionConfig sc;
        sc.backend = cfg.backend;
        CHECK(got.stats.total_rounds() ==
              router::rounds_uniroute(sc, pool.n_centers()));
    }
    CHECK(confident > 15);
    CHECK(confident_agree == confident);
}

TEST_CASE("secure routing is deterministic per seed") {
    auto pool = random_pool(77, 8, 8, 2);
    auto q = random_query(78, 8);
    router::RouteConfig cfg;
    cfg.k = 3;
    cfg.lambda = 0.01;
    cfg.seed = 5;
    auto a = router::route_cscr_secure(pool, q, cfg);
    auto b = router::route_cscr_secure(pool, q, cfg);
    CHECK(a.model_index == b.model_index);
    CHECK(a.stats.total_bytes() == b.stats.total_bytes());
    CHECK(a.stats.total_rounds() == b.stats.total_rounds());
    CHECK(a.stats.dealer_offline_bytes[0] == b.stats.dealer_offline_bytes[0]);
}

TEST_CASE("dealer-oracle backend agrees and spends fewer rounds") {
    auto pool = random_pool(81, 8, 8, 2);
    auto q = random_query(82, 8);
    router::RouteConfig circuit;
    circuit.k = 3;
    circuit.lambda = 0.02;
    router::RouteConfig oracle = circuit;
    oracle.backend = CmpBackend::dealer_oracle;
    auto a = router::route_cscr_secure(pool, q, circuit);
    auto b = router::route_cscr_secure(pool, q, oracle);
    CHECK(a.model_index == b.model_index);
    CHECK(b.stats.total_rounds() < a.stats.total_rounds());
    CHECK(b.stats.dealer_online_bytes[0] > 0);
    CHECK(a.stats.dealer_online_bytes[0] == 0);
}

TEST_CASE("routing argument screening") {
    auto pool = hand_pool();
    std::vector<double> q{1.0, 0.0};
    router::RouteConfig cfg;
    SUBCASE("query dim") {
        std::vector<double> bad{1.0, 0.0, 0.0};
        CHECK_THROWS_AS(router::route_cscr_secure(pool, bad, cfg), ArgError);
    }
    SUBCASE("lambda guard") {
        cfg.lambda = 500.0; // 500 * max_cost 10 = 5000 > 4096
        CHECK_THROWS_AS(router::route_cscr_secure(pool, q, cfg), ArgError);
        CHECK_THROWS_AS(router::route_uniroute_secure(pool, q, cfg), ArgError);
    }
    SUBCASE("negative lambda") {
        cfg.lambda = -0.5;
        CHECK_THROWS_AS(router::route_cscr_secure(pool, q, cfg), ArgError);
    }
    SUBCASE("uniroute needs centers") {
        pool.centers.clear();
        CHECK_THROWS_AS(router::route_uniroute_secure(pool, q, cfg),
                        ConfigError);
        CHECK_THROWS_AS(router::route_uniroute_plain(pool, q, 0.0),
                        ConfigError);
    }
    SUBCASE("uniroute needs error tables") {
        pool.models[1].cluster_errors.clear();
        CHECK_THROWS_AS(router::route_uniroute_secure(pool, q, cfg),
                        ConfigError);
    }
}
