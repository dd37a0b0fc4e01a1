#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "pproute/eval.hpp"

using namespace pproute;

namespace {

using eval::CurvePoint;

// two models, the expensive one is better: target quality 0.75 at
// normalized reference cost 1.0
struct Fixture {
    router::ModelPool pool;
    eval::Dataset data;
};

Fixture qnc_fixture() {
    Fixture f;
    f.pool.dim = 2;
    f.pool.models.push_back({"big", {1.0, 0.0}, 10.0, {}});
    f.pool.models.push_back({"small", {0.0, 1.0}, 1.0, {}});
    for (int i = 0; i < 2; ++i) {
        eval::QueryItem q;
        q.id = "q" + std::to_string(i);
        q.embedding = {1.0, 0.0};
        q.quality["big"] = 0.75;
        q.quality["small"] = 0.1;
        f.data.push_back(std::move(q));
    }
    return f;
}

} // namespace

TEST_CASE("audc hand values") {
    // two points spanning the unit cost axis: plain trapezoid
    std::vector<CurvePoint> two{{0.0, 0.0, 0.5}, {1.0, 1.0, 1.0}};
    CHECK(eval::audc(two) == doctest::Approx(0.75).epsilon(1e-12));

    // a single point extends flat across [0, 1]
    std::vector<CurvePoint> one{{0.3, 0.4, 0.8}};
    CHECK(eval::audc(one) == doctest::Approx(0.8).epsilon(1e-12));

    // duplicate costs keep the better quality
    std::vector<CurvePoint> dup{{0.0, 0.5, 0.2}, {0.1, 0.5, 0.9},
                                {0.2, 1.0, 0.9}};
    CHECK(eval::audc(dup) == doctest::Approx(0.9).epsilon(1e-12));

    // input order does not matter
    std::vector<CurvePoint> rev{{1.0, 1.0, 1.0}, {0.0, 0.0, 0.5}};
    CHECK(eval::audc(rev) == doctest::Approx(0.75).epsilon(1e-12));

    // interior points integrate piecewise
    std::vector<CurvePoint> mid{{0.0, 0.25, 0.4}, {1.0, 0.75, 0.8}};
    // 0.25*0.4 + 0.5*(0.4+0.8)*0.5 + 0.25*0.8 = 0.1 + 0.3 + 0.2
    CHECK(eval::audc(mid) == doctest::Approx(0.6).epsilon(1e-12));

    CHECK_THROWS_AS(eval::audc(std::vector<CurvePoint>{}), ArgError);
    CHECK(eval::peak_quality(two) == doctest::Approx(1.0));
    CHECK_THROWS_AS(eval::peak_quality(std::vector<CurvePoint>{}), ArgError);
}

TEST_CASE("best single model prefers quality then price") {
    auto f = qnc_fixture();
    auto [idx, q] = eval::best_single_model(f.pool, f.data);
    CHECK(idx == 0);
    CHECK(q == doctest::Approx(0.75));

    // tie on quality goes to the cheaper model
    for (auto &item : f.data)
        item.quality["small"] = 0.75;
    auto [idx2, q2] = eval::best_single_model(f.pool, f.data);
    CHECK(idx2 == 1);
    CHECK(q2 == doctest::Approx(0.75));
}

TEST_CASE("quality-neutral cost interpolates the first crossing") {
    auto f = qnc_fixture();
    std::vector<CurvePoint> curve{{0.0, 0.2, 0.5}, {1.0, 1.0, 0.9}};
    // target 0.75 crossed at cost 0.2 + 0.8 * (0.25 / 0.4) = 0.7,
    // reference cost 10/10 = 1
    auto v = eval::qnc(curve, f.pool, f.data);
    REQUIRE(v.has_value());
    CHECK(*v == doctest::Approx(0.7).epsilon(1e-12));

    // already above target at the first point: its cost is the answer
    std::vector<CurvePoint> high{{0.0, 0.3, 0.8}, {1.0, 1.0, 0.9}};
    auto v2 = eval::qnc(high, f.pool, f.data);
    REQUIRE(v2.has_value());
    CHECK(*v2 == doctest::Approx(0.3).epsilon(1e-12));

    // never reaches the target
    std::vector<CurvePoint> low{{0.0, 0.2, 0.5}, {1.0, 1.0, 0.6}};
    CHECK_FALSE(eval::qnc(low, f.pool, f.data).has_value());

    auto m = eval::compute_metrics(curve, f.pool, f.data);
    CHECK(m.audc == doctest::Approx(eval::audc(curve)));
    CHECK(m.peak == doctest::Approx(0.9));
    REQUIRE(m.qnc.has_value());
    CHECK(*m.qnc == doctest::Approx(0.7));
}

TEST_CASE("synthetic benchmark has the advertised shape") {
    eval::SynthConfig cfg;
    cfg.seed = 2;
    cfg.n_models = 6;
    cfg.n_queries = 60;
    cfg.dim = 8;
    cfg.n_centers = 3;
    auto out = eval::gen_synth(cfg);
    CHECK(out.pool.dim == cfg.dim);
    CHECK(out.pool.n_models() == cfg.n_models);
    CHECK(out.pool.n_centers() == cfg.n_centers);
    REQUIRE(out.data.size() == cfg.n_queries);

    CHECK_NOTHROW(router::validate_pool(out.pool));
    CHECK_NOTHROW(eval::validate_dataset(out.data, out.pool));

    for (const auto &m : out.pool.models) {
        CHECK(m.cost >= 1.0);
        CHECK(m.cost <= 100.0);
        REQUIRE(m.cluster_errors.size() == cfg.n_centers);
        for (double e : m.cluster_errors) {
            CHECK(e >= 0.0);
            CHECK(e <= 1.0);
        }
    }

    // quality correlates with cosine similarity across (query, model) pairs
    double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
    double n = 0;
    for (const auto &q : out.data)
        for (const auto &m : out.pool.models) {
            double cos = 0;
            for (std::size_t j = 0; j < cfg.dim; ++j)
                cos += q.embedding[j] * m.embedding[j];
            double qa = q.quality.at(m.id);
            CHECK(qa >= 0.0);
            CHECK(qa <= 1.0);
            sx += cos;
            sy += qa;
            sxx += cos * cos;
            syy += qa * qa;
            sxy += cos * qa;
            n += 1;
        }
    double cov = sxy / n - (sx / n) * (sy / n);
    double vx = sxx / n - (sx / n) * (sx / n);
    double vy = syy / n - (sy / n) * (sy / n);
    double pearson = cov / std::sqrt(vx * vy);
    CHECK(pearson >= 0.4);
    CHECK(pearson <= 0.75);
}

TEST_CASE("dataset JSONL round-trip and validation") {
    eval::SynthConfig cfg;
    cfg.n_models = 3;
    cfg.n_queries = 5;
    cfg.dim = 4;
    cfg.n_centers = 2;
    auto out = eval::gen_synth(cfg);
    const std::string path = "/tmp/pproute_test_data.jsonl";
    eval::save_dataset(out.data, path);
    auto d2 = eval::load_dataset(path);
    REQUIRE(d2.size() == out.data.size());
    for (std::size_t i = 0; i < d2.size(); ++i) {
        CHECK(d2[i].id == out.data[i].id);
        CHECK(d2[i].embedding == out.data[i].embedding);
        CHECK(d2[i].quality == out.data[i].quality);
    }
    std::remove(path.c_str());
    CHECK_THROWS_AS(eval::load_dataset("/tmp/pproute_no_data.jsonl"),
                    ConfigError);

    SUBCASE("missing quality entry") {
        auto bad = out.data;
        bad[0].quality.erase(out.pool.models[0].id);
        CHECK_THROWS_AS(eval::validate_dataset(bad, out.pool), ConfigError);
    }
    SUBCASE("off-unit embedding") {
        auto bad = out.data;
        for (auto &x : bad[0].embedding)
            x *= 2.0;
        CHECK_THROWS_AS(eval::validate_dataset(bad, out.pool), ConfigError);
    }
    SUBCASE("quality outside [0,1]") {
        auto bad = out.data;
        bad[0].quality[out.pool.models[0].id] = 1.5;
        CHECK_THROWS_AS(eval::validate_dataset(bad, out.pool), ConfigError);
    }
}

TEST_CASE("baseline picks") {
    auto f = qnc_fixture();
    // oracle: best quality, ties to the cheaper model
    eval::QueryItem q;
    q.id = "t";
    q.embedding = {1.0, 0.0};
    q.quality["big"] = 0.9;
    q.quality["small"] = 0.9;
    CHECK(eval::pick_oracle(f.pool, q) == 1);
    q.quality["big"] = 0.95;
    CHECK(eval::pick_oracle(f.pool, q) == 0);

    // random: deterministic per (seed, index), in range, not constant
    bool varied = false;
    std::size_t first = eval::pick_random(f.pool, 3, 0);
    for (std::size_t qi = 0; qi < 50; ++qi) {
        std::size_t p = eval::pick_random(f.pool, 3, qi);
        CHECK(p < f.pool.n_models());
        CHECK(p == eval::pick_random(f.pool, 3, qi));
        varied = varied || p != first;
    }
    CHECK(varied);
}

TEST_CASE("deferral sweep shapes and baselines") {
    eval::SynthConfig scfg;
    scfg.seed = 4;
    scfg.n_models = 5;
    scfg.n_queries = 16;
    scfg.dim = 6;
    scfg.n_centers = 2;
    auto out = eval::gen_synth(scfg);

    eval::SweepConfig cfg;
    cfg.policy = router::Policy::cscr_plain;
    cfg.lambdas = {0.0, 0.05, 0.2};
    cfg.k = 2;
    auto res = eval::deferral_sweep(out.pool, out.data, cfg);
    REQUIRE(res.curve.size() == cfg.lambdas.size());
    REQUIRE(res.picks.size() == cfg.lambdas.size());
    for (std::size_t li = 0; li < res.curve.size(); ++li) {
        CHECK(res.curve[li].lambda == cfg.lambdas[li]);
        CHECK(res.curve[li].cost >= 0.0);
        CHECK(res.curve[li].cost <= 1.0);
        CHECK(res.curve[li].quality >= 0.0);
        CHECK(res.curve[li].quality <= 1.0);
        REQUIRE(res.picks[li].size() == out.data.size());
    }
    CHECK(res.total_sessions == 0); // plaintext policy: no MPC sessions
    CHECK(res.total_online_bytes == 0);

    SUBCASE("random and oracle ignore lambda") {
        for (auto policy :
             {router::Policy::random_pick, router::Policy::oracle}) {
            eval::SweepConfig c2 = cfg;
            c2.policy = policy;
            auto r2 = eval::deferral_sweep(out.pool, out.data, c2);
            for (std::size_t li = 1; li < r2.curve.size(); ++li) {
                CHECK(r2.picks[li] == r2.picks[0]);
                CHECK(r2.curve[li].cost ==
                      doctest::Approx(r2.curve[0].cost));
                CHECK(r2.curve[li].quality ==
                      doctest::Approx(r2.curve[0].quality));
            }
        }
    }

    SUBCASE("oracle quality dominates random quality") {
        eval::SweepConfig co = cfg, cr = cfg;
        co.policy = router::Policy::oracle;
        cr.policy = router::Policy::random_pick;
        auto ro = eval::deferral_sweep(out.pool, out.data, co);
        auto rr = eval::deferral_sweep(out.pool, out.data, cr);
        CHECK(ro.curve[0].quality >= rr.curve[0].quality);
    }
}

TEST_CASE("secure sweep is deterministic and parallel-safe") {
    eval::SynthConfig scfg;
    scfg.seed = 6;
    scfg.n_models = 4;
    scfg.n_queries = 10;
    scfg.dim = 6;
    scfg.n_centers = 2;
    auto out = eval::gen_synth(scfg);

    eval::SweepConfig cfg;
    cfg.policy = router::Policy::cscr_secure;
    cfg.lambdas = {0.0, 0.05};
    cfg.k = 2;
    cfg.backend = CmpBackend::dealer_oracle;
    cfg.seed = 11;

    eval::SweepConfig serial = cfg;
    serial.parallel = false;
    auto a = eval::deferral_sweep(out.pool, out.data, cfg);
    auto b = eval::deferral_sweep(out.pool, out.data, serial);
    CHECK(a.picks == b.picks);
    CHECK(a.total_online_bytes == b.total_online_bytes);
    CHECK(a.total_sessions == cfg.lambdas.size() * out.data.size());
    CHECK(a.total_online_bytes > 0);
    for (std::size_t li = 0; li < a.curve.size(); ++li) {
        CHECK(a.curve[li].cost == b.curve[li].cost);
        CHECK(a.curve[li].quality == b.curve[li].quality);
    }

    // the secure picks match the plaintext policy on this small instance up
    // to decision-gap ties; demand a strong majority
    eval::SweepConfig plain = cfg;
    plain.policy = router::Policy::cscr_plain;
    auto p = eval::deferral_sweep(out.pool, out.data, plain);
    std::size_t same = 0, all = 0;
    for (std::size_t li = 0; li < a.picks.size(); ++li)
        for (std::size_t qi = 0; qi < a.picks[li].size(); ++qi) {
            same += a.picks[li][qi] == p.picks[li][qi];
            ++all;
        }
    CHECK(same * 10 >= all * 9);
}

TEST_CASE("curve CSV") {
    std::vector<CurvePoint> curve{{0.0, 0.25, 0.5}, {0.1, 0.75, 0.9}};
    const std::string path = "/tmp/pproute_test_curve.csv";
    eval::save_curve_csv(curve, path);
    std::ifstream in(path);
    REQUIRE(in.good());
    std::string line;
    std::getline(in, line);
    CHECK(line == "lambda,cost,quality");
    std::size_t rows = 0;
    while (std::getline(in, line))
        if (!line.empty())
            ++rows;
    CHECK(rows == curve.size());
    std::remove(path.c_str());
}

TEST_CASE("sweep argument screening") {
    eval::SynthConfig scfg;
    scfg.n_models = 3;
    scfg.n_queries = 4;
    scfg.dim = 4;
    scfg.n_centers = 2;
    auto out = eval::gen_synth(scfg);
    eval::SweepConfig cfg;
    cfg.lambdas = {};
    CHECK_THROWS_AS(eval::deferral_sweep(out.pool, out.data, cfg), ArgError);
    cfg.lambdas = {0.0};
    eval::Dataset empty;
    CHECK_THROWS_AS(eval::deferral_sweep(out.pool, empty, cfg), ArgError);
}
