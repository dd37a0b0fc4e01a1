#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pproute/encoder.hpp"
#include "pproute/eval.hpp"
#include "pproute/log.hpp"
#include "pproute/protocols.hpp"
#include "pproute/router.hpp"
#include "pproute/topk.hpp"

using nlohmann::json;
using namespace pproute;

namespace {

std::vector<double> parse_csv_doubles(const std::string &s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        try {
            std::size_t pos = 0;
            out.push_back(std::stod(tok, &pos));
            while (pos < tok.size() && std::isspace((unsigned char)tok[pos]))
                ++pos;
            if (pos != tok.size())
                throw std::invalid_argument(tok);
        } catch (const std::exception &) {
            throw ArgError("cannot parse number '" + tok + "'");
        }
    }
    if (out.empty())
        throw ArgError("empty number list");
    return out;
}

// "lo:hi:step" (inclusive, step > 0) or a comma list
std::vector<double> parse_lambdas(const std::string &s) {
    if (s.find(':') == std::string::npos)
        return parse_csv_doubles(s);
    double lo, hi, step;
    if (std::sscanf(s.c_str(), "%lf:%lf:%lf", &lo, &hi, &step) != 3)
        throw ArgError("lambdas: expected lo:hi:step or a comma list");
    if (!(step > 0) || hi < lo)
        throw ArgError("lambdas: need step > 0 and hi >= lo");
    std::vector<double> out;
    for (int i = 0;; ++i) {
        const double v = lo + step * i;
        if (v > hi + step * 1e-9)
            break;
        out.push_back(std::min(v, hi));
        if (out.size() > 100000)
            throw ArgError("lambdas: grid too large");
    }
    return out;
}

std::vector<double> load_query_file(const std::string &path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("query: cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception &e) {
        throw ConfigError("query: bad JSON in " + path + ": " + e.what());
    }
    if (j.is_array())
        return j.get<std::vector<double>>();
    if (j.is_object() && j.contains("embedding"))
        return j.at("embedding").get<std::vector<double>>();
    throw ConfigError("query: expected an array or {\"embedding\": [...]}");
}

json ring_json() {
    Ring r{};
    return json{{"l", r.l}, {"f", r.f}};
}

json comm_json(const CommStats &st) {
    return json{{"rounds", st.total_rounds()},
                {"bytes_party0", st.bytes[0]},
                {"bytes_party1", st.bytes[1]},
                {"dealer_offline_bytes",
                 st.dealer_offline_bytes[0] + st.dealer_offline_bytes[1]},
                {"dealer_online_bytes",
                 st.dealer_online_bytes[0] + st.dealer_online_bytes[1]}};
}

void emit(const json &j, const std::string &out_path) {
    const std::string text = j.dump(2) + "\n";
    std::cout << text;
    if (!out_path.empty()) {
        std::ofstream out(out_path);
        if (!out)
            throw ConfigError("cannot write " + out_path);
        out << text;
    }
}

// ---- subcommand runners ----

int cmd_route(const std::string &pool_path, const std::string &query_csv,
              const std::string &query_file, const std::string &policy_str,
              std::size_t k, double lambda, const std::string &backend_str,
              u64 seed, const std::string &out_path) {
    auto pool = router::load_pool(pool_path);
    if (query_csv.empty() == query_file.empty())
        throw ArgError("route: give exactly one of --query / --query-file");
    auto query = query_csv.empty() ? load_query_file(query_file)
                                   : parse_csv_doubles(query_csv);
    if (query.size() != pool.dim)
        throw ArgError("route: query dim " + std::to_string(query.size()) +
                       " != pool dim " + std::to_string(pool.dim));
    router::validate_unit(query, "query");

    const auto policy = router::policy_from_string(policy_str);
    const auto backend = backend_from_string(backend_str);

    json cfg{{"command", "route"},
             {"pool", pool_path},
             {"policy", router::to_string(policy)},
             {"k", k},
             {"lambda", lambda},
             {"backend", to_string(backend)},
             {"seed", seed},
             {"ring", ring_json()},
             {"n_models", pool.n_models()}};

    std::size_t idx = 0;
    json comm = comm_json(CommStats{});
    switch (policy) {
    case router::Policy::cscr_plain:
        idx = router::route_cscr_plain(pool, query, k, lambda);
        break;
    case router::Policy::uniroute_plain:
        idx = router::route_uniroute_plain(pool, query, lambda);
        break;
    case router::Policy::random_pick:
        idx = eval::pick_random(pool, seed, 0);
        break;
    case router::Policy::oracle:
        throw ConfigError("route: oracle needs per-query quality labels; "
                          "use the deferral command");
    case router::Policy::cscr_secure:
    case router::Policy::uniroute_secure: {
        router::RouteConfig rc{k, lambda, backend, seed};
        auto res = policy == router::Policy::cscr_secure
                       ? router::route_cscr_secure(pool, query, rc)
                       : router::route_uniroute_secure(pool, query, rc);
        idx = res.model_index;
        comm = comm_json(res.stats);
        break;
    }
    }
    json out{{"config", cfg},
             {"decision",
              json{{"model_index", idx}, {"model_id", pool.models[idx].id}}},
             {"comm", comm}};
    emit(out, out_path);
    return 0;
}

int cmd_bench_topk(const std::string &alg, std::size_t n, std::size_t k,
                   std::size_t trials, const std::string &backend_str,
                   u64 seed, const std::string &out_path) {
    if (alg != "unsorted" && alg != "itermax" && alg != "bitonic")
        throw ArgError("bench-topk: --alg must be unsorted|itermax|bitonic");
    if (n < 2 || k < 1 || k > n || trials < 1)
        throw ArgError("bench-topk: bad n/k/trials");
    const auto backend = backend_from_string(backend_str);

    json cfg{{"command", "bench-topk"}, {"alg", alg},
             {"n", n},                  {"k", k},
             {"trials", trials},        {"backend", to_string(backend)},
             {"seed", seed},            {"ring", ring_json()}};

    Rng data_rng(mix_seed(seed, 0xbe7cULL));
    json jtrials = json::array();
    u64 rounds_first = 0;
    u64 agree_count = 0;
    double bytes0 = 0, bytes1 = 0, offline = 0;
    for (std::size_t t = 0; t < trials; ++t) {
        std::vector<double> vals(n);
        for (auto &v : vals)
            v = data_rng.next_real(-1.0, 1.0);

        SessionConfig scfg;
        scfg.backend = backend;
        scfg.seed = mix_seed(seed, t + 1);
        Session sess(scfg);
        const Ring &r = sess.ring();

        auto body = [&](PartyCtx &ctx) {
            auto sh = proto::share_private(ctx, 0, ctx.party() == 0
                                                       ? std::span<const double>(vals)
                                                       : std::span<const double>{},
                                           n);
            auto emb = topk::embed_tiebreak(r, sh);
            topk::TopkMask mask =
                alg == "unsorted"  ? topk::unsorted_topk(ctx, emb, k)
                : alg == "itermax" ? topk::itermax_topk(ctx, emb, k)
                                   : topk::bitonic_topk(ctx, emb, k);
            return proto::open_raw(ctx, mask.bits, "open");
        };
        auto [m0, m1] = sess.run(body, body);
        if (m0 != m1)
            throw ProtocolError("bench-topk: parties opened different masks");

        auto want = topk::plain_topk_mask(r, vals, k);
        bool agree = true;
        for (std::size_t i = 0; i < n; ++i)
            if (m0[i] != want[i]) {
                agree = false;
                break;
            }
        agree_count += agree ? 1 : 0;

        auto st = sess.stats();
        // the final open is instrumentation, not part of the protocol cost
        const u64 rounds = st.total_rounds() - 1;
        const u64 open_bytes = n * elem_bytes(r);
        if (t == 0)
            rounds_first = rounds;
        else if (rounds != rounds_first)
            throw ProtocolError("bench-topk: round count varied across trials");
        bytes0 += double(st.bytes[0] - open_bytes);
        bytes1 += double(st.bytes[1] - open_bytes);
        offline +=
            double(st.dealer_offline_bytes[0] + st.dealer_offline_bytes[1] +
                   st.dealer_online_bytes[0] + st.dealer_online_bytes[1]);
        jtrials.push_back(json{{"trial", t},
                               {"rounds", rounds},
                               {"bytes_party0", st.bytes[0] - open_bytes},
                               {"bytes_party1", st.bytes[1] - open_bytes},
                               {"agree_with_plaintext", agree}});
    }

    SessionConfig probe;
    probe.backend = backend;
    const u64 declared =
        alg == "unsorted"  ? topk::rounds_unsorted(probe, n)
        : alg == "itermax" ? topk::rounds_itermax(probe, n, k)
                           : topk::rounds_bitonic_topk(probe, n);

    json out{{"config", cfg},
             {"trials", jtrials},
             {"aggregate",
              json{{"rounds", rounds_first},
                   {"declared_rounds", declared},
                   {"mean_bytes_party0", bytes0 / double(trials)},
                   {"mean_bytes_party1", bytes1 / double(trials)},
                   {"mean_dealer_bytes", offline / double(trials)},
                   {"agreement_rate", double(agree_count) / double(trials)}}}};
    emit(out, out_path);
    return 0;
}

int cmd_gen_synth(const std::string &out_pool, const std::string &out_data,
                  std::size_t models, std::size_t queries, std::size_t dim,
                  std::size_t centers, u64 seed) {
    eval::SynthConfig scfg;
    scfg.seed = seed;
    scfg.n_models = models;
    scfg.n_queries = queries;
    scfg.dim = dim;
    scfg.n_centers = centers;
    auto synth = eval::gen_synth(scfg);
    router::save_pool(synth.pool, out_pool);
    eval::save_dataset(synth.data, out_data);

    double cmin = 1e300, cmax = 0;
    for (const auto &m : synth.pool.models) {
        cmin = std::min(cmin, m.cost);
        cmax = std::max(cmax, m.cost);
    }
    json out{{"config", json{{"command", "gen-synth"},
                             {"seed", seed},
                             {"models", models},
                             {"queries", queries},
                             {"dim", dim},
                             {"centers", centers}}},
             {"written", json{{"pool", out_pool}, {"data", out_data}}},
             {"summary", json{{"cost_min", cmin}, {"cost_max", cmax}}}};
    emit(out, "");
    return 0;
}

int cmd_deferral(const std::string &pool_path, const std::string &data_path,
                 const std::string &policy_str, const std::string &lambdas_str,
                 std::size_t k, const std::string &backend_str, u64 seed,
                 const std::string &out_curve, const std::string &out_metrics,
                 bool serial) {
    auto pool = router::load_pool(pool_path);
    auto data = eval::load_dataset(data_path);
    eval::validate_dataset(data, pool);

    eval::SweepConfig scfg;
    scfg.policy = router::policy_from_string(policy_str);
    scfg.lambdas = parse_lambdas(lambdas_str);
    scfg.k = k;
    scfg.backend = backend_from_string(backend_str);
    scfg.seed = seed;
    scfg.parallel = !serial;

    auto res = eval::deferral_sweep(pool, data, scfg);
    auto metrics = eval::compute_metrics(res.curve, pool, data);
    if (!out_curve.empty())
        eval::save_curve_csv(res.curve, out_curve);

    json jm{{"audc", metrics.audc},
            {"peak", metrics.peak},
            {"qnc", metrics.qnc ? json(*metrics.qnc) : json("unattained")}};
    json out{{"config", json{{"command", "deferral"},
                             {"pool", pool_path},
                             {"data", data_path},
                             {"policy", router::to_string(scfg.policy)},
                             {"lambdas", scfg.lambdas},
                             {"k", k},
                             {"backend", to_string(scfg.backend)},
                             {"seed", seed},
                             {"ring", ring_json()},
                             {"parallel", scfg.parallel}}},
             {"metrics", jm},
             {"totals", json{{"sessions", res.total_sessions},
                             {"online_bytes", res.total_online_bytes},
                             {"queries", data.size()},
                             {"lambda_points", scfg.lambdas.size()}}}};
    emit(out, out_metrics);
    return 0;
}

int cmd_encoder_demo(u64 seed, std::size_t s, std::size_t d, std::size_t dff,
                     const std::string &weights_path,
                     const std::string &backend_str,
                     const std::string &out_path) {
    const auto backend = backend_from_string(backend_str);
    encoder::Weights w = weights_path.empty()
                             ? encoder::random_weights(seed, d, dff)
                             : encoder::load_weights(weights_path);
    d = w.d;
    dff = w.d_ff;

    Rng rng(mix_seed(seed, 0x1de40ULL));
    std::vector<double> X(s * d);
    for (auto &x : X)
        x = std::clamp(rng.next_gaussian() * 0.7, -2.0, 2.0);

    SessionConfig scfg;
    scfg.backend = backend;
    scfg.seed = seed;
    Session sess(scfg);
    const Ring &r = sess.ring();

    auto flat = encoder::flatten(w);
    auto body = [&](PartyCtx &ctx) {
        auto out = encoder::block_secure(
            ctx, ctx.party() == 0 ? std::span<const double>(X)
                                  : std::span<const double>{},
            ctx.party() == 1 ? std::span<const double>(flat)
                             : std::span<const double>{},
            s, d, dff);
        return proto::open_reals(ctx, out, "open");
    };
    auto [o0, o1] = sess.run(body, body);
    (void)o1;
    auto ref = encoder::block_plain(w, X, s, r);
    double max_diff = 0;
    for (std::size_t i = 0; i < ref.size(); ++i)
        max_diff = std::max(max_diff, std::fabs(o0[i] - ref[i]));

    auto st = sess.stats();
    json out{{"config", json{{"command", "encoder-demo"},
                             {"seed", seed},
                             {"s", s},
                             {"d", d},
                             {"d_ff", dff},
                             {"weights", weights_path.empty() ? json("random")
                                                              : json(weights_path)},
                             {"backend", to_string(backend)},
                             {"ring", ring_json()}}},
             {"max_abs_diff", max_diff},
             {"within_tolerance", max_diff <= std::ldexp(1.0, -6)},
             {"declared_rounds", encoder::rounds_block(scfg) + 1}, // + open
             {"comm", comm_json(st)}};
    emit(out, out_path);
    return 0;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"pproute: two-party secure computation engine for "
                 "cost-aware LLM routing"};
    app.require_subcommand(1);
    app.footer("Environment: PPROUTE_LOG=off|info|trace controls stderr "
               "logging.");

    // route
    auto *route = app.add_subcommand("route", "route one query over a pool");
    std::string r_pool, r_query, r_query_file, r_policy = "cscr-secure";
    std::string r_backend = "circuit", r_out;
    std::size_t r_k = 3;
    double r_lambda = 0.0;
    u64 r_seed = 1;
    route->add_option("--pool", r_pool, "pool JSON file")->required();
    route->add_option("--query", r_query, "query embedding, comma separated");
    route->add_option("--query-file", r_query_file,
                      "JSON file: array or {\"embedding\": [...]}");
    route->add_option("--policy", r_policy,
                      "cscr-secure|cscr-plain|uniroute-secure|uniroute-plain|"
                      "random|oracle");
    route->add_option("--k", r_k, "CSCR shortlist size");
    route->add_option("--lambda", r_lambda, "cost weight");
    route->add_option("--backend", r_backend, "circuit|dealer-oracle");
    route->add_option("--seed", r_seed, "RNG seed");
    route->add_option("--out", r_out, "also write the JSON result here");

    // bench-topk
    auto *bench = app.add_subcommand("bench-topk",
                                     "measure top-k protocol cost/agreement");
    std::string b_alg = "unsorted", b_backend = "circuit", b_out;
    std::size_t b_n = 64, b_k = 4, b_trials = 10;
    u64 b_seed = 1;
    bench->add_option("--alg", b_alg, "unsorted|itermax|bitonic");
    bench->add_option("--n", b_n, "input size");
    bench->add_option("--k", b_k, "selection size");
    bench->add_option("--trials", b_trials, "number of random instances");
    bench->add_option("--backend", b_backend, "circuit|dealer-oracle");
    bench->add_option("--seed", b_seed, "RNG seed");
    bench->add_option("--out", b_out, "also write the JSON result here");

    // gen-synth
    auto *gen = app.add_subcommand("gen-synth",
                                   "generate a synthetic pool + dataset");
    std::string g_pool = "pool.json", g_data = "data.jsonl";
    std::size_t g_models = 20, g_queries = 500, g_dim = 32, g_centers = 4;
    u64 g_seed = 1;
    gen->add_option("--out-pool", g_pool, "pool JSON path");
    gen->add_option("--out-data", g_data, "dataset JSONL path");
    gen->add_option("--models", g_models, "number of models");
    gen->add_option("--queries", g_queries, "number of queries");
    gen->add_option("--dim", g_dim, "embedding dimension");
    gen->add_option("--centers", g_centers, "number of cluster centers");
    gen->add_option("--seed", g_seed, "RNG seed");

    // deferral
    auto *defer = app.add_subcommand("deferral",
                                     "sweep lambda and compute curve metrics");
    std::string d_pool, d_data, d_policy = "cscr-plain";
    std::string d_lambdas = "0:0.05:0.0025", d_backend = "dealer-oracle";
    std::string d_curve, d_metrics;
    std::size_t d_k = 3;
    u64 d_seed = 1;
    bool d_serial = false;
    defer->add_option("--pool", d_pool, "pool JSON file")->required();
    defer->add_option("--data", d_data, "dataset JSONL file")->required();
    defer->add_option("--policy", d_policy,
                      "cscr-secure|cscr-plain|uniroute-secure|uniroute-plain|"
                      "random|oracle");
    defer->add_option("--lambdas", d_lambdas, "lo:hi:step or comma list");
    defer->add_option("--k", d_k, "CSCR shortlist size");
    defer->add_option("--backend", d_backend, "circuit|dealer-oracle");
    defer->add_option("--seed", d_seed, "RNG seed");
    defer->add_option("--out-curve", d_curve, "write lambda,cost,quality CSV");
    defer->add_option("--out-metrics", d_metrics, "also write metrics JSON");
    defer->add_flag("--serial", d_serial, "disable the per-query parallelism");

    // encoder-demo
    auto *enc = app.add_subcommand("encoder-demo",
                                   "secure encoder block vs plaintext oracle");
    std::string e_weights, e_backend = "circuit", e_out;
    std::size_t e_s = 8, e_d = 16, e_dff = 32;
    u64 e_seed = 1;
    enc->add_option("--seed", e_seed, "RNG seed");
    enc->add_option("--s", e_s, "sequence length");
    enc->add_option("--d", e_d, "model width");
    enc->add_option("--dff", e_dff, "FFN width");
    enc->add_option("--weights", e_weights, "weights JSON (default: random)");
    enc->add_option("--backend", e_backend, "circuit|dealer-oracle");
    enc->add_option("--out", e_out, "also write the JSON result here");

    try {
        app.parse(argc, argv);
        if (route->parsed())
            return cmd_route(r_pool, r_query, r_query_file, r_policy, r_k,
                             r_lambda, r_backend, r_seed, r_out);
        if (bench->parsed())
            return cmd_bench_topk(b_alg, b_n, b_k, b_trials, b_backend, b_seed,
                                  b_out);
        if (gen->parsed())
            return cmd_gen_synth(g_pool, g_data, g_models, g_queries, g_dim,
                                 g_centers, g_seed);
        if (defer->parsed())
            return cmd_deferral(d_pool, d_data, d_policy, d_lambdas, d_k,
                                d_backend, d_seed, d_curve, d_metrics,
                                d_serial);
        if (enc->parsed())
            return cmd_encoder_demo(e_seed, e_s, e_d, e_dff, e_weights,
                                    e_backend, e_out);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e);
        // CLI11 returns 0 for --help; anything else is a usage error
        return code == 0 ? 0 : 2;
    } catch (const ProtocolError &e) {
        std::cerr << "protocol error: " << e.what() << "\n";
        return 3;
    } catch (const ArgError &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const ConfigError &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const RangeError &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
