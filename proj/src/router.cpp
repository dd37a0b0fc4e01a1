#include "pproute/router.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "pproute/log.hpp"
#include "pproute/protocols.hpp"

namespace pproute::router {

using nlohmann::json;

double ModelPool::max_cost() const {
    double m = 0;
    for (const auto &e : models)
        m = std::max(m, e.cost);
    return m;
}

ModelPool load_pool(const std::string &path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("pool: cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception &e) {
        throw ConfigError("pool: bad JSON in " + path + ": " + e.what());
    }
    ModelPool pool;
    try {
        pool.dim = j.at("dim").get<std::size_t>();
        for (const auto &jm : j.at("models")) {
            ModelEntry m;
            m.id = jm.at("id").get<std::string>();
            m.embedding = jm.at("embedding").get<std::vector<double>>();
            m.cost = jm.at("cost").get<double>();
            if (jm.contains("cluster_errors"))
                m.cluster_errors =
                    jm.at("cluster_errors").get<std::vector<double>>();
            pool.models.push_back(std::move(m));
        }
        if (j.contains("centers"))
            pool.centers = j.at("centers").get<std::vector<double>>();
    } catch (const json::exception &e) {
        throw ConfigError("pool: missing or mistyped field in " + path + ": " +
                          e.what());
    }
    validate_pool(pool);
    return pool;
}

void save_pool(const ModelPool &pool, const std::string &path) {
    json models = json::array();
    for (const auto &m : pool.models) {
        json jm{{"id", m.id}, {"embedding", m.embedding}, {"cost", m.cost}};
        if (!m.cluster_errors.empty())
            jm["cluster_errors"] = m.cluster_errors;
        models.push_back(std::move(jm));
    }
    json j{{"dim", pool.dim}, {"models", std::move(models)}};
    if (!pool.centers.empty())
        j["centers"] = pool.centers;
    std::ofstream out(path);
    if (!out)
        throw ConfigError("pool: cannot write " + path);
    out << j.dump(2) << '\n';
}

void validate_unit(std::span<double> v, const std::string &what) {
    double n2 = 0;
    for (double x : v) {
        if (!std::isfinite(x))
            throw ConfigError(what + ": non-finite entry");
        n2 += x * x;
    }
    const double norm = std::sqrt(n2);
    if (std::fabs(norm - 1.0) <= 1e-3) {
        if (norm != 1.0) {
            for (auto &x : v)
                x /= norm;
            log::info(what + ": renormalized (|norm-1| = " +
                      std::to_string(std::fabs(norm - 1.0)) + ")");
        }
        return;
    }
    throw ConfigError(what + ": embedding norm " + std::to_string(norm) +
                      " is too far from 1");
}

void validate_pool(ModelPool &pool) {
    if (pool.dim == 0)
        throw ConfigError("pool: dim must be positive");
    if (pool.models.empty())
        throw ConfigError("pool: no models");
    const std::size_t K = pool.n_centers();
    if (!pool.centers.empty() && pool.centers.size() != K * pool.dim)
        throw ConfigError("pool: centers length is not a multiple of dim");
    for (std::size_t i = 0; i < pool.models.size(); ++i) {
        auto &m = pool.models[i];
        if (m.id.empty())
            throw ConfigError("pool: model " + std::to_string(i) +
                              " has empty id");
        if (m.embedding.size() != pool.dim)
            throw ConfigError("pool: model " + m.id + " embedding dim " +
                              std::to_string(m.embedding.size()) + " != " +
                              std::to_string(pool.dim));
        if (!(m.cost > 0) || !std::isfinite(m.cost))
            throw ConfigError("pool: model " + m.id + " cost must be > 0");
        validate_unit(m.embedding, "pool: model " + m.id);
        if (!m.cluster_errors.empty()) {
            if (m.cluster_errors.size() != K)
                throw ConfigError("pool: model " + m.id +
                                  " cluster_errors length != n_centers");
            for (double e : m.cluster_errors)
                if (!std::isfinite(e) || e < 0 || e > 1)
                    throw ConfigError("pool: model " + m.id +
                                      " cluster_errors entry outside [0,1]");
        }
    }
    for (std::size_t c = 0; c < K; ++c) {
        std::span<double> cv{pool.centers.data() + c * pool.dim, pool.dim};
        validate_unit(cv, "pool: center " + std::to_string(c));
    }
}

Policy policy_from_string(std::string_view s) {
    if (s == "cscr-secure")
        return Policy::cscr_secure;
    if (s == "cscr-plain")
        return Policy::cscr_plain;
    if (s == "uniroute-secure")
        return Policy::uniroute_secure;
    if (s == "uniroute-plain")
        return Policy::uniroute_plain;
    if (s == "random")
        return Policy::random_pick;
    if (s == "oracle")
        return Policy::oracle;
    throw ConfigError("unknown policy: " + std::string(s));
}

const char *to_string(Policy p) {
    switch (p) {
    case Policy::cscr_secure:
        return "cscr-secure";
    case Policy::cscr_plain:
        return "cscr-plain";
    case Policy::uniroute_secure:
        return "uniroute-secure";
    case Policy::uniroute_plain:
        return "uniroute-plain";
    case Policy::random_pick:
        return "random";
    case Policy::oracle:
        return "oracle";
    }
    return "?";
}

bool is_secure(Policy p) {
    return p == Policy::cscr_secure || p == Policy::uniroute_secure;
}

namespace {

void check_query(const ModelPool &pool, std::span<const double> query) {
    if (query.size() != pool.dim)
        throw ArgError("query dim " + std::to_string(query.size()) +
                       " != pool dim " + std::to_string(pool.dim));
}

void check_route_cfg(const ModelPool &pool, const RouteConfig &cfg) {
    if (cfg.k < 1 || cfg.k > pool.n_models())
        throw ArgError("k out of range [1, n_models]");
    if (!(cfg.lambda >= 0) || !std::isfinite(cfg.lambda))
        throw ArgError("lambda must be finite and >= 0");
    // scores must stay well above the masked-select suppression constant
    // -2^(l-3-2f) (-8192 at the default ring)
    if (cfg.lambda * pool.max_cost() > 4096.0)
        throw ArgError("lambda * max_cost too large for the score range");
}

std::vector<double> flat_embeddings(const ModelPool &pool) {
    std::vector<double> flat;
    flat.reserve(pool.n_models() * pool.dim);
    for (const auto &m : pool.models)
        flat.insert(flat.end(), m.embedding.begin(), m.embedding.end());
    return flat;
}

double dot_d(std::span<const double> a, std::span<const double> b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
        s += a[i] * b[i];
    return s;
}

} // namespace

std::size_t route_cscr_plain(const ModelPool &pool,
                             std::span<const double> query, std::size_t k,
                             double lambda, double *gap) {
    check_query(pool, query);
    const std::size_t n = pool.n_models();
    if (k < 1 || k > n)
        throw ArgError("k out of range [1, n_models]");
    std::vector<double> sims(n);
    for (std::size_t i = 0; i < n; ++i)
        sims[i] = dot_d(query, pool.models[i].embedding);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) {
                         if (sims[a] != sims[b])
                             return sims[a] > sims[b];
                         return a < b;
                     });
    double boundary = std::numeric_limits<double>::infinity();
    if (k < n)
        boundary = sims[order[k - 1]] - sims[order[k]];

    std::size_t best = n;
    double best_score = 0, second = -std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < k; ++t) {
        const std::size_t i = order[t];
        const double sc = sims[i] - lambda * pool.models[i].cost;
        if (best == n || sc > best_score || (sc == best_score && i < best)) {
            if (best != n)
                second = std::max(second, best_score);
            best = i;
            best_score = sc;
        } else {
            second = std::max(second, sc);
        }
    }
    if (gap) {
        const double final_gap =
            std::isfinite(second) ? best_score - second
                                  : std::numeric_limits<double>::infinity();
        *gap = std::min(boundary, final_gap);
    }
    return best;
}

std::size_t route_uniroute_plain(const ModelPool &pool,
                                 std::span<const double> query, double lambda,
                                 double *gap) {
    check_query(pool, query);
    const std::size_t K = pool.n_centers();
    const std::size_t n = pool.n_models();
    if (K == 0)
        throw ConfigError("uniroute: pool has no centers");
    for (const auto &m : pool.models)
        if (m.cluster_errors.size() != K)
            throw ConfigError("uniroute: model " + m.id +
                              " lacks cluster_errors");

    std::size_t h = 0;
    double c1 = -std::numeric_limits<double>::infinity(), c2 = c1;
    for (std::size_t c = 0; c < K; ++c) {
        double s = dot_d(query, {pool.centers.data() + c * pool.dim, pool.dim});
        if (s > c1) {
            c2 = c1;
            c1 = s;
            h = c;
        } else {
            c2 = std::max(c2, s);
        }
    }
    std::size_t best = 0;
    double b1 = -std::numeric_limits<double>::infinity(), b2 = b1;
    for (std::size_t i = 0; i < n; ++i) {
        const double obj = -(pool.models[i].cluster_errors[h] +
                             lambda * pool.models[i].cost);
        if (obj > b1) {
            b2 = b1;
            b1 = obj;
            best = i;
        } else {
            b2 = std::max(b2, obj);
        }
    }
    if (gap) {
        const double cg = K > 1 ? c1 - c2
                                : std::numeric_limits<double>::infinity();
        const double bg = n > 1 ? b1 - b2
                                : std::numeric_limits<double>::infinity();
        *gap = std::min(cg, bg);
    }
    return best;
}

RouteResult route_cscr_secure(const ModelPool &pool,
                              std::span<const double> query,
                              const RouteConfig &cfg) {
    check_query(pool, query);
    check_route_cfg(pool, cfg);
    const std::size_t n = pool.n_models(), d = pool.dim;

    SessionConfig scfg;
    scfg.backend = cfg.backend;
    scfg.seed = cfg.seed;
    Session sess(scfg);
    const Ring &r = sess.ring();

    // adjusted score offsets -lambda * cost are public
    std::vector<u64> adj(n);
    for (std::size_t i = 0; i < n; ++i)
        adj[i] = r.encode(-cfg.lambda * pool.models[i].cost);

    auto flat = flat_embeddings(pool);
    auto body = [&](PartyCtx &ctx) -> std::size_t {
        std::span<const double> mine =
            ctx.party() == 0 ? query : std::span<const double>(flat);
        auto [q, M] = proto::share_inputs(ctx, mine, d, n * d);
        auto sims = proto::matvec(ctx, M, q, n, d);
        auto emb = topk::embed_tiebreak(r, sims);
        auto kmask = topk::unsorted_topk(ctx, emb, cfg.k);
        auto scores = add_public_raw(r, sims, adj);
        return topk::masked_select_max(ctx, scores, kmask);
    };
    auto [i0, i1] = sess.run(body, body);
    if (i0 != i1)
        throw ProtocolError("cscr: parties disagree on the opened index");
    RouteResult res;
    res.model_index = i0;
    res.model_id = pool.models[i0].id;
    res.stats = sess.stats();
    return res;
}

RouteResult route_uniroute_secure(const ModelPool &pool,
                                  std::span<const double> query,
                                  const RouteConfig &cfg) {
    check_query(pool, query);
    const std::size_t K = pool.n_centers();
    const std::size_t n = pool.n_models(), d = pool.dim;
    if (K == 0)
        throw ConfigError("uniroute: pool has no centers");
    for (const auto &m : pool.models)
        if (m.cluster_errors.size() != K)
            throw ConfigError("uniroute: model " + m.id +
                              " lacks cluster_errors");
    if (!(cfg.lambda >= 0) || !std::isfinite(cfg.lambda))
        throw ArgError("lambda must be finite and >= 0");
    if (cfg.lambda * pool.max_cost() > 4096.0)
        throw ArgError("lambda * max_cost too large for the score range");

    SessionConfig scfg;
    scfg.backend = cfg.backend;
    scfg.seed = cfg.seed;
    Session sess(scfg);
    const Ring &r = sess.ring();

    std::vector<u64> lam(n);
    for (std::size_t i = 0; i < n; ++i)
        lam[i] = r.encode(-cfg.lambda * pool.models[i].cost);

    auto body = [&](PartyCtx &ctx) -> std::size_t {
        std::span<const double> mine =
            ctx.party() == 0 ? query : std::span<const double>(pool.centers);
        auto [q, C] = proto::share_inputs(ctx, mine, d, K * d);
        auto csims = proto::matvec(ctx, C, q, K, d);
        auto cemb = topk::embed_tiebreak(r, csims);
        auto z = topk::unsorted_topk(ctx, cemb, 1); // cluster one-hot, stays shared
        // err_i = sum_c errors[i][c] * z_c: public table times bit shares
        ShareVector obj{ctx.party(), std::vector<u64>(n, 0)};
        for (std::size_t i = 0; i < n; ++i) {
            u64 acc = 0;
            for (std::size_t c = 0; c < K; ++c)
                acc += r.mul(r.encode(pool.models[i].cluster_errors[c]),
                             z.bits.e[c]);
            obj.e[i] = r.neg(acc & r.mask()); // maximize -(err + lambda cost)
        }
        obj = add_public_raw(r, obj, lam);
        ShareVector ones{ctx.party(), std::vector<u64>(n, 0)};
        if (ctx.party() == 0)
            std::fill(ones.e.begin(), ones.e.end(), 1);
        return topk::masked_select_max(ctx, obj, {std::move(ones), n});
    };
    auto [i0, i1] = sess.run(body, body);
    if (i0 != i1)
        throw ProtocolError("uniroute: parties disagree on the opened index");
    RouteResult res;
    res.model_index = i0;
    res.model_id = pool.models[i0].id;
    res.stats = sess.stats();
    return res;
}

u64 rounds_cscr(const SessionConfig &cfg, std::size_t n) {
    return 1 + 1 + topk::rounds_unsorted(cfg, n) + topk::rounds_masked_select(cfg);
}

u64 rounds_uniroute(const SessionConfig &cfg, std::size_t n_centers) {
    return 1 + 1 + topk::rounds_unsorted(cfg, n_centers) +
           topk::rounds_masked_select(cfg);
}

} // namespace pproute::router
