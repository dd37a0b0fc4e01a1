#include "pproute/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "pproute/log.hpp"

namespace pproute::eval {

using nlohmann::json;

Dataset load_dataset(const std::string &path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("dataset: cannot open " + path);
    Dataset data;
    std::string line;
    std::size_t ln = 0;
    while (std::getline(in, line)) {
        ++ln;
        if (line.empty())
            continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception &e) {
            throw ConfigError("dataset: bad JSON on line " +
                              std::to_string(ln) + ": " + e.what());
        }
        QueryItem q;
        try {
            q.id = j.at("id").get<std::string>();
            q.embedding = j.at("embedding").get<std::vector<double>>();
            for (auto &[k, v] : j.at("quality").items())
                q.quality[k] = v.get<double>();
        } catch (const json::exception &e) {
            throw ConfigError("dataset: missing field on line " +
                              std::to_string(ln) + ": " + e.what());
        }
        data.push_back(std::move(q));
    }
    if (data.empty())
        throw ConfigError("dataset: no items in " + path);
    return data;
}

void save_dataset(const Dataset &data, const std::string &path) {
    std::ofstream out(path);
    if (!out)
        throw ConfigError("dataset: cannot write " + path);
    for (const auto &q : data) {
        json jq{{"id", q.id},
                {"embedding", q.embedding},
                {"quality", json::object()}};
        for (const auto &[k, v] : q.quality)
            jq["quality"][k] = v;
        out << jq.dump() << '\n';
    }
}

void validate_dataset(Dataset &data, const router::ModelPool &pool) {
    for (auto &q : data) {
        if (q.embedding.size() != pool.dim)
            throw ConfigError("dataset: query " + q.id + " dim mismatch");
        router::validate_unit(q.embedding, "dataset: query " + q.id);
        for (const auto &m : pool.models) {
            auto it = q.quality.find(m.id);
            if (it == q.quality.end())
                throw ConfigError("dataset: query " + q.id +
                                  " lacks quality for model " + m.id);
            if (!std::isfinite(it->second) || it->second < 0 ||
                it->second > 1)
                throw ConfigError("dataset: query " + q.id +
                                  " quality for " + m.id + " outside [0,1]");
        }
    }
}

// ---- synthetic generator ----

namespace {

std::vector<double> unit_gaussian(Rng &rng, std::size_t dim) {
    std::vector<double> v(dim);
    double n2 = 0;
    do {
        n2 = 0;
        for (auto &x : v) {
            x = rng.next_gaussian();
            n2 += x * x;
        }
    } while (n2 == 0);
    const double inv = 1.0 / std::sqrt(n2);
    for (auto &x : v)
        x *= inv;
    return v;
}

double clip01(double x) { return std::min(1.0, std::max(0.0, x)); }

} // namespace

SynthOut gen_synth(const SynthConfig &cfg) {
    if (cfg.n_models == 0 || cfg.n_queries == 0 || cfg.dim == 0)
        throw ArgError("gen_synth: counts must be positive");
    SynthOut out;
    Rng rng(mix_seed(cfg.seed, 0x5e17ULL));

    out.pool.dim = cfg.dim;
    for (std::size_t i = 0; i < cfg.n_models; ++i) {
        router::ModelEntry m;
        char buf[16];
        std::snprintf(buf, sizeof buf, "m%03zu", i);
        m.id = buf;
        m.embedding = unit_gaussian(rng, cfg.dim);
        m.cost = std::exp(rng.next_real(0.0, std::log(100.0))); // [1, 100)
        out.pool.models.push_back(std::move(m));
    }
    for (std::size_t c = 0; c < cfg.n_centers; ++c) {
        auto cv = unit_gaussian(rng, cfg.dim);
        out.pool.centers.insert(out.pool.centers.end(), cv.begin(), cv.end());
    }

    // queries + raw cosines
    std::vector<std::vector<double>> cosines(cfg.n_queries);
    for (std::size_t qi = 0; qi < cfg.n_queries; ++qi) {
        QueryItem q;
        char buf[16];
        std::snprintf(buf, sizeof buf, "q%05zu", qi);
        q.id = buf;
        q.embedding = unit_gaussian(rng, cfg.dim);
        cosines[qi].resize(cfg.n_models);
        for (std::size_t mi = 0; mi < cfg.n_models; ++mi) {
            double s = 0;
            for (std::size_t t = 0; t < cfg.dim; ++t)
                s += q.embedding[t] * out.pool.models[mi].embedding[t];
            cosines[qi][mi] = s;
        }
        out.data.push_back(std::move(q));
    }

    // standardize cosines over the whole table, then quality =
    // 0.5 + 0.15 * (0.6 * s_hat + 0.8 * noise): Pearson corr ~ 0.6
    double mean = 0, var = 0;
    const double cnt = double(cfg.n_queries * cfg.n_models);
    for (const auto &row : cosines)
        for (double s : row)
            mean += s;
    mean /= cnt;
    for (const auto &row : cosines)
        for (double s : row)
            var += (s - mean) * (s - mean);
    var /= cnt;
    const double sd = var > 0 ? std::sqrt(var) : 1.0;

    for (std::size_t qi = 0; qi < cfg.n_queries; ++qi)
        for (std::size_t mi = 0; mi < cfg.n_models; ++mi) {
            const double shat = (cosines[qi][mi] - mean) / sd;
            const double eps = rng.next_gaussian();
            out.data[qi].quality[out.pool.models[mi].id] =
                clip01(0.5 + 0.15 * (0.6 * shat + 0.8 * eps));
        }

    // cluster error tables from the generated data
    const std::size_t K = cfg.n_centers;
    if (K > 0) {
        std::vector<std::size_t> assign(cfg.n_queries);
        for (std::size_t qi = 0; qi < cfg.n_queries; ++qi) {
            std::size_t best = 0;
            double bs = -2;
            for (std::size_t c = 0; c < K; ++c) {
                double s = 0;
                for (std::size_t t = 0; t < cfg.dim; ++t)
                    s += out.data[qi].embedding[t] *
                         out.pool.centers[c * cfg.dim + t];
                if (s > bs) {
                    bs = s;
                    best = c;
                }
            }
            assign[qi] = best;
        }
        for (std::size_t mi = 0; mi < cfg.n_models; ++mi) {
            auto &m = out.pool.models[mi];
            double overall = 0;
            for (std::size_t qi = 0; qi < cfg.n_queries; ++qi)
                overall += out.data[qi].quality.at(m.id);
            overall /= double(cfg.n_queries);
            m.cluster_errors.assign(K, 1.0 - overall);
            for (std::size_t c = 0; c < K; ++c) {
                double sum = 0;
                std::size_t cn = 0;
                for (std::size_t qi = 0; qi < cfg.n_queries; ++qi)
                    if (assign[qi] == c) {
                        sum += out.data[qi].quality.at(m.id);
                        ++cn;
                    }
                if (cn > 0)
                    m.cluster_errors[c] = clip01(1.0 - sum / double(cn));
            }
        }
    }
    router::validate_pool(out.pool);
    validate_dataset(out.data, out.pool);
    return out;
}

// ---- baselines ----

std::size_t pick_random(const router::ModelPool &pool, u64 seed,
                        std::size_t query_index) {
    // depends on (seed, query) only, never on lambda: the curve is flat
    Rng rng(mix_seed(seed, 0xba5e11ULL + query_index));
    return std::size_t(rng.next_below(pool.n_models()));
}

std::size_t pick_oracle(const router::ModelPool &pool, const QueryItem &q) {
    std::size_t best = 0;
    double bq = -1, bc = 0;
    for (std::size_t i = 0; i < pool.n_models(); ++i) {
        const double quality = q.quality.at(pool.models[i].id);
        const double cost = pool.models[i].cost;
        if (quality > bq || (quality == bq && cost < bc)) {
            best = i;
            bq = quality;
            bc = cost;
        }
    }
    return best;
}

// ---- sweep ----

SweepResult deferral_sweep(const router::ModelPool &pool, const Dataset &data,
                           const SweepConfig &cfg) {
    if (cfg.lambdas.empty())
        throw ArgError("deferral_sweep: no lambda values");
    if (data.empty())
        throw ArgError("deferral_sweep: empty dataset");
    using router::Policy;
    const std::size_t nq = data.size();
    const std::size_t nl = cfg.lambdas.size();
    const double cmax = pool.max_cost();

    SweepResult res;
    res.picks.assign(nl, std::vector<std::size_t>(nq, 0));
    std::vector<u64> bytes_per_query(nq, 0);

    for (std::size_t li = 0; li < nl; ++li) {
        const double lambda = cfg.lambdas[li];
        auto route_one = [&](std::size_t qi) -> std::size_t {
            const auto &q = data[qi];
            switch (cfg.policy) {
            case Policy::cscr_plain:
                return router::route_cscr_plain(pool, q.embedding, cfg.k,
                                                lambda);
            case Policy::uniroute_plain:
                return router::route_uniroute_plain(pool, q.embedding, lambda);
            case Policy::random_pick:
                return pick_random(pool, cfg.seed, qi);
            case Policy::oracle:
                return pick_oracle(pool, q);
            case Policy::cscr_secure:
            case Policy::uniroute_secure: {
                router::RouteConfig rc;
                rc.k = cfg.k;
                rc.lambda = lambda;
                rc.backend = cfg.backend;
                rc.seed = mix_seed(cfg.seed, li * 1000003ULL + qi);
                auto r = cfg.policy == Policy::cscr_secure
                             ? router::route_cscr_secure(pool, q.embedding, rc)
                             : router::route_uniroute_secure(pool, q.embedding,
                                                             rc);
                bytes_per_query[qi] += r.stats.total_bytes();
                return r.model_index;
            }
            }
            throw ArgError("deferral_sweep: unhandled policy");
        };

        auto &row = res.picks[li];
        if (cfg.parallel && router::is_secure(cfg.policy)) {
            // exceptions cannot unwind out of the parallel region
            std::exception_ptr first_error;
#pragma omp parallel for schedule(dynamic)
            for (long long qi = 0; qi < (long long)nq; ++qi) {
                try {
                    row[std::size_t(qi)] = route_one(std::size_t(qi));
                } catch (...) {
#pragma omp critical(pproute_sweep_error)
                    if (!first_error)
                        first_error = std::current_exception();
                }
            }
            if (first_error)
                std::rethrow_exception(first_error);
        } else {
            for (std::size_t qi = 0; qi < nq; ++qi)
                row[qi] = route_one(qi);
        }

        // serial reduction keeps double rounding deterministic
        double cost_sum = 0, qual_sum = 0;
        for (std::size_t qi = 0; qi < nq; ++qi) {
            const auto &m = pool.models[row[qi]];
            cost_sum += m.cost;
            qual_sum += data[qi].quality.at(m.id);
        }
        CurvePoint pt;
        pt.lambda = lambda;
        pt.cost = cost_sum / double(nq) / cmax;
        pt.quality = qual_sum / double(nq);
        res.curve.push_back(pt);
        if (router::is_secure(cfg.policy))
            res.total_sessions += nq;
    }
    for (u64 b : bytes_per_query)
        res.total_online_bytes += b;
    return res;
}

// ---- metrics ----

namespace {

// sort by cost, fuse duplicate costs keeping the best quality
std::vector<CurvePoint> dedupe(std::span<const CurvePoint> curve) {
    std::vector<CurvePoint> pts(curve.begin(), curve.end());
    std::sort(pts.begin(), pts.end(), [](const CurvePoint &a,
                                         const CurvePoint &b) {
        return a.cost < b.cost;
    });
    std::vector<CurvePoint> out;
    for (const auto &p : pts) {
        if (!out.empty() && out.back().cost == p.cost)
            out.back().quality = std::max(out.back().quality, p.quality);
        else
            out.push_back(p);
    }
    return out;
}

} // namespace

double audc(std::span<const CurvePoint> curve) {
    if (curve.empty())
        throw ArgError("audc: empty curve");
    auto pts = dedupe(curve);
    double area = 0;
    // flat extrapolation to the left edge
    area += pts.front().quality * std::max(0.0, pts.front().cost);
    for (std::size_t i = 1; i < pts.size(); ++i)
        area += 0.5 * (pts[i - 1].quality + pts[i].quality) *
                (pts[i].cost - pts[i - 1].cost);
    // flat extrapolation to the right edge
    if (pts.back().cost < 1.0)
        area += pts.back().quality * (1.0 - pts.back().cost);
    return area;
}

double peak_quality(std::span<const CurvePoint> curve) {
    if (curve.empty())
        throw ArgError("peak: empty curve");
    double p = 0;
    for (const auto &c : curve)
        p = std::max(p, c.quality);
    return p;
}

std::pair<std::size_t, double> best_single_model(const router::ModelPool &pool,
                                                 const Dataset &data) {
    std::size_t best = 0;
    double bq = -1;
    for (std::size_t i = 0; i < pool.n_models(); ++i) {
        double sum = 0;
        for (const auto &q : data)
            sum += q.quality.at(pool.models[i].id);
        const double avg = sum / double(data.size());
        const bool better =
            avg > bq || (avg == bq && pool.models[i].cost < pool.models[best].cost);
        if (i == 0 || better) {
            best = i;
            bq = avg;
        }
    }
    return {best, bq};
}

std::optional<double> qnc(std::span<const CurvePoint> curve,
                          const router::ModelPool &pool, const Dataset &data) {
    if (curve.empty())
        throw ArgError("qnc: empty curve");
    auto [bi, target] = best_single_model(pool, data);
    const double ref_cost = pool.models[bi].cost / pool.max_cost();
    auto pts = dedupe(curve);

    // walk the piecewise-linear curve left to right for the first crossing
    double reach = std::numeric_limits<double>::quiet_NaN();
    if (pts.front().quality >= target)
        reach = pts.front().cost;
    else {
        for (std::size_t i = 1; i < pts.size() && std::isnan(reach); ++i) {
            const auto &a = pts[i - 1], &b = pts[i];
            if (b.quality >= target) {
                // linear interpolation inside the segment
                const double t =
                    b.quality == a.quality
                        ? 1.0
                        : (target - a.quality) / (b.quality - a.quality);
                reach = a.cost + t * (b.cost - a.cost);
            }
        }
    }
    if (std::isnan(reach))
        return std::nullopt;
    if (!(ref_cost > 0))
        throw ConfigError("qnc: reference model has non-positive cost");
    return reach / ref_cost;
}

Metrics compute_metrics(std::span<const CurvePoint> curve,
                        const router::ModelPool &pool, const Dataset &data) {
    Metrics m;
    m.audc = audc(curve);
    m.peak = peak_quality(curve);
    m.qnc = qnc(curve, pool, data);
    return m;
}

void save_curve_csv(std::span<const CurvePoint> curve,
                    const std::string &path) {
    std::ofstream out(path);
    if (!out)
        throw ConfigError("curve: cannot write " + path);
    out << "lambda,cost,quality\n";
    char buf[128];
    for (const auto &p : curve) {
        std::snprintf(buf, sizeof buf, "%.10g,%.10g,%.10g\n", p.lambda, p.cost,
                      p.quality);
        out << buf;
    }
}

} // namespace pproute::eval
