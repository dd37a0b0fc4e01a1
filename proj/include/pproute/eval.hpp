#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pproute/router.hpp"

// Deferral-curve evaluation: sweep the cost weight lambda, route every query
// under each policy, and reduce the (cost, quality) trade-off curve to
// scalar metrics.
namespace pproute::eval {

struct QueryItem {
    std::string id;
    std::vector<double> embedding;
    std::map<std::string, double> quality; // model id -> quality in [0,1]
};

using Dataset = std::vector<QueryItem>;

Dataset load_dataset(const std::string &path); // JSONL, one item per line
void save_dataset(const Dataset &data, const std::string &path);
// embeddings unit-normalized (same tolerance rules as the pool), quality
// entries must cover every pool model
void validate_dataset(Dataset &data, const router::ModelPool &pool);

// ---- synthetic benchmark generator ----
struct SynthConfig {
    u64 seed = 1;
    std::size_t n_models = 20;
    std::size_t n_queries = 500;
    std::size_t dim = 32;
    std::size_t n_centers = 4;
};
struct SynthOut {
    router::ModelPool pool;
    Dataset data;
};
// quality correlates with query-model cosine (Pearson ~0.6); costs are
// log-uniform in [1, 100]; cluster error tables are estimated from the
// generated data so UniRoute has signal too
SynthOut gen_synth(const SynthConfig &cfg);

// ---- deferral sweep ----
struct CurvePoint {
    double lambda = 0;
    double cost = 0;    // mean per-query cost, normalized by max model cost
    double quality = 0; // mean per-query quality
};

struct SweepConfig {
    router::Policy policy = router::Policy::cscr_plain;
    std::vector<double> lambdas;
    std::size_t k = 3;
    CmpBackend backend = CmpBackend::dealer_oracle;
    u64 seed = 1;
    bool parallel = true; // OpenMP over queries; results are order-independent
};

struct SweepResult {
    std::vector<CurvePoint> curve;        // one point per lambda, in order
    std::vector<std::vector<std::size_t>> picks; // [lambda][query] model index
    u64 total_online_bytes = 0;           // secure policies only
    u64 total_sessions = 0;
};

SweepResult deferral_sweep(const router::ModelPool &pool, const Dataset &data,
                           const SweepConfig &cfg);

// ---- metrics ----
struct Metrics {
    double audc = 0;
    std::optional<double> qnc; // empty = quality-neutral cost unattained
    double peak = 0;
};

// area under the deferral curve on the normalized cost axis [0,1]:
// duplicate costs keep the best quality, trapezoid between points, flat
// extrapolation to the ends
double audc(std::span<const CurvePoint> curve);
double peak_quality(std::span<const CurvePoint> curve);
// smallest normalized curve cost whose (interpolated) quality reaches the
// best single model's mean quality, as a fraction of that model's
// normalized cost; empty when the curve never reaches it
std::optional<double> qnc(std::span<const CurvePoint> curve,
                          const router::ModelPool &pool, const Dataset &data);

Metrics compute_metrics(std::span<const CurvePoint> curve,
                        const router::ModelPool &pool, const Dataset &data);

// best single model: highest mean quality over the dataset, ties to the
// cheaper then lower-index model; returns (index, mean_quality)
std::pair<std::size_t, double> best_single_model(const router::ModelPool &pool,
                                                 const Dataset &data);

void save_curve_csv(std::span<const CurvePoint> curve, const std::string &path);

// baseline picks used by the sweep (exposed for tests)
std::size_t pick_random(const router::ModelPool &pool, u64 seed,
                        std::size_t query_index);
std::size_t pick_oracle(const router::ModelPool &pool, const QueryItem &q);

} // namespace pproute::eval
