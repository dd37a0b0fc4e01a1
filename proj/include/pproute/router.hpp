#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pproute/comm.hpp"
#include "pproute/engine.hpp"
#include "pproute/topk.hpp"

// Cost-aware model routing over embedding similarity, in the clear and under
// two-party sharing.  The query embedding is private to party 0, the model
// embedding matrix (and cluster centers) to party 1; costs, error tables and
// lambda are public routing metadata.
namespace pproute::router {

struct ModelEntry {
    std::string id;
    std::vector<double> embedding; // unit norm
    double cost = 0.0;             // > 0
    std::vector<double> cluster_errors; // per-cluster expected error, optional
};

struct ModelPool {
    std::size_t dim = 0;
    std::vector<ModelEntry> models;
    std::vector<double> centers; // n_centers x dim, row-major; may be empty

    std::size_t n_models() const { return models.size(); }
    std::size_t n_centers() const {
        return dim == 0 ? 0 : centers.size() / dim;
    }
    double max_cost() const;
};

ModelPool load_pool(const std::string &path);
void save_pool(const ModelPool &pool, const std::string &path);

// Checks dimensions, costs, error tables; embeddings off unit norm by less
// than 1e-3 are renormalized with a warning, worse ones are rejected.
void validate_pool(ModelPool &pool);
// same policy for a query vector
void validate_unit(std::span<double> v, const std::string &what);

enum class Policy {
    cscr_secure,
    cscr_plain,
    uniroute_secure,
    uniroute_plain,
    random_pick,
    oracle
};
Policy policy_from_string(std::string_view s);
const char *to_string(Policy p);
bool is_secure(Policy p);

struct RouteConfig {
    std::size_t k = 3;   // CSCR shortlist size
    double lambda = 0.0; // cost weight
    CmpBackend backend = CmpBackend::circuit;
    u64 seed = 1;
};

struct RouteResult {
    std::size_t model_index = 0;
    std::string model_id;
    CommStats stats; // all zero for plaintext policies
};

// ---- plaintext references (double precision, ties to lower index) ----
// shortlist by cosine, then argmax of sim - lambda * cost on the shortlist;
// *gap = smallest decision margin met along the way (shortlist boundary and
// final argmax), for agreement analysis
std::size_t route_cscr_plain(const ModelPool &pool,
                             std::span<const double> query, std::size_t k,
                             double lambda, double *gap = nullptr);
// nearest center picks the error column; argmin of err + lambda * cost
std::size_t route_uniroute_plain(const ModelPool &pool,
                                 std::span<const double> query, double lambda,
                                 double *gap = nullptr);

// ---- secure routing (one two-party session per call) ----
RouteResult route_cscr_secure(const ModelPool &pool,
                              std::span<const double> query,
                              const RouteConfig &cfg);
RouteResult route_uniroute_secure(const ModelPool &pool,
                                  std::span<const double> query,
                                  const RouteConfig &cfg);

// declared online rounds
u64 rounds_cscr(const SessionConfig &cfg, std::size_t n);
u64 rounds_uniroute(const SessionConfig &cfg, std::size_t n_centers);

} // namespace pproute::router
