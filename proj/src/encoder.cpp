#include "pproute/encoder.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

namespace pproute::encoder {

using nlohmann::json;

Weights random_weights(u64 seed, std::size_t d, std::size_t d_ff) {
    if (d == 0 || d_ff == 0)
        throw ArgError("random_weights: dimensions must be positive");
    Weights w;
    w.d = d;
    w.d_ff = d_ff;
    Rng rng(mix_seed(seed, 0xe4c0de5ULL));
    auto fill = [&](std::vector<double> &m, std::size_t n, std::size_t fan_in) {
        m.resize(n);
        const double sc = 1.0 / std::sqrt(double(fan_in));
        for (auto &x : m)
            x = rng.next_gaussian() * sc;
    };
    fill(w.wq, d * d, d);
    fill(w.wk, d * d, d);
    fill(w.wv, d * d, d);
    fill(w.w1, d * d_ff, d);
    fill(w.w2, d_ff * d, d_ff);
    w.b1.assign(d_ff, 0.0);
    w.b2.assign(d, 0.0);
    validate(w);
    return w;
}

void validate(const Weights &w) {
    if (w.d == 0 || w.d_ff == 0)
        throw ConfigError("weights: zero dimension");
    auto need = [&](const std::vector<double> &m, std::size_t n,
                    const char *name) {
        if (m.size() != n)
            throw ConfigError(std::string("weights: ") + name +
                              " has wrong length");
        for (double x : m)
            if (!std::isfinite(x) || std::fabs(x) > 8.0)
                throw ConfigError(std::string("weights: ") + name +
                                  " entry out of range [-8, 8]");
    };
    need(w.wq, w.d * w.d, "wq");
    need(w.wk, w.d * w.d, "wk");
    need(w.wv, w.d * w.d, "wv");
    need(w.w1, w.d * w.d_ff, "w1");
    need(w.b1, w.d_ff, "b1");
    need(w.w2, w.d_ff * w.d, "w2");
    need(w.b2, w.d, "b2");
}

Weights load_weights(const std::string &path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("weights: cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception &e) {
        throw ConfigError("weights: bad JSON in " + path + ": " + e.what());
    }
    Weights w;
    try {
        w.d = j.at("d").get<std::size_t>();
        w.d_ff = j.at("d_ff").get<std::size_t>();
        w.wq = j.at("wq").get<std::vector<double>>();
        w.wk = j.at("wk").get<std::vector<double>>();
        w.wv = j.at("wv").get<std::vector<double>>();
        w.w1 = j.at("w1").get<std::vector<double>>();
        w.b1 = j.at("b1").get<std::vector<double>>();
        w.w2 = j.at("w2").get<std::vector<double>>();
        w.b2 = j.at("b2").get<std::vector<double>>();
    } catch (const json::exception &e) {
        throw ConfigError("weights: missing or mistyped field in " + path +
                          ": " + e.what());
    }
    validate(w);
    return w;
}

void save_weights(const Weights &w, const std::string &path) {
    json j{{"d", w.d},   {"d_ff", w.d_ff}, {"wq", w.wq}, {"wk", w.wk},
           {"wv", w.wv}, {"w1", w.w1},     {"b1", w.b1}, {"w2", w.w2},
           {"b2", w.b2}};
    std::ofstream out(path);
    if (!out)
        throw ConfigError("weights: cannot write " + path);
    out << j.dump(2) << '\n';
}

std::vector<double> flatten(const Weights &w) {
    std::vector<double> flat;
    flat.reserve(w.total_params());
    for (const auto *m : {&w.wq, &w.wk, &w.wv, &w.w1, &w.b1, &w.w2, &w.b2})
        flat.insert(flat.end(), m->begin(), m->end());
    return flat;
}

namespace {

// C = A (s x k) * B (k x m)
std::vector<double> mm(std::span<const double> A, std::span<const double> B,
                       std::size_t s, std::size_t k, std::size_t m) {
    std::vector<double> C(s * m, 0.0);
    for (std::size_t i = 0; i < s; ++i)
        for (std::size_t t = 0; t < k; ++t) {
            const double a = A[i * k + t];
            for (std::size_t j = 0; j < m; ++j)
                C[i * m + j] += a * B[t * m + j];
        }
    return C;
}

} // namespace

std::vector<double> block_plain(const Weights &w, std::span<const double> X,
                                std::size_t s, const Ring &r) {
    if (X.size() != s * w.d)
        throw ArgError("block_plain: input is not s x d");
    const std::size_t d = w.d, dff = w.d_ff;
    auto Q = mm(X, w.wq, s, d, d);
    auto K = mm(X, w.wk, s, d, d);
    auto V = mm(X, w.wv, s, d, d);

    // scores = Q K^T / sqrt(d), ReLU-softmax with eps = s * 2^-f
    const double scale = 1.0 / std::sqrt(double(d));
    const double eps = double(s) * std::ldexp(1.0, -int(r.f));
    std::vector<double> P(s * s);
    for (std::size_t i = 0; i < s; ++i) {
        double den = eps;
        for (std::size_t j = 0; j < s; ++j) {
            double sc = 0;
            for (std::size_t t = 0; t < d; ++t)
                sc += Q[i * d + t] * K[j * d + t];
            double rl = std::max(sc * scale, 0.0);
            P[i * s + j] = rl;
            den += rl;
        }
        for (std::size_t j = 0; j < s; ++j)
            P[i * s + j] /= den;
    }
    auto A = mm(P, V, s, s, d);

    auto L1 = mm(A, w.w1, s, d, dff);
    for (std::size_t i = 0; i < s; ++i)
        for (std::size_t j = 0; j < dff; ++j)
            L1[i * dff + j] = std::max(L1[i * dff + j] + w.b1[j], 0.0);
    auto out = mm(L1, w.w2, s, dff, d);
    for (std::size_t i = 0; i < s; ++i)
        for (std::size_t j = 0; j < d; ++j)
            out[i * d + j] += w.b2[j];
    return out;
}

ShareVector block_secure(PartyCtx &ctx, std::span<const double> X_if_p0,
                         std::span<const double> weights_flat_if_p1,
                         std::size_t s, std::size_t d, std::size_t d_ff) {
    if (s == 0 || d == 0 || d_ff == 0)
        throw ArgError("block_secure: dimensions must be positive");
    const Ring &r = ctx.ring();
    const std::size_t n_weights =
        3 * d * d + d * d_ff + d_ff + d_ff * d + d;

    auto my_vals = ctx.party() == 0 ? X_if_p0 : weights_flat_if_p1;
    auto [X, W] = proto::share_inputs(ctx, my_vals, s * d, n_weights);

    // slice the flat weight shares
    auto slice = [&](std::size_t off, std::size_t len) {
        return ShareVector{ctx.party(),
                           {W.e.begin() + long(off), W.e.begin() + long(off + len)}};
    };
    std::size_t off = 0;
    auto wq = slice(off, d * d);
    off += d * d;
    auto wk = slice(off, d * d);
    off += d * d;
    auto wv = slice(off, d * d);
    off += d * d;
    auto w1 = slice(off, d * d_ff);
    off += d * d_ff;
    auto b1 = slice(off, d_ff);
    off += d_ff;
    auto w2 = slice(off, d_ff * d);
    off += d_ff * d;
    auto b2 = slice(off, d);

    // Q, K, V in one round
    proto::MatmulJob qkv[3] = {{&X, &wq, s, d, d},
                               {&X, &wk, s, d, d},
                               {&X, &wv, s, d, d}};
    auto QKV = proto::matmul_many(ctx, qkv);
    auto &Q = QKV[0];
    auto &V = QKV[2];
    // K^T is a local shuffle
    ShareVector KT{ctx.party(), std::vector<u64>(d * s)};
    for (std::size_t i = 0; i < s; ++i)
        for (std::size_t t = 0; t < d; ++t)
            KT.e[t * s + i] = QKV[1].e[i * d + t];

    auto S = proto::matmul(ctx, Q, KT, s, d, s);
    S = mul_public_real(r, S, 1.0 / std::sqrt(double(d)));

    auto P = proto::softmax_2relu(ctx, S, s, s);
    auto A = proto::matmul(ctx, P, V, s, s, d);

    auto L1 = proto::matmul(ctx, A, w1, s, d, d_ff);
    for (std::size_t i = 0; i < s; ++i)
        for (std::size_t j = 0; j < d_ff; ++j)
            L1.e[i * d_ff + j] = r.add(L1.e[i * d_ff + j], b1.e[j]);
    auto H = proto::relu(ctx, L1);

    auto out = proto::matmul(ctx, H, w2, s, d_ff, d);
    for (std::size_t i = 0; i < s; ++i)
        for (std::size_t j = 0; j < d; ++j)
            out.e[i * d + j] = r.add(out.e[i * d + j], b2.e[j]);
    return out;
}

u64 rounds_block(const SessionConfig &cfg) {
    // input + qkv + scores + softmax + attn-out + ffn1 + relu + ffn2
    return 1 + 1 + 1 + proto::rounds_softmax(cfg) + 1 + 1 +
           proto::rounds_relu(cfg) + 1;
}

} // namespace pproute::encoder
