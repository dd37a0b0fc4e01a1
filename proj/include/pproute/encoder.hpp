#pragma once

#include <span>
#include <string>
#include <vector>

#include "pproute/protocols.hpp"

// Single transformer-style block with MPC-friendly nonlinearities: attention
// scores normalized by the ReLU softmax, GeLU replaced by ReLU in the FFN.
// No residual or layer norm.  The plaintext block is the test oracle for the
// secure evaluation.
namespace pproute::encoder {

struct Weights {
    std::size_t d = 0, d_ff = 0;
    std::vector<double> wq, wk, wv; // d x d, row-major
    std::vector<double> w1;         // d x d_ff
    std::vector<double> b1;         // d_ff
    std::vector<double> w2;         // d_ff x d
    std::vector<double> b2;         // d

    std::size_t total_params() const {
        return 3 * d * d + d * d_ff + d_ff + d_ff * d + d;
    }
};

// Gaussian init scaled by 1/sqrt(fan_in); biases zero.
Weights random_weights(u64 seed, std::size_t d, std::size_t d_ff);

Weights load_weights(const std::string &path);
void save_weights(const Weights &w, const std::string &path);
void validate(const Weights &w);

// flatten in the order used by the secure input round
std::vector<double> flatten(const Weights &w);

// plaintext reference: double precision, same formula including the
// eps = m * 2^-f softmax stabilizer (division is exact here)
std::vector<double> block_plain(const Weights &w, std::span<const double> X,
                                std::size_t s, const Ring &r);

// Secure block: party 0 contributes the s x d input X, party 1 the weights.
// Both parties pass the public dimensions; non-owners pass empty spans.
// Returns shares of the s x d output.
ShareVector block_secure(PartyCtx &ctx, std::span<const double> X_if_p0,
                         std::span<const double> weights_flat_if_p1,
                         std::size_t s, std::size_t d, std::size_t d_ff);

// declared online rounds of block_secure
u64 rounds_block(const SessionConfig &cfg);

} // namespace pproute::encoder
