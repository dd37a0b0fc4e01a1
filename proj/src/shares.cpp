#include "pproute/shares.hpp"

#include <cmath>

#include "pproute/errors.hpp"

namespace pproute {

ShareVector lin_combine(const Ring &r, std::span<const double> coeffs,
                        std::span<const ShareVector> xs) {
    if (coeffs.size() != xs.size())
        throw ArgError("lin_combine: coeffs/shares length mismatch");
    if (xs.empty())
        throw ArgError("lin_combine: empty combination");
    const std::size_t n = xs[0].size();
    const int party = xs[0].party;
    for (const auto &x : xs) {
        if (x.size() != n || x.party != party)
            throw ArgError("lin_combine: inconsistent share vectors");
    }

    bool all_int = true;
    for (double c : coeffs)
        if (c != std::nearbyint(c) || std::fabs(c) >= r.max_abs_real())
            all_int = false;

    ShareVector out{party, std::vector<u64>(n, 0)};
    std::vector<u64> tmp(n);
    if (all_int) {
        for (std::size_t j = 0; j < xs.size(); ++j) {
            kernels::scalar_mul(xs[j].e, r.from_signed(i64(coeffs[j])),
                                r.mask(), tmp);
            kernels::add(out.e, tmp, r.mask(), out.e);
        }
        return out;
    }
    // general path: products at scale 2f, one truncation at the end
    for (std::size_t j = 0; j < xs.size(); ++j) {
        kernels::scalar_mul(xs[j].e, r.encode(coeffs[j]), r.mask(), tmp);
        kernels::add(out.e, tmp, r.mask(), out.e);
    }
    kernels::trunc_shift(out.e, r, out.e);
    return out;
}

} // namespace pproute
