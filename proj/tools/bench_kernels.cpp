#include <algorithm>
#include <chrono>
#include <cstdio>
#include <string>
#include <vector>

#include "pproute/kernels.hpp"
#include "pproute/rng.hpp"

// Times the serial reference loops against the OpenMP kernels on a few
// batch sizes and prints a speedup table.  Results are checked for equality
// as a side effect (a mismatch aborts).

using namespace pproute;
using namespace pproute::kernels;

namespace {

double time_ms(int reps, auto &&fn) {
    // one warmup, then best of `reps`
    fn();
    double best = 1e300;
    for (int i = 0; i < reps; ++i) {
        auto t0 = std::chrono::steady_clock::now();
        fn();
        auto t1 = std::chrono::steady_clock::now();
        best = std::min(best,
                        std::chrono::duration<double, std::milli>(t1 - t0)
                            .count());
    }
    return best;
}

void fill(Rng &rng, std::vector<u64> &v) {
    for (auto &x : v)
        x = rng.next_u64();
}

} // namespace

int main(int argc, char **argv) {
    std::size_t n = 1 << 22;
    int reps = 5;
    if (argc > 1)
        n = std::stoull(argv[1]);
    if (argc > 2)
        reps = std::stoi(argv[2]);

    const Ring r{};
    Rng rng(42);
    std::vector<u64> a(n), b(n), c(n), out(n);
    fill(rng, a);
    fill(rng, b);
    fill(rng, c);

    struct Row {
        const char *name;
        double serial_ms, parallel_ms;
    };
    std::vector<Row> rows;

    auto bench = [&](const char *name, auto &&fn) {
        std::vector<u64> ref(n);
        set_exec(Exec::serial);
        double ts = time_ms(reps, [&] { fn(ref); });
        set_exec(Exec::parallel);
        double tp = time_ms(reps, [&] { fn(out); });
        for (std::size_t i = 0; i < n; ++i)
            if (ref[i] != out[i]) {
                std::fprintf(stderr, "%s: serial/parallel mismatch at %zu\n",
                             name, i);
                return 1;
            }
        rows.push_back({name, ts, tp});
        return 0;
    };

    int rc = 0;
    rc |= bench("add", [&](mspan o) { add(a, b, r.mask(), o); });
    rc |= bench("mul", [&](mspan o) { mul(a, b, r.mask(), o); });
    rc |= bench("beaver_arith", [&](mspan o) {
        beaver_arith(a, b, c, a, b, true, r.mask(), o);
    });
    rc |= bench("and", [&](mspan o) { and_(a, b, r.mask(), o); });
    rc |= bench("trunc_shift", [&](mspan o) { trunc_shift(a, r, o); });
    u64 sink = 0;
    {
        set_exec(Exec::serial);
        double ts = time_ms(reps, [&] { sink ^= sum(a, r.mask()); });
        set_exec(Exec::parallel);
        double tp = time_ms(reps, [&] { sink ^= sum(a, r.mask()); });
        rows.push_back({"sum", ts, tp});
    }
    set_exec(Exec::serial);
    if (rc)
        return rc;

    std::printf("n = %zu elements, best of %d\n", n, reps);
    std::printf("%-14s %12s %12s %9s\n", "kernel", "serial ms", "parallel ms",
                "speedup");
    for (const auto &row : rows)
        std::printf("%-14s %12.3f %12.3f %8.2fx\n", row.name, row.serial_ms,
                    row.parallel_ms, row.serial_ms / row.parallel_ms);
    // keep the reduction from being optimized out
    std::fprintf(stderr, "checksum %llu\n", (unsigned long long)sink);
    return 0;
}
