#include "matseg/estimation.hpp"
#include "matseg/simgen.hpp"

#include <chrono>
#include <cstdio>

// compares the batched OpenMP W accumulation against the quadruple-loop
// serial reference on generated data and reports timings plus the largest
// elementwise disagreement

namespace {

using namespace matseg;

double run_path(const matrix_series& x, estimation::w_path path, int tau0, mat& out) {
    const auto t0 = std::chrono::steady_clock::now();
    out = estimation::w_estimate(x, estimation::mode::columns, tau0, {}, path).w;
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
        .count();
}

}  // namespace

int main() {
    const int tau0 = 5;
    struct case_t {
        int p, q, T;
    };
    const case_t cases[] = {{4, 4, 500}, {8, 8, 500}, {8, 8, 2000}, {12, 12, 1000}, {16, 16, 1000}};
    std::printf("%6s %6s %6s %12s %12s %9s %12s\n", "p", "q", "T", "naive_ms", "optimized_ms",
                "speedup", "max_diff");
    for (const case_t& c : cases) {
        simgen::rng_stream rng(simgen::derive_seed(2024, c.p * 1000 + c.q * 10 + c.T));
        simgen::sim_truth s = simgen::gen_example1(rng, c.T, c.p, c.q);
        auto [xc, mean] = center(s.x);
        (void)mean;
        mat w_naive, w_opt;
        // warm both paths once so allocation noise stays out of the timings
        run_path(xc, estimation::w_path::optimized, tau0, w_opt);
        const double t_naive = run_path(xc, estimation::w_path::naive, tau0, w_naive);
        const double t_opt = run_path(xc, estimation::w_path::optimized, tau0, w_opt);
        const double diff = (w_naive - w_opt).cwiseAbs().maxCoeff();
        std::printf("%6d %6d %6d %12.2f %12.2f %9.1f %12.3e\n", c.p, c.q, c.T, t_naive, t_opt,
                    t_naive / t_opt, diff);
    }
    return 0;
}
