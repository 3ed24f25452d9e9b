// Runtime-scaling harness for the partition-function paths.
#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "tcq/fit.hpp"
#include "tcq/thermo.hpp"

namespace tcq {

enum class BenchTarget { ZPertFirstOrder, ZPertHigher, ZExact };

inline std::string to_string(BenchTarget t) {
    switch (t) {
        case BenchTarget::ZPertFirstOrder: return "zpert_first_order";
        case BenchTarget::ZPertHigher: return "zpert_higher";
        case BenchTarget::ZExact: return "z_exact";
    }
    return "unknown";
}

inline BenchTarget bench_target_from_string(const std::string& s) {
    if (s == "zpert_first_order") return BenchTarget::ZPertFirstOrder;
    if (s == "zpert_higher") return BenchTarget::ZPertHigher;
    if (s == "z_exact") return BenchTarget::ZExact;
    throw std::invalid_argument("unknown bench target '" + s +
                                "' (expected zpert_first_order, zpert_higher or z_exact)");
}

struct ScalingRun {
    BenchTarget target = BenchTarget::ZPertFirstOrder;
    std::vector<int> n_grid;
    std::vector<double> wall_times;   // median seconds per n
    std::vector<double> values;       // computed quantity per n, for reproducibility checks
    double fitted_exponent = 0.0;
    bool values_stable = true;        // every repetition reproduced the first value to 1e-12
    std::vector<std::size_t> blocks;  // planned blocks per n
};

// One evaluation of the target; returns the computed value and block count.
inline std::pair<double, std::size_t> bench_once(BenchTarget target, const ModelParams& p, double temp_kelvin,
                                                 const EvalOptions& opt) {
    switch (target) {
        case BenchTarget::ZPertFirstOrder: {
            const auto r = z_pert(p, temp_kelvin, opt);
            return {r.ratio, r.truncation.blocks};
        }
        case BenchTarget::ZPertHigher: {
            const auto r = z_pert_fourth_order(p, temp_kelvin, opt);
            return {r.log_value, r.truncation.blocks};
        }
        case BenchTarget::ZExact: {
            const auto r = z_exact(p, temp_kelvin, opt);
            return {r.excess_ratio, r.truncation.blocks};
        }
    }
    return {0.0, 0};
}

// Median wall time over the repetitions after one discarded warm-up run.
// Timing always runs on one thread so that exponents are not confounded by
// parallel efficiency.
inline ScalingRun run_scaling(BenchTarget target, const std::vector<int>& n_grid, const ModelParams& base,
                              double temp_kelvin, int repetitions, EvalOptions opt = {}) {
    if (n_grid.empty()) throw std::invalid_argument("n grid is empty");
    if (!std::is_sorted(n_grid.begin(), n_grid.end())) throw std::invalid_argument("n grid must be ascending");
    if (repetitions < 3) throw std::invalid_argument("repetitions must be at least 3");
    if (target == BenchTarget::ZExact && n_grid.back() > kExactMaxN) {
        throw std::invalid_argument("z_exact accepts n in [1, " + std::to_string(kExactMaxN) + "]; got n=" +
                                    std::to_string(n_grid.back()));
    }
    opt.threads = 1;
    ScalingRun run;
    run.target = target;
    run.n_grid = n_grid;
    for (int n : n_grid) {
        ModelParams p = base;
        p.n = n;
        const auto warm = bench_once(target, p, temp_kelvin, opt);
        std::vector<double> times;
        for (int r = 0; r < repetitions; ++r) {
            const auto t0 = std::chrono::steady_clock::now();
            const auto v = bench_once(target, p, temp_kelvin, opt);
            const auto t1 = std::chrono::steady_clock::now();
            times.push_back(std::chrono::duration<double>(t1 - t0).count());
            const double scale = std::max(std::abs(warm.first), 1e-300);
            if (std::abs(v.first - warm.first) > 1e-12 * scale) run.values_stable = false;
        }
        std::nth_element(times.begin(), times.begin() + times.size() / 2, times.end());
        run.wall_times.push_back(std::max(times[times.size() / 2], 1e-9));
        run.values.push_back(warm.first);
        run.blocks.push_back(warm.second);
    }
    std::vector<double> xs(n_grid.begin(), n_grid.end());
    run.fitted_exponent = n_grid.size() >= 2 ? loglog_exponent(xs, run.wall_times) : 0.0;
    return run;
}

}  // namespace tcq
