// Partition functions, thermodynamic shifts and thermal distributions.
//
// Every sum runs over a planned (j,k) domain with weights d_j e^{-theta k}
// scaled by e^{-log_ref}; results are carried as logarithms or as ratios to
// the uncoupled partition function Z0, which has a closed form.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tcq/coupling.hpp"
#include "tcq/domain.hpp"
#include "tcq/spectra.hpp"
#include "tcq/units.hpp"

namespace tcq {

inline constexpr int kExactMaxN = 256;

struct EvalOptions {
    double delta = 1e-9;   // relative truncation target
    int threads = 1;
};

class ExpansionInvalid : public std::runtime_error {
public:
    ExpansionInvalid(int twice_j, long k, double gate_value)
        : std::runtime_error("expansion invalid at block (twice_j=" + std::to_string(twice_j) +
                             ", k=" + std::to_string(k) + "): (gamma^2/2) Var = " +
                             std::to_string(gate_value) + " >= 1"),
          twice_j_(twice_j),
          k_(k),
          gate_value_(gate_value) {}
    int twice_j() const { return twice_j_; }
    long k() const { return k_; }
    double gate_value() const { return gate_value_; }

private:
    int twice_j_;
    long k_;
    double gate_value_;
};

struct TruncationInfo {
    long k_min = 0;
    long k_max = 0;
    int j_lo = 0;   // twice_j
    int j_hi = 0;   // twice_j
    int order = 1;  // perturbative order in g0^2
    std::size_t blocks = 0;
    double delta = 0.0;
};

inline TruncationInfo truncation_of(const Domain& d, int order) {
    return TruncationInfo{d.k_min(), d.k_max(), d.tj_min(), d.tj_max(), order, d.blocks, d.delta};
}

// Components of the a-posteriori bound on |Z_exact - (Z0 + Z_pert)| / Z0.
struct ErrorBudget {
    double dropped_order = 0.0;   // majorant of all terms beyond g0^2
    double truncation = 0.0;      // certified tail of the truncated sums
    double rounding = 0.0;        // floating-point allowance for the blockwise comparison
};

struct PartitionDecomposition {
    double log_z0 = 0.0;
    double log_zpert = -std::numeric_limits<double>::infinity();
    double ratio = 0.0;   // Z_pert / Z0
    TruncationInfo truncation;
    double error_bound = 0.0;
    ErrorBudget budget;
    double max_gate = 0.0;   // largest (gamma^2/2) Var over the domain
};

// log Z0 = -log(1 - e^{-theta_c}) + n log(1 + e^{-theta_s}). The spin
// temperature defaults to the cavity temperature.
inline double z0_closed(const ModelParams& p, double temp_kelvin,
                        std::optional<double> spin_temp_kelvin = std::nullopt) {
    const double th_c = thermal_point(p, temp_kelvin).theta;
    const double th_s = thermal_point(p, spin_temp_kelvin.value_or(temp_kelvin)).theta;
    return -std::log(-std::expm1(-th_c)) + p.n * std::log1p(std::exp(-th_s));
}

struct LogSumResult {
    double log_value = 0.0;
    TruncationInfo truncation;
};

// Z0 as the explicit double sum sum_k e^{-theta k} sum_j d_j |B_{j,k}|.
inline LogSumResult z0_sum(const ModelParams& p, double temp_kelvin, const EvalOptions& opt = {}) {
    const ThermalPoint tp = thermal_point(p, temp_kelvin);
    const Domain d = plan_domain(p.n, tp.theta, opt.delta, kEnvStates);
    const auto s = evaluate<1>(d, opt.threads, [](const BlockIndex& b, double w) {
        return std::array<double, 1>{w * static_cast<double>(block_shape(b).dim())};
    });
    return LogSumResult{d.log_ref + std::log(s[0]), truncation_of(d, 0)};
}

namespace detail {

inline constexpr double kRoundingUnits = 32.0;

// First-order sums in one pass: |B|, tr L^2, k|B|, k tr L^2, the dropped-order
// majorant and the rounding allowance, all times w.
struct FirstOrderSums {
    Domain domain;
    std::array<double, 6> s{};
    double max_gate = 0.0;
    int gate_tj = 0;
    long gate_k = 0;
};

inline FirstOrderSums first_order_sums(const ModelParams& p, const ThermalPoint& tp,
                                       const EvalOptions& opt, unsigned extra_envelopes = 0) {
    FirstOrderSums r{plan_domain(p.n, tp.theta, opt.delta, kEnvStates | kEnvSecondMoment | extra_envelopes),
                     {}, 0.0, 0, 0};
    const double g2 = 0.5 * tp.gamma * tp.gamma;
    const double g4 = tp.gamma * tp.gamma * tp.gamma * tp.gamma / 24.0;
    const double eps = std::numeric_limits<double>::epsilon();
    r.s = evaluate<6>(r.domain, opt.threads, [&](const BlockIndex& b, double w) {
        const BlockShape s = block_shape(b);
        const double dim = static_cast<double>(s.dim());
        const double t2 = second_moment_closed(s);
        const double lmax2 = spectral_radius_sq_bound(s);
        const double dropped = g4 * lmax2 * t2 * std::cosh(tp.gamma * std::sqrt(lmax2));
        const double kk = static_cast<double>(b.k);
        return std::array<double, 6>{w * dim, w * t2, w * kk * dim, w * kk * t2, w * dropped,
                                     w * kRoundingUnits * eps * dim * g2 * t2};
    });
    // Gate scan over every planned block.
    for (const Slice& sl : r.domain.slices) {
        for (int tj = sl.tj_lo; tj <= sl.tj_hi; tj += 2) {
            const double gate = expansion_gate_value(tp.gamma, block_shape(BlockIndex{p.n, tj, sl.k}));
            if (gate > r.max_gate) {
                r.max_gate = gate;
                r.gate_tj = tj;
                r.gate_k = sl.k;
            }
        }
    }
    return r;
}

inline void require_gate(const FirstOrderSums& r) {
    if (!(r.max_gate < 1.0)) throw ExpansionInvalid(r.gate_tj, r.gate_k, r.max_gate);
}

}  // namespace detail

// Z0 and the first-order Lamb-shift term
//     Z_pert = (gamma^2/2) sum_{j,k} d_j e^{-theta k} |B| Var(Lambda)
// with an error bound on |Z_exact - (Z0 + Z_pert)| / Z0.
inline PartitionDecomposition z_pert(const ModelParams& p, double temp_kelvin,
                                     const EvalOptions& opt = {}) {
    const ThermalPoint tp = thermal_point(p, temp_kelvin);
    const auto r = detail::first_order_sums(p, tp, opt);
    detail::require_gate(r);
    PartitionDecomposition out;
    out.log_z0 = z0_closed(p, temp_kelvin);
    out.truncation = truncation_of(r.domain, 1);
    out.max_gate = r.max_gate;
    const double scale = std::exp(r.domain.log_ref - out.log_z0);   // sums -> fractions of Z0
    const double g2 = 0.5 * tp.gamma * tp.gamma;
    out.ratio = g2 * r.s[1] * scale;
    out.log_zpert = out.ratio > 0.0 ? out.log_z0 + std::log(out.ratio)
                                    : -std::numeric_limits<double>::infinity();
    out.budget.dropped_order = r.s[4] * scale;
    out.budget.truncation = opt.delta * (out.ratio + out.budget.dropped_order);
    out.budget.rounding = r.s[5] * scale;
    out.error_bound = out.budget.dropped_order + out.budget.truncation + out.budget.rounding;
    return out;
}

// Log of the ratio of the next even-order term to Z0:
//     (gamma^4 / 4!) sum_{j,k} d_j e^{-theta k} tr(L^4) / Z0,
// with tr(L^4) from O(|B|) tridiagonal products per block.
inline LogSumResult z_pert_fourth_order(const ModelParams& p, double temp_kelvin, const EvalOptions& opt = {}) {
    const ThermalPoint tp = thermal_point(p, temp_kelvin);
    const Domain d = plan_domain(p.n, tp.theta, opt.delta, kEnvStates | kEnvSecondMoment);
    const auto s = evaluate<1>(d, opt.threads, [](const BlockIndex& b, double w) {
        return std::array<double, 1>{w * higher_moment(b, 4)};
    });
    const double g4 = std::pow(tp.gamma, 4) / 24.0;
    const double ratio = g4 * s[0] * std::exp(d.log_ref - z0_closed(p, temp_kelvin));
    return LogSumResult{ratio > 0.0 ? std::log(ratio) : -std::numeric_limits<double>::infinity(),
                        truncation_of(d, 2)};
}

namespace detail {

// sum_lambda (cosh(gamma lambda) - 1), written with sinh to avoid cancellation.
inline double block_excess(const std::vector<double>& eigenvalues, double gamma) {
    CompensatedSum<double> acc;
    for (double l : eigenvalues) {
        const double s = std::sinh(0.5 * gamma * l);
        acc.add(2.0 * s * s);
    }
    return acc.value();
}

inline void require_exact_size(int n) {
    if (n > kExactMaxN) {
        throw std::domain_error("exact path is limited to n <= " + std::to_string(kExactMaxN) +
                                "; use the perturbative path (z_pert) for n=" + std::to_string(n));
    }
}

}  // namespace detail

struct ExactPartition {
    double log_z = 0.0;
    double log_z0 = 0.0;
    double excess_ratio = 0.0;   // (Z_exact - Z0) / Z0
    TruncationInfo truncation;
};

// Z_exact = sum_{j,k} d_j e^{-theta k} sum_lambda e^{-gamma lambda}, from the
// block spectra. It is evaluated as Z0 plus the excess sum of cosh - 1 terms
// so that the tiny Lamb-shift contribution is not lost against Z0.
inline ExactPartition z_exact(const ModelParams& p, double temp_kelvin, const EvalOptions& opt = {}) {
    detail::require_exact_size(p.n);
    const ThermalPoint tp = thermal_point(p, temp_kelvin);
    const Domain d = plan_domain(p.n, tp.theta, opt.delta, kEnvStates | kEnvSecondMoment);
    const auto s = evaluate<1>(d, opt.threads, [&](const BlockIndex& b, double w) {
        return std::array<double, 1>{w * detail::block_excess(lamb_spectrum(b).eigenvalues, tp.gamma)};
    });
    ExactPartition out;
    out.log_z0 = z0_closed(p, temp_kelvin);
    out.excess_ratio = s[0] * std::exp(d.log_ref - out.log_z0);
    out.log_z = out.log_z0 + std::log1p(out.excess_ratio);
    out.truncation = truncation_of(d, 0);
    return out;
}

struct OracleComparison {
    double ratio_pert = 0.0;    // Z_pert / Z0
    double ratio_exact = 0.0;   // (Z_exact - Z0) / Z0
    double residual = 0.0;      // |Z_exact - (Z0 + Z_pert)| / Z0
    double error_bound = 0.0;
    ErrorBudget budget;
};

// Blockwise comparison of the exact spectra against the first-order term on
// one shared domain: residual = |sum w (sum_lambda (cosh - 1) - (gamma^2/2) tr L^2)| / Z0.
inline OracleComparison oracle_compare(const ModelParams& p, double temp_kelvin,
                                       const EvalOptions& opt = {}) {
    detail::require_exact_size(p.n);
    const PartitionDecomposition pd = z_pert(p, temp_kelvin, opt);
    const ThermalPoint tp = thermal_point(p, temp_kelvin);
    const Domain d = plan_domain(p.n, tp.theta, opt.delta, kEnvStates | kEnvSecondMoment);
    const double g2 = 0.5 * tp.gamma * tp.gamma;
    const auto s = evaluate<2>(d, opt.threads, [&](const BlockIndex& b, double w) {
        const double ex = detail::block_excess(lamb_spectrum(b).eigenvalues, tp.gamma);
        return std::array<double, 2>{w * ex, w * (ex - g2 * second_moment_closed(b))};
    });
    const double scale = std::exp(d.log_ref - pd.log_z0);
    return OracleComparison{pd.ratio, s[0] * scale, std::abs(s[1]) * scale, pd.error_bound, pd.budget};
}

enum class WeightFamily { Z0, ZPert, Total, Exact };

// Thermal mean of the excitation number k under the chosen weight family.
// ZPert uses the normalized first-order weights d_j |B| Var e^{-theta k}.
inline double mean_excitations(WeightFamily which, const ModelParams& p, double temp_kelvin,
                               const EvalOptions& opt = {}) {
    const ThermalPoint tp = thermal_point(p, temp_kelvin);
    const double k0 = 1.0 / std::expm1(tp.theta) + p.n / (std::exp(tp.theta) + 1.0);
    if (which == WeightFamily::Z0) return k0;
    if (which == WeightFamily::Exact) {
        detail::require_exact_size(p.n);
        const Domain d = plan_domain(p.n, tp.theta, opt.delta, kEnvStates | kEnvSecondMoment);
        const auto s = evaluate<2>(d, opt.threads, [&](const BlockIndex& b, double w) {
            const double ex = detail::block_excess(lamb_spectrum(b).eigenvalues, tp.gamma);
            return std::array<double, 2>{w * ex, w * ex * static_cast<double>(b.k)};
        });
        const double scale = std::exp(d.log_ref - z0_closed(p, temp_kelvin));
        return (k0 + s[1] * scale) / (1.0 + s[0] * scale);
    }
    const auto r = detail::first_order_sums(p, tp, opt);
    const double kpert = r.s[3] / r.s[1];
    if (which == WeightFamily::ZPert) return kpert;
    detail::require_gate(r);
    const double ratio = 0.5 * tp.gamma * tp.gamma * r.s[1] *
                         std::exp(r.domain.log_ref - z0_closed(p, temp_kelvin));
    return (k0 + ratio * kpert) / (1.0 + ratio);
}

struct HelmholtzShift {
    double dimensionless = 0.0;   // -beta dA, equal to Z_pert / Z0 at first order
    double joules = 0.0;          // dA
};

inline HelmholtzShift delta_helmholtz(const ModelParams& p, double temp_kelvin,
                                      const EvalOptions& opt = {}) {
    const PartitionDecomposition pd = z_pert(p, temp_kelvin, opt);
    return HelmholtzShift{pd.ratio, -thermal_energy(temp_kelvin) * pd.ratio};
}

struct EnergyShift {
    double joules = 0.0;
    double mean_k_pert = 0.0;
    double mean_k_z0 = 0.0;
    double ratio = 0.0;
};

// dE = ((<k>_pert - <k>_0) hbar omega0 - 2 kB T) Z_pert / Z0.
inline EnergyShift delta_energy(const ModelParams& p, double temp_kelvin, const EvalOptions& opt = {}) {
    const ThermalPoint tp = thermal_point(p, temp_kelvin);
    const auto r = detail::first_order_sums(p, tp, opt);
    detail::require_gate(r);
    EnergyShift e;
    e.mean_k_z0 = 1.0 / std::expm1(tp.theta) + p.n / (std::exp(tp.theta) + 1.0);
    e.ratio = 0.5 * tp.gamma * tp.gamma * r.s[1] * std::exp(r.domain.log_ref - z0_closed(p, temp_kelvin));
    e.mean_k_pert = r.s[1] > 0.0 ? r.s[3] / r.s[1] : 0.0;
    e.joules = ((e.mean_k_pert - e.mean_k_z0) * quantum_energy(p.omega0) -
                2.0 * thermal_energy(temp_kelvin)) * e.ratio;
    return e;
}

enum class DistributionAxis { JK, KM };
enum class DistributionOrder { FirstOrder, Exact };

struct DistributionEntry {
    long k = 0;
    int twice_j = 0;   // JK axis
    int twice_m = 0;   // KM axis
    double log_weight = 0.0;
};

struct ThermalDistribution {
    DistributionAxis axis = DistributionAxis::JK;
    std::vector<DistributionEntry> entries;
    double log_z = 0.0;   // logsumexp of the entries
};

namespace detail {

// Diagonal of e^{-gamma L} minus the identity, by its even power series;
// odd powers of a hollow tridiagonal matrix have zero diagonal.
inline std::vector<double> exp_diagonal_excess(const std::vector<double>& bonds, double gamma,
                                               int max_order = 8) {
    const std::size_t d = bonds.size() + 1;
    std::vector<double> out(d, 0.0);
    double coef = 1.0;
    for (int order = 2; order <= max_order; order += 2) {
        coef *= gamma * gamma / (static_cast<double>(order) * (order - 1));
        const auto diag = even_power_diagonal(bonds, order);
        double largest = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            out[i] += coef * diag[i];
            largest = std::max(largest, coef * diag[i]);
        }
        if (largest < 1e-20) break;
    }
    return out;
}

}  // namespace detail

// Thermal populations over (j,k) blocks or over (k, m). First-order block
// weights are d_j |B| e^{-theta k} (1 + (gamma^2/2) Var); exact block weights
// use the spectra. Along the KM axis each block basis state
// alpha = 1..|B| carries m = -j + alpha - 1.
inline ThermalDistribution distribution(const ModelParams& p, double temp_kelvin,
                                        DistributionAxis axis,
                                        DistributionOrder order = DistributionOrder::FirstOrder,
                                        const EvalOptions& opt = {}) {
    const bool exact = order == DistributionOrder::Exact;
    if (exact || axis == DistributionAxis::KM) detail::require_exact_size(p.n);
    const ThermalPoint tp = thermal_point(p, temp_kelvin);
    const Domain d = plan_domain(p.n, tp.theta, opt.delta, kEnvStates | kEnvSecondMoment);
    const double g2 = 0.5 * tp.gamma * tp.gamma;
    ThermalDistribution out;
    out.axis = axis;
    std::vector<std::vector<DistributionEntry>> per_slice(d.slices.size());
    for_each_slice(d, opt.threads, [&](std::size_t i) {
        const Slice& sl = d.slices[i];
        auto& bucket = per_slice[i];
        std::map<int, std::vector<double>> by_m;   // twice_m -> log terms
        for (int tj = sl.tj_lo; tj <= sl.tj_hi; tj += 2) {
            const BlockIndex b{p.n, tj, sl.k};
            const BlockShape s = block_shape(b);
            const double lw = log_degeneracy(p.n, tj) - tp.theta * static_cast<double>(sl.k);
            if (axis == DistributionAxis::JK) {
                double factor;
                if (exact) {
                    factor = static_cast<double>(s.dim()) +
                             detail::block_excess(lamb_spectrum(b).eigenvalues, tp.gamma);
                    bucket.push_back({sl.k, tj, 0, lw + std::log(factor)});
                } else {
                    bucket.push_back({sl.k, tj, 0,
                                      lw + std::log(static_cast<double>(s.dim())) +
                                          std::log1p(g2 * var_lambda(s))});
                }
            } else {
                const auto bonds = bond_sequence(s);
                std::vector<double> excess(bonds.size() + 1, 0.0);
                if (exact) {
                    excess = detail::exp_diagonal_excess(bonds, tp.gamma);
                } else {
                    for (std::size_t a = 0; a <= bonds.size(); ++a) {
                        const double left = a > 0 ? bonds[a - 1] * bonds[a - 1] : 0.0;
                        const double right = a < bonds.size() ? bonds[a] * bonds[a] : 0.0;
                        excess[a] = g2 * (left + right);
                    }
                }
                for (std::size_t a = 0; a <= bonds.size(); ++a) {
                    const int twice_m = -tj + 2 * static_cast<int>(a);
                    by_m[twice_m].push_back(lw + std::log1p(excess[a]));
                }
            }
        }
        for (auto& [tm, logs] : by_m) bucket.push_back({sl.k, 0, tm, log_sum_exp(logs)});
    });
    std::vector<double> all;
    for (auto& bucket : per_slice) {
        for (auto& e : bucket) {
            all.push_back(e.log_weight);
            out.entries.push_back(e);
        }
    }
    out.log_z = log_sum_exp(all);
    return out;
}

// Share of the distribution's weight accepted by pred(entry).
template <class Pred>
double mass_fraction(const ThermalDistribution& dist, Pred&& pred) {
    std::vector<double> sel;
    for (const auto& e : dist.entries)
        if (pred(e)) sel.push_back(e.log_weight);
    if (sel.empty()) return 0.0;
    return std::exp(log_sum_exp(sel) - dist.log_z);
}

}  // namespace tcq
