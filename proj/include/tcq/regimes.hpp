// Regime diagnostics: the Dicke cutoff temperature, the critical ensemble
// size, Dicke-subspace population and degeneracy crossover temperatures.
#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <stdexcept>

#include "tcq/combinatorics.hpp"
#include "tcq/thermo.hpp"
#include "tcq/units.hpp"

namespace tcq {

// T_c = hbar omega0 / (kB ln n): below it the global ground state outweighs
// the n - 1 singly excited spin states.
inline double cutoff_temperature(int n, double omega0) {
    if (n < 2) throw std::domain_error("cutoff temperature needs n >= 2");
    if (!(omega0 > 0.0)) throw std::domain_error("omega0 must be positive");
    return quantum_energy(omega0) / (kBoltzmann * std::log(static_cast<double>(n)));
}

struct CriticalSize {
    double value = 1.0;              // always set; rounded to 3 significant figures when huge
    std::optional<std::int64_t> integer;   // set when the value fits a signed 64-bit integer
};

inline double round_significant(double x, int digits) {
    if (x == 0.0 || !std::isfinite(x)) return x;
    const double scale = std::pow(10.0, digits - 1 - static_cast<int>(std::floor(std::log10(std::abs(x)))));
    return std::round(x * scale) / scale;
}

// Largest integer N with N < e^{hbar omega0 / (kB T)}, saturating at 1.
inline CriticalSize critical_size(double temp_kelvin, double omega0) {
    if (!(temp_kelvin > 0.0)) throw std::domain_error("temperature must be positive");
    if (!(omega0 > 0.0)) throw std::domain_error("omega0 must be positive");
    const double theta = quantum_energy(omega0) / thermal_energy(temp_kelvin);
    const double bound = std::exp(theta);
    CriticalSize c;
    if (bound < 2.0) {
        c.value = 1.0;
        c.integer = 1;
        return c;
    }
    if (bound >= 9.2233720368547758e18) {
        c.value = round_significant(bound, 3);
        return c;
    }
    const double n = std::ceil(bound) - 1.0;
    c.value = n;
    c.integer = static_cast<std::int64_t>(n);
    return c;
}

struct DickePopulation {
    double estimate = 0.0;              // two-subspace formula
    std::optional<double> exact;        // exact Dicke mass, n <= 256
};

// Estimate: Dicke ground state plus its two dressed one-excitation states
// against the n - 1 one-excitation states of j = n/2 - 1, with the Dicke
// Lamb splitting +-g0 sqrt(n).
inline double dicke_population_estimate(const ModelParams& p, double temp_kelvin) {
    const ThermalPoint tp = thermal_point(p, temp_kelvin);
    const double split = tp.gamma * std::sqrt(static_cast<double>(p.n));
    const double dicke = 1.0 + std::exp(-tp.theta + split) + std::exp(-tp.theta - split);
    return dicke / (dicke + (p.n - 1.0) * std::exp(-tp.theta));
}

// Share of the exact thermal state carried by the Dicke sector j = n/2.
inline double dicke_population_exact(const ModelParams& p, double temp_kelvin,
                                     const EvalOptions& opt = {}) {
    const ThermalDistribution d =
        distribution(p, temp_kelvin, DistributionAxis::JK, DistributionOrder::Exact, opt);
    return mass_fraction(d, [&](const DistributionEntry& e) { return e.twice_j == p.n; });
}

inline DickePopulation dicke_population(const ModelParams& p, double temp_kelvin,
                                        const EvalOptions& opt = {}) {
    DickePopulation out{dicke_population_estimate(p, temp_kelvin), std::nullopt};
    if (p.n <= kExactMaxN) out.exact = dicke_population_exact(p, temp_kelvin, opt);
    return out;
}

// Temperature above which sector j outweighs sector j+1, ignoring Lamb
// shifts: p(j)/p(j+1) = (d_j / d_{j+1}) e^{-theta}, since the ground state of
// sector j carries one more excitation. None when d_j <= d_{j+1}.
inline std::optional<double> crossover_temperature(int n, int twice_j, double omega0) {
    require_valid_twice_j(n, twice_j);
    require_valid_twice_j(n, twice_j + 2);
    if (!degeneracy_strictly_decreases(n, twice_j)) return std::nullopt;
    return quantum_energy(omega0) / (kBoltzmann * log_degeneracy_ratio(n, twice_j));
}

// Temperature above which sector j outweighs the Dicke sector:
// hbar omega0 (n/2 - j) / (kB ln d_j). Requires d_j > 1.
inline std::optional<double> dicke_crossover_temperature(int n, int twice_j, double omega0) {
    require_valid_twice_j(n, twice_j);
    const double ld = log_degeneracy(n, twice_j);
    if (twice_j == n || !(ld > 0.0)) return std::nullopt;
    return quantum_energy(omega0) * 0.5 * (n - twice_j) / (kBoltzmann * ld);
}

// Large-n limit of the Dicke-to-j crossover at j = 0: hbar omega0 / (2 kB ln 2).
inline double crossover_limit(double omega0) {
    return quantum_energy(omega0) / (2.0 * kBoltzmann * std::numbers::ln2);
}

struct RegimeReport {
    double t_cutoff = 0.0;
    CriticalSize n_critical;
    DickePopulation dicke_population;
    double crossover_limit = 0.0;
};

inline RegimeReport regime_report(const ModelParams& p, double temp_kelvin, const EvalOptions& opt = {}) {
    return RegimeReport{cutoff_temperature(p.n, p.omega0), critical_size(temp_kelvin, p.omega0),
                        dicke_population(p, temp_kelvin, opt), crossover_limit(p.omega0)};
}

}  // namespace tcq
