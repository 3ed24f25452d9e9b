// Physical constants, model parameters and the SI <-> natural-unit boundary.
#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace tcq {

// CODATA 2018 exact values.
inline constexpr double kHbar = 1.054571817e-34;       // J s
inline constexpr double kBoltzmann = 1.380649e-23;     // J / K
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct ModelParams {
    int n = 1;             // number of spin-1/2 particles
    double omega0 = 0.0;   // resonance, rad/s
    double g0 = 0.0;       // single-spin coupling, rad/s
};

// Reference operating point: omega0 = 2 pi x 10 GHz, g0 = 2 pi x 100 Hz, T = 0.3 K.
struct Preset {
    double omega0;
    double g0;
    double temp_kelvin;
};

inline constexpr Preset kReferencePreset{kTwoPi * 1.0e10, kTwoPi * 100.0, 0.3};

inline ModelParams reference_params(int n) {
    return ModelParams{n, kReferencePreset.omega0, kReferencePreset.g0};
}

// Dimensionless temperature point: theta = hbar omega0 / (kB T) and
// gamma = hbar g0 / (kB T). All thermal sums are written in these.
struct ThermalPoint {
    double theta = 0.0;
    double gamma = 0.0;
    double temp_kelvin = 0.0;
    double omega0 = 0.0;
};

inline ThermalPoint thermal_point(const ModelParams& p, double temp_kelvin) {
    if (!(temp_kelvin > 0.0) || !std::isfinite(temp_kelvin)) {
        throw std::domain_error("temperature must be positive and finite");
    }
    if (!(p.omega0 > 0.0)) throw std::domain_error("omega0 must be positive");
    if (p.g0 < 0.0) throw std::domain_error("g0 must be non-negative");
    const double kt = kBoltzmann * temp_kelvin;
    return ThermalPoint{kHbar * p.omega0 / kt, kHbar * p.g0 / kt, temp_kelvin, p.omega0};
}

// Energy of one quantum hbar*omega0 in joules, and kB*T.
inline double quantum_energy(double omega0) { return kHbar * omega0; }
inline double thermal_energy(double temp_kelvin) { return kBoltzmann * temp_kelvin; }

}  // namespace tcq
