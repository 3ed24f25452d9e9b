// Perturbation gates: ordered-eigenvalue shift bounds for block-preserving
// noise and the norm of a dipolar flip-flop perturbation.
#pragma once

#include <Eigen/Eigenvalues>

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "tcq/summation.hpp"

namespace tcq {

inline constexpr double kDefaultAdmissibleRatio = 1e-2;

struct PerturbationBudget {
    double frobenius_norm = 0.0;
    double omega0 = 0.0;
    bool admissible = false;
    double shift_bound = 0.0;
};

// Weyl's inequality for Hermitian H and H + dH: the i-th ordered eigenvalues
// differ by at most ||dH||_2, which the Frobenius norm bounds from above.
inline PerturbationBudget eigen_shift_bound(double delta_h_norm, double omega0,
                                            double threshold = kDefaultAdmissibleRatio) {
    if (!(delta_h_norm >= 0.0)) throw std::domain_error("perturbation norm must be non-negative");
    if (!(omega0 > 0.0)) throw std::domain_error("omega0 must be positive");
    return PerturbationBudget{delta_h_norm, omega0, delta_h_norm <= threshold * omega0, delta_h_norm};
}

// sqrt(2 sum d_ij^2), the Frobenius norm of the flip-flop term.
inline double flipflop_norm(const std::vector<double>& couplings) {
    CompensatedSum<double> acc;
    for (double d : couplings) {
        if (!std::isfinite(d)) throw std::domain_error("coupling must be finite");
        acc.add(d * d);
    }
    return std::sqrt(2.0 * acc.value());
}

inline double frobenius_norm(const Eigen::MatrixXd& m) { return m.norm(); }

struct ShiftTrial {
    int dim = 0;
    double max_shift = 0.0;
    double frobenius = 0.0;
    bool within_bound() const { return max_shift <= frobenius; }
};

// One random trial: a hollow symmetric tridiagonal block H with positive
// bonds plus a dense symmetric dH; compares ordered spectra of H and H + dH.
inline ShiftTrial random_shift_trial(std::mt19937_64& rng, int dim, double noise_scale = 0.1) {
    std::uniform_real_distribution<double> bond(0.1, 3.0);
    std::normal_distribution<double> noise(0.0, noise_scale);
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim, dim);
    for (int i = 0; i + 1 < dim; ++i) h(i, i + 1) = h(i + 1, i) = bond(rng);
    Eigen::MatrixXd dh(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j <= i; ++j) dh(i, j) = dh(j, i) = noise(rng);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> a(h, Eigen::EigenvaluesOnly);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> b(h + dh, Eigen::EigenvaluesOnly);
    ShiftTrial t;
    t.dim = dim;
    t.frobenius = frobenius_norm(dh);
    t.max_shift = (a.eigenvalues() - b.eigenvalues()).cwiseAbs().maxCoeff();
    return t;
}

struct TrialSummary {
    int trials = 0;
    int violations = 0;
    double worst_ratio = 0.0;   // max over trials of max_shift / frobenius
};

inline TrialSummary run_shift_trials(int trials, std::uint64_t seed, int min_dim = 2, int max_dim = 12) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> dims(min_dim, max_dim);
    TrialSummary s;
    for (int i = 0; i < trials; ++i) {
        const ShiftTrial t = random_shift_trial(rng, dims(rng));
        ++s.trials;
        if (!t.within_bound()) ++s.violations;
        if (t.frobenius > 0.0) s.worst_ratio = std::max(s.worst_ratio, t.max_shift / t.frobenius);
    }
    return s;
}

}  // namespace tcq
