// Eigenvalues of the hollow symmetric tridiagonal blocks L(j,k).
//
// Two solvers are kept: Eigen's implicit-shift QL on the tridiagonal form for
// small blocks, and Sturm-sequence bisection, which needs nothing beyond the
// squared bonds and is used for large blocks.
#pragma once

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "tcq/coupling.hpp"

namespace tcq {

struct LambSpectrum {
    BlockIndex index;
    std::vector<double> eigenvalues;   // ascending, dimensionless (multiply by g0)
};

enum class EigenSolver { Auto, QL, Bisection };

inline constexpr long kQLMaxDim = 64;

// Implicit-shift QL via Eigen, eigenvalues only.
inline std::vector<double> tridiagonal_eigenvalues_ql(const std::vector<double>& bonds) {
    const Eigen::Index d = static_cast<Eigen::Index>(bonds.size()) + 1;
    if (d == 1) return {0.0};
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(d);
    Eigen::VectorXd sub = Eigen::Map<const Eigen::VectorXd>(bonds.data(), d - 1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw std::runtime_error("tridiagonal QL failed to converge");
    const Eigen::VectorXd& ev = es.eigenvalues();
    return std::vector<double>(ev.data(), ev.data() + d);
}

// Number of eigenvalues strictly below x for the hollow tridiagonal matrix
// with squared bonds b2, from the signs of the LDL^T pivots.
inline long sturm_count(const std::vector<double>& b2, double x, double tiny) {
    long count = 0;
    double q = -x;
    if (q == 0.0) q = -tiny;
    if (q < 0.0) ++count;
    for (double b : b2) {
        q = -x - b / q;
        if (q == 0.0) q = -tiny;
        if (q < 0.0) ++count;
    }
    return count;
}

inline std::vector<double> tridiagonal_eigenvalues_bisection(const std::vector<double>& bonds) {
    const long d = static_cast<long>(bonds.size()) + 1;
    if (d == 1) return {0.0};
    std::vector<double> b2(bonds.size());
    double radius = 0.0;   // Gershgorin
    for (long i = 0; i < d; ++i) {
        const double left = i > 0 ? bonds[i - 1] : 0.0;
        const double right = i < d - 1 ? bonds[i] : 0.0;
        radius = std::max(radius, left + right);
    }
    for (std::size_t i = 0; i < bonds.size(); ++i) b2[i] = bonds[i] * bonds[i];
    const double eps = std::numeric_limits<double>::epsilon();
    const double tiny = eps * eps * std::max(1.0, radius);
    const double tol = 2.0 * eps * std::max(1.0, radius);
    std::vector<double> out(d);
    for (long i = 0; i < d; ++i) {
        double lo = -radius - tol;
        double hi = radius + tol;
        // Find x with count(x) <= i < count(hi).
        while (hi - lo > tol) {
            const double mid = 0.5 * (lo + hi);
            if (mid <= lo || mid >= hi) break;
            if (sturm_count(b2, mid, tiny) > i) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        out[i] = 0.5 * (lo + hi);
    }
    return out;
}

// Odd-dimensional hollow tridiagonal matrices are singular; the eigenvalue
// nearest zero is set to exactly zero when it is within round-off.
inline void snap_zero_eigenvalue(std::vector<double>& ev) {
    if (ev.size() % 2 == 0 || ev.empty()) return;
    double max_abs = 0.0;
    for (double v : ev) max_abs = std::max(max_abs, std::abs(v));
    auto it = std::min_element(ev.begin(), ev.end(),
                               [](double a, double b) { return std::abs(a) < std::abs(b); });
    if (std::abs(*it) <= 1e-12 * max_abs) *it = 0.0;
}

inline std::vector<double> tridiagonal_eigenvalues(const std::vector<double>& bonds,
                                                   EigenSolver solver = EigenSolver::Auto) {
    const long d = static_cast<long>(bonds.size()) + 1;
    if (solver == EigenSolver::Auto) solver = d <= kQLMaxDim ? EigenSolver::QL : EigenSolver::Bisection;
    std::vector<double> ev = solver == EigenSolver::QL ? tridiagonal_eigenvalues_ql(bonds)
                                                       : tridiagonal_eigenvalues_bisection(bonds);
    std::sort(ev.begin(), ev.end());
    snap_zero_eigenvalue(ev);
    return ev;
}

inline LambSpectrum lamb_spectrum(const BlockIndex& b, EigenSolver solver = EigenSolver::Auto) {
    return LambSpectrum{b, tridiagonal_eigenvalues(bond_sequence(block_shape(b)), solver)};
}

struct SpectrumChecks {
    double sum_residual = 0.0;
    double pairing_residual = 0.0;
    double moment2_residual = 0.0;
    double max_abs = 0.0;
};

inline SpectrumChecks spectrum_checks(const LambSpectrum& s) {
    SpectrumChecks c;
    const auto& ev = s.eigenvalues;
    CompensatedSum<double> sum, sum2;
    for (double v : ev) {
        sum.add(v);
        sum2.add(v * v);
        c.max_abs = std::max(c.max_abs, std::abs(v));
    }
    c.sum_residual = std::abs(sum.value());
    // Nearest element of the sorted multiset to each negated eigenvalue.
    for (double v : ev) {
        const double target = -v;
        auto it = std::lower_bound(ev.begin(), ev.end(), target);
        double best = std::numeric_limits<double>::infinity();
        if (it != ev.end()) best = std::min(best, std::abs(*it - target));
        if (it != ev.begin()) best = std::min(best, std::abs(*(it - 1) - target));
        c.pairing_residual = std::max(c.pairing_residual, best);
    }
    const double closed = second_moment_closed(s.index);
    c.moment2_residual = std::abs(sum2.value() - closed) / std::max(1.0, sum2.value());
    return c;
}

// g0 * max|lambda| / omega0 for one block; the rotating-wave picture needs it small.
inline double rwa_ratio(const LambSpectrum& s, double g0, double omega0) {
    double m = 0.0;
    for (double v : s.eigenvalues) m = std::max(m, std::abs(v));
    return g0 * m / omega0;
}

}  // namespace tcq
