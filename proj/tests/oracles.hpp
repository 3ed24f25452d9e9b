// Independent reference computations used only by the tests. Nothing here
// calls into the closed forms, the domain planner or the tridiagonal solvers
// of the library; every quantity is rebuilt from explicit matrices or plain
// enumeration.
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

#include "tcq/units.hpp"

namespace oracle {

// ---------------------------------------------------------------------------
// Collective spin of n qubits, built on the full 2^n dimensional space.

inline Eigen::MatrixXd total_j_squared(int n) {
    const int dim = 1 << n;
    Eigen::MatrixXd jx = Eigen::MatrixXd::Zero(dim, dim);
    Eigen::MatrixXd jy_im = Eigen::MatrixXd::Zero(dim, dim);   // J_y = i * jy_im, kept real
    Eigen::MatrixXd jz = Eigen::MatrixXd::Zero(dim, dim);
    for (int s = 0; s < dim; ++s) {
        for (int q = 0; q < n; ++q) {
            const bool up = (s >> q) & 1;
            jz(s, s) += up ? 0.5 : -0.5;
            const int t = s ^ (1 << q);
            jx(t, s) += 0.5;
            // sigma_y / 2 = [[0, -i/2], [i/2, 0]]: <up|J_y|down> = -i/2, <down|J_y|up> = +i/2
            jy_im(t, s) += up ? 0.5 : -0.5;
        }
    }
    // J_y^2 = (i A)(i A) = -A A with A real antisymmetric
    return jx * jx - jy_im * jy_im + jz * jz;
}

// Multiplicity of each twice_j eigen-sector of J^2, i.e. d_j (2j+1).
inline std::map<int, long> j_squared_multiplicities(int n) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(total_j_squared(n), Eigen::EigenvaluesOnly);
    std::map<int, long> out;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
        const double jj = es.eigenvalues()(i);
        const int twice_j = static_cast<int>(std::lround(std::sqrt(1.0 + 4.0 * jj) - 1.0));
        ++out[twice_j];
    }
    return out;
}

// d_j = C(n, n/2-j) - C(n, n/2-j-1), the standard ballot-number form.
inline long double binom_ld(int n, int r) {
    if (r < 0 || r > n) return 0.0L;
    long double c = 1.0L;
    for (int i = 1; i <= r; ++i) c = c * (n - r + i) / i;
    return c;
}

__extension__ typedef unsigned __int128 u128;

inline u128 binom_u128(int n, int r) {
    if (r < 0 || r > n) return 0;
    if (r > n - r) r = n - r;
    u128 c = 1;
    for (int i = 1; i <= r; ++i) c = c * static_cast<unsigned>(n - r + i) / static_cast<unsigned>(i);
    return c;
}

inline u128 ballot_degeneracy(int n, int twice_j) {
    const int lo = (n - twice_j) / 2;
    return binom_u128(n, lo) - binom_u128(n, lo - 1);
}

inline long double ballot_degeneracy_ld(int n, int twice_j) {
    const int lo = (n - twice_j) / 2;
    return binom_ld(n, lo) - binom_ld(n, lo - 1);
}

// ---------------------------------------------------------------------------
// Dense block of the interaction in the basis |m = -j + a, photons p_a>,
// a = 0 .. dim-1. Matrix elements come from the ladder actions
// a |p> = sqrt(p) |p-1> and J_+ |j,m> = sqrt(j(j+1) - m(m+1)) |j,m+1>.

struct DenseBlock {
    Eigen::MatrixXd L;
    std::vector<double> photons;   // p_a
    std::vector<double> m;         // spin projection
};

inline DenseBlock dense_block(int twice_j, long k_prime) {
    const double j = 0.5 * twice_j;
    const long dim = std::min<long>(twice_j + 1L, k_prime + 1);
    DenseBlock b;
    b.L = Eigen::MatrixXd::Zero(dim, dim);
    for (long a = 0; a < dim; ++a) {
        b.m.push_back(-j + a);
        b.photons.push_back(static_cast<double>(k_prime - a));
    }
    for (long a = 0; a + 1 < dim; ++a) {
        // a^dag J_- + a J_+ couples (m, p) and (m+1, p-1)
        const double m = b.m[a];
        const double p = b.photons[a];
        const double el = std::sqrt(p) * std::sqrt(j * (j + 1) - m * (m + 1));
        b.L(a, a + 1) = b.L(a + 1, a) = el;
    }
    return b;
}

inline std::vector<double> dense_eigenvalues(const Eigen::MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
    return {es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size()};
}

struct DenseTraces {
    double t2 = 0.0, n1 = 0.0, n2 = 0.0, jz = 0.0;
};

inline DenseTraces dense_traces(const DenseBlock& b) {
    const Eigen::MatrixXd l2 = b.L * b.L;
    DenseTraces t;
    for (Eigen::Index a = 0; a < l2.rows(); ++a) {
        t.t2 += l2(a, a);
        t.n1 += b.photons[a] * l2(a, a);
        t.n2 += b.photons[a] * b.photons[a] * l2(a, a);
        t.jz += b.m[a] * l2(a, a);
    }
    return t;
}

// ---------------------------------------------------------------------------
// Full enumeration of the thermal sums in long double. k runs to k_max, all
// j sectors are visited, each block is diagonalized densely.

struct EnumeratedSums {
    long double z0 = 0;           // sum d_j |B| e^{-theta k}
    long double excess = 0;       // sum d_j e^{-theta k} sum_lambda (cosh(gamma lambda) - 1)
    long double first = 0;        // sum d_j e^{-theta k} (gamma^2/2) sum lambda^2
    long double beyond = 0;       // sum d_j e^{-theta k} sum_lambda (cosh - 1 - (gamma lambda)^2/2)
    long double k_z0 = 0;         // sum k d_j |B| e^{-theta k}
    long double k_first = 0;      // sum k d_j e^{-theta k} (gamma^2/2) sum lambda^2
    long double n1_excess = 0;    // sum d_j e^{-theta k} tr(a^dag a (e^{-gamma L} - I))
    long double jz_excess = 0;    // sum d_j e^{-theta k} tr(J_z (e^{-gamma L} - I))
    long double jj_total = 0;     // sum d_j e^{-theta k} j(j+1) tr(e^{-gamma L})
    long double total = 0;        // sum d_j e^{-theta k} tr(e^{-gamma L})
};

// cosh(x) - 1 - x^2/2 by its series, accurate for tiny x.
inline long double cosh_beyond_second(long double x) {
    const long double x2 = x * x;
    long double term = x2 * x2 / 24.0L, sum = 0.0L;
    for (int t = 2; t < 40 && term != 0.0L; ++t) {
        sum += term;
        term *= x2 / ((2.0L * t + 1) * (2.0L * t + 2));
    }
    return sum;
}

inline EnumeratedSums enumerate(int n, double theta, double gamma, long k_max) {
    EnumeratedSums s;
    for (int tj = n % 2; tj <= n; tj += 2) {
        const long double d = ballot_degeneracy_ld(n, tj);
        const long k0 = (n - tj) / 2;
        const double j = 0.5 * tj;
        for (long k = k0; k <= k_max; ++k) {
            const DenseBlock b = dense_block(tj, k - k0);
            const long double w = d * std::exp(-static_cast<long double>(theta) * k);
            const auto ev = dense_eigenvalues(b.L);
            const long double dim = static_cast<long double>(ev.size());
            long double ex = 0, sq = 0, beyond = 0;
            for (double l : ev) {
                const long double x = static_cast<long double>(gamma) * l;
                ex += 0.5L * x * x + cosh_beyond_second(x);
                sq += static_cast<long double>(l) * l;
                beyond += cosh_beyond_second(x);
            }
            // diagonal of e^{-gamma L} - I from the dense eigenvectors
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(b.L);
            long double n1 = 0, jz = 0;
            for (Eigen::Index a = 0; a < es.eigenvectors().rows(); ++a) {
                long double diag = 0;
                for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
                    const long double v = es.eigenvectors()(a, i);
                    diag += v * v * std::expm1(-static_cast<long double>(gamma) * es.eigenvalues()(i));
                }
                n1 += b.photons[a] * diag;
                jz += b.m[a] * diag;
            }
            const long double g2 = 0.5L * gamma * gamma;
            s.z0 += w * dim;
            s.excess += w * ex;
            s.first += w * g2 * sq;
            s.beyond += w * beyond;
            s.k_z0 += k * w * dim;
            s.k_first += k * w * g2 * sq;
            s.n1_excess += w * n1;
            s.jz_excess += w * jz;
            s.jj_total += w * j * (j + 1) * (dim + ex);
            s.total += w * (dim + ex);
        }
    }
    return s;
}

}  // namespace oracle
