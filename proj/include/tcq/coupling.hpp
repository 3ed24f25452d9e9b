// The hollow symmetric tridiagonal coupling block L(j,k) and its trace moments.
//
// Inside block (j,k) the basis index alpha = 1..|B| walks the spin ladder
// upward while the photon number walks down. Off-diagonal entry alpha couples
// states alpha and alpha+1 with
//     l_alpha^2 = alpha (2j - alpha + 1) (k' - alpha + 1),   k' = k - (n/2 - j).
// The entries depend on (j, k') only, which is what BlockShape carries.
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "tcq/combinatorics.hpp"

namespace tcq {

struct BlockIndex {
    int n = 0;
    int twice_j = 0;
    long k = 0;
};

struct BlockShape {
    int twice_j = 0;
    long k_prime = 0;
    long dim() const { return std::min<long>(twice_j + 1L, k_prime + 1); }
};

inline BlockShape block_shape(const BlockIndex& b) {
    const SubspaceGeometry g = subspace_geometry(b.n, b.twice_j, b.k);
    if (!g.nonempty) {
        throw std::domain_error("block (twice_j=" + std::to_string(b.twice_j) +
                                ", k=" + std::to_string(b.k) + ") is empty for n=" +
                                std::to_string(b.n));
    }
    return BlockShape{b.twice_j, g.k_prime};
}

namespace detail {

__extension__ typedef __int128 i128;

// Polynomial in alpha with exact integer coefficients, degree <= 8.
struct IntPoly {
    std::array<i128, 9> c{};
    int degree = 0;
};

inline IntPoly poly_const(i128 v) {
    IntPoly p;
    p.c[0] = v;
    return p;
}

// a + b*alpha
inline IntPoly poly_linear(i128 a, i128 b) {
    IntPoly p;
    p.c[0] = a;
    p.c[1] = b;
    p.degree = 1;
    return p;
}

inline IntPoly poly_mul(const IntPoly& x, const IntPoly& y) {
    IntPoly r;
    r.degree = x.degree + y.degree;
    if (r.degree > 8) throw std::logic_error("polynomial degree overflow");
    for (int i = 0; i <= x.degree; ++i)
        for (int j = 0; j <= y.degree; ++j) r.c[i + j] += x.c[i] * y.c[j];
    return r;
}

inline IntPoly poly_add(const IntPoly& x, const IntPoly& y) {
    IntPoly r;
    r.degree = std::max(x.degree, y.degree);
    for (int i = 0; i <= r.degree; ++i) r.c[i] = x.c[i] + y.c[i];
    return r;
}

// Faulhaber power sums S_p(M) = sum_{a=1}^{M} a^p, all exact integers.
inline i128 power_sum(int p, i128 m) {
    if (m <= 0) return 0;
    switch (p) {
        case 0: return m;
        case 1: return m * (m + 1) / 2;
        case 2: return m * (m + 1) * (2 * m + 1) / 6;
        case 3: { const i128 s = m * (m + 1) / 2; return s * s; }
        case 4: return m * (m + 1) * (2 * m + 1) * (3 * m * m + 3 * m - 1) / 30;
        case 5: return m * m * (m + 1) * (m + 1) * (2 * m * m + 2 * m - 1) / 12;
        case 6:
            return m * (m + 1) * (2 * m + 1) * (3 * m * m * m * m + 6 * m * m * m - 3 * m + 1) / 42;
        case 7:
            return m * m * (m + 1) * (m + 1) * (3 * m * m * m * m + 6 * m * m * m - m * m - 4 * m + 2) /
                   24;
        default: throw std::logic_error("power sum order not supported");
    }
}

// sum_{alpha=1}^{M} P(alpha) in O(1).
inline i128 sum_poly(const IntPoly& p, i128 m) {
    i128 total = 0;
    for (int i = 0; i <= p.degree; ++i) total += p.c[i] * power_sum(i, m);
    return total;
}

// l_alpha^2 = alpha (2j + 1 - alpha)(k' + 1 - alpha) as a cubic in alpha.
inline IntPoly bond_sq_poly(const BlockShape& s) {
    return poly_mul(poly_mul(poly_linear(0, 1), poly_linear(s.twice_j + 1, -1)),
                    poly_linear(s.k_prime + 1, -1));
}

inline double to_double(i128 v) { return static_cast<double>(v); }

}  // namespace detail

inline double bond_squared(const BlockShape& s, long alpha) {
    if (alpha < 1 || alpha > s.dim() - 1) {
        throw std::domain_error("bond index alpha=" + std::to_string(alpha) + " out of range 1.." +
                                std::to_string(s.dim() - 1));
    }
    const std::int64_t v = static_cast<std::int64_t>(alpha) * (s.twice_j + 1 - alpha) *
                           (s.k_prime + 1 - alpha);
    return static_cast<double>(v);
}

inline double bond(const BlockShape& s, long alpha) { return std::sqrt(bond_squared(s, alpha)); }

inline double bond(const BlockIndex& b, long alpha) { return bond(block_shape(b), alpha); }

struct CouplingMatrix {
    BlockIndex index;
    std::vector<double> bonds;   // l_1 .. l_{|B|-1}; the diagonal is identically zero
    long dim() const { return static_cast<long>(bonds.size()) + 1; }
};

inline std::vector<double> bond_sequence(const BlockShape& s) {
    std::vector<double> out;
    const long d = s.dim();
    out.reserve(d > 0 ? d - 1 : 0);
    for (long a = 1; a < d; ++a) out.push_back(bond(s, a));
    return out;
}

inline CouplingMatrix build_matrix(const BlockIndex& b) {
    return CouplingMatrix{b, bond_sequence(block_shape(b))};
}

// tr(L^2) = 2 sum_alpha l_alpha^2, summed exactly with Faulhaber power sums.
inline double second_moment_closed(const BlockShape& s) {
    const detail::i128 m = s.dim() - 1;
    return detail::to_double(2 * detail::sum_poly(detail::bond_sq_poly(s), m));
}

inline double second_moment_closed(const BlockIndex& b) { return second_moment_closed(block_shape(b)); }

// 2 sum l_alpha^2 by direct summation, O(|B|). Reference for the closed form.
inline double second_moment_direct(const BlockShape& s) {
    CompensatedSum<double> acc;
    for (long a = 1; a < s.dim(); ++a) acc.add(2.0 * bond_squared(s, a));
    return acc.value();
}

// Var over the eigenvalue multiset; the mean is zero because L is hollow.
inline double var_lambda(const BlockShape& s) { return second_moment_closed(s) / s.dim(); }

inline double var_lambda(const BlockIndex& b) { return var_lambda(block_shape(b)); }

// Upper bound on max|lambda|^2 in O(1): by Gershgorin |lambda| <= 2 max l,
// and alpha(2j+1-alpha) <= (2j+1)^2/4, (k'+1-alpha) <= k'.
inline double spectral_radius_sq_bound(const BlockShape& s) {
    if (s.dim() <= 1) return 0.0;
    const double a = s.twice_j + 1.0;
    return a * a * static_cast<double>(s.k_prime);
}

// Diagonal of L^{2t} for a hollow tridiagonal matrix given by its bonds,
// computed as ||L^t e_i||^2 using a local window of width 2t+1.
inline std::vector<double> even_power_diagonal(const std::vector<double>& bonds, int order) {
    if (order < 0 || order % 2 != 0) {
        throw std::domain_error("odd powers of a hollow tridiagonal block have zero trace; order=" +
                                std::to_string(order) + " is refused");
    }
    const long d = static_cast<long>(bonds.size()) + 1;
    const int t = order / 2;
    std::vector<double> diag(d, 0.0);
    std::vector<double> cur(2 * t + 1), nxt(2 * t + 1);
    for (long i = 0; i < d; ++i) {
        // cur[w] holds component (i - t + w) of L^step e_i.
        std::fill(cur.begin(), cur.end(), 0.0);
        cur[t] = 1.0;
        for (int step = 0; step < t; ++step) {
            std::fill(nxt.begin(), nxt.end(), 0.0);
            for (int w = 0; w <= 2 * t; ++w) {
                const long r = i - t + w;
                if (r < 0 || r >= d || cur[w] == 0.0) continue;
                if (r - 1 >= 0 && w - 1 >= 0) nxt[w - 1] += bonds[r - 1] * cur[w];
                if (r + 1 < d && w + 1 <= 2 * t) nxt[w + 1] += bonds[r] * cur[w];
            }
            std::swap(cur, nxt);
        }
        CompensatedSum<double> acc;
        for (double v : cur) acc.add(v * v);
        diag[i] = acc.value();
    }
    return diag;
}

inline constexpr std::array<int, 4> kSupportedMomentOrders{2, 4, 6, 8};

// tr(L^order) for order in {2,4,6,8}, by repeated tridiagonal products.
inline double higher_moment(const BlockShape& s, int order) {
    if (order % 2 != 0) {
        throw std::domain_error("odd-order traces of L vanish identically; order=" +
                                std::to_string(order) + " is refused");
    }
    bool supported = false;
    for (int o : kSupportedMomentOrders) supported = supported || (o == order);
    if (!supported) throw std::domain_error("moment order must be one of 2, 4, 6, 8");
    const auto diag = even_power_diagonal(bond_sequence(s), order);
    CompensatedSum<double> acc;
    for (double v : diag) acc.add(v);
    return acc.value();
}

inline double higher_moment(const BlockIndex& b, int order) {
    return higher_moment(block_shape(b), order);
}

struct MomentSet {
    BlockIndex index;
    double trace_L2 = 0.0;
    double var_lambda = 0.0;
    std::vector<std::pair<int, double>> higher;   // (order, tr L^order)
};

inline MomentSet moments(const BlockIndex& b, bool with_higher = false) {
    const BlockShape s = block_shape(b);
    MomentSet m{b, second_moment_closed(s), var_lambda(s), {}};
    if (with_higher) {
        for (int o : kSupportedMomentOrders) m.higher.emplace_back(o, higher_moment(s, o));
    }
    return m;
}

// First-order truncation gate: (gamma^2 / 2) Var(Lambda) must stay below one.
inline double expansion_gate_value(double gamma, const BlockShape& s) {
    return 0.5 * gamma * gamma * var_lambda(s);
}

inline bool expansion_gate_holds(double gamma, const BlockShape& s) {
    return expansion_gate_value(gamma, s) < 1.0;
}

}  // namespace tcq
