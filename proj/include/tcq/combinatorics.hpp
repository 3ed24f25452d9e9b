// Angular-momentum bookkeeping for N spin-1/2 particles.
//
// Every spin quantum number is carried as twice its value (twice_j = 2j) so
// half-integer j stays exact for odd N.
#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>

#include "tcq/summation.hpp"

namespace tcq {

using BigInt = boost::multiprecision::cpp_int;

inline constexpr int kExactDegeneracyMaxN = 64;

inline bool valid_twice_j(int n, int twice_j) {
    return n >= 0 && twice_j >= 0 && twice_j <= n && ((n - twice_j) % 2 == 0);
}

inline void require_valid_twice_j(int n, int twice_j) {
    if (n < 1) throw std::domain_error("ensemble size must be at least 1");
    if (!valid_twice_j(n, twice_j)) {
        throw std::domain_error("twice_j=" + std::to_string(twice_j) +
                                " is not a valid angular momentum for n=" + std::to_string(n));
    }
}

// Smallest admissible twice_j for a given n (0 for even n, 1 for odd n).
inline int twice_j_min(int n) { return n % 2; }

struct DegeneracyValue {
    double log_value = 0.0;
    std::optional<BigInt> exact_value;
};

// log d_j = log n! + log(2j+1) - log(n/2-j)! - log(n/2+j+1)!
// The log-factorials cancel to a small result for large n, so they are
// evaluated in extended precision before the final rounding.
inline double log_degeneracy(int n, int twice_j) {
    require_valid_twice_j(n, twice_j);
    const long double lo = (n - twice_j) / 2;
    const long double hi = (n + twice_j) / 2;
    return static_cast<double>(std::lgamma(n + 1.0L) + std::log(twice_j + 1.0L) - std::lgamma(lo + 1.0L) -
                               std::lgamma(hi + 2.0L));
}

inline BigInt binomial(int n, int r) {
    if (r < 0 || r > n) return BigInt(0);
    r = std::min(r, n - r);
    BigInt c = 1;
    for (int i = 1; i <= r; ++i) {
        c *= (n - r + i);
        c /= i;
    }
    return c;
}

// d_j = C(n, n/2-j) - C(n, n/2-j-1), the ballot-number form of the
// closed expression; exact for any n.
inline BigInt exact_degeneracy(int n, int twice_j) {
    require_valid_twice_j(n, twice_j);
    const int m = (n - twice_j) / 2;
    return binomial(n, m) - binomial(n, m - 1);
}

inline DegeneracyValue degeneracy(int n, int twice_j) {
    DegeneracyValue d;
    d.log_value = log_degeneracy(n, twice_j);
    if (n <= kExactDegeneracyMaxN) d.exact_value = exact_degeneracy(n, twice_j);
    return d;
}

// log(d_j / d_{j+1}) = log((2j+1)/(2j+3)) + log((n/2+j+2)/(n/2-j)).
// Requires twice_j + 2 <= n.
inline double log_degeneracy_ratio(int n, int twice_j) {
    require_valid_twice_j(n, twice_j);
    if (twice_j + 2 > n) throw std::domain_error("j+1 exceeds n/2");
    return std::log((twice_j + 1.0) / (twice_j + 3.0)) +
           std::log((n + twice_j + 4.0) / static_cast<double>(n - twice_j));
}

struct SubspaceGeometry {
    long k0 = 0;        // excitations of the lowest state in the j sector
    long k_prime = 0;   // k - k0
    long dim_B = 0;     // block dimension, 0 when empty
    bool nonempty = false;
};

inline SubspaceGeometry subspace_geometry(int n, int twice_j, long k) {
    require_valid_twice_j(n, twice_j);
    SubspaceGeometry g;
    g.k0 = (n - twice_j) / 2;
    g.k_prime = k - g.k0;
    if (g.k_prime >= 0) {
        g.dim_B = std::min<long>(twice_j + 1L, g.k_prime + 1);
        g.nonempty = true;
    }
    return g;
}

// Smallest twice_j whose (j,k) block is nonempty: max(n - 2k, n mod 2).
inline int j_floor_twice(int n, long k) {
    if (k < 0) throw std::domain_error("k must be non-negative");
    const long candidate = static_cast<long>(n) - 2 * k;
    return static_cast<int>(std::max<long>(candidate, n % 2));
}

// d_j > d_{j+1} exactly, via (2j+1)(n/2+j+2) > (2j+3)(n/2-j) in integers.
inline bool degeneracy_strictly_decreases(int n, int twice_j) {
    const std::int64_t lhs = static_cast<std::int64_t>(twice_j + 1) * (n + twice_j + 4);
    const std::int64_t rhs = static_cast<std::int64_t>(twice_j + 3) * (n - twice_j);
    return lhs > rhs;
}

// Most degenerate j. The adjacent ratio d_j/d_{j+1} increases with j, so the
// argmax is the first j at which d strictly drops; ties go to the larger j.
inline int j_star_twice(int n) {
    if (n < 1) throw std::domain_error("ensemble size must be at least 1");
    for (int tj = twice_j_min(n); tj + 2 <= n; tj += 2) {
        if (degeneracy_strictly_decreases(n, tj)) return tj;
    }
    return n;
}

struct SupportWindow {
    int j_lo = 0;   // twice_j
    int j_hi = 0;   // twice_j
    double mass_captured = 0.0;
    int width() const { return (j_hi - j_lo) / 2 + 1; }
};

// log of the degeneracy mass d_j (2j+1) carried by sector j.
inline double log_sector_mass(int n, int twice_j) {
    return log_degeneracy(n, twice_j) + std::log(twice_j + 1.0);
}

// Grows a contiguous window outward from j*, always absorbing the heavier
// neighbouring sector, until the captured share of the 2^n states reaches
// 1 - delta.
inline SupportWindow support_window(int n, double delta) {
    if (!(delta > 0.0 && delta < 1.0)) throw std::domain_error("delta must lie in (0,1)");
    const int star = j_star_twice(n);
    const double log_total = n * std::numbers::ln2;
    const double log_ref = log_sector_mass(n, star);
    // Masses are tracked relative to the j* sector to keep them O(1).
    const double total_rel = std::exp(log_total - log_ref);
    CompensatedSum<double> captured(1.0);
    SupportWindow w{star, star, 0.0};
    const int lo_limit = twice_j_min(n);
    auto rel_mass = [&](int tj) { return std::exp(log_sector_mass(n, tj) - log_ref); };
    while (captured.value() < (1.0 - delta) * total_rel) {
        const bool can_lo = w.j_lo - 2 >= lo_limit;
        const bool can_hi = w.j_hi + 2 <= n;
        if (!can_lo && !can_hi) break;
        const double m_lo = can_lo ? rel_mass(w.j_lo - 2) : -1.0;
        const double m_hi = can_hi ? rel_mass(w.j_hi + 2) : -1.0;
        if (m_lo >= m_hi) {
            w.j_lo -= 2;
            captured.add(m_lo);
        } else {
            w.j_hi += 2;
            captured.add(m_hi);
        }
    }
    w.mass_captured = std::min(1.0, captured.value() / total_rel);
    if (w.j_lo == lo_limit && w.j_hi == n) w.mass_captured = 1.0;
    return w;
}

}  // namespace tcq
