// Lamb-shift corrections to observables: photon-number mean and variance,
// the collective J_z, the driven rotation signal, and a thermal expectation
// engine that picks its summation path from the indices an observable reads.
//
// Basis convention inside block (j,k): state alpha = 1..|B| has spin
// projection m = -j + alpha - 1 and photon count p = k' - alpha + 1, so
// p >= 0 and p + (m + j) = k'. With L^2 having diagonal l_{alpha-1}^2 + l_alpha^2,
//     tr(D L^2) = sum_alpha l_alpha^2 (D_alpha + D_{alpha+1})
// for any diagonal observable D.
//
// The shifted ladder (p = k' - alpha, m = -j + alpha) differs from the
// physical one by constant offsets:
//     n_pert   -> n_pert - tr L^2
//     n_pert2  -> n_pert2 - 2 n_pert + tr L^2
//     jz_pert  -> jz_pert + tr L^2
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "tcq/coupling.hpp"
#include "tcq/domain.hpp"
#include "tcq/fit.hpp"
#include "tcq/thermo.hpp"
#include "tcq/units.hpp"

namespace tcq {

enum class TraceConvention { Physical, ShiftedLadder };

struct BlockTracePolynomials {
    BlockIndex index;
    double n_pert = 0.0;    // tr(a^dag a L^2)
    double n_pert2 = 0.0;   // tr((a^dag a)^2 L^2)
    double jz_pert = 0.0;   // tr(J_z L^2)
};

namespace detail {

struct ExactTraces {
    i128 t2 = 0, n1 = 0, n2 = 0, jz = 0;
};

inline ExactTraces exact_traces(const BlockShape& s) {
    const i128 m = s.dim() - 1;
    const IntPoly l2 = bond_sq_poly(s);
    const i128 kp = s.k_prime;
    const IntPoly photon_pair = poly_linear(2 * kp + 1, -2);
    const IntPoly photon_sq_pair = poly_add(poly_mul(poly_linear(kp + 1, -1), poly_linear(kp + 1, -1)),
                                            poly_mul(poly_linear(kp, -1), poly_linear(kp, -1)));
    const IntPoly spin_pair = poly_linear(-(static_cast<i128>(s.twice_j) + 1), 2);
    ExactTraces t;
    t.t2 = 2 * sum_poly(l2, m);
    t.n1 = sum_poly(poly_mul(l2, photon_pair), m);
    t.n2 = sum_poly(poly_mul(l2, photon_sq_pair), m);
    t.jz = sum_poly(poly_mul(l2, spin_pair), m);
    return t;
}

}  // namespace detail

// Closed forms from Faulhaber sums, exact in 128-bit integers before the
// final conversion.
inline BlockTracePolynomials block_traces_closed(const BlockIndex& b,
                                                 TraceConvention c = TraceConvention::Physical) {
    const detail::ExactTraces t = detail::exact_traces(block_shape(b));
    detail::i128 n1 = t.n1, n2 = t.n2, jz = t.jz;
    if (c == TraceConvention::ShiftedLadder) {
        n2 = t.n2 - 2 * t.n1 + t.t2;
        n1 = t.n1 - t.t2;
        jz = t.jz + t.t2;
    }
    return BlockTracePolynomials{b, detail::to_double(n1), detail::to_double(n2), detail::to_double(jz)};
}

inline BlockTracePolynomials block_trace_polynomials(const BlockIndex& b) {
    return block_traces_closed(b, TraceConvention::Physical);
}

// Direct O(|B|) traces from the bond sequence.
inline BlockTracePolynomials block_traces_direct(const BlockIndex& b,
                                                 TraceConvention c = TraceConvention::Physical) {
    const BlockShape s = block_shape(b);
    const long d = s.dim();
    const long shift = c == TraceConvention::Physical ? 0 : 1;
    CompensatedSum<double> n1, n2, jz;
    for (long a = 1; a <= d; ++a) {
        const double left = a > 1 ? bond_squared(s, a - 1) : 0.0;
        const double right = a < d ? bond_squared(s, a) : 0.0;
        const double diag = left + right;
        const double p = static_cast<double>(s.k_prime - a + 1 - shift);
        const double m = -0.5 * s.twice_j + static_cast<double>(a - 1 + shift);
        n1.add(p * diag);
        n2.add(p * p * diag);
        jz.add(m * diag);
    }
    return BlockTracePolynomials{b, n1.value(), n2.value(), jz.value()};
}

// Closed-form polynomials in (|B|, j, k') in their printed form, evaluated
// verbatim. They do not agree with the direct traces under either ladder
// convention; TraceSource::Printed selects them so the disagreement can be
// measured.
struct PrintedPolynomials {
    static double n_pert(double B, double j, double k) {
        const double B2 = B * B, B3 = B2 * B, B4 = B3 * B, B5 = B4 * B;
        return -2.0 / 5 * B5 + 0.25 * (1 + 4 * j + 4 * k) * B4 +
               (1.0 / 6) * (-16 * j * k - 4 * k * k - 2 * k - 9) * B3 +
               0.25 * (8 * j * k * k - 4 * j * k - 4 * j - 4 * k - 1) * B2 +
               (1.0 / 30) * (60 * j * k * k + 50 * j * k + 20 * k * k + 10 * k - 3) * B +
               2 * (-3 * j * k * k + 4 * j * k - 2 * j + k * k - 2 * k + 1);
    }

    static double n_pert2(double B, double j, double k) {
        const double B2 = B * B, B3 = B2 * B, B4 = B3 * B, B5 = B4 * B, B6 = B5 * B;
        const double k2 = k * k, k3 = k2 * k;
        return 1.0 / 3 * B6 + 0.2 * (-1 - 4 * j - 6 * k) * B5 +
               (3 * j * k + 1.5 * k2 + 0.5 * k - 5.0 / 12) * B4 +
               (-10.0 / 3 * j * k + 2.0 / 3 * j - 2.0 / 3 * k3 - 1.0 / 3 * k2 + 4.0 / 3 * k + 1.0 / 6) * B3 +
               (2 * j * k3 - 8 * j * k2 + 4 * j * k - 1.5 * k2 - 0.5 * k + 1.0 / 12) * B2 +
               (2 * j * k3 + 4 * j * k2 - 5.0 / 3 * j * k + 2.0 / 3 * k3 + 1.0 / 3 * k2 - 1.0 / 3 * k -
                1.0 / 15) * B +
               (-j * k3 + 4 * j + 2 * k3 - 6 * k2 + 6 * k - 2);
    }

    static double jz_pert(double B, double j, double k) {
        const double B2 = B * B, B3 = B2 * B, B4 = B3 * B, B5 = B4 * B;
        const double j2 = j * j;
        return 0.4 * B5 + 0.25 * (-1 - 6 * j - 2 * k) * B4 +
               (1.0 / 6) * (8 * j2 + 12 * j * k + 2 * j - 3) * B3 +
               0.25 * (-8 * j2 * k + 4 * j * k + 6 * j + 2 * k + 1) * B2 +
               (1.0 / 30) * (60 * j2 * k - 40 * j2 - 60 * j * k - 10 * j + 3) * B +
               (-2 * j2 * k - 4 * j2 - 6 * j * k + 6 * j + 2 * k - 2);
    }

    // Regime forms with |B| already substituted: spin-limited (|B| = 2j+1)
    // and photon-limited (|B| = k'+1).
    static double n_pert_spin_limited(double j, double k) {
        const double j2 = j * j, j3 = j2 * j, j4 = j3 * j, j5 = j4 * j, k2 = k * k;
        return 16.0 / 5 * j5 - 16.0 / 3 * j4 * k + 4 * j4 + 8.0 / 3 * j3 * k2 - 20.0 / 3 * j3 * k -
               16 * j3 + 4 * j2 * k2 - 2.0 / 3 * j2 * k - 25 * j2 - 14.0 / 3 * j * k2 + 26.0 / 3 * j * k -
               81.0 / 5 * j + 2 * k2 - 4 * k;
    }

    static double n_pert_photon_limited(double j, double k) {
        const double k2 = k * k, k3 = k2 * k, k4 = k3 * k, k5 = k4 * k;
        return 1.0 / 3 * j * k4 + j * k3 - 16.0 / 3 * j * k2 + 8 * j * k - 4 * j - 1.0 / 15 * k5 -
               1.0 / 12 * k4 - 11.0 / 6 * k3 - 47.0 / 12 * k2 - 101.0 / 10 * k;
    }

    static double n_pert2_spin_limited(double j, double k) {
        const double j2 = j * j, j3 = j2 * j, j4 = j3 * j, j5 = j4 * j, j6 = j5 * j;
        const double k2 = k * k, k3 = k2 * k;
        return -64.0 / 15 * j6 + 48.0 / 5 * j5 * k - 32.0 / 5 * j5 + 24 * j4 * k2 - 56.0 / 3 * j4 * k -
               4.0 / 3 * j4 + 8.0 / 3 * j3 * k3 + 40.0 / 3 * j3 * k2 - 64.0 / 3 * j3 * k + 4.0 / 3 * j3 +
               4 * j2 * k2 + 2 * j2 * k2 - 16.0 / 3 * j2 * k + 1.0 / 3 * j2 + 1.0 / 3 * j * k3 +
               2.0 / 3 * j * k2 - 2.0 / 3 * j * k + 56.0 / 15 * j + 2 * k3 - 6 * k2 + 29.0 / 5 * k - 21.0 / 10;
    }

    static double n_pert2_photon_limited(double j, double k) {
        const double k2 = k * k, k3 = k2 * k, k4 = k3 * k, k5 = k4 * k, k6 = k5 * k;
        return -13.0 / 10 * k6 + 21.0 / 5 * j * k5 - 1.0 / 30 * k5 + 8.0 / 3 * j * k4 + 1.0 / 12 * k4 -
               13.0 / 3 * j * k3 + 2 * k3 - 5.0 / 3 * j * k2 - 25.0 / 4 * k2 + 86.0 / 15 * k +
               58.0 / 15 * j - 21.0 / 10;
    }
};

// Printed polynomials at |B| = min(2j+1, k'+1).
inline BlockTracePolynomials block_traces_printed(const BlockIndex& b) {
    const BlockShape s = block_shape(b);
    const double B = static_cast<double>(s.dim());
    const double j = 0.5 * s.twice_j;
    const double k = static_cast<double>(s.k_prime);
    return BlockTracePolynomials{b, PrintedPolynomials::n_pert(B, j, k), PrintedPolynomials::n_pert2(B, j, k),
                                 PrintedPolynomials::jz_pert(B, j, k)};
}

// Printed two-regime forms for n_pert and n_pert2; jz_pert has no such form
// and is taken from the |B| polynomial.
inline BlockTracePolynomials block_traces_printed_regime(const BlockIndex& b) {
    const BlockShape s = block_shape(b);
    const double j = 0.5 * s.twice_j;
    const double k = static_cast<double>(s.k_prime);
    const bool spin_limited = s.twice_j + 1 <= s.k_prime + 1;
    BlockTracePolynomials t = block_traces_printed(b);
    t.n_pert = spin_limited ? PrintedPolynomials::n_pert_spin_limited(j, k)
                            : PrintedPolynomials::n_pert_photon_limited(j, k);
    t.n_pert2 = spin_limited ? PrintedPolynomials::n_pert2_spin_limited(j, k)
                             : PrintedPolynomials::n_pert2_photon_limited(j, k);
    return t;
}

enum class TraceSource { Physical, ShiftedLadder, Printed };

inline BlockTracePolynomials block_traces(const BlockIndex& b, TraceSource src) {
    switch (src) {
        case TraceSource::Physical: return block_traces_closed(b, TraceConvention::Physical);
        case TraceSource::ShiftedLadder: return block_traces_closed(b, TraceConvention::ShiftedLadder);
        case TraceSource::Printed: return block_traces_printed(b);
    }
    return block_traces_closed(b);
}

// Uncoupled moments: Bose photon statistics and independent spins.
struct UncoupledMoments {
    double photon_mean = 0.0;
    double photon_second = 0.0;
    double photon_variance = 0.0;
    double jz = 0.0;
};

inline UncoupledMoments uncoupled_moments(int n, double theta) {
    UncoupledMoments u;
    u.photon_mean = 1.0 / std::expm1(theta);
    u.photon_variance = u.photon_mean * (u.photon_mean + 1.0);
    u.photon_second = u.photon_variance + u.photon_mean * u.photon_mean;
    u.jz = -0.5 * n * std::tanh(0.5 * theta);
    return u;
}

// First-order sums divided by Z0. Each *_lamb entry is
// (gamma^2/2) sum w tr(D L^2) / Z0, i.e. the g0^2 contribution of D to the
// unnormalized thermal trace. The *_bound entries bound the dropped
// higher-order contributions for the same observable.
struct FirstOrderObservables {
    int n = 0;
    ThermalPoint point;
    TraceSource source = TraceSource::Physical;
    double ratio = 0.0;   // Z_pert / Z0
    double n1_lamb = 0.0, n2_lamb = 0.0, jz_lamb = 0.0;
    double n1_bound = 0.0, n2_bound = 0.0, jz_bound = 0.0;
    UncoupledMoments base;
    TruncationInfo truncation;
};

inline FirstOrderObservables first_order_observables(const ModelParams& p, double temp_kelvin,
                                                     TraceSource src = TraceSource::Physical,
                                                     const EvalOptions& opt = {}) {
    const ThermalPoint tp = thermal_point(p, temp_kelvin);
    const auto fo = detail::first_order_sums(p, tp, opt);
    detail::require_gate(fo);
    const Domain d = plan_domain(p.n, tp.theta, opt.delta, kEnvStates | kEnvSecondMoment | kEnvObservable);
    const double g4 = tp.gamma * tp.gamma * tp.gamma * tp.gamma / 24.0;
    const auto s = evaluate<7>(d, opt.threads, [&](const BlockIndex& b, double w) {
        const BlockShape sh = block_shape(b);
        const BlockTracePolynomials t = block_traces(b, src);
        const double t2 = second_moment_closed(sh);
        const double lmax2 = spectral_radius_sq_bound(sh);
        const double dropped = g4 * lmax2 * t2 * std::cosh(tp.gamma * std::sqrt(lmax2));
        const double pmax = static_cast<double>(sh.k_prime) + 1.0;
        const double mmax = 0.5 * sh.twice_j + 1.0;
        return std::array<double, 7>{w * t.n_pert,           w * t.n_pert2,
                                     w * t.jz_pert,          w * t2,
                                     w * dropped * pmax,     w * dropped * pmax * pmax,
                                     w * dropped * mmax};
    });
    FirstOrderObservables o;
    o.n = p.n;
    o.point = tp;
    o.source = src;
    const double scale = std::exp(d.log_ref - z0_closed(p, temp_kelvin));
    const double g2 = 0.5 * tp.gamma * tp.gamma;
    o.ratio = g2 * s[3] * scale;
    o.n1_lamb = g2 * s[0] * scale;
    o.n2_lamb = g2 * s[1] * scale;
    o.jz_lamb = g2 * s[2] * scale;
    o.n1_bound = s[4] * scale;
    o.n2_bound = s[5] * scale;
    o.jz_bound = s[6] * scale;
    o.base = uncoupled_moments(p.n, tp.theta);
    o.truncation = truncation_of(d, 1);
    return o;
}

// Reported shifts at one operating point.
struct ShiftPoint {
    int n = 0;
    double ratio = 0.0;   // Z_pert / Z0
    // (gamma^2/2) sum w tr(D L^2) / Z_total, scaled by the uncoupled value
    double fractional_mean_shift = 0.0;
    // (gamma^2/2) sum w (n_pert2 - 2 <n>_0 n_pert) / Z_total / Var_0
    double fractional_variance_shift = 0.0;
    // (gamma^2/2) sum w jz_pert / Z_total, dimensionless
    double jz_shift = 0.0;
    // Changes of the first-order normalized expectations relative to g0 = 0.
    double connected_mean_shift = 0.0;
    double connected_variance_shift = 0.0;
    double connected_jz_shift = 0.0;
};

inline ShiftPoint shift_point(const FirstOrderObservables& o) {
    ShiftPoint s;
    s.n = o.n;
    s.ratio = o.ratio;
    const double zt = 1.0 + o.ratio;
    const auto& b = o.base;
    s.fractional_mean_shift = o.n1_lamb / zt / b.photon_mean;
    s.fractional_variance_shift = (o.n2_lamb - 2.0 * b.photon_mean * o.n1_lamb) / zt / b.photon_variance;
    s.jz_shift = o.jz_lamb / zt;
    const double d1 = (o.n1_lamb - b.photon_mean * o.ratio) / zt;
    const double d2 = (o.n2_lamb - b.photon_second * o.ratio) / zt;
    s.connected_mean_shift = d1 / b.photon_mean;
    s.connected_variance_shift = (d2 - d1 * (2.0 * b.photon_mean + d1)) / b.photon_variance;
    s.connected_jz_shift = (o.jz_lamb - b.jz * o.ratio) / zt;
    return s;
}

inline ShiftPoint shifts(const ModelParams& p, double temp_kelvin, TraceSource src = TraceSource::Physical,
                         const EvalOptions& opt = {}) {
    return shift_point(first_order_observables(p, temp_kelvin, src, opt));
}

inline double fractional_photon_mean_shift(const ModelParams& p, double temp_kelvin,
                                           TraceSource src = TraceSource::Physical,
                                           const EvalOptions& opt = {}) {
    return shifts(p, temp_kelvin, src, opt).fractional_mean_shift;
}

inline double fractional_photon_variance_shift(const ModelParams& p, double temp_kelvin,
                                               TraceSource src = TraceSource::Physical,
                                               const EvalOptions& opt = {}) {
    return shifts(p, temp_kelvin, src, opt).fractional_variance_shift;
}

// J_z shift as an angular frequency: omega0 times the dimensionless shift.
inline double jz_shift(const ModelParams& p, double temp_kelvin, TraceSource src = TraceSource::Physical,
                       const EvalOptions& opt = {}) {
    return p.omega0 * shifts(p, temp_kelvin, src, opt).jz_shift;
}

// First-order thermal expectations <D> = (Z0 <D>_0 + (gamma^2/2) sum w tr(D L^2)) / Z_total.
struct FirstOrderExpectations {
    double photon_mean = 0.0;
    double photon_second = 0.0;
    double jz = 0.0;
};

inline FirstOrderExpectations first_order_expectations(const FirstOrderObservables& o) {
    const double zt = 1.0 + o.ratio;
    return FirstOrderExpectations{(o.base.photon_mean + o.n1_lamb) / zt,
                                  (o.base.photon_second + o.n2_lamb) / zt, (o.base.jz + o.jz_lamb) / zt};
}

// sin(Omega t) tr(J_z rho_th) with tr(J_z rho_th) at first order in g0^2.
inline double driven_signal(const ModelParams& p, double temp_kelvin, double rabi, double t_seconds,
                            const EvalOptions& opt = {}) {
    const FirstOrderObservables o = first_order_observables(p, temp_kelvin, TraceSource::Physical, opt);
    return std::sin(rabi * t_seconds) * first_order_expectations(o).jz;
}

// Exact counterparts of the *_lamb sums from the block spectra (n <= 256):
// sum w tr(D (e^{-gamma L} - I)) / Z0, using only even powers of L.
struct ExactObservables {
    double excess_ratio = 0.0;   // (Z_exact - Z0) / Z0
    double n1_excess = 0.0, n2_excess = 0.0, jz_excess = 0.0;
    UncoupledMoments base;
};

inline ExactObservables exact_observables(const ModelParams& p, double temp_kelvin, const EvalOptions& opt = {}) {
    detail::require_exact_size(p.n);
    const ThermalPoint tp = thermal_point(p, temp_kelvin);
    const Domain d = plan_domain(p.n, tp.theta, opt.delta, kEnvStates | kEnvSecondMoment | kEnvObservable);
    const auto s = evaluate<4>(d, opt.threads, [&](const BlockIndex& b, double w) {
        const BlockShape sh = block_shape(b);
        const auto bonds = bond_sequence(sh);
        const auto ex = detail::exp_diagonal_excess(bonds, tp.gamma);
        CompensatedSum<double> z, n1, n2, jz;
        for (std::size_t a = 0; a < ex.size(); ++a) {
            const double photons = static_cast<double>(sh.k_prime) - static_cast<double>(a);
            const double m = -0.5 * sh.twice_j + static_cast<double>(a);
            z.add(ex[a]);
            n1.add(photons * ex[a]);
            n2.add(photons * photons * ex[a]);
            jz.add(m * ex[a]);
        }
        return std::array<double, 4>{w * z.value(), w * n1.value(), w * n2.value(), w * jz.value()};
    });
    const double scale = std::exp(d.log_ref - z0_closed(p, temp_kelvin));
    return ExactObservables{s[0] * scale, s[1] * scale, s[2] * scale, s[3] * scale,
                            uncoupled_moments(p.n, tp.theta)};
}

inline FirstOrderExpectations exact_expectations(const ExactObservables& e) {
    const double zt = 1.0 + e.excess_ratio;
    return FirstOrderExpectations{(e.base.photon_mean + e.n1_excess) / zt,
                                  (e.base.photon_second + e.n2_excess) / zt, (e.base.jz + e.jz_excess) / zt};
}

// ---------------------------------------------------------------------------
// Expectation engine

enum class InvarianceClass { K, JK, J, JKM };

class TailViolation : public std::runtime_error {
public:
    explicit TailViolation(const std::string& what) : std::runtime_error(what) {}
};

struct ExpectFunction {
    InvarianceClass cls = InvarianceClass::K;
    std::function<double(long)> f_k;
    std::function<double(int, long)> f_jk;   // (twice_j, k); also used for class J with k ignored
    std::function<double(int, long, int)> f_jkm;   // (twice_j, k, twice_m)
};

inline ExpectFunction expect_k(std::function<double(long)> f) {
    ExpectFunction e;
    e.cls = InvarianceClass::K;
    e.f_k = std::move(f);
    return e;
}

inline ExpectFunction expect_jk(std::function<double(int, long)> f) {
    ExpectFunction e;
    e.cls = InvarianceClass::JK;
    e.f_jk = std::move(f);
    return e;
}

inline ExpectFunction expect_j(std::function<double(int)> f) {
    ExpectFunction e;
    e.cls = InvarianceClass::J;
    e.f_jk = [g = std::move(f)](int tj, long) { return g(tj); };
    return e;
}

inline ExpectFunction expect_jkm(std::function<double(int, long, int)> f) {
    ExpectFunction e;
    e.cls = InvarianceClass::JKM;
    e.f_jkm = std::move(f);
    return e;
}

namespace detail {

// Geometric tail estimate beyond a boundary term b with inner neighbour a.
inline bool tail_ok(double a, double b, double budget) {
    if (b == 0.0) return true;
    if (!(a > 0.0)) return false;
    const double r = b / a;
    if (r >= 1.0) return false;
    return b * r / (1.0 - r) <= budget;
}

}  // namespace detail

// Thermal expectation of f under the first-order state, whose block weights
// are d_j e^{-theta k} (|B| + (gamma^2/2) tr L^2) and whose state weights
// inside a block are d_j e^{-theta k} (1 + (gamma^2/2) (L^2)_{alpha alpha}).
// Class K reduces each k-slice to one weight before applying f; classes J and
// JK evaluate f per block; class JKM enumerates states (n <= 256). After the
// sum, the f-weighted terms at every open edge of the domain are checked
// with the same geometric tail test the planner uses; a failure raises
// TailViolation.
inline double expect(const ExpectFunction& fn, const ModelParams& p, double temp_kelvin,
                     const EvalOptions& opt = {}) {
    if (fn.cls == InvarianceClass::JKM) detail::require_exact_size(p.n);
    const ThermalPoint tp = thermal_point(p, temp_kelvin);
    const Domain d = plan_domain(p.n, tp.theta, opt.delta, kEnvStates | kEnvSecondMoment | kEnvObservable);
    const double g2 = 0.5 * tp.gamma * tp.gamma;
    struct SliceOut {
        double weight = 0.0, value = 0.0, abs_value = 0.0;
        std::vector<double> block_abs;   // |f| W per block, for edge checks
    };
    std::vector<SliceOut> out(d.slices.size());
    for_each_slice(d, opt.threads, [&](std::size_t i) {
        const Slice& sl = d.slices[i];
        CompensatedSum<double> wsum, vsum, asum;
        SliceOut& so = out[i];
        for (int tj = sl.tj_lo; tj <= sl.tj_hi; tj += 2) {
            const BlockIndex b{p.n, tj, sl.k};
            const BlockShape s = block_shape(b);
            const double w = std::exp(log_degeneracy(p.n, tj) - tp.theta * static_cast<double>(sl.k) - d.log_ref);
            const double W = w * (static_cast<double>(s.dim()) + g2 * second_moment_closed(s));
            wsum.add(W);
            double fv = 0.0;
            if (fn.cls == InvarianceClass::JK || fn.cls == InvarianceClass::J) {
                fv = W * fn.f_jk(tj, sl.k);
            } else if (fn.cls == InvarianceClass::JKM) {
                const auto bonds = bond_sequence(s);
                CompensatedSum<double> acc;
                for (std::size_t a = 0; a <= bonds.size(); ++a) {
                    const double left = a > 0 ? bonds[a - 1] * bonds[a - 1] : 0.0;
                    const double right = a < bonds.size() ? bonds[a] * bonds[a] : 0.0;
                    acc.add((1.0 + g2 * (left + right)) * fn.f_jkm(tj, sl.k, -tj + 2 * static_cast<int>(a)));
                }
                fv = w * acc.value();
            }
            if (fn.cls != InvarianceClass::K) {
                vsum.add(fv);
                asum.add(std::abs(fv));
                so.block_abs.push_back(std::abs(fv));
            }
        }
        so.weight = wsum.value();
        if (fn.cls == InvarianceClass::K) {
            const double fk = fn.f_k(sl.k);
            so.value = so.weight * fk;
            so.abs_value = std::abs(so.value);
        } else {
            so.value = vsum.value();
            so.abs_value = asum.value();
        }
        if (!std::isfinite(so.value)) {
            throw std::domain_error("observable is not finite at k=" + std::to_string(sl.k));
        }
    });
    std::vector<double> ws(out.size()), vs(out.size()), as(out.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        ws[i] = out[i].weight;
        vs[i] = out[i].value;
        as[i] = out[i].abs_value;
    }
    const double W = pairwise_sum(ws);
    const double V = pairwise_sum(vs);
    const double A = pairwise_sum(as);
    const double budget = 0.25 * opt.delta * A;
    // Edges in k. The lower edge is closed when it reaches k = 0.
    if (out.size() >= 2) {
        if (d.slices.front().k > 0 && !detail::tail_ok(out[1].abs_value, out[0].abs_value, budget)) {
            throw TailViolation("observable tail at the lower k edge (k=" +
                                std::to_string(d.slices.front().k) + ") exceeds the truncation budget");
        }
        const std::size_t e = out.size() - 1;
        if (!detail::tail_ok(out[e - 1].abs_value, out[e].abs_value, budget)) {
            throw TailViolation("observable tail at the upper k edge (k=" + std::to_string(d.slices.back().k) +
                                ") exceeds the truncation budget");
        }
    }
    // Edges in j within each slice.
    if (fn.cls != InvarianceClass::K) {
        for (std::size_t i = 0; i < out.size(); ++i) {
            const Slice& sl = d.slices[i];
            const auto& ba = out[i].block_abs;
            if (ba.size() < 2) continue;
            const double slice_budget = 0.25 * opt.delta * std::max(out[i].abs_value, 0.0);
            if (sl.tj_hi < p.n && !detail::tail_ok(ba[ba.size() - 2], ba.back(), slice_budget)) {
                throw TailViolation("observable grows too fast in j at the window edge (twice_j=" +
                                    std::to_string(sl.tj_hi) + ", k=" + std::to_string(sl.k) + ")");
            }
            if (sl.tj_lo > j_floor_twice(p.n, sl.k) && !detail::tail_ok(ba[1], ba[0], slice_budget)) {
                throw TailViolation("observable tail at the lower j edge (twice_j=" + std::to_string(sl.tj_lo) +
                                    ", k=" + std::to_string(sl.k) + ") exceeds the truncation budget");
            }
        }
    }
    return V / W;
}

// ---------------------------------------------------------------------------
// Sweeps and fits

struct ShiftReport {
    std::string sweep_variable;
    std::vector<double> grid;
    std::vector<double> values;
    PolyFit fit;
};

inline std::vector<ShiftPoint> shift_sweep(const std::vector<int>& ns, const ModelParams& base, double temp_kelvin,
                                           TraceSource src = TraceSource::Physical, const EvalOptions& opt = {}) {
    std::vector<ShiftPoint> out;
    out.reserve(ns.size());
    for (int n : ns) {
        ModelParams p = base;
        p.n = n;
        out.push_back(shifts(p, temp_kelvin, src, opt));
    }
    return out;
}

inline ShiftReport make_report(std::string variable, const std::vector<ShiftPoint>& pts,
                               double ShiftPoint::*field, int degree, double scale = 1.0) {
    ShiftReport r;
    r.sweep_variable = std::move(variable);
    for (const auto& s : pts) {
        r.grid.push_back(static_cast<double>(s.n));
        r.values.push_back(scale * (s.*field));
    }
    r.fit = polyfit(r.grid, r.values, degree);
    return r;
}

}  // namespace tcq
