// Adaptive truncation of the (j,k) double sum and its deterministic evaluation.
//
// Thermal sums have the form sum_{j,k} d_j e^{-theta k} f(j,k). The planner
// visits k-slices outward from the most populated one, and within each slice
// visits j outward from the slice peak. A direction is closed once the
// geometric tail bound t r / (1 - r), with r the last observed term ratio,
// falls below a share of the partial sum. The bound is rigorous when terms
// along the walk are log-concave, which holds for d_j, for the block
// dimension and for tr(L^2), and is the standing assumption for the mixed
// observable envelope.
//
// The tail budget is delta/4 for each end in k and delta/4 for each end in j
// within a slice, so the relative truncation error of every planned envelope
// is at most delta.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <stdexcept>
#include <thread>
#include <vector>

#include "tcq/combinatorics.hpp"
#include "tcq/coupling.hpp"
#include "tcq/summation.hpp"

namespace tcq {

// Envelope families a domain is certified for. A sum over the domain is
// within relative delta of the full sum for any summand bounded by a
// certified envelope with a matching shape.
enum Envelope : unsigned {
    kEnvStates = 1u,          // |B|
    kEnvSecondMoment = 2u,    // tr L^2
    kEnvObservable = 4u,      // tr L^2 (1 + j + k' + k'^2)(1+k)^2 + |B| (1 + k'^2)(1+k)^2
};

inline constexpr std::array<Envelope, 3> kAllEnvelopes{kEnvStates, kEnvSecondMoment,
                                                       kEnvObservable};

inline double log_envelope(Envelope e, const BlockShape& s, long k) {
    const double dim = static_cast<double>(s.dim());
    switch (e) {
        case kEnvStates: return std::log(dim);
        case kEnvSecondMoment: {
            const double t = second_moment_closed(s);
            return t > 0.0 ? std::log(t) : -std::numeric_limits<double>::infinity();
        }
        case kEnvObservable: {
            const double kp = static_cast<double>(s.k_prime);
            const double t = second_moment_closed(s);
            const double kk = 1.0 + static_cast<double>(k);
            const double body = t * (1.0 + 0.5 * s.twice_j + kp + kp * kp) + dim * (1.0 + kp * kp);
            return std::log(body) + 2.0 * std::log(kk);
        }
    }
    return -std::numeric_limits<double>::infinity();
}

struct Slice {
    long k = 0;
    int tj_lo = 0;   // inclusive, twice_j
    int tj_hi = 0;   // inclusive, twice_j
    int tj_peak = 0;
    double log_weight_peak = 0.0;   // log d_j - theta k at tj_peak
};

struct Domain {
    int n = 0;
    double theta = 0.0;
    double delta = 0.0;
    unsigned envelopes = 0;
    std::vector<Slice> slices;   // ascending k
    double log_ref = 0.0;        // largest log d_j - theta k among slice peaks
    std::size_t blocks = 0;

    long k_min() const { return slices.empty() ? 0 : slices.front().k; }
    long k_max() const { return slices.empty() ? 0 : slices.back().k; }
    int tj_min() const {
        int m = std::numeric_limits<int>::max();
        for (const auto& s : slices) m = std::min(m, s.tj_lo);
        return m;
    }
    int tj_max() const {
        int m = 0;
        for (const auto& s : slices) m = std::max(m, s.tj_hi);
        return m;
    }
};

namespace detail {

struct SliceResult {
    Slice slice;
    std::array<double, 3> log_mass{};   // per envelope, log of the planned slice sum
};

class DomainPlanner {
public:
    DomainPlanner(int n, double theta, double delta, unsigned envelopes)
        : n_(n), theta_(theta), delta_(delta), mask_(envelopes | kEnvStates) {}

    Domain plan() {
        Domain d{n_, theta_, delta_, mask_, {}, 0.0, 0};
        const double guess = 1.0 / std::expm1(theta_) + n_ / (std::exp(theta_) + 1.0);
        long kp = std::max<long>(0, std::lround(std::isfinite(guess) ? guess : 0.0));
        int hint = j_star_twice(n_);
        // Hill-climb to the most populated slice.
        while (true) {
            const double here = slice(kp, hint).log_mass[0];
            if (slice(kp + 1, hint).log_mass[0] > here) {
                ++kp;
            } else if (kp > 0 && slice(kp - 1, hint).log_mass[0] > here) {
                --kp;
            } else {
                break;
            }
            hint = cache_.at(kp).slice.tj_peak;
        }
        std::vector<SliceResult> up{cache_.at(kp)};
        walk(up, kp, +1);
        std::vector<SliceResult> down;
        walk(down, kp, -1);
        std::reverse(down.begin(), down.end());
        for (const auto& r : down) d.slices.push_back(r.slice);
        for (const auto& r : up) d.slices.push_back(r.slice);
        d.log_ref = -std::numeric_limits<double>::infinity();
        for (const auto& s : d.slices) {
            d.log_ref = std::max(d.log_ref, s.log_weight_peak);
            d.blocks += static_cast<std::size_t>((s.tj_hi - s.tj_lo) / 2 + 1);
        }
        return d;
    }

private:
    std::array<double, 3> terms(int tj, long k) const {
        const SubspaceGeometry g = subspace_geometry(n_, tj, k);
        const BlockShape s{tj, g.k_prime};
        const double lw = log_degeneracy(n_, tj) - theta_ * static_cast<double>(k);
        std::array<double, 3> t;
        t.fill(-std::numeric_limits<double>::infinity());
        for (std::size_t e = 0; e < kAllEnvelopes.size(); ++e) {
            if (mask_ & kAllEnvelopes[e]) t[e] = lw + log_envelope(kAllEnvelopes[e], s, k);
        }
        return t;
    }

    // True when the tail beyond a term t (with predecessor p) is within
    // budget * partial for every active envelope.
    bool certified(const std::array<double, 3>& t, const std::array<double, 3>& p,
                   const std::array<LogAccumulator<double>, 3>& acc, double budget) const {
        for (std::size_t e = 0; e < kAllEnvelopes.size(); ++e) {
            if (!(mask_ & kAllEnvelopes[e])) continue;
            if (!std::isfinite(t[e]) || !std::isfinite(p[e])) return false;
            const double log_r = t[e] - p[e];
            if (log_r >= 0.0) return false;
            const double r = std::exp(log_r);
            const double log_tail = t[e] + log_r - std::log1p(-r);
            if (log_tail > std::log(budget) + acc[e].log_value()) return false;
        }
        return true;
    }

    const SliceResult& slice(long k, int hint) {
        auto it = cache_.find(k);
        if (it != cache_.end()) return it->second;
        return cache_.emplace(k, plan_slice(k, hint)).first->second;
    }

    SliceResult plan_slice(long k, int hint) const {
        const int lo_lim = j_floor_twice(n_, k);
        const int hi_lim = n_;
        int tj = std::clamp(hint, lo_lim, hi_lim);
        if ((tj - lo_lim) % 2 != 0) --tj;
        if (tj < lo_lim) tj = lo_lim;
        auto score = [&](int x) { return terms(x, k)[0]; };
        double here = score(tj);
        while (true) {
            if (tj + 2 <= hi_lim && score(tj + 2) > here) {
                tj += 2;
            } else if (tj - 2 >= lo_lim && score(tj - 2) > here) {
                tj -= 2;
            } else {
                break;
            }
            here = score(tj);
        }
        std::array<LogAccumulator<double>, 3> acc;
        const auto peak_terms = terms(tj, k);
        for (std::size_t e = 0; e < 3; ++e) acc[e].add_log(peak_terms[e]);
        const double budget = 0.25 * delta_;
        int hi = tj;
        auto prev = peak_terms;
        while (hi + 2 <= hi_lim) {
            const auto t = terms(hi + 2, k);
            for (std::size_t e = 0; e < 3; ++e) acc[e].add_log(t[e]);
            hi += 2;
            if (certified(t, prev, acc, budget)) break;
            prev = t;
        }
        int lo = tj;
        prev = peak_terms;
        while (lo - 2 >= lo_lim) {
            const auto t = terms(lo - 2, k);
            for (std::size_t e = 0; e < 3; ++e) acc[e].add_log(t[e]);
            lo -= 2;
            if (certified(t, prev, acc, budget)) break;
            prev = t;
        }
        SliceResult r;
        r.slice = Slice{k, lo, hi, tj, log_degeneracy(n_, tj) - theta_ * static_cast<double>(k)};
        for (std::size_t e = 0; e < 3; ++e) r.log_mass[e] = acc[e].log_value();
        return r;
    }

    void walk(std::vector<SliceResult>& out, long k_peak, int dir) {
        std::array<LogAccumulator<double>, 3> acc;
        const SliceResult& peak = cache_.at(k_peak);
        for (std::size_t e = 0; e < 3; ++e) acc[e].add_log(peak.log_mass[e]);
        // The opposite walk has not run yet; seeding with the peak keeps the
        // budget relative to a quantity both walks share.
        auto prev = peak.log_mass;
        int hint = peak.slice.tj_peak;
        const double budget = 0.25 * delta_;
        for (long k = k_peak + dir; k >= 0; k += dir) {
            const SliceResult r = slice(k, hint);
            out.push_back(r);
            for (std::size_t e = 0; e < 3; ++e) acc[e].add_log(r.log_mass[e]);
            if (certified(r.log_mass, prev, acc, budget)) break;
            prev = r.log_mass;
            hint = r.slice.tj_peak;
        }
    }

    int n_;
    double theta_;
    double delta_;
    unsigned mask_;
    std::map<long, SliceResult> cache_;
};

}  // namespace detail

inline Domain plan_domain(int n, double theta, double delta, unsigned envelopes) {
    if (n < 1) throw std::domain_error("ensemble size must be at least 1");
    if (!(theta > 0.0) || !std::isfinite(theta)) throw std::domain_error("theta must be positive");
    if (!(delta > 0.0 && delta < 1.0)) throw std::domain_error("delta must lie in (0,1)");
    return detail::DomainPlanner(n, theta, delta, envelopes).plan();
}

// Runs body(slice_index) for every slice, distributing slices round-robin
// over the requested number of threads. Callers write results into
// per-slice storage, so the outcome does not depend on scheduling.
template <class Body>
void for_each_slice(const Domain& d, int threads, Body&& body) {
    const std::size_t count = d.slices.size();
    const std::size_t workers = std::clamp<std::size_t>(threads < 1 ? 1 : threads, 1, std::max<std::size_t>(count, 1));
    if (workers == 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (std::size_t i = w; i < count; i += workers) body(i);
        });
    }
    for (auto& t : pool) t.join();
}

// Sums f(block, w) over the domain, where w = d_j e^{-theta k} / e^{log_ref}.
// Each slice is accumulated with compensated summation and slice totals are
// combined by a fixed pairwise tree, so the result is bit-identical for any
// thread count.
template <std::size_t M, class F>
std::array<double, M> evaluate(const Domain& d, int threads, F&& f) {
    std::vector<std::array<double, M>> per_slice(d.slices.size());
    for_each_slice(d, threads, [&](std::size_t i) {
        const Slice& s = d.slices[i];
        std::array<CompensatedSum<double>, M> acc;
        for (int tj = s.tj_lo; tj <= s.tj_hi; tj += 2) {
            const double w = std::exp(log_degeneracy(d.n, tj) - d.theta * static_cast<double>(s.k) -
                                      d.log_ref);
            const std::array<double, M> v = f(BlockIndex{d.n, tj, s.k}, w);
            for (std::size_t m = 0; m < M; ++m) acc[m].add(v[m]);
        }
        for (std::size_t m = 0; m < M; ++m) per_slice[i][m] = acc[m].value();
    });
    std::array<double, M> out{};
    std::vector<double> column(d.slices.size());
    for (std::size_t m = 0; m < M; ++m) {
        for (std::size_t i = 0; i < d.slices.size(); ++i) column[i] = per_slice[i][m];
        out[m] = pairwise_sum(column);
    }
    return out;
}

}  // namespace tcq
