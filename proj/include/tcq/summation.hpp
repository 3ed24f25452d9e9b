// Compensated and log-domain accumulation with a fixed reduction order.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

namespace tcq {

// Neumaier's variant of Kahan summation: also compensates when the
// incoming term is larger in magnitude than the running sum.
template <typename Real = double>
class CompensatedSum {
public:
    CompensatedSum() = default;
    explicit CompensatedSum(Real init) : sum_(init) {}

    void add(Real x) {
        const Real t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x)) {
            comp_ += (sum_ - t) + x;
        } else {
            comp_ += (x - t) + sum_;
        }
        sum_ = t;
    }

    CompensatedSum& operator+=(Real x) {
        add(x);
        return *this;
    }

    [[nodiscard]] Real value() const { return sum_ + comp_; }

private:
    Real sum_ = 0;
    Real comp_ = 0;
};

// Sums a range with a balanced binary tree whose shape depends only on the
// length, so the rounding pattern is reproducible across runs and threads.
template <typename Real>
Real pairwise_sum(std::span<const Real> xs) {
    if (xs.empty()) return Real(0);
    if (xs.size() <= 8) {
        CompensatedSum<Real> acc;
        for (Real x : xs) acc.add(x);
        return acc.value();
    }
    const std::size_t half = xs.size() / 2;
    return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

template <typename Real>
Real pairwise_sum(const std::vector<Real>& xs) {
    return pairwise_sum(std::span<const Real>(xs.data(), xs.size()));
}

// log(sum(exp(x_i))) with the usual max shift; -inf for an empty range.
template <typename Real>
Real log_sum_exp(std::span<const Real> xs) {
    if (xs.empty()) return -std::numeric_limits<Real>::infinity();
    const Real m = *std::max_element(xs.begin(), xs.end());
    if (!std::isfinite(m)) return m;
    CompensatedSum<Real> acc;
    for (Real x : xs) acc.add(std::exp(x - m));
    return m + std::log(acc.value());
}

template <typename Real>
Real log_sum_exp(const std::vector<Real>& xs) {
    return log_sum_exp(std::span<const Real>(xs.data(), xs.size()));
}

// log(exp(a) + exp(b)) without overflow.
template <typename Real>
Real log_add_exp(Real a, Real b) {
    if (a < b) std::swap(a, b);
    if (!std::isfinite(b)) return a;
    return a + std::log1p(std::exp(b - a));
}

// Streaming accumulator for positive terms given by their logarithms. The
// running scale only ever increases, and the compensated partial sum is
// rescaled when it does.
template <typename Real = double>
class LogAccumulator {
public:
    void add_log(Real log_term) {
        if (!std::isfinite(log_term)) return;
        if (empty_) {
            scale_ = log_term;
            acc_ = CompensatedSum<Real>(Real(1));
            empty_ = false;
            return;
        }
        if (log_term > scale_) {
            const Real shrink = std::exp(scale_ - log_term);
            acc_ = CompensatedSum<Real>(acc_.value() * shrink);
            scale_ = log_term;
            acc_.add(Real(1));
        } else {
            acc_.add(std::exp(log_term - scale_));
        }
    }

    [[nodiscard]] bool empty() const { return empty_; }

    [[nodiscard]] Real log_value() const {
        if (empty_) return -std::numeric_limits<Real>::infinity();
        return scale_ + std::log(acc_.value());
    }

private:
    bool empty_ = true;
    Real scale_ = 0;
    CompensatedSum<Real> acc_;
};

}  // namespace tcq
