// Ordinary least-squares polynomial fits and log-log exponent fits.
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace tcq {

struct PolyFit {
    int degree = 1;
    std::vector<double> coefficients;   // ascending powers: c0 + c1 x + c2 x^2 ...
    double r_squared = 0.0;

    double operator()(double x) const {
        double y = 0.0;
        for (auto it = coefficients.rbegin(); it != coefficients.rend(); ++it) y = y * x + *it;
        return y;
    }
    double leading() const { return coefficients.empty() ? 0.0 : coefficients.back(); }
};

// Least squares on a centred and scaled abscissa for conditioning; the
// coefficients are mapped back to powers of the raw x.
inline PolyFit polyfit(const std::vector<double>& x, const std::vector<double>& y, int degree) {
    if (x.size() != y.size()) throw std::invalid_argument("fit needs equally long x and y");
    if (degree < 0 || static_cast<int>(x.size()) < degree + 1) {
        throw std::invalid_argument("fit needs at least degree+1 points");
    }
    const Eigen::Index m = static_cast<Eigen::Index>(x.size());
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(m);
    double spread = 0.0;
    for (double v : x) spread = std::max(spread, std::abs(v - mean));
    if (spread == 0.0) spread = 1.0;
    Eigen::MatrixXd A(m, degree + 1);
    Eigen::VectorXd b(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        const double u = (x[i] - mean) / spread;
        double pw = 1.0;
        for (int d = 0; d <= degree; ++d) {
            A(i, d) = pw;
            pw *= u;
        }
        b(i) = y[i];
    }
    const Eigen::VectorXd c = A.colPivHouseholderQr().solve(b);
    // Expand sum_d c_d ((x - mean)/spread)^d in powers of x.
    std::vector<double> raw(degree + 1, 0.0);
    for (int d = 0; d <= degree; ++d) {
        double binom = 1.0;
        for (int r = 0; r <= d; ++r) {
            // term: c_d * C(d,r) x^r (-mean)^{d-r} / spread^d
            raw[r] += c(d) * binom * std::pow(-mean, d - r) / std::pow(spread, d);
            binom = binom * (d - r) / (r + 1);
        }
    }
    PolyFit f;
    f.degree = degree;
    f.coefficients = raw;
    double ybar = 0.0;
    for (double v : y) ybar += v;
    ybar /= static_cast<double>(m);
    double ss_res = 0.0, ss_tot = 0.0;
    const Eigen::VectorXd fitted = A * c;
    for (Eigen::Index i = 0; i < m; ++i) {
        ss_res += (y[i] - fitted(i)) * (y[i] - fitted(i));
        ss_tot += (y[i] - ybar) * (y[i] - ybar);
    }
    f.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
    return f;
}

// Exponent p of y ~ C x^p from a linear fit of log y on log x.
inline double loglog_exponent(const std::vector<double>& x, const std::vector<double>& y) {
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0 && y[i] > 0.0)) throw std::invalid_argument("log-log fit needs positive data");
        lx.push_back(std::log(x[i]));
        ly.push_back(std::log(y[i]));
    }
    return polyfit(lx, ly, 1).coefficients[1];
}

}  // namespace tcq
