#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "tcq/thermo.hpp"

namespace {

using tcq::ModelParams;

constexpr double kOmega0 = tcq::kReferencePreset.omega0;
constexpr double kG0 = tcq::kReferencePreset.g0;

double temp_for_theta(double theta, double omega0 = kOmega0) {
    return tcq::kHbar * omega0 / (tcq::kBoltzmann * theta);
}

// Enumerated sums at the reference coupling; k_max is far past any weight
// that matters at the temperatures used here.
oracle::EnumeratedSums enumerate(const ModelParams& p, double temp, long k_max = 140) {
    const auto tp = tcq::thermal_point(p, temp);
    return oracle::enumerate(p.n, tp.theta, tp.gamma, k_max);
}

TEST(Z0Closed, Examples) {
    const double t = temp_for_theta(std::log(2.0));
    EXPECT_NEAR(tcq::z0_closed(ModelParams{1, kOmega0, 0.0}, t), std::log(3.0), 1e-14);
    const double theta = 0.7;
    EXPECT_NEAR(tcq::z0_closed(ModelParams{0, kOmega0, 0.0}, temp_for_theta(theta)),
                -std::log(1 - std::exp(-theta)), 1e-14);
}

TEST(Z0Closed, SplitTemperatures) {
    const ModelParams p{3, kOmega0, 0.0};
    const double tc = temp_for_theta(1.0), ts = temp_for_theta(2.0);
    const double expected = -std::log(1 - std::exp(-1.0)) + 3 * std::log(1 + std::exp(-2.0));
    EXPECT_NEAR(tcq::z0_closed(p, tc, ts), expected, 1e-13);
}

TEST(Z0Closed, MatchesEnumeration) {
    for (int n : {1, 4, 9, 20}) {
        for (double temp : {0.2, 0.5, 1.0}) {
            const ModelParams p{n, kOmega0, 0.0};
            const auto e = enumerate(p, temp, 200);
            EXPECT_NEAR(tcq::z0_closed(p, temp), std::log(static_cast<double>(e.z0)), 1e-12);
        }
    }
}

TEST(Z0Closed, RejectsNonPositiveTemperature) {
    EXPECT_THROW(tcq::z0_closed(ModelParams{4, kOmega0, kG0}, 0.0), std::domain_error);
    EXPECT_THROW(tcq::z0_closed(ModelParams{4, kOmega0, kG0}, -1.0), std::domain_error);
}

TEST(Z0Sum, Examples) {
    const ModelParams p2{2, kOmega0, 0.0};
    const double t1 = temp_for_theta(1.0);
    EXPECT_NEAR(tcq::z0_sum(p2, t1, {1e-10, 1}).log_value, tcq::z0_closed(p2, t1), 1e-9);
    const ModelParams p1{1, kOmega0, 0.0};
    EXPECT_NEAR(tcq::z0_sum(p1, temp_for_theta(std::log(2.0)), {1e-12, 1}).log_value, std::log(3.0), 1e-12);
}

TEST(Z0Sum, WithinDeltaOfClosedForm) {
    for (int n : {1, 2, 8, 40, 100, 1000, 5000}) {
        for (double temp : {0.01, 0.1, 0.3, 0.5, 1.0}) {
            for (double delta : {1e-6, 1e-9, 1e-12}) {
                const auto p = tcq::reference_params(n);
                const double gap = std::expm1(tcq::z0_sum(p, temp, {delta, 1}).log_value - tcq::z0_closed(p, temp));
                EXPECT_LE(std::abs(gap), delta) << "n=" << n << " T=" << temp << " delta=" << delta;
            }
        }
    }
}

TEST(ZPert, ZeroCoupling) {
    const auto pd = tcq::z_pert(ModelParams{50, kOmega0, 0.0}, 0.3);
    EXPECT_EQ(pd.ratio, 0.0);
    EXPECT_TRUE(std::isinf(pd.log_zpert) && pd.log_zpert < 0);
    EXPECT_EQ(pd.error_bound, 0.0);
}

TEST(ZPert, RatioMatchesEnumeration) {
    for (int n : {4, 8, 16, 40}) {
        for (double temp : {0.2, 0.3, 0.5}) {
            const auto p = tcq::reference_params(n);
            const auto e = enumerate(p, temp);
            const auto pd = tcq::z_pert(p, temp);
            const double ref = static_cast<double>(e.first / e.z0);
            EXPECT_NEAR(pd.ratio / ref, 1.0, 1e-9) << "n=" << n << " T=" << temp;
            EXPECT_NEAR(pd.log_zpert - pd.log_z0, std::log(pd.ratio), 1e-12);
        }
    }
}

TEST(ZPert, QuadraticInCoupling) {
    for (int n : {10, 100, 1000}) {
        const auto a = tcq::z_pert(ModelParams{n, kOmega0, kG0}, 0.3);
        const auto b = tcq::z_pert(ModelParams{n, kOmega0, 2 * kG0}, 0.3);
        EXPECT_NEAR(b.ratio / a.ratio, 4.0, 4e-12);
        EXPECT_GE(b.ratio, a.ratio);
    }
}

TEST(ZPert, GateViolationNamesTheBlock) {
    // A coupling comparable to the temperature breaks the expansion.
    const ModelParams p{20, kOmega0, 1e13};
    try {
        tcq::z_pert(p, 0.3);
        FAIL() << "expected ExpansionInvalid";
    } catch (const tcq::ExpansionInvalid& e) {
        EXPECT_GE(e.gate_value(), 1.0);
        EXPECT_TRUE(tcq::valid_twice_j(20, e.twice_j()));
        const auto tp = tcq::thermal_point(p, 0.3);
        EXPECT_NEAR(tcq::expansion_gate_value(tp.gamma, tcq::block_shape(tcq::BlockIndex{20, e.twice_j(), e.k()})),
                    e.gate_value(), 1e-12 * e.gate_value());
        EXPECT_NE(std::string(e.what()).find("twice_j="), std::string::npos);
    }
}

TEST(ZPert, ErrorBoundDominatesTrueResidual) {
    // Oracle sandwich against fully enumerated dense spectra.
    for (int n : {4, 8, 16, 32, 40}) {
        for (double temp : {0.2, 0.3, 0.5}) {
            const auto p = tcq::reference_params(n);
            const auto e = enumerate(p, temp);
            const auto pd = tcq::z_pert(p, temp);
            const double residual = static_cast<double>(std::abs(e.excess - e.first) / e.z0);
            EXPECT_LE(residual, pd.error_bound) << "n=" << n << " T=" << temp;
            EXPECT_LE(pd.error_bound, 1e-6 * pd.ratio) << "n=" << n << " T=" << temp;
        }
    }
    // theta = 1, n = 4
    const ModelParams p{4, kOmega0, kG0};
    const double t = temp_for_theta(1.0);
    const auto e = enumerate(p, t, 200);
    const auto pd = tcq::z_pert(p, t);
    EXPECT_LE(static_cast<double>(std::abs(e.excess - e.first) / e.z0), pd.error_bound);
}

TEST(ZPert, DroppedOrderBoundsTheFourthOrderTerm) {
    for (int n : {8, 40}) {
        const auto p = tcq::reference_params(n);
        const auto pd = tcq::z_pert(p, 0.3);
        const auto e = enumerate(p, 0.3);
        const double fourth = std::exp(tcq::z_pert_fourth_order(p, 0.3).log_value);
        EXPECT_LE(fourth, pd.budget.dropped_order);
        EXPECT_NEAR(fourth / static_cast<double>(e.beyond / e.z0), 1.0, 1e-6);
    }
}

TEST(ZExact, OracleEnumerationForFourSpins) {
    // k <= 1 by hand: 1 + e^{-theta} 2 cosh(2 gamma) + 3 e^{-theta}
    const double theta = 1.0, gamma = 0.01;
    const auto e = oracle::enumerate(4, theta, gamma, 1);
    const double hand = 1 + std::exp(-theta) * 2 * std::cosh(2 * gamma) + 3 * std::exp(-theta);
    EXPECT_NEAR(static_cast<double>(e.total), hand, 1e-14);
}

TEST(ZExact, MatchesEnumeration) {
    for (int n : {4, 8, 16, 40}) {
        for (double temp : {0.2, 0.3, 0.5}) {
            const auto p = tcq::reference_params(n);
            const auto e = enumerate(p, temp);
            const auto z = tcq::z_exact(p, temp);
            EXPECT_NEAR(z.excess_ratio / static_cast<double>(e.excess / e.z0), 1.0, 1e-8);
            EXPECT_NEAR(z.log_z, std::log(static_cast<double>(e.total)), 1e-12);
        }
    }
}

TEST(ZExact, ZeroCouplingEqualsClosedForm) {
    const ModelParams p{30, kOmega0, 0.0};
    const auto z = tcq::z_exact(p, 0.3);
    EXPECT_NEAR(z.log_z, tcq::z0_closed(p, 0.3), 1e-10 * std::abs(z.log_z));
    EXPECT_EQ(z.excess_ratio, 0.0);
}

TEST(ZExact, RefusesLargeEnsembles) {
    try {
        tcq::z_exact(tcq::reference_params(257), 0.3);
        FAIL() << "expected refusal";
    } catch (const std::domain_error& e) {
        EXPECT_NE(std::string(e.what()).find("z_pert"), std::string::npos);
    }
    EXPECT_NO_THROW(tcq::z_exact(tcq::reference_params(256), 0.3));
}

TEST(OracleCompare, SandwichOnAcceptanceGrid) {
    for (int n : {8, 16, 32, 40}) {
        for (double temp : {0.2, 0.3, 0.5}) {
            const auto o = tcq::oracle_compare(tcq::reference_params(n), temp);
            EXPECT_LE(o.residual, o.error_bound);
            EXPECT_LE(o.error_bound, 1e-6 * o.ratio_pert);
            EXPECT_NEAR(o.ratio_exact / o.ratio_pert, 1.0, 1e-6);
        }
    }
}

TEST(MeanExcitations, Examples) {
    const double theta = 0.9;
    EXPECT_NEAR(tcq::mean_excitations(tcq::WeightFamily::Z0, ModelParams{0, kOmega0, 0.0}, temp_for_theta(theta)),
                1.0 / std::expm1(theta), 1e-14);
    EXPECT_NEAR(tcq::mean_excitations(tcq::WeightFamily::Z0, ModelParams{1, kOmega0, 0.0},
                                      temp_for_theta(std::log(2.0))),
                4.0 / 3.0, 1e-14);
    const ModelParams p{12, kOmega0, 0.0};
    EXPECT_NEAR(tcq::mean_excitations(tcq::WeightFamily::Exact, p, 0.3),
                tcq::mean_excitations(tcq::WeightFamily::Z0, p, 0.3), 1e-10);
}

TEST(MeanExcitations, MatchEnumeration) {
    for (int n : {8, 40}) {
        const auto p = tcq::reference_params(n);
        const auto e = enumerate(p, 0.3);
        EXPECT_NEAR(tcq::mean_excitations(tcq::WeightFamily::Z0, p, 0.3), static_cast<double>(e.k_z0 / e.z0), 1e-10);
        EXPECT_NEAR(tcq::mean_excitations(tcq::WeightFamily::ZPert, p, 0.3, {1e-13, 1}),
                    static_cast<double>(e.k_first / e.first), 1e-10);
    }
}

TEST(DeltaHelmholtz, Identities) {
    EXPECT_EQ(tcq::delta_helmholtz(ModelParams{20, kOmega0, 0.0}, 0.3).dimensionless, 0.0);
    const auto p = tcq::reference_params(100);
    const auto a = tcq::delta_helmholtz(p, 0.3);
    EXPECT_EQ(a.dimensionless, tcq::z_pert(p, 0.3).ratio);
    EXPECT_NEAR(a.joules, -tcq::kBoltzmann * 0.3 * a.dimensionless, 1e-12 * std::abs(a.joules));
}

TEST(DeltaHelmholtz, ExactCrossCheck) {
    const auto p = tcq::reference_params(40);
    const auto pd = tcq::z_pert(p, 0.3);
    const auto z = tcq::z_exact(p, 0.3);
    const double exact_shift = std::log1p(z.excess_ratio);
    EXPECT_LE(std::abs(exact_shift - pd.ratio), 0.5 * pd.ratio * pd.ratio + pd.error_bound + 1e-9 * pd.ratio);
}

TEST(DeltaEnergy, ZeroCoupling) {
    EXPECT_EQ(tcq::delta_energy(ModelParams{20, kOmega0, 0.0}, 0.3).joules, 0.0);
}

// <E>_exact - <E>_0 = -d/dbeta log(Z_exact / Z0) = kB T^2 d/dT log(Z_exact / Z0),
// by central differences on the enumerated sums.
double energy_shift_finite_difference(const ModelParams& p, double temp) {
    const double h = 1e-4 * temp;
    auto f = [&](double t) {
        const auto e = enumerate(p, t);
        return static_cast<double>(std::log1p(static_cast<long double>(e.excess / e.z0)));
    };
    return tcq::kBoltzmann * temp * temp * (f(temp + h) - f(temp - h)) / (2 * h);
}

TEST(DeltaEnergy, FiniteDifferenceOracle) {
    for (int n : {8, 40}) {
        for (double temp : {0.2, 0.3, 0.5}) {
            const auto p = tcq::reference_params(n);
            const double fd = energy_shift_finite_difference(p, temp);
            const double de = tcq::delta_energy(p, temp).joules;
            EXPECT_NEAR(de / fd, 1.0, 1e-5) << "n=" << n << " T=" << temp;
        }
    }
}

TEST(DeltaEnergy, NegativeOnAcceptanceGrid) {
    for (int n : {8, 16, 32, 40, 100, 400, 1000}) {
        for (double temp : {0.2, 0.3, 0.5}) {
            const auto e = tcq::delta_energy(tcq::reference_params(n), temp);
            EXPECT_LE(e.joules, 0.0) << "n=" << n << " T=" << temp << " <k>_pert=" << e.mean_k_pert
                                     << " <k>_0=" << e.mean_k_z0;
        }
    }
}

TEST(Distribution, NormalizationMatchesPartitionFunctions) {
    const auto p = tcq::reference_params(40);
    const auto pd = tcq::z_pert(p, 0.3);
    const auto first = tcq::distribution(p, 0.3, tcq::DistributionAxis::JK);
    EXPECT_NEAR(first.log_z, pd.log_z0 + std::log1p(pd.ratio), 2e-9);
    std::vector<double> logs;
    for (const auto& e : first.entries) logs.push_back(e.log_weight);
    EXPECT_NEAR(tcq::log_sum_exp(logs), first.log_z, 1e-10);

    const auto z = tcq::z_exact(p, 0.3);
    const auto exact_jk = tcq::distribution(p, 0.3, tcq::DistributionAxis::JK, tcq::DistributionOrder::Exact);
    const auto exact_km = tcq::distribution(p, 0.3, tcq::DistributionAxis::KM, tcq::DistributionOrder::Exact);
    const auto first_km = tcq::distribution(p, 0.3, tcq::DistributionAxis::KM);
    EXPECT_NEAR(exact_jk.log_z, z.log_z, 1e-9);
    EXPECT_NEAR(exact_km.log_z, z.log_z, 1e-9);
    EXPECT_NEAR(first_km.log_z, first.log_z, 1e-12);
}

TEST(Distribution, KmMarginalsMatchEnumeration) {
    // Per-(k, m) weights at g0 = 0: the number of n-qubit states with
    // magnetization m, times e^{-theta k}, whenever k - (m + n/2) >= 0 photons remain.
    const int n = 6;
    const ModelParams p{n, kOmega0, 0.0};
    const auto d = tcq::distribution(p, 0.3, tcq::DistributionAxis::KM);
    const double theta = tcq::thermal_point(p, 0.3).theta;
    for (const auto& e : d.entries) {
        const int ups = (e.twice_m + n) / 2;
        ASSERT_LE(ups, e.k);
        const double expected = std::log(static_cast<double>(oracle::binom_u128(n, ups))) - theta * e.k;
        EXPECT_NEAR(e.log_weight, expected, 1e-12);
    }
}

TEST(Distribution, ZeroCouplingUsesUncoupledWeights) {
    const ModelParams p{30, kOmega0, 0.0};
    const double theta = tcq::thermal_point(p, 0.3).theta;
    for (auto order : {tcq::DistributionOrder::FirstOrder, tcq::DistributionOrder::Exact}) {
        const auto d = tcq::distribution(p, 0.3, tcq::DistributionAxis::JK, order);
        for (const auto& e : d.entries) {
            const double expected = tcq::log_degeneracy(30, e.twice_j) +
                                    std::log(static_cast<double>(tcq::subspace_geometry(30, e.twice_j, e.k).dim_B)) -
                                    theta * e.k;
            EXPECT_NEAR(e.log_weight, expected, 1e-12);
        }
    }
}

TEST(Distribution, DickeGroundStateAtLowTemperature) {
    const auto d = tcq::distribution(tcq::reference_params(100), 0.01, tcq::DistributionAxis::JK);
    const double m = tcq::mass_fraction(d, [](const tcq::DistributionEntry& e) { return e.twice_j == 100 && e.k == 0; });
    EXPECT_GE(m, 0.99);
}

TEST(Determinism, ThreadCountDoesNotChangeResults) {
    const auto p = tcq::reference_params(2000);
    const auto a = tcq::z_pert(p, 0.3, {1e-9, 1});
    const auto b = tcq::z_pert(p, 0.3, {1e-9, 4});
    const auto c = tcq::z_pert(p, 0.3, {1e-9, 7});
    EXPECT_EQ(a.ratio, b.ratio);
    EXPECT_EQ(a.ratio, c.ratio);
    EXPECT_EQ(a.error_bound, b.error_bound);
    EXPECT_EQ(a.log_z0, c.log_z0);
    const auto e1 = tcq::z_exact(tcq::reference_params(60), 0.3, {1e-9, 1});
    const auto e2 = tcq::z_exact(tcq::reference_params(60), 0.3, {1e-9, 3});
    EXPECT_EQ(e1.excess_ratio, e2.excess_ratio);
    EXPECT_EQ(tcq::z_pert(p, 0.3).ratio, tcq::z_pert(p, 0.3).ratio);
}

TEST(Truncation, ReportsDomain) {
    const auto pd = tcq::z_pert(tcq::reference_params(100), 0.3);
    EXPECT_EQ(pd.truncation.order, 1);
    EXPECT_LE(pd.truncation.k_min, pd.truncation.k_max);
    EXPECT_LE(pd.truncation.j_lo, pd.truncation.j_hi);
    EXPECT_GT(pd.truncation.blocks, 0u);
    EXPECT_LT(pd.max_gate, 1.0);
}

}  // namespace
