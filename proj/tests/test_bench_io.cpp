#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <sstream>

#include "tcq/bench.hpp"
#include "tcq/fit.hpp"
#include "tcq/io.hpp"

namespace {

TEST(Fit, RecoversExactPolynomials) {
    std::vector<double> x, y;
    for (int n = 100; n <= 1000; n += 100) {
        x.push_back(n);
        y.push_back(-2.6e-7 * n * n + 2.82e-6 * n - 8.6e-5);
    }
    const auto f = tcq::polyfit(x, y, 2);
    EXPECT_NEAR(f.coefficients[2] / -2.6e-7, 1.0, 1e-9);
    EXPECT_NEAR(f.coefficients[1] / 2.82e-6, 1.0, 1e-7);
    EXPECT_NEAR(f.coefficients[0] / -8.6e-5, 1.0, 1e-6);
    EXPECT_NEAR(f.r_squared, 1.0, 1e-12);
    EXPECT_DOUBLE_EQ(f.leading(), f.coefficients[2]);
    EXPECT_THROW(tcq::polyfit({1.0, 2.0}, {1.0, 2.0}, 2), std::invalid_argument);
}

TEST(Fit, LogLogExponent) {
    std::vector<double> x{400, 1600, 6400}, y;
    for (double v : x) y.push_back(3.0 * std::pow(v, 1.5));
    EXPECT_NEAR(tcq::loglog_exponent(x, y), 1.5, 1e-12);
    EXPECT_THROW(tcq::loglog_exponent({1.0, 2.0}, {1.0, -2.0}), std::invalid_argument);
}

TEST(Bench, TargetNames) {
    for (auto t : {tcq::BenchTarget::ZPertFirstOrder, tcq::BenchTarget::ZPertHigher, tcq::BenchTarget::ZExact}) {
        EXPECT_EQ(tcq::bench_target_from_string(tcq::to_string(t)), t);
    }
    EXPECT_THROW(tcq::bench_target_from_string("fastest"), std::invalid_argument);
}

TEST(Bench, RefusesInvalidRequests) {
    const auto base = tcq::reference_params(1);
    EXPECT_THROW(tcq::run_scaling(tcq::BenchTarget::ZExact, {64, 512}, base, 0.3, 3), std::invalid_argument);
    EXPECT_THROW(tcq::run_scaling(tcq::BenchTarget::ZPertFirstOrder, {400, 100}, base, 0.3, 3), std::invalid_argument);
    EXPECT_THROW(tcq::run_scaling(tcq::BenchTarget::ZPertFirstOrder, {100}, base, 0.3, 2), std::invalid_argument);
    try {
        tcq::run_scaling(tcq::BenchTarget::ZExact, {300}, base, 0.3, 3);
    } catch (const std::invalid_argument& e) {
        EXPECT_NE(std::string(e.what()).find("[1, 256]"), std::string::npos);
    }
}

TEST(Bench, ValuesAreStableAcrossRepetitionsAndThreads) {
    const auto base = tcq::reference_params(1);
    const auto a = tcq::run_scaling(tcq::BenchTarget::ZPertFirstOrder, {100, 400}, base, 0.3, 3, {1e-9, 1});
    const auto b = tcq::run_scaling(tcq::BenchTarget::ZPertFirstOrder, {100, 400}, base, 0.3, 3, {1e-9, 4});
    EXPECT_TRUE(a.values_stable);
    ASSERT_EQ(a.values.size(), 2u);
    EXPECT_EQ(a.values, b.values);
    for (double t : a.wall_times) EXPECT_GT(t, 0.0);
    // the parallel path gives the same numbers as the timing path
    auto p = base;
    p.n = 400;
    EXPECT_EQ(tcq::z_pert(p, 0.3, {1e-9, 4}).ratio, a.values[1]);
}

TEST(Bench, ExactPathRuns) {
    const auto r = tcq::run_scaling(tcq::BenchTarget::ZExact, {16, 32}, tcq::reference_params(1), 0.3, 3);
    EXPECT_TRUE(r.values_stable);
    EXPECT_GT(r.values[1], r.values[0]);
}

TEST(RunConfig, JsonRoundTrip) {
    tcq::RunConfig c;
    c.n = 321;
    c.omega0_rad_per_s = 1.25e10;
    c.g0_rad_per_s = 17.5;
    c.temp_kelvin = 0.125;
    c.delta = 1e-7;
    c.threads = 3;
    c.output_path = "out.csv";
    c.output_format = tcq::OutputFormat::Json;
    EXPECT_EQ(tcq::parse_run_config(tcq::emit_run_config(c)), c);
    EXPECT_EQ(tcq::parse_run_config(tcq::emit_run_config(tcq::RunConfig{})), tcq::RunConfig{});
}

TEST(RunConfig, PartialJsonKeepsDefaults) {
    const auto c = tcq::parse_run_config(R"({"n": 50})");
    EXPECT_EQ(c.n, 50);
    EXPECT_EQ(c.temp_kelvin, tcq::RunConfig{}.temp_kelvin);
}

TEST(RunConfig, Validation) {
    EXPECT_THROW(tcq::parse_run_config(R"({"n": 0})"), std::invalid_argument);
    EXPECT_THROW(tcq::parse_run_config(R"({"temp_kelvin": -1})"), std::invalid_argument);
    EXPECT_THROW(tcq::parse_run_config(R"({"omega0_rad_per_s": 0})"), std::invalid_argument);
    EXPECT_THROW(tcq::parse_run_config(R"({"delta": 0.01})"), std::invalid_argument);
    EXPECT_THROW(tcq::parse_run_config(R"({"delta": 0})"), std::invalid_argument);
    EXPECT_THROW(tcq::parse_run_config(R"({"threads": 0})"), std::invalid_argument);
    EXPECT_THROW(tcq::parse_run_config(R"({"output_format": "xml"})"), std::invalid_argument);
    EXPECT_NO_THROW(tcq::parse_run_config(R"({"delta": 0.001})"));
}

TEST(RunConfig, ThreadsFromEnvironment) {
    setenv("TCQ_THREADS", "5", 1);
    EXPECT_EQ(tcq::default_threads(), 5);
    setenv("TCQ_THREADS", "zero", 1);
    EXPECT_EQ(tcq::default_threads(), 1);
    unsetenv("TCQ_THREADS");
    EXPECT_EQ(tcq::default_threads(), 1);
}

std::vector<std::string> lines(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

TEST(CsvSchema, GoldenHeaders) {
    EXPECT_STREQ(tcq::kDistributionJkCsv.header, "twice_j,k,log_weight");
    EXPECT_STREQ(tcq::kShiftsCsv.header, "n,fractional_mean_shift,fractional_variance_shift");
    EXPECT_STREQ(tcq::kBenchCsv.header, "target,n,median_seconds");
    EXPECT_STREQ(tcq::kDistributionKmCsv.header, "k,twice_m,log_weight");
    EXPECT_STREQ(tcq::kJzShiftCsv.header, "n,jz_shift_rad_per_s");
    EXPECT_STREQ(tcq::kDrivenCsv.header, "n,rabi_rad_per_s,t_seconds,signal");
    EXPECT_STREQ(tcq::kPartitionCsv.header,
                 "n,temp_kelvin,log_z0,log_zpert,ratio,error_bound,delta_a_joules,delta_e_joules");
    EXPECT_STREQ(tcq::kRegimeCsv.header,
                 "n,temp_kelvin,t_cutoff_kelvin,n_critical,dicke_population_estimate,dicke_population_exact,"
                 "crossover_limit_kelvin");
}

TEST(CsvSchema, DistributionWriter) {
    tcq::ThermalDistribution d;
    d.axis = tcq::DistributionAxis::JK;
    d.entries.push_back({3, 10, 0, -1.5});
    std::ostringstream os;
    tcq::write_distribution_csv(os, d);
    const auto l = lines(os.str());
    ASSERT_EQ(l.size(), 3u);
    EXPECT_EQ(l[0], "# tcq-csv v1 distribution-jk");
    EXPECT_EQ(l[1], "twice_j,k,log_weight");
    EXPECT_EQ(l[2], "10,3,-1.5");
}

TEST(CsvSchema, ShiftsAndBenchWriters) {
    tcq::ShiftPoint p;
    p.n = 100;
    p.fractional_mean_shift = 0.25;
    p.fractional_variance_shift = -0.5;
    p.jz_shift = 2.0;
    std::ostringstream os;
    tcq::write_shifts_csv(os, {p});
    auto l = lines(os.str());
    ASSERT_EQ(l.size(), 3u);
    EXPECT_EQ(l[0], "# tcq-csv v1 shifts");
    EXPECT_EQ(l[2], "100,0.25,-0.5");

    std::ostringstream js;
    tcq::write_jz_shift_csv(js, {p}, 3.0);
    l = lines(js.str());
    EXPECT_EQ(l[2], "100,6");

    tcq::ScalingRun run;
    run.target = tcq::BenchTarget::ZPertHigher;
    run.n_grid = {400};
    run.wall_times = {0.125};
    std::ostringstream bs;
    tcq::write_bench_csv(bs, run);
    l = lines(bs.str());
    ASSERT_EQ(l.size(), 3u);
    EXPECT_EQ(l[1], "target,n,median_seconds");
    EXPECT_EQ(l[2], "zpert_higher,400,0.125");
    const auto j = tcq::to_json(run);
    EXPECT_EQ(j.at("target"), "zpert_higher");
    EXPECT_TRUE(j.contains("fitted_exponent"));
}

TEST(CsvSchema, FormatRealRoundTrips) {
    for (double v : {1.0 / 3.0, 5.387961e-15, -2.6e-7, 6.96e20}) {
        EXPECT_EQ(std::stod(tcq::format_real(v)), v);
    }
}

TEST(IntRange, Parsing) {
    EXPECT_EQ(tcq::parse_int_range("100:1000:100").size(), 10u);
    EXPECT_EQ(tcq::parse_int_range("100:1000:100").back(), 1000);
    EXPECT_EQ(tcq::parse_int_range("7"), std::vector<int>{7});
    EXPECT_EQ(tcq::parse_int_range("5:12:4"), (std::vector<int>{5, 9}));
    EXPECT_THROW(tcq::parse_int_range("5:1:1"), std::invalid_argument);
    EXPECT_THROW(tcq::parse_int_range("1:5:0"), std::invalid_argument);
    EXPECT_THROW(tcq::parse_int_range("1:5"), std::invalid_argument);
}

}  // namespace
