// Command-line front end for the tcq library.
//
//   tcq partition    --n 100 --preset paper
//   tcq distribution --n 100 --preset paper --axis jk
//   tcq regime       --n 121 --preset paper
//   tcq shifts       --preset paper --sweep n=100:1000:100
//   tcq jz-shift     --preset paper --sweep n=100:1000:100
//   tcq driven       --n 40 --preset paper --rabi 1e6 --t 1e-6
//   tcq robustness   --norm 1e8 --preset paper
//   tcq bench        --target zpert_first_order --grid 400,1600,6400
//   tcq oracle-compare --n 16 --preset paper
//
// Exit codes: 0 success, 1 gate or oracle violation, 2 argument error.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "tcq/tcq.hpp"

namespace {

using nlohmann::json;

struct CommonFlags {
    tcq::RunConfig cfg;
    std::string preset;
    std::string config_path;
    std::string format = "csv";
    bool hz = false;
    CLI::Option* n_opt = nullptr;
    CLI::Option* omega_opt = nullptr;
    CLI::Option* g0_opt = nullptr;
    CLI::Option* temp_opt = nullptr;
    CLI::Option* delta_opt = nullptr;
    CLI::Option* threads_opt = nullptr;
    CLI::Option* output_opt = nullptr;
    CLI::Option* format_opt = nullptr;
};

void add_common(CLI::App* app, CommonFlags& f) {
    f.n_opt = app->add_option("--n", f.cfg.n, "number of spins");
    f.omega_opt = app->add_option("--omega0", f.cfg.omega0_rad_per_s, "resonance, rad/s");
    f.g0_opt = app->add_option("--g0", f.cfg.g0_rad_per_s, "single-spin coupling, rad/s");
    f.temp_opt = app->add_option("--temp", f.cfg.temp_kelvin, "temperature, K");
    f.delta_opt = app->add_option("--delta", f.cfg.delta, "relative truncation target");
    f.threads_opt = app->add_option("--threads", f.cfg.threads, "worker threads (default from TCQ_THREADS)");
    f.output_opt = app->add_option("--output", f.cfg.output_path, "output file (default stdout)");
    f.format_opt = app->add_option("--format", f.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    app->add_option("--preset", f.preset, "named parameter preset")->check(CLI::IsMember({"paper"}));
    app->add_option("--config", f.config_path, "JSON run configuration");
    app->add_flag("--hz", f.hz, "read --omega0 and --g0 in Hz instead of rad/s");
}

// Layering: defaults, then --config, then --preset, then explicit flags.
tcq::RunConfig resolve(const CommonFlags& f) {
    tcq::RunConfig c;
    c.threads = tcq::default_threads();
    if (!f.config_path.empty()) {
        std::ifstream in(f.config_path);
        if (!in) throw CLI::ValidationError("--config", "cannot open " + f.config_path);
        std::stringstream ss;
        ss << in.rdbuf();
        c = tcq::parse_run_config(ss.str());
    }
    if (f.preset == "paper") {
        c.omega0_rad_per_s = tcq::kReferencePreset.omega0;
        c.g0_rad_per_s = tcq::kReferencePreset.g0;
        c.temp_kelvin = tcq::kReferencePreset.temp_kelvin;
    }
    if (f.n_opt->count()) c.n = f.cfg.n;
    if (f.omega_opt->count()) c.omega0_rad_per_s = f.cfg.omega0_rad_per_s;
    if (f.g0_opt->count()) c.g0_rad_per_s = f.cfg.g0_rad_per_s;
    if (f.hz) {
        if (f.omega_opt->count()) c.omega0_rad_per_s *= tcq::kTwoPi;
        if (f.g0_opt->count()) c.g0_rad_per_s *= tcq::kTwoPi;
        std::clog << "note: --hz given, frequencies multiplied by 2 pi: omega0=" << c.omega0_rad_per_s
                  << " rad/s, g0=" << c.g0_rad_per_s << " rad/s\n";
    }
    if (f.temp_opt->count()) c.temp_kelvin = f.cfg.temp_kelvin;
    if (f.delta_opt->count()) c.delta = f.cfg.delta;
    if (f.threads_opt->count()) c.threads = f.cfg.threads;
    if (f.output_opt->count()) c.output_path = f.cfg.output_path;
    if (f.format_opt->count()) c.output_format = tcq::output_format_from_string(f.format);
    try {
        tcq::validate(c);
    } catch (const std::invalid_argument& e) {
        throw CLI::ValidationError("configuration", e.what());
    }
    return c;
}

// Opens the configured output, or standard output.
class Sink {
public:
    explicit Sink(const std::string& path) {
        if (!path.empty()) {
            file_ = std::make_unique<std::ofstream>(path);
            if (!*file_) throw std::runtime_error("cannot write " + path);
        }
    }
    std::ostream& os() { return file_ ? *file_ : std::cout; }

private:
    std::unique_ptr<std::ofstream> file_;
};

using tcq::format_real;

int run_partition(const tcq::RunConfig& c) {
    const auto p = c.params();
    const auto pd = tcq::z_pert(p, c.temp_kelvin, c.options());
    const auto da = tcq::delta_helmholtz(p, c.temp_kelvin, c.options());
    const auto de = tcq::delta_energy(p, c.temp_kelvin, c.options());
    Sink out(c.output_path);
    if (c.output_format == tcq::OutputFormat::Json) {
        out.os() << json{{"config", tcq::to_json(c)},
                         {"log_z0", pd.log_z0},
                         {"log_zpert", pd.log_zpert},
                         {"ratio", pd.ratio},
                         {"error_bound", pd.error_bound},
                         {"error_budget",
                          {{"dropped_order", pd.budget.dropped_order},
                           {"truncation", pd.budget.truncation},
                           {"rounding", pd.budget.rounding}}},
                         {"max_gate", pd.max_gate},
                         {"truncation",
                          {{"k_min", pd.truncation.k_min},
                           {"k_max", pd.truncation.k_max},
                           {"twice_j_lo", pd.truncation.j_lo},
                           {"twice_j_hi", pd.truncation.j_hi},
                           {"order", pd.truncation.order},
                           {"blocks", pd.truncation.blocks}}},
                         {"delta_a_dimensionless", da.dimensionless},
                         {"delta_a_joules", da.joules},
                         {"delta_e_joules", de.joules},
                         {"mean_k_pert", de.mean_k_pert},
                         {"mean_k_z0", de.mean_k_z0}}
                            .dump(2)
                 << '\n';
    } else {
        tcq::write_csv_preamble(out.os(), tcq::kPartitionCsv);
        out.os() << c.n << ',' << format_real(c.temp_kelvin) << ',' << format_real(pd.log_z0) << ','
                 << format_real(pd.log_zpert) << ',' << format_real(pd.ratio) << ',' << format_real(pd.error_bound)
                 << ',' << format_real(da.joules) << ',' << format_real(de.joules) << '\n';
    }
    return 0;
}

int run_distribution(const tcq::RunConfig& c, const std::string& axis, bool exact) {
    const auto ax = axis == "km" ? tcq::DistributionAxis::KM : tcq::DistributionAxis::JK;
    const auto order = exact ? tcq::DistributionOrder::Exact : tcq::DistributionOrder::FirstOrder;
    const auto d = tcq::distribution(c.params(), c.temp_kelvin, ax, order, c.options());
    Sink out(c.output_path);
    if (c.output_format == tcq::OutputFormat::Json) {
        json rows = json::array();
        for (const auto& e : d.entries) {
            if (ax == tcq::DistributionAxis::JK) {
                rows.push_back({{"twice_j", e.twice_j}, {"k", e.k}, {"log_weight", e.log_weight}});
            } else {
                rows.push_back({{"k", e.k}, {"twice_m", e.twice_m}, {"log_weight", e.log_weight}});
            }
        }
        out.os() << json{{"config", tcq::to_json(c)}, {"axis", axis}, {"log_z", d.log_z}, {"entries", rows}}.dump(2)
                 << '\n';
    } else {
        tcq::write_distribution_csv(out.os(), d);
    }
    return 0;
}

int run_regime(const tcq::RunConfig& c) {
    const auto r = tcq::regime_report(c.params(), c.temp_kelvin, c.options());
    Sink out(c.output_path);
    const double exact = r.dicke_population.exact.value_or(std::nan(""));
    if (c.output_format == tcq::OutputFormat::Json) {
        json j{{"config", tcq::to_json(c)},
               {"t_cutoff_kelvin", r.t_cutoff},
               {"n_critical", r.n_critical.value},
               {"dicke_population_estimate", r.dicke_population.estimate},
               {"crossover_limit_kelvin", r.crossover_limit}};
        if (r.dicke_population.exact) j["dicke_population_exact"] = *r.dicke_population.exact;
        out.os() << j.dump(2) << '\n';
    } else {
        tcq::write_csv_preamble(out.os(), tcq::kRegimeCsv);
        std::ostringstream nc;
        if (r.n_critical.integer) {
            nc << *r.n_critical.integer;
        } else {
            nc.precision(3);
            nc << r.n_critical.value;
        }
        out.os() << c.n << ',' << format_real(c.temp_kelvin) << ',' << format_real(r.t_cutoff) << ',' << nc.str()
                 << ',' << format_real(r.dicke_population.estimate) << ','
                 << (r.dicke_population.exact ? format_real(exact) : std::string("")) << ','
                 << format_real(r.crossover_limit) << '\n';
    }
    return 0;
}

tcq::TraceSource trace_source(const std::string& s) {
    if (s == "shifted") return tcq::TraceSource::ShiftedLadder;
    if (s == "printed") return tcq::TraceSource::Printed;
    return tcq::TraceSource::Physical;
}

std::vector<int> sweep_grid(const std::string& sweep) {
    const auto eq = sweep.find('=');
    if (eq == std::string::npos || sweep.substr(0, eq) != "n") {
        throw CLI::ValidationError("--sweep", "expected n=start:stop:step");
    }
    try {
        return tcq::parse_int_range(sweep.substr(eq + 1));
    } catch (const std::exception& e) {
        throw CLI::ValidationError("--sweep", e.what());
    }
}

void log_fit(const std::string& label, const tcq::ShiftReport& r) {
    std::clog << "fit " << label << ": coefficients (ascending) =";
    for (double v : r.fit.coefficients) std::clog << ' ' << v;
    std::clog << ", r^2 = " << r.fit.r_squared << '\n';
}

int run_shifts(const tcq::RunConfig& c, const std::string& sweep, const std::string& conv, bool jz_only) {
    const auto grid = sweep_grid(sweep);
    const auto pts = tcq::shift_sweep(grid, c.params(), c.temp_kelvin, trace_source(conv), c.options());
    Sink out(c.output_path);
    if (jz_only) {
        const auto rep = tcq::make_report("n", pts, &tcq::ShiftPoint::jz_shift, 2, c.omega0_rad_per_s);
        log_fit("jz_shift_rad_per_s", rep);
        if (c.output_format == tcq::OutputFormat::Json) {
            out.os() << json{{"config", tcq::to_json(c)}, {"convention", conv}, {"n", rep.grid},
                             {"jz_shift_rad_per_s", rep.values}, {"fit", tcq::to_json(rep.fit)}}
                            .dump(2)
                     << '\n';
        } else {
            tcq::write_jz_shift_csv(out.os(), pts, c.omega0_rad_per_s);
        }
        return 0;
    }
    const auto mean = tcq::make_report("n", pts, &tcq::ShiftPoint::fractional_mean_shift, 1);
    const auto var = tcq::make_report("n", pts, &tcq::ShiftPoint::fractional_variance_shift, 1);
    const auto ratio = tcq::make_report("n", pts, &tcq::ShiftPoint::ratio, 1);
    log_fit("fractional_mean_shift", mean);
    log_fit("fractional_variance_shift", var);
    log_fit("zpert_over_z0", ratio);
    if (c.output_format == tcq::OutputFormat::Json) {
        out.os() << json{{"config", tcq::to_json(c)},
                         {"convention", conv},
                         {"n", mean.grid},
                         {"fractional_mean_shift", mean.values},
                         {"fractional_variance_shift", var.values},
                         {"zpert_over_z0", ratio.values},
                         {"fits",
                          {{"fractional_mean_shift", tcq::to_json(mean.fit)},
                           {"fractional_variance_shift", tcq::to_json(var.fit)},
                           {"zpert_over_z0", tcq::to_json(ratio.fit)}}}}
                        .dump(2)
                 << '\n';
    } else {
        tcq::write_shifts_csv(out.os(), pts);
    }
    return 0;
}

int run_driven(const tcq::RunConfig& c, double rabi, double t) {
    const double s = tcq::driven_signal(c.params(), c.temp_kelvin, rabi, t, c.options());
    Sink out(c.output_path);
    if (c.output_format == tcq::OutputFormat::Json) {
        out.os() << json{{"config", tcq::to_json(c)}, {"rabi_rad_per_s", rabi}, {"t_seconds", t}, {"signal", s}}.dump(2)
                 << '\n';
    } else {
        tcq::write_csv_preamble(out.os(), tcq::kDrivenCsv);
        out.os() << c.n << ',' << format_real(rabi) << ',' << format_real(t) << ',' << format_real(s) << '\n';
    }
    return 0;
}

int run_robustness(const tcq::RunConfig& c, double norm, const std::vector<double>& couplings, int trials,
                   std::uint64_t seed, double threshold) {
    const double used = couplings.empty() ? norm : tcq::flipflop_norm(couplings);
    const auto b = tcq::eigen_shift_bound(used, c.omega0_rad_per_s, threshold);
    json j{{"frobenius_norm", b.frobenius_norm},
           {"omega0", b.omega0},
           {"admissible", b.admissible},
           {"shift_bound", b.shift_bound}};
    if (trials > 0) {
        const auto s = tcq::run_shift_trials(trials, seed);
        j["trials"] = {{"count", s.trials}, {"violations", s.violations}, {"worst_ratio", s.worst_ratio}};
    }
    Sink out(c.output_path);
    out.os() << j.dump(2) << '\n';
    return 0;
}

int run_bench(const tcq::RunConfig& c, const std::string& target, const std::vector<int>& grid, int reps) {
    tcq::ScalingRun run;
    try {
        run = tcq::run_scaling(tcq::bench_target_from_string(target), grid, c.params(), c.temp_kelvin, reps,
                               c.options());
    } catch (const std::invalid_argument& e) {
        throw CLI::ValidationError("bench", e.what());
    }
    Sink out(c.output_path);
    tcq::write_bench_csv(out.os(), run);
    std::clog << tcq::to_json(run).dump() << '\n';
    return 0;
}

int run_oracle_compare(const tcq::RunConfig& c) {
    if (c.n > 64) throw CLI::ValidationError("--n", "oracle-compare accepts n <= 64");
    const auto o = tcq::oracle_compare(c.params(), c.temp_kelvin, c.options());
    const bool ok = o.residual <= o.error_bound;
    Sink out(c.output_path);
    out.os() << json{{"n", c.n},
                     {"temp_kelvin", c.temp_kelvin},
                     {"zpert_over_z0", o.ratio_pert},
                     {"zexact_minus_z0_over_z0", o.ratio_exact},
                     {"residual", o.residual},
                     {"error_bound", o.error_bound},
                     {"within_bound", ok}}
                    .dump(2)
             << '\n';
    return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Thermal properties of the resonant Tavis-Cummings model"};
    app.require_subcommand(1);

    CommonFlags partition_f, dist_f, regime_f, shifts_f, jz_f, driven_f, robust_f, bench_f, oracle_f;

    auto* partition = app.add_subcommand("partition", "Z0, Z_pert, ratio, free-energy and energy shifts");
    add_common(partition, partition_f);

    auto* dist = app.add_subcommand("distribution", "thermal populations over (j,k) or (k,m)");
    add_common(dist, dist_f);
    std::string axis = "jk";
    bool exact = false;
    dist->add_option("--axis", axis, "jk or km")->check(CLI::IsMember({"jk", "km"}));
    dist->add_flag("--exact", exact, "use block spectra instead of first-order weights (n <= 256)");

    auto* regime = app.add_subcommand("regime", "cutoff temperature, critical size, Dicke population");
    add_common(regime, regime_f);

    std::string sweep = "n=100:1000:100", conv = "physical";
    auto* shifts = app.add_subcommand("shifts", "fractional photon mean and variance shifts over an n sweep");
    add_common(shifts, shifts_f);
    shifts->add_option("--sweep", sweep, "n=start:stop:step");
    shifts->add_option("--convention", conv, "physical, shifted or printed")
        ->check(CLI::IsMember({"physical", "shifted", "printed"}));

    auto* jz = app.add_subcommand("jz-shift", "J_z shift over an n sweep with a quadratic fit");
    add_common(jz, jz_f);
    jz->add_option("--sweep", sweep, "n=start:stop:step");
    jz->add_option("--convention", conv, "physical, shifted or printed")
        ->check(CLI::IsMember({"physical", "shifted", "printed"}));

    double rabi = 0.0, t_sec = 0.0;
    auto* driven = app.add_subcommand("driven", "sin(Omega t) tr(J_z rho_th)");
    add_common(driven, driven_f);
    driven->add_option("--rabi", rabi, "drive Rabi frequency, rad/s")->required();
    driven->add_option("--t", t_sec, "time, s")->required();

    double norm = 0.0, threshold = tcq::kDefaultAdmissibleRatio;
    std::vector<double> couplings;
    int trials = 0;
    std::uint64_t seed = 12345;
    auto* robust = app.add_subcommand("robustness", "perturbation norm gate and random bound trials");
    add_common(robust, robust_f);
    robust->add_option("--norm", norm, "perturbation norm, rad/s")->check(CLI::NonNegativeNumber);
    robust->add_option("--couplings", couplings, "flip-flop couplings d_ij, rad/s")->delimiter(',');
    robust->add_option("--threshold", threshold, "admissible norm / omega0");
    robust->add_option("--trials", trials, "random eigenvalue-shift trials");
    robust->add_option("--seed", seed, "seed for the trials");

    std::string target = "zpert_first_order";
    std::vector<int> grid{400, 1600, 6400};
    int reps = 3;
    auto* bench = app.add_subcommand("bench", "runtime scaling of a partition-function path");
    add_common(bench, bench_f);
    bench->add_option("--target", target, "zpert_first_order, zpert_higher or z_exact");
    bench->add_option("--grid", grid, "ascending n values")->delimiter(',');
    bench->add_option("--reps", reps, "timed repetitions per n (>= 3)");

    auto* oracle = app.add_subcommand("oracle-compare", "exact spectra against the first-order expansion");
    add_common(oracle, oracle_f);

    try {
        app.parse(argc, argv);
        if (partition->parsed()) return run_partition(resolve(partition_f));
        if (dist->parsed()) return run_distribution(resolve(dist_f), axis, exact);
        if (regime->parsed()) return run_regime(resolve(regime_f));
        if (shifts->parsed()) return run_shifts(resolve(shifts_f), sweep, conv, false);
        if (jz->parsed()) return run_shifts(resolve(jz_f), sweep, conv, true);
        if (driven->parsed()) return run_driven(resolve(driven_f), rabi, t_sec);
        if (robust->parsed()) return run_robustness(resolve(robust_f), norm, couplings, trials, seed, threshold);
        if (bench->parsed()) return run_bench(resolve(bench_f), target, grid, reps);
        if (oracle->parsed()) return run_oracle_compare(resolve(oracle_f));
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        std::cerr << app.help();
        return 2;
    } catch (const tcq::ExpansionInvalid& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
