// Run configuration with JSON round-tripping, and CSV schemas for exports.
#pragma once

#include <json.hpp>

#include <cmath>
#include <cstdlib>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "tcq/bench.hpp"
#include "tcq/observables.hpp"
#include "tcq/thermo.hpp"
#include "tcq/units.hpp"

namespace tcq {

enum class OutputFormat { Csv, Json };

inline std::string to_string(OutputFormat f) { return f == OutputFormat::Csv ? "csv" : "json"; }

inline OutputFormat output_format_from_string(const std::string& s) {
    if (s == "csv") return OutputFormat::Csv;
    if (s == "json") return OutputFormat::Json;
    throw std::invalid_argument("output format must be csv or json, got '" + s + "'");
}

struct RunConfig {
    int n = 100;
    double omega0_rad_per_s = kReferencePreset.omega0;
    double g0_rad_per_s = kReferencePreset.g0;
    double temp_kelvin = kReferencePreset.temp_kelvin;
    double delta = 1e-9;
    int threads = 1;
    std::string output_path;   // empty means standard output
    OutputFormat output_format = OutputFormat::Csv;

    ModelParams params() const { return ModelParams{n, omega0_rad_per_s, g0_rad_per_s}; }
    EvalOptions options() const { return EvalOptions{delta, threads}; }

    bool operator==(const RunConfig&) const = default;
};

inline void validate(const RunConfig& c) {
    if (c.n < 1) throw std::invalid_argument("n must be at least 1");
    if (!(c.omega0_rad_per_s > 0.0)) throw std::invalid_argument("omega0 must be positive");
    if (!(c.g0_rad_per_s >= 0.0)) throw std::invalid_argument("g0 must be non-negative");
    if (!(c.temp_kelvin > 0.0)) throw std::invalid_argument("temperature must be positive");
    if (!(c.delta > 0.0 && c.delta <= 1e-3)) throw std::invalid_argument("delta must lie in (0, 1e-3]");
    if (c.threads < 1) throw std::invalid_argument("threads must be at least 1");
}

inline nlohmann::json to_json(const RunConfig& c) {
    return nlohmann::json{{"n", c.n},
                          {"omega0_rad_per_s", c.omega0_rad_per_s},
                          {"g0_rad_per_s", c.g0_rad_per_s},
                          {"temp_kelvin", c.temp_kelvin},
                          {"delta", c.delta},
                          {"threads", c.threads},
                          {"output_path", c.output_path},
                          {"output_format", to_string(c.output_format)}};
}

// Missing keys keep their defaults; present keys are validated as a whole.
inline RunConfig run_config_from_json(const nlohmann::json& j) {
    RunConfig c;
    if (j.contains("n")) c.n = j.at("n").get<int>();
    if (j.contains("omega0_rad_per_s")) c.omega0_rad_per_s = j.at("omega0_rad_per_s").get<double>();
    if (j.contains("g0_rad_per_s")) c.g0_rad_per_s = j.at("g0_rad_per_s").get<double>();
    if (j.contains("temp_kelvin")) c.temp_kelvin = j.at("temp_kelvin").get<double>();
    if (j.contains("delta")) c.delta = j.at("delta").get<double>();
    if (j.contains("threads")) c.threads = j.at("threads").get<int>();
    if (j.contains("output_path")) c.output_path = j.at("output_path").get<std::string>();
    if (j.contains("output_format")) c.output_format = output_format_from_string(j.at("output_format"));
    validate(c);
    return c;
}

inline RunConfig parse_run_config(const std::string& text) {
    return run_config_from_json(nlohmann::json::parse(text));
}

inline std::string emit_run_config(const RunConfig& c) { return to_json(c).dump(2); }

// Default thread count from TCQ_THREADS, or 1.
inline int default_threads() {
    if (const char* env = std::getenv("TCQ_THREADS")) {
        try {
            const int t = std::stoi(env);
            if (t >= 1) return t;
        } catch (const std::exception&) {
        }
    }
    return 1;
}

// ---------------------------------------------------------------------------
// CSV schemas. The first line names the schema and its version; the second
// is the column header.

inline constexpr int kCsvSchemaVersion = 1;

struct CsvSchema {
    const char* name;
    const char* header;
};

inline constexpr CsvSchema kDistributionJkCsv{"distribution-jk", "twice_j,k,log_weight"};
inline constexpr CsvSchema kDistributionKmCsv{"distribution-km", "k,twice_m,log_weight"};
inline constexpr CsvSchema kShiftsCsv{"shifts", "n,fractional_mean_shift,fractional_variance_shift"};
inline constexpr CsvSchema kJzShiftCsv{"jz-shift", "n,jz_shift_rad_per_s"};
inline constexpr CsvSchema kBenchCsv{"bench", "target,n,median_seconds"};
inline constexpr CsvSchema kPartitionCsv{
    "partition", "n,temp_kelvin,log_z0,log_zpert,ratio,error_bound,delta_a_joules,delta_e_joules"};
inline constexpr CsvSchema kDrivenCsv{"driven", "n,rabi_rad_per_s,t_seconds,signal"};
inline constexpr CsvSchema kRegimeCsv{"regime",
                                      "n,temp_kelvin,t_cutoff_kelvin,n_critical,dicke_population_estimate,"
                                      "dicke_population_exact,crossover_limit_kelvin"};

inline void write_csv_preamble(std::ostream& os, const CsvSchema& s) {
    os << "# tcq-csv v" << kCsvSchemaVersion << ' ' << s.name << '\n' << s.header << '\n';
}

inline std::string format_real(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

inline void write_distribution_csv(std::ostream& os, const ThermalDistribution& d) {
    if (d.axis == DistributionAxis::JK) {
        write_csv_preamble(os, kDistributionJkCsv);
        for (const auto& e : d.entries) os << e.twice_j << ',' << e.k << ',' << format_real(e.log_weight) << '\n';
    } else {
        write_csv_preamble(os, kDistributionKmCsv);
        for (const auto& e : d.entries) os << e.k << ',' << e.twice_m << ',' << format_real(e.log_weight) << '\n';
    }
}

inline void write_shifts_csv(std::ostream& os, const std::vector<ShiftPoint>& pts) {
    write_csv_preamble(os, kShiftsCsv);
    for (const auto& p : pts) {
        os << p.n << ',' << format_real(p.fractional_mean_shift) << ',' << format_real(p.fractional_variance_shift)
           << '\n';
    }
}

inline void write_jz_shift_csv(std::ostream& os, const std::vector<ShiftPoint>& pts, double omega0) {
    write_csv_preamble(os, kJzShiftCsv);
    for (const auto& p : pts) os << p.n << ',' << format_real(omega0 * p.jz_shift) << '\n';
}

inline void write_bench_csv(std::ostream& os, const ScalingRun& run) {
    write_csv_preamble(os, kBenchCsv);
    for (std::size_t i = 0; i < run.n_grid.size(); ++i) {
        os << to_string(run.target) << ',' << run.n_grid[i] << ',' << format_real(run.wall_times[i]) << '\n';
    }
}

inline nlohmann::json to_json(const PolyFit& f) {
    return nlohmann::json{{"degree", f.degree}, {"coefficients", f.coefficients}, {"r_squared", f.r_squared}};
}

inline nlohmann::json to_json(const ScalingRun& run) {
    return nlohmann::json{{"target", to_string(run.target)},   {"n_grid", run.n_grid},
                          {"median_seconds", run.wall_times},  {"values", run.values},
                          {"blocks", run.blocks},              {"fitted_exponent", run.fitted_exponent},
                          {"values_stable", run.values_stable}};
}

// "a:b:s" -> {a, a+s, ..., <= b}
inline std::vector<int> parse_int_range(const std::string& spec) {
    std::vector<int> parts;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ':')) parts.push_back(std::stoi(item));
    if (parts.size() == 1) return {parts[0]};
    if (parts.size() != 3 || parts[2] <= 0 || parts[1] < parts[0]) {
        throw std::invalid_argument("range must look like start:stop:step with step > 0, got '" + spec + "'");
    }
    std::vector<int> out;
    for (int v = parts[0]; v <= parts[1]; v += parts[2]) out.push_back(v);
    return out;
}

}  // namespace tcq
