#pragma once

// Monte-Carlo experiment driver: configuration, sweeps over (solver, k, sigma,
// trial), CSV persistence, aggregation and SVG figures.
//
// Every trial is reproducible on its own: the signal and ensemble come from
// streams keyed by (seed, n, k, trial) and the noise from a third stream with
// the same key, so all noise levels of one trial share one Gaussian draw
// scaled by sigma.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "phaseret/model.hpp"
#include "phaseret/serialize.hpp"

namespace phaseret {

inline constexpr const char* kCsvHeader =
    "solver,n,k,r,sigma,trial,rel_error,success,stop_degree,alpha,wall_ms,seed";
inline constexpr const char* kCsvVersionLine = "# phaseret-results v1";

/// Solvers the harness knows; PhaseLift is not among them.
const std::vector<std::string>& known_solvers();

struct ExperimentConfig {
    int n = 6;
    /// Empty means n+1 .. 3n.
    std::vector<int> k_range;
    int trials = 100;
    std::vector<double> sigmas{0.0};
    ProjectorSpec projector;
    std::vector<std::string> solvers{"ideal-regression"};
    std::uint64_t seed = 0;
    std::filesystem::path out_dir = "results";
    double success_threshold = 1e-6;
    /// n >= 10 runs degree-n prolongations; they need this opt-in.
    bool allow_large = false;
    /// Record wall-clock times. Off by default: times break byte-identical CSVs.
    bool timing = false;
    int threads = 0;

    std::vector<int> resolved_k_range() const;
    void validate() const;
};

/// Keys: n, k (list) or k_min/k_max, trials, sigmas, solvers, seed, out,
/// success_threshold, allow_large, timing, threads and a projector table
/// with rank, distribution, mode. Unknown keys are rejected.
ExperimentConfig config_from_json(const Json& j);
/// TOML for *.toml, JSON otherwise.
ExperimentConfig load_config(const std::filesystem::path& path);
Json to_json(const ExperimentConfig& cfg);

struct ResultRow {
    std::string solver;
    int n = 0;
    int k = 0;
    int r = 1;
    double sigma = 0.0;
    int trial = 0;
    double rel_error = 1.0; ///< 1.0 (the zero estimate) when the solver gave up
    bool success = false;
    int stop_degree = 0;
    double alpha = 0.0;
    double wall_ms = 0.0;
    std::uint64_t seed = 0;

    bool operator==(const ResultRow&) const = default;
};

struct ResultTable {
    std::vector<ResultRow> rows;
};

/// Rows in canonical order: solver (config order), k, sigma, trial.
ResultTable run_experiment(const ExperimentConfig& cfg);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

void write_csv(const ResultTable& table, std::ostream& out);
void write_csv(const ResultTable& table, const std::filesystem::path& path);
ResultTable read_csv(std::istream& in);
ResultTable read_csv(const std::filesystem::path& path);

struct SummaryCell {
    std::string solver;
    int n = 0;
    int k = 0;
    double sigma = 0.0;
    int trials = 0;
    int successes = 0;
    double success_rate = 0.0;
    double q1 = 0.0;
    double median = 0.0;
    double q3 = 0.0;
};

struct Summary {
    /// Sorted by (solver, n, k, sigma).
    std::vector<SummaryCell> cells;
};

/// Quantile with linear interpolation between order statistics:
/// h = (N - 1) p, value = x[floor h] + (h - floor h)(x[floor h + 1] - x[floor h]).
double quantile(std::vector<double> values, double p);

Summary aggregate(const ResultTable& table);
Json to_json(const Summary& summary);
void write_summary_csv(const Summary& summary, const std::filesystem::path& path);

struct PlotStyle {
    int width = 640;
    int height = 420;
    std::string title;
};

/// recovery.svg (success rate against k, one polyline per solver, noiseless
/// cells or the smallest sigma present) and error_sigma_<sigma>.svg for every
/// sigma > 0 (median rel_error on a log axis with a quartile band). Returns
/// the files written.
std::vector<std::filesystem::path> emit_plots(const Summary& summary, const PlotStyle& style,
                                              const std::filesystem::path& out_dir);

/// Same figures as strings, keyed by file name.
std::vector<std::pair<std::string, std::string>> render_plots(const Summary& summary,
                                                              const PlotStyle& style);

} // namespace phaseret
