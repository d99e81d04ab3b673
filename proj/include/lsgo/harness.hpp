#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "lsgo/evo_core.hpp"
#include "lsgo/stats.hpp"
#include "lsgo/wsn_problem.hpp"

namespace lsgo::harness {

using json = nlohmann::json;

struct AlgorithmSpec {
    std::string name;
    json overrides = json::object();
};

/// Every (L, epsilon, rho) combination of one block is a case.
struct GridBlock {
    std::vector<std::size_t> sensors;
    std::vector<double> epsilon;
    std::vector<double> rho;
};

struct ExperimentConfig {
    std::vector<GridBlock> grid;
    double snr_db = 10.0;
    double sigma_v2 = 1.0;
    double sigma_w2 = 1.0;
    double spacing = 1.0;
    double prior_ratio = 1.0;
    double lower = 0.0;
    double upper = 15.0;
    std::vector<AlgorithmSpec> algorithms;
    std::size_t trials = 50;
    std::int64_t max_evals = 60000;
    std::map<std::size_t, std::size_t> population;  // keyed by L
    std::uint64_t base_seed = 1;
    std::filesystem::path output_dir = "results";
    std::size_t workers = 1;
    std::int64_t trace_step = 500;

    /// Throws std::invalid_argument describing the first violated invariant.
    void validate() const;
    /// Relative output directories resolve against `base`.
    static ExperimentConfig from_json(const json& doc, const std::filesystem::path& base = {});
    static ExperimentConfig load(const std::filesystem::path& path);
};

/// The 24-case reference protocol, with `trials` per cell.
ExperimentConfig protocol_config(std::size_t trials = 50);

struct CaseSpec {
    std::size_t index = 0;
    std::string id;
    wsn::WsnConfig problem;
    std::size_t population = 100;
};

/// Blocks in order; within a block L, then rho, then epsilon as listed.
std::vector<CaseSpec> expand_cases(const ExperimentConfig& config);
std::string case_id(std::size_t sensors, double rho, double epsilon);

/// Stable 64-bit seeds (FNV-1a over the fields, then a splitmix64 finalizer).
std::uint64_t trial_seed(std::uint64_t base_seed, std::size_t case_index, const std::string& algorithm,
                         std::size_t trial);
std::uint64_t fading_seed(std::uint64_t base_seed, std::size_t sensors);

const std::vector<std::string>& algorithm_names();
bool is_algorithm(const std::string& name);

/// Runs one named algorithm; throws std::invalid_argument for unknown names
/// or override keys.
SolverResult run_algorithm(const AlgorithmSpec& spec, const Objective& objective, const Bounds& bounds,
                           std::int64_t max_evals, std::size_t population, Rng& rng);

struct TrialRecord {
    std::string case_id;
    std::string algorithm;
    std::size_t trial = 0;
    std::uint64_t seed = 0;
    double best_f = 0.0;
    std::vector<double> best_gains;
    bool feasible = false;
    std::int64_t evals = 0;
    std::vector<TracePoint> trace;
};

/// Best-so-far at every multiple of `step` up to max_evals; NaN before the
/// first recorded point.
std::vector<double> sample_trace(const std::vector<TracePoint>& trace, std::int64_t max_evals, std::int64_t step);

struct CellSummary {
    double mean = 0.0;
    double median = 0.0;
    double stddev = 0.0;
    double min = 0.0;
    double feasible_rate = 0.0;
    std::size_t trials = 0;
};

CellSummary summarize(const std::vector<TrialRecord>& records);

struct ExperimentResult {
    std::vector<std::string> cases;
    std::vector<std::string> algorithms;
    std::vector<std::vector<CellSummary>> cells;  // [case][algorithm]
    std::vector<TrialRecord> records;             // (case, algorithm, trial) order

    stats::ResultMatrix means() const;
};

/// Writes one CSV with the checkpoint column and the mean best-so-far of
/// each algorithm (in `algorithms` order) over its trials.
void export_traces(const std::vector<TrialRecord>& records, const std::vector<std::string>& algorithms,
                   std::int64_t max_evals, std::int64_t step, const std::filesystem::path& path);

/// Runs every case x algorithm x trial and writes the result files under
/// config.output_dir. Progress goes to `log` when given.
ExperimentResult run_experiment(const ExperimentConfig& config, std::ostream* log = nullptr);

struct ValidationRow {
    std::size_t sensors = 0;
    double rho = 0.0;
    double snr_db = 0.0;
    double analytic = 0.0;
    double monte_carlo = 0.0;
    double sigma = 0.0;  // binomial standard error at the analytic value
    bool within = false; // |monte_carlo - analytic| <= 3 sigma
};

/// Analytic fusion error probability against the Monte Carlo LLR simulation
/// on `configs` random instances cycling through L in {1, 5, 50} and rho in
/// {0, 0.5}. Gains are scaled so the error probability is well inside (0, 0.5).
std::vector<ValidationRow> validate_monte_carlo(std::size_t configs, std::int64_t samples, std::uint64_t seed);

/// "%.10g".
std::string format_number(double v);

/// Worker count after the LSGO_WORKERS override.
std::size_t effective_workers(std::size_t configured);

}  // namespace lsgo::harness
