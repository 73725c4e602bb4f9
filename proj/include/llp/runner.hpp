#ifndef LLP_RUNNER_HPP_
#define LLP_RUNNER_HPP_

#include <string>
#include <vector>

#include "json.hpp"
#include "llp/analysis.hpp"
#include "llp/learner.hpp"
#include "llp/predictors.hpp"
#include "llp/problem.hpp"

namespace llp {

struct OutputSpec {
  enum class Format { kCsv, kJson };
  std::string path;  // empty: nothing written
  Format format = Format::kCsv;
  int record_every = 1;
};

struct BenchmarkSpec {
  BenchmarkKind kind = BenchmarkKind::kXT;
  double grid_resolution = 0.0;  // <= 0: 1e-4 * D
};

struct RunConfig {
  Scenario scenario;
  LearnerConfig learner;
  PredictorKind predictor;
  BenchmarkSpec benchmark;
  OutputSpec output;

  // Throws ConfigError.
  void validate() const;
};

// Learner bounds taken from the scenario, sigma = sqrt(L_f) / D.
RunConfig default_run_config(const Scenario& scenario);

// Strict parsing: unknown keys and wrong types throw ConfigError. Missing
// learner bounds come from the scenario; a missing sigma is sqrt(L_f) / D.
RunConfig parse_run_config(const nlohmann::json& doc);
RunConfig load_run_config(const std::string& path);
nlohmann::ordered_json to_json(const RunConfig& config);

struct RunResult {
  std::vector<RoundRecord> records;
  TraceMetrics metrics;
  BenchmarkResult benchmark;
  BoundReport bounds;
  std::string bound_kind;  // proximal, nonproximal, perturbed or none
  std::vector<double> bound_path;  // B_t per round (NaN without a bound)
  double slack = 0.0;
  int solver_warnings = 0;  // rounds with a non-converged solve
  int estimated_bound_rounds = 0;
  int gap_bound_violations = 0;  // rounds breaking ||x - z|| <= h / sigma
  double max_gap = 0.0;
};

// Runs the configured experiment in memory; no files are touched.
RunResult execute(const RunConfig& config);

std::string render_trace_csv(const RunResult& result, int record_every);
std::string render_trace_json(const RunResult& result, int record_every);
nlohmann::ordered_json summarize(const RunConfig& config, const RunResult& result);

// Writes the trace to config.output.path and the summary next to it
// (<stem>.summary.json). Returns the summary.
nlohmann::ordered_json write_run_outputs(const RunConfig& config,
                                         const RunResult& result);

// Regret/t and cumulative violation against t for one or more runs.
std::string render_svg(const std::vector<std::string>& labels,
                       const std::vector<const RunResult*>& runs);

struct SweepConfig {
  RunConfig base;
  std::vector<int> horizons;
  std::vector<double> betas;
  int repetitions = 1;

  void validate() const;
};

SweepConfig parse_sweep_config(const nlohmann::json& doc);
SweepConfig load_sweep_config(const std::string& path);

struct SweepCell {
  int horizon = 0;
  double beta = 0.0;
  int repetition = 0;
  bool ok = false;
  std::string error;
  double regret = 0.0;
  double violation = 0.0;
  double bound = 0.0;
  double violation_bound = 0.0;
  int solver_warnings = 0;
};

struct SweepFit {
  double beta = 0.0;
  std::string quantity;  // "regret" or "violation", fitted on max(value, 1)
  bool ok = false;
  std::string error;
  GrowthFit fit;
  double reference_exponent = 0.0;  // worst-case rate for this beta
};

struct SweepResult {
  std::vector<SweepCell> cells;
  std::vector<SweepFit> fits;
};

// Cells run on `workers` threads (0: LLP_WORKERS or hardware concurrency).
SweepResult run_sweep(const SweepConfig& config, int workers = 0);
std::string render_sweep_csv(const SweepResult& result);
std::string render_fits_csv(const SweepResult& result);

struct CompareResult {
  std::vector<std::string> labels;
  std::vector<RunResult> runs;
};

// All configs must share the scenario (kind, horizon, sizes, seed, params).
CompareResult run_compare(const std::vector<RunConfig>& configs, int workers = 0);
// Columns: t, then <label>:regret_avg and <label>:violation per run.
std::string render_compare_csv(const CompareResult& result, int record_every);

int worker_count(int requested);

// "%.17g".
std::string format_double(double v);

}  // namespace llp

#endif  // LLP_RUNNER_HPP_
