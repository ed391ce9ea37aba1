#pragma once

#include "oic/problems.hpp"

#include <json.hpp>

namespace oic {

struct EvaluatorSpec {
  std::string name;   ///< em, oic, oic_smoothed, kfold, bc_kfold, loocv, alo, bootstrap, jackknife, poic, misspec
  std::string label;  ///< column value; defaults to name with K or B appended
  Index k = 5;        ///< folds for kfold / bc_kfold
  Index b = 50;       ///< resamples for bootstrap
  double m = 50.0;    ///< smoothing level for oic_smoothed
};

struct ExperimentConfig {
  std::string problem;
  nlohmann::json params = nlohmann::json::object();
  std::vector<Index> n;
  std::vector<Index> d_xi = {0};  ///< 0 means the problem default
  Index replications = 1;
  std::vector<std::string> pipelines;  ///< empty means every pipeline
  std::vector<EvaluatorSpec> evaluators;
  Index oracle_m = 100000;
  std::uint64_t seed = 0;
  std::string output_path;
  std::string format = "csv";
  bool extended = false;
  bool record_timing = true;

  /// Throws ConfigError naming the offending field path.
  static ExperimentConfig from_json(const nlohmann::json& j);
  static ExperimentConfig load(const std::string& path);
};

struct ResultRow {
  std::string problem;
  std::string pipeline;
  std::string evaluator;
  Index n = 0;
  Index d_xi = 0;
  Index rep = 0;
  double a_hat = 0.0;
  double a_oracle = 0.0;
  double seconds = 0.0;
  std::uint64_t seed = 0;
  // extended mode
  double fit_seconds = 0.0;
  double eval_seconds = 0.0;
  double oracle_seconds = 0.0;
};

struct SummaryRow {
  std::string pipeline;
  std::string evaluator;
  Index n = 0;
  Index d_xi = 0;
  Index count = 0;
  double mean_a_hat = 0.0;
  double mean_oracle = 0.0;
  double bias = 0.0;    ///< mean A_hat - mean A
  double stderr_ = 0.0; ///< standard error of A_hat - A over replications
  double mean_seconds = 0.0;
};

struct ExperimentResult {
  std::vector<ResultRow> rows;
  std::vector<SummaryRow> summary;
  /// (pipeline or pipeline/evaluator, replication) pairs that threw and were dropped.
  std::vector<std::pair<std::string, Index>> failures;
  nlohmann::json metadata;
};

/// Resolves the config's problem through the registry. Replications run on up
/// to `jobs` threads; rows are sorted by (rep, pipeline, evaluator, n, d_xi).
/// Seeds: data (seed, "data", n, d, rep), oracle (seed, "oracle", n, d, rep),
/// folds (seed, "folds", n, d, rep), bootstrap (seed, "boot", n, d, rep),
/// instance (seed, "instance", d). Throws FitFailure listing replication
/// indices when a pipeline fails on more than 5% of replications.
ExperimentResult run_experiment(const ExperimentConfig& cfg, unsigned jobs = 1);

/// Oracle-only pass: one row per (rep, pipeline) with evaluator "oracle" and
/// a_hat equal to the oracle value.
ExperimentResult run_oracle(const ExperimentConfig& cfg, unsigned jobs = 1);

std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows);

/// Shortest decimal form with 12 significant digits.
std::string format_number(double v);

std::string to_csv(const std::vector<ResultRow>& rows, bool extended = false);
std::string to_json(const std::vector<ResultRow>& rows, bool extended = false);
std::vector<ResultRow> parse_csv(const std::string& text);

/// Writes rows in "csv" or "json" format. Throws IoError.
void emit(const std::vector<ResultRow>& rows, const std::string& format, const std::string& path,
          bool extended = false);

// ----------------------------------------------------------------- registry

using ProblemBuilder =
    std::function<ProblemInstance(const nlohmann::json& params, Index n, Index d_xi, std::uint64_t seed)>;

struct ProblemEntry {
  std::string name;
  std::string description;
  ProblemBuilder build;
};

const std::vector<ProblemEntry>& problem_registry();
const ProblemEntry& find_problem(const std::string& name);

} // namespace oic
