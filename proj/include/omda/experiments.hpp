// Experiment harness: population KL traces, statistical KL-vs-n scaling,
// MDA excess risk vs sample size, sample-vs-population operator perturbation
// scaling, and the radial-risk property suite, all emitting machine-readable
// tables with built-in pass/fail checks.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "omda/result_table.hpp"

namespace omda {

enum class ExperimentKind { PopTrace, KlVsN, MdaError, Perturbation, Properties };

ExperimentKind experiment_kind_from_name(const std::string& name);
std::string experiment_kind_name(ExperimentKind kind);

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::PopTrace;
  int d = 2;
  std::vector<double> p_values;        // one block per p for pop-trace/properties
  std::vector<double> theta0;          // length d, or a single value = norm along e1
  std::vector<long long> n_list;
  std::vector<int> d_list;             // properties only; default {1, 2, 10}
  int seeds = 0;                       // 0 = per-experiment default (50 for perturbation, else 10)
  int replications = 0;                // 0 = default 10
  double delta = 0.05;
  double alpha = 0.25;
  int quad_order = 64;
  int grid_size = 0;                   // 0 = default 200
  int iterations = 0;                  // 0 = default 30 (population trace length)
  double radius = 0.2;                 // perturbation sup radius
  std::vector<double> mu;              // class mean for mda-error; default e1
  long long n_test = 200000;
  long long n_mc = 100000;
  std::uint64_t base_seed = 9001;
  std::string output_dir = "results";
  bool plot = false;

  // Fills experiment-specific defaults for fields left empty and validates
  // ranges.  Throws std::invalid_argument on bad values.
  void finalize(ExperimentKind kind);

  // Resolved theta0 as a vector of length d.
  std::vector<double> theta0_vector() const;

  nlohmann::ordered_json to_json() const;
  std::string hash() const;
};

// `key = value` lines, '#' comments; values are scalars or comma-separated
// lists.  Unknown keys are rejected.  Applied on top of the current values, so
// the precedence chain is defaults < config file < command-line flags.
void apply_config_file(ExperimentConfig& config, const std::string& path);
void apply_config_line(ExperimentConfig& config, const std::string& key,
                       const std::string& value);

struct Check {
  std::string name;
  bool pass;
  std::string detail;
};

struct SlopeFit {
  bool valid = false;
  double slope = 0.0;
  double std_error = 0.0;
  double intercept = 0.0;
  int points = 0;
  std::string note;  // diagnostic when invalid
};

// Least squares of y on x with the conventional residual standard error of the
// slope; invalid (with a note) when fewer than two distinct x remain.
SlopeFit fit_log_log_slope(const std::vector<double>& x, const std::vector<double>& y);

struct ExperimentResult {
  ResultTable table;
  std::vector<Check> checks;
  nlohmann::ordered_json summary;

  bool all_checks_pass() const;
};

// Population KL traces, one block per p.
// Columns: p, t, theta_norm, sigma_sq, kl, kl_ratio (nan at t = 0).
ExperimentResult run_pop_trace(const ExperimentConfig& config);

// Fits the mixture to N(0,I) samples per (n, replication) and regresses the
// log of the mean final KL on log n.
// Columns: n, rep, iterations, final_theta_norm, final_sigma_sq, final_kl.
ExperimentResult run_kl_vs_n(const ExperimentConfig& config);

// MDA excess risk over Bayes vs training size, with the total-variation
// sandwich diagnostic per run.
// Columns: n, seed, error_rate, excess_risk, ci, tv_plus, tv_minus.
ExperimentResult run_mda_error(const ExperimentConfig& config);

// Sup-gap between the sample and population EM operators over seeds and n.
// Columns: n, seed, sup_gap.
ExperimentResult run_perturbation(const ExperimentConfig& config);

// Property suite over the (d, p) grid with theta0 = 0.9 * init_radius unless
// an explicit theta0 norm is configured.  Property codes: 1 derivative bound,
// 2 contraction, 3 convexity, 4 PL inequality, 5 operator lower bound.
// Columns: d, p, theta0, rho, init_radius, property, pass, worst_margin,
// skipped (1 when the combination is out of radius; such rows carry nan
// margins and pass = 0).
ExperimentResult run_properties(const ExperimentConfig& config);

ExperimentResult run_experiment(const ExperimentConfig& config);

// Writes <experiment>.csv, <experiment>_summary.json and, when configured,
// <experiment>.svg under config.output_dir.  Returns the summary path.
std::string write_outputs(const ExperimentConfig& config, const ExperimentResult& result);

}  // namespace omda
