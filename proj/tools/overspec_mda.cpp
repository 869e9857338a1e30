// Command-line experiment runner.  Exit codes: 0 all checks pass, 1 a check
// failed, 2 usage/config error, 3 numerical/domain error.
#include <cstdio>
#include <exception>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "omda/errors.hpp"
#include "omda/experiments.hpp"

namespace {

struct RawFlags {
  std::string config_file;
  // Captured verbatim and pushed through the config parser so the CLI and the
  // config file accept identical syntax; only flags the user actually passed
  // are applied, giving flags > file > defaults precedence.
  std::vector<std::pair<std::string, std::string>> assignments;
  bool plot = false;
};

void add_experiment_options(CLI::App* sub, RawFlags& flags) {
  auto capture = [&flags, sub](const std::string& flag, const std::string& key,
                               const std::string& help) {
    std::function<void(const std::string&)> store = [&flags, key](const std::string& value) {
      flags.assignments.emplace_back(key, value);
    };
    sub->add_option_function<std::string>(flag, store, help);
  };
  sub->add_option("--config", flags.config_file, "config file with key = value lines");
  capture("--d", "d", "dimension");
  capture("--p", "p", "mixture weight(s) in (1/2,1), comma separated");
  capture("--theta0", "theta0", "initial location: d comma-separated values or a single norm");
  capture("--n-list", "n_list", "sample sizes, comma separated");
  capture("--d-list", "d_list", "dimension grid (properties)");
  capture("--seeds", "seeds", "number of seeds");
  capture("--reps", "reps", "replications per sample size");
  capture("--delta", "delta", "tail probability");
  capture("--alpha", "alpha", "rate parameter in (0,1/2)");
  capture("--quad-order", "quad_order", "Gauss-Hermite order");
  capture("--grid-size", "grid_size", "grid points for scans");
  capture("--iterations", "iterations", "population trace length");
  capture("--radius", "radius", "perturbation sup radius");
  capture("--mu", "mu", "class mean: d values or a single norm");
  capture("--n-test", "n_test", "fresh test sample size");
  capture("--n-mc", "n_mc", "Monte Carlo size for TV gaps");
  capture("--base-seed", "base_seed", "base RNG seed");
  capture("--out", "out", "output directory");
  sub->add_flag("--plot", flags.plot, "also write an SVG line plot");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"overspecified mixture discriminant analysis experiments"};
  app.require_subcommand(1);

  const std::vector<std::string> kinds = {"pop-trace", "kl-vs-n", "mda-error", "perturbation",
                                          "properties"};
  const std::vector<std::string> descriptions = {
      "population EM KL traces across mixture weights",
      "final KL of sample EM fits vs sample size, with log-log slope",
      "MDA excess classification risk vs training size",
      "sup gap between sample and population EM operators vs n",
      "contraction/convexity/PL property suite over a (d, p) grid"};

  std::vector<RawFlags> flags(kinds.size());
  for (std::size_t i = 0; i < kinds.size(); ++i) {
    add_experiment_options(app.add_subcommand(kinds[i], descriptions[i]), flags[i]);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  std::size_t chosen = 0;
  for (std::size_t i = 0; i < kinds.size(); ++i) {
    if (app.get_subcommand(kinds[i])->parsed()) chosen = i;
  }
  const RawFlags& raw = flags[chosen];

  omda::ExperimentConfig config;
  try {
    if (!raw.config_file.empty()) omda::apply_config_file(config, raw.config_file);
    for (const auto& [key, value] : raw.assignments) {
      omda::apply_config_line(config, key, value);
    }
    if (raw.plot) config.plot = true;
    config.finalize(omda::experiment_kind_from_name(kinds[chosen]));
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  }

  try {
    const omda::ExperimentResult result = omda::run_experiment(config);
    const std::string summary_path = omda::write_outputs(config, result);
    for (const omda::Check& check : result.checks) {
      std::printf("[%s] %s: %s\n", check.pass ? "PASS" : "FAIL", check.name.c_str(),
                  check.detail.c_str());
    }
    std::printf("summary: %s\n", summary_path.c_str());
    return result.all_checks_pass() ? 0 : 1;
  } catch (const omda::DegenerateVarianceError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 3;
  } catch (const std::domain_error& e) {
    std::cerr << "domain error: " << e.what() << '\n';
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
}
