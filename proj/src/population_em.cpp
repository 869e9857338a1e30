#include "omda/population_em.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "omda/mixture.hpp"

namespace omda {

namespace {

constexpr double kFdStep = 1e-5;      // centered-difference step for derivative checks
constexpr double kGridLo = 1e-4;      // grid lower edge; keeps ratios m(t)/t away from 0/0
constexpr double kKlFloor = 1e-15;    // trace early-exit level
constexpr double kCheckTol = 1e-8;

void check_domain(double theta_norm, const PopulationSetting& setting, const char* where) {
  if (!(theta_norm >= 0.0) || theta_norm * theta_norm >= setting.d) {
    throw std::domain_error(std::string(where) + ": need 0 <= theta_norm < sqrt(d) so the " +
                            "hypersurface variance stays positive; got " +
                            std::to_string(theta_norm) + " with d = " + std::to_string(setting.d));
  }
}

}  // namespace

PopulationSetting::PopulationSetting(int d_, double p_, QuadratureRule rule_)
    : d(d_), p(p_), rule(std::move(rule_)) {
  if (d < 1) throw std::invalid_argument("PopulationSetting: d must be >= 1");
  if (!(p > 0.5 && p < 1.0)) {
    throw std::invalid_argument("PopulationSetting: p must lie in (1/2, 1), got " +
                                std::to_string(p));
  }
}

double PopulationSetting::unbalance_q() const {
  const double s = 2.0 * p - 1.0;
  return 1.0 - 0.5 * s * s;
}

double pop_em_operator(double theta_norm, const PopulationSetting& setting) {
  check_domain(theta_norm, setting, "pop_em_operator");
  const double sigma_sq = 1.0 - theta_norm * theta_norm / setting.d;
  const double scale = theta_norm / sigma_sq;
  const double bias = half_log_odds(setting.p);
  return expect_std_normal([&](double z) { return std::tanh(scale * z + bias) * z; },
                           setting.rule);
}

std::pair<double, double> pop_em_step(double theta_norm, const PopulationSetting& setting) {
  const double next = pop_em_operator(theta_norm, setting);
  return {next, 1.0 - next * next / setting.d};
}

double radial_risk(double theta_norm, const PopulationSetting& setting) {
  check_domain(theta_norm, setting, "radial_risk");
  const double sigma_sq = 1.0 - theta_norm * theta_norm / setting.d;
  return radial_neg_loglik(theta_norm, sigma_sq, setting.p, setting.d, setting.rule);
}

double radial_risk_derivative(double theta_norm, const PopulationSetting& setting) {
  check_domain(theta_norm, setting, "radial_risk_derivative");
  const double u = theta_norm * theta_norm / setting.d;
  return (1.0 + u) / ((1.0 - u) * (1.0 - u)) *
         (theta_norm - pop_em_operator(theta_norm, setting));
}

double contraction_radius(const PopulationSetting& setting) {
  const double q = setting.unbalance_q();
  return std::sqrt(setting.d * (2.0 + q - std::sqrt(8.0 * q + q * q)) / 2.0);
}

double lower_bound_radius(const PopulationSetting& setting) {
  return 1.0 / (std::sqrt(2.0) + 1.0 / (std::sqrt(2.0) * setting.d));
}

double init_radius(const PopulationSetting& setting) {
  return std::min(contraction_radius(setting), lower_bound_radius(setting));
}

double contraction_rho(double theta0_norm, const PopulationSetting& setting) {
  const double radius = contraction_radius(setting);
  if (!(theta0_norm >= 0.0) || theta0_norm >= radius) {
    throw std::domain_error("contraction_rho: theta0_norm must lie inside the contraction radius [0, " +
                            std::to_string(radius) + "), got " + std::to_string(theta0_norm));
  }
  const double u = theta0_norm * theta0_norm / setting.d;
  return (1.0 + u) / ((1.0 - u) * (1.0 - u)) * setting.unbalance_q();
}

double kl_decay_bound(double theta0_norm, const PopulationSetting& setting) {
  check_domain(theta0_norm, setting, "kl_decay_bound");
  const double u = theta0_norm * theta0_norm / setting.d;
  const double c1 = (1.0 - u) * (1.0 - u) / (1.0 + u);
  const double c2 = c1 - setting.unbalance_q();
  return 1.0 / (1.0 + c2);
}

EmTrace run_population_em(double theta0_norm, int iterations,
                          const PopulationSetting& setting) {
  // Gate on the weight-independent radius branch: it admits every reference
  // trace configuration, while the stricter contraction radius only guards
  // the quantities that need rho < 1 (contraction_rho, property_report).
  const double radius = lower_bound_radius(setting);
  if (!(theta0_norm >= 0.0) || theta0_norm >= radius) {
    throw std::domain_error("run_population_em: theta0_norm must lie inside the initialization radius [0, " +
                            std::to_string(radius) + "), got " + std::to_string(theta0_norm));
  }
  if (iterations < 1) throw std::invalid_argument("run_population_em: iterations must be >= 1");

  const double risk_at_zero = radial_risk(0.0, setting);
  EmTrace trace;
  trace.context = "population d=" + std::to_string(setting.d) + " p=" + std::to_string(setting.p);

  double theta = theta0_norm;
  for (int t = 0; t <= iterations; ++t) {
    const double sigma_sq = 1.0 - theta * theta / setting.d;
    const double kl = radial_risk(theta, setting) - risk_at_zero;
    trace.entries.push_back({t, theta, sigma_sq, kl});
    if (kl < kKlFloor) break;
    if (t < iterations) theta = pop_em_operator(theta, setting);
  }
  return trace;
}

double pop_em_operator_lower_bound(double theta_norm, const PopulationSetting& setting) {
  const double radius = lower_bound_radius(setting);
  if (!(theta_norm >= 0.0) || theta_norm > radius) {
    throw std::domain_error("pop_em_operator_lower_bound: theta_norm must lie inside the bound radius [0, " +
                            std::to_string(radius) + "], got " + std::to_string(theta_norm));
  }
  const double u = theta_norm * theta_norm / setting.d;
  const double ratio = 4.0 * theta_norm * theta_norm / ((1.0 - u) * (1.0 - u));
  return 4.0 * setting.p * (1.0 - setting.p) * (1.0 - ratio) * theta_norm;
}

bool PropertyReport::all_pass() const {
  return std::all_of(checks.begin(), checks.end(),
                     [](const PropertyCheck& c) { return c.pass; });
}

PropertyReport property_report(const PopulationSetting& setting, double theta0_norm,
                               int grid_size) {
  const double radius = contraction_radius(setting);
  if (!(theta0_norm > 0.0) || theta0_norm >= radius) {
    throw std::domain_error("property_report: theta0_norm must lie inside the contraction radius (0, " +
                            std::to_string(radius) + "), got " + std::to_string(theta0_norm));
  }
  if (grid_size < 3) throw std::invalid_argument("property_report: grid_size must be >= 3");

  const double rho = contraction_rho(theta0_norm, setting);
  const double risk_at_zero = radial_risk(0.0, setting);
  const double lb_radius = lower_bound_radius(setting);

  std::vector<double> grid(grid_size);
  const double step = (theta0_norm - kGridLo) / (grid_size - 1);
  for (int i = 0; i < grid_size; ++i) grid[i] = kGridLo + step * i;

  std::vector<double> m_vals(grid_size), risk_vals(grid_size);
  for (int i = 0; i < grid_size; ++i) {
    m_vals[i] = pop_em_operator(grid[i], setting);
    risk_vals[i] = radial_risk(grid[i], setting);
  }

  PropertyReport report;
  report.theta0 = theta0_norm;
  report.rho = rho;
  report.radius = init_radius(setting);
  report.grid_size = grid_size;

  // 1. finite-difference m'(t) < 1
  double margin = std::numeric_limits<double>::infinity();
  for (double t : grid) {
    const double deriv = (pop_em_operator(t + kFdStep, setting) -
                          pop_em_operator(t - kFdStep, setting)) / (2.0 * kFdStep);
    margin = std::min(margin, 1.0 - deriv);
  }
  report.checks.push_back({"m_derivative_below_one", margin > 0.0, margin});

  // 2. m(t) <= rho t
  margin = std::numeric_limits<double>::infinity();
  for (int i = 0; i < grid_size; ++i) margin = std::min(margin, rho * grid[i] - m_vals[i]);
  report.checks.push_back({"contraction", margin >= -kCheckTol, margin});

  // 3. convexity via second differences of the risk on the grid
  margin = std::numeric_limits<double>::infinity();
  for (int i = 1; i + 1 < grid_size; ++i) {
    const double second =
        (risk_vals[i - 1] - 2.0 * risk_vals[i] + risk_vals[i + 1]) / (step * step);
    margin = std::min(margin, second);
  }
  report.checks.push_back({"convexity", margin >= -kCheckTol, margin});

  // 4. PL inequality [ell']^2 >= (1-rho)(ell - ell(0))
  margin = std::numeric_limits<double>::infinity();
  for (int i = 0; i < grid_size; ++i) {
    const double deriv = radial_risk_derivative(grid[i], setting);
    margin = std::min(margin, deriv * deriv - (1.0 - rho) * (risk_vals[i] - risk_at_zero));
  }
  report.checks.push_back({"pl_inequality", margin >= -kCheckTol, margin});

  // 5. operator lower bound on its admissible range
  margin = std::numeric_limits<double>::infinity();
  for (int i = 0; i < grid_size; ++i) {
    if (grid[i] > lb_radius) break;
    margin = std::min(margin, m_vals[i] - pop_em_operator_lower_bound(grid[i], setting));
  }
  report.checks.push_back({"operator_lower_bound", margin >= -kCheckTol, margin});

  return report;
}

}  // namespace omda
