// Population-level EM for the overspecified mixture in its one-dimensional
// radial form: the norm update map, the radial risk and its derivative, the
// admissible initialization radii, and the numerical property suite for the
// contraction / convexity / PL structure behind the geometric KL decay.
#pragma once

#include <string>
#include <utility>
#include <vector>

#include "omda/quadrature.hpp"
#include "omda/trace.hpp"

namespace omda {

struct PopulationSetting {
  int d;
  double p;
  QuadratureRule rule;

  PopulationSetting(int d, double p, QuadratureRule rule);

  // q = 1 - (2p-1)^2 / 2; the variance proxy of the unbalanced weight that all
  // contraction constants are expressed in.  In (1/2, 1) for p in (1/2, 1).
  double unbalance_q() const;
};

// One-dimensional population EM map on the location norm,
//   m(t) = E_Z[ tilt(p, t Z / (1 - t^2/d)) Z ].
// Requires t^2 < d (the hypersurface variance stays positive).
double pop_em_operator(double theta_norm, const PopulationSetting& setting);

// (theta', sigma2') with theta' = m(theta) and sigma2' = 1 - theta'^2/d; the
// iterates stay on the hypersurface sigma^2 = 1 - |theta|^2/d by construction.
std::pair<double, double> pop_em_step(double theta_norm, const PopulationSetting& setting);

// Radial risk: negative population log-likelihood restricted to the hypersurface,
//   ell(t) = (d/2) log(2 pi (1-t^2/d)) + (d+t^2)/(2(1-t^2/d))
//            - E_Z[log_weighted_cosh(p, t Z/(1-t^2/d))].
double radial_risk(double theta_norm, const PopulationSetting& setting);

// Closed form ell'(t) = (1+t^2/d)/(1-t^2/d)^2 * (t - m(t)).
double radial_risk_derivative(double theta_norm, const PopulationSetting& setting);

// Largest theta0 with contraction factor rho < 1:
//   sqrt(d * (2 + q - sqrt(8q + q^2)) / 2).
double contraction_radius(const PopulationSetting& setting);

// Radius below which the operator lower bound holds: 1/(sqrt(2) + 1/(sqrt(2) d)).
double lower_bound_radius(const PopulationSetting& setting);

// Population initialization radius: min(contraction_radius, lower_bound_radius).
double init_radius(const PopulationSetting& setting);

// rho(theta0) = (1+theta0^2/d)/(1-theta0^2/d)^2 * q, in (0,1) below the
// contraction radius.  Throws std::domain_error, reporting the admissible
// radius, when theta0 is too large.
double contraction_rho(double theta0_norm, const PopulationSetting& setting);

// Per-step upper bound on KL_{t+1}/KL_t from the decay proof's constants:
// 1/(1+c2) with c1 = (1-theta0^2/d)^2/(1+theta0^2/d) and c2 = c1 - q.
double kl_decay_bound(double theta0_norm, const PopulationSetting& setting);

// Iterates the norm map for `iterations` steps (or until KL < 1e-15, to avoid
// logging numerical noise), recording (t, |theta_t|, sigma_t^2, KL_t) with
// KL_t = ell(theta_t) - ell(0).  Requires theta0 below lower_bound_radius, the
// weight-independent radius branch; the stricter contraction_radius gates only
// the rho-dependent operations.
EmTrace run_population_em(double theta0_norm, int iterations, const PopulationSetting& setting);

// Lower bound m(t) >= 4p(1-p)(1 - 4t^2/(1-t^2/d)^2) t, valid on
// [0, lower_bound_radius].  Throws std::domain_error outside that range.
double pop_em_operator_lower_bound(double theta_norm, const PopulationSetting& setting);

struct PropertyCheck {
  std::string name;
  bool pass;
  double worst_margin;  // min over the grid of (lhs - rhs); pass iff >= -tolerance
};

struct PropertyReport {
  double theta0;
  double rho;
  double radius;  // init_radius of the setting
  int grid_size;
  std::vector<PropertyCheck> checks;

  bool all_pass() const;
};

// Verifies, on a grid over [1e-4, theta0]:
//   1. finite-difference m'(t) < 1,
//   2. m(t) <= rho t               (contraction),
//   3. second differences of ell >= -1e-8   (convexity),
//   4. [ell'(t)]^2 >= (1-rho)(ell(t)-ell(0)) (PL inequality),
//   5. m(t) >= its closed-form lower bound on the bound's admissible range.
// Requires theta0 below contraction_radius (rho must exist).
PropertyReport property_report(const PopulationSetting& setting, double theta0_norm,
                               int grid_size);

}  // namespace omda
