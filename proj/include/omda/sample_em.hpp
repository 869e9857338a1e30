// Finite-sample EM for the overspecified mixture: the explicit parameter
// updates, the scalar sample operator used in perturbation studies, fitting
// with a log(n) iteration budget, and the sup-gap statistics between the
// sample and population operators.
#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "omda/errors.hpp"
#include "omda/mixture.hpp"
#include "omda/population_em.hpp"
#include "omda/trace.hpp"

namespace omda {

// Immutable view of a sample with the squared-norm total cached; the EM update
// denominator sum_sq/(n d) - |theta|^2/d is reused every iteration.
class SampleContext {
 public:
  SampleContext(Eigen::MatrixXd data, double p);

  const Eigen::MatrixXd& data() const { return data_; }
  double p() const { return p_; }
  double sum_sq() const { return sum_sq_; }
  Eigen::Index n() const { return data_.rows(); }
  Eigen::Index d() const { return data_.cols(); }

 private:
  Eigen::MatrixXd data_;
  double p_;
  double sum_sq_;
};

// One EM update:
//   theta' = (1/n) sum_i tilt(p, theta.Z_i / s) Z_i,   s = sum_sq/(nd) - |theta|^2/d,
//   sigma2' = sum_sq/(nd) - |theta'|^2/d.
// The weight p is never updated.  Throws DegenerateVarianceError when a
// denominator falls to <= 1e-10 rather than clamping.
MixtureParams em_step(const SampleContext& ctx, const MixtureParams& params);

// Scalar sample operator along a unit direction: projections z_i = dir.Z_i,
//   m_n(t) = (1/n) sum_i tilt(p, t z_i / s) z_i,
// with s built from the full-vector norms.  Requires theta_norm > 0.
double sample_em_operator(const SampleContext& ctx, double theta_norm,
                          const Eigen::VectorXd& direction);

struct FitBudget {
  double c2 = 3.0;           // iteration budget multiplier
  double delta = 0.05;       // tail probability entering the budget
  int min_iterations = 10;
  double step_tol = 1e-12;   // early exit on |theta_{t+1} - theta_t|

  int iterations(Eigen::Index n) const;
};

// Initialization radius for sample-based fits:
//   min( contraction_radius, 1/(1 + sqrt(1 + 1/d)) ),
// the smaller of the two radius branches in play (the population init_radius
// uses the looser 1/(sqrt2 + 1/(sqrt2 d)) branch; both are exposed).
double fit_init_radius(int d, double p);

struct FitResult {
  MixtureParams params;
  EmTrace trace;
};

// Runs em_step for budget.iterations(n) steps or until the step tolerance is
// met, logging (t, |theta_t|, sigma_t^2, KL_t) per iterate.  Requires |theta0|
// below fit_init_radius.  Degeneracies abort with the iteration index.
FitResult fit(const SampleContext& ctx, const Eigen::VectorXd& theta0,
              const FitBudget& budget, const QuadratureRule& rule);

struct PerturbationStats {
  std::vector<double> sup_by_seed;
  double median;
  double q25;
  double q75;
};

// For each of `seeds` replications, draws n points from N(0, I_d) on stream
// (seed, stream_domain + replication index) and takes the max over the grid
// {r i/grid_size : i = 1..grid_size} of |m_n(t) - m(t)| along e1.  An empty
// grid (r = 0) gives sup 0.  Requires r <= init_radius(setting).
PerturbationStats perturbation_sup(const PopulationSetting& setting, Eigen::Index n, double r,
                                   int grid_size, int seeds, std::uint64_t seed,
                                   std::uint64_t stream_domain);

}  // namespace omda
