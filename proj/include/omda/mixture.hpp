// Unbalanced two-component location-scale Gaussian mixture:
//   (1-p) N(-theta, sigma^2 I) + p N(+theta, sigma^2 I),  p in (1/2, 1).
#pragma once

#include <Eigen/Dense>

#include "omda/quadrature.hpp"
#include "omda/rng.hpp"

namespace omda {

struct MixtureParams {
  Eigen::VectorXd theta;
  double sigma_sq;
  double p;

  // Validates d >= 1, sigma_sq > 0 and p in (1/2, 1).  The balanced case
  // p = 1/2 is rejected; callers with p < 1/2 map (theta, p) to (-theta, 1-p).
  MixtureParams(Eigen::VectorXd theta, double sigma_sq, double p);

  int dim() const { return static_cast<int>(theta.size()); }
  double theta_norm() const { return theta.norm(); }
};

// Half log-odds of the component weight; the bias term of the stable forms below.
inline double half_log_odds(double p) { return 0.5 * std::log(p / (1.0 - p)); }

// t_p(x) = (p e^x - (1-p) e^-x) / (p e^x + (1-p) e^-x), computed as
// tanh(x + half_log_odds(p)).  Total on the reals, saturates without overflow.
double tilt(double p, double x);

// log(p e^x + (1-p) e^-x), computed as log(4p(1-p))/2 + logcosh(x + bias).
double log_weighted_cosh(double p, double x);

// Log-density of the mixture at x.  Finite for all finite inputs.
double log_density(const Eigen::VectorXd& x, const MixtureParams& params);

// n draws, one per row: +/-theta with probabilities p/1-p plus N(0, sigma^2 I).
Eigen::MatrixXd sample_mixture(const MixtureParams& params, Eigen::Index n, RngStream& rng);

// Negative expected log-likelihood under N(0,I) in its radial form
//   q(t, s2) = (d/2) log(2 pi s2) + (d + t^2)/(2 s2) - E_Z[log_weighted_cosh(p, t Z / s2)],
// the 1-D reduction every Gaussian expectation in this library routes through.
double radial_neg_loglik(double theta_norm, double sigma_sq, double p, int d,
                         const QuadratureRule& rule);

// D_KL[N(0,I) || mixture] = q(|theta|, sigma^2) - (d/2)(1 + log 2 pi).
double kl_vs_standard_normal(const MixtureParams& params, const QuadratureRule& rule);

}  // namespace omda
