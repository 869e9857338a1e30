#include "omda/mixture.hpp"

#include <cmath>
#include <stdexcept>

namespace omda {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

void check_weight(double p) {
  if (!(p > 0.5 && p < 1.0)) {
    throw std::invalid_argument("mixture weight p must lie in (1/2, 1), got " +
                                std::to_string(p));
  }
}

// log cosh without overflow for large |y|.
double log_cosh(double y) {
  const double a = std::abs(y);
  return a + std::log1p(std::exp(-2.0 * a)) - M_LN2;
}

}  // namespace

MixtureParams::MixtureParams(Eigen::VectorXd theta_, double sigma_sq_, double p_)
    : theta(std::move(theta_)), sigma_sq(sigma_sq_), p(p_) {
  if (theta.size() < 1) throw std::invalid_argument("MixtureParams: dimension must be >= 1");
  if (!(sigma_sq > 0.0)) {
    throw std::invalid_argument("MixtureParams: sigma_sq must be positive, got " +
                                std::to_string(sigma_sq));
  }
  check_weight(p);
}

double tilt(double p, double x) {
  check_weight(p);
  return std::tanh(x + half_log_odds(p));
}

double log_weighted_cosh(double p, double x) {
  check_weight(p);
  return 0.5 * std::log(4.0 * p * (1.0 - p)) + log_cosh(x + half_log_odds(p));
}

double log_density(const Eigen::VectorXd& x, const MixtureParams& params) {
  if (x.size() != params.theta.size()) {
    throw std::invalid_argument("log_density: point has dimension " + std::to_string(x.size()) +
                                ", mixture has " + std::to_string(params.theta.size()));
  }
  const double s2 = params.sigma_sq;
  const int d = params.dim();
  return -0.5 * d * (kLog2Pi + std::log(s2)) -
         (x.squaredNorm() + params.theta.squaredNorm()) / (2.0 * s2) +
         log_weighted_cosh(params.p, params.theta.dot(x) / s2);
}

Eigen::MatrixXd sample_mixture(const MixtureParams& params, Eigen::Index n, RngStream& rng) {
  if (n < 1) throw std::invalid_argument("sample_mixture: n must be >= 1");
  const Eigen::Index d = params.theta.size();
  const double sigma = std::sqrt(params.sigma_sq);
  Eigen::MatrixXd out(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double sign = rng.uniform() < params.p ? 1.0 : -1.0;
    for (Eigen::Index j = 0; j < d; ++j) {
      out(i, j) = sign * params.theta(j) + sigma * rng.normal();
    }
  }
  return out;
}

double radial_neg_loglik(double theta_norm, double sigma_sq, double p, int d,
                         const QuadratureRule& rule) {
  if (!(sigma_sq > 0.0)) {
    throw std::invalid_argument("radial_neg_loglik: sigma_sq must be positive, got " +
                                std::to_string(sigma_sq));
  }
  check_weight(p);
  const double scale = theta_norm / sigma_sq;
  const double expected = expect_std_normal(
      [&](double z) { return log_weighted_cosh(p, scale * z); }, rule);
  return 0.5 * d * (kLog2Pi + std::log(sigma_sq)) +
         (d + theta_norm * theta_norm) / (2.0 * sigma_sq) - expected;
}

double kl_vs_standard_normal(const MixtureParams& params, const QuadratureRule& rule) {
  if (!(params.sigma_sq > 0.0)) {
    throw std::invalid_argument("kl_vs_standard_normal: sigma_sq must be positive");
  }
  const int d = params.dim();
  return radial_neg_loglik(params.theta_norm(), params.sigma_sq, params.p, d, rule) -
         0.5 * d * (1.0 + kLog2Pi);
}

}  // namespace omda
