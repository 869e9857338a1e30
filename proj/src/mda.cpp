#include "omda/mda.hpp"

#include <cmath>
#include <stdexcept>

namespace omda {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

// One (X, Y) draw: label first, then the d feature coordinates, so a stream
// prefix of a longer run generates the same leading pairs.
void draw_pair(const Eigen::VectorXd& mu, RngStream& rng, double& label,
               Eigen::VectorXd& x) {
  label = rng.uniform() < 0.5 ? -1.0 : 1.0;
  for (Eigen::Index j = 0; j < mu.size(); ++j) x(j) = label * mu(j) + rng.normal();
}

}  // namespace

LabeledDataset generate_labeled(const Eigen::VectorXd& mu, Eigen::Index n, RngStream& rng) {
  if (n < 2) throw std::invalid_argument("generate_labeled: need n >= 2");
  if (mu.size() < 1) throw std::invalid_argument("generate_labeled: need d >= 1");
  LabeledDataset ds;
  ds.features.resize(n, mu.size());
  ds.labels.resize(n);
  Eigen::VectorXd x(mu.size());
  double label = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    draw_pair(mu, rng, label, x);
    ds.features.row(i) = x;
    ds.labels(i) = label > 0 ? 1 : -1;
  }
  return ds;
}

Eigen::VectorXd estimate_mu(const LabeledDataset& ds) {
  if (ds.features.rows() != ds.labels.size()) {
    throw std::invalid_argument("estimate_mu: features/labels size mismatch");
  }
  return ds.features.transpose() * ds.labels.cast<double>() /
         static_cast<double>(ds.features.rows());
}

MdaFit fit_mda(const LabeledDataset& ds, const Eigen::VectorXd& theta0, double p,
               const FitBudget& budget, const QuadratureRule& rule) {
  const Eigen::VectorXd mu_hat = estimate_mu(ds);
  Eigen::MatrixXd folded =
      ds.features.array().colwise() * ds.labels.cast<double>().array();
  folded.rowwise() -= mu_hat.transpose();
  SampleContext ctx(std::move(folded), p);
  FitResult result = fit(ctx, theta0, budget, rule);
  return {{mu_hat, std::move(result.params)}, std::move(result.trace)};
}

int classify(const MdaModel& model, const Eigen::VectorXd& x) {
  if (x.size() != model.mu_hat.size()) {
    throw std::invalid_argument("classify: point dimension mismatch");
  }
  const double log_plus = log_density(x - model.mu_hat, model.mixture);
  const double log_minus = log_density(x + model.mu_hat, model.mixture);
  return log_plus > log_minus ? 1 : -1;
}

double bayes_risk(double mu_norm) {
  if (!(mu_norm >= 0.0)) {
    throw std::invalid_argument("bayes_risk: mu_norm must be nonnegative");
  }
  return 0.5 * std::erfc(mu_norm / std::sqrt(2.0));
}

ErrorEstimate estimate_error(const MdaModel& model, const Eigen::VectorXd& mu,
                             Eigen::Index n_test, RngStream& rng) {
  if (n_test < 1000) throw std::invalid_argument("estimate_error: need n_test >= 1000");
  if (mu.size() != model.mu_hat.size()) {
    throw std::invalid_argument("estimate_error: mu dimension mismatch");
  }
  Eigen::VectorXd x(mu.size());
  double label = 0.0;
  Eigen::Index errors = 0;
  for (Eigen::Index i = 0; i < n_test; ++i) {
    draw_pair(mu, rng, label, x);
    if (classify(model, x) != (label > 0 ? 1 : -1)) ++errors;
  }
  const double rate = static_cast<double>(errors) / static_cast<double>(n_test);
  const double half_width =
      1.959963984540054 * std::sqrt(rate * (1.0 - rate) / static_cast<double>(n_test));
  return {rate, half_width};
}

McEstimate tv_gap_estimate(const MdaModel& model, const Eigen::VectorXd& mu, int sign,
                           Eigen::Index n_mc, RngStream& rng) {
  if (n_mc < 10000) throw std::invalid_argument("tv_gap_estimate: need n_mc >= 10000");
  if (sign != 1 && sign != -1) throw std::invalid_argument("tv_gap_estimate: sign must be +/-1");
  if (mu.size() != model.mu_hat.size()) {
    throw std::invalid_argument("tv_gap_estimate: mu dimension mismatch");
  }
  const Eigen::Index d = mu.size();
  const Eigen::VectorXd shift = sign * (mu - model.mu_hat);
  Eigen::VectorXd noise(d);
  double sum = 0.0, sum_sq = 0.0;
  for (Eigen::Index i = 0; i < n_mc; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) noise(j) = rng.normal();
    // X = sign*mu + noise, so X - sign*mu_hat = noise + sign*(mu - mu_hat).
    const double log_fit = log_density(noise + shift, model.mixture);
    const double log_true = -0.5 * d * kLog2Pi - 0.5 * noise.squaredNorm();
    const double g = 0.5 * std::abs(1.0 - std::exp(log_fit - log_true));
    sum += g;
    sum_sq += g * g;
  }
  const double n = static_cast<double>(n_mc);
  const double mean = sum / n;
  const double var = std::max(sum_sq / n - mean * mean, 0.0);
  return {mean, std::sqrt(var / n)};
}

}  // namespace omda
