// Mixture discriminant analysis on two balanced Gaussian classes N(+/-mu, I):
// data generation, the folded-sample reduction to a single mixture fit, the
// plug-in classifier, Bayes risk, and Monte Carlo error / total-variation
// diagnostics for the excess-risk bound.
#pragma once

#include <Eigen/Dense>

#include "omda/mixture.hpp"
#include "omda/rng.hpp"
#include "omda/sample_em.hpp"
#include "omda/trace.hpp"

namespace omda {

struct LabeledDataset {
  Eigen::MatrixXd features;  // n x d
  Eigen::VectorXi labels;    // entries exactly +/-1
};

// Y uniform on {-1,+1}; X | Y = y ~ N(y mu, I).
LabeledDataset generate_labeled(const Eigen::VectorXd& mu, Eigen::Index n, RngStream& rng);

// MLE of the class mean: (1/n) sum_i X_i Y_i.
Eigen::VectorXd estimate_mu(const LabeledDataset& ds);

struct MdaModel {
  Eigen::VectorXd mu_hat;
  MixtureParams mixture;  // fitted (theta, sigma^2) with the fixed weight p
};

struct MdaFit {
  MdaModel model;
  EmTrace trace;
};

// Estimates mu once, folds the sample to {X_i Y_i} ~ N(mu, I), and fits the
// overspecified mixture to the centered residuals X_i Y_i - mu_hat, so the EM
// sees (approximately) standard-normal data; the location is handled by the
// classifier, not the EM.
MdaFit fit_mda(const LabeledDataset& ds, const Eigen::VectorXd& theta0, double p,
               const FitBudget& budget, const QuadratureRule& rule);

// Plug-in rule: +1 iff the class-conditional density at +mu_hat strictly
// exceeds the one at -mu_hat; ties resolve to -1.  Compared in log space.
int classify(const MdaModel& model, const Eigen::VectorXd& x);

// Phi(-|mu|), the minimal misclassification probability for this model.
double bayes_risk(double mu_norm);

struct ErrorEstimate {
  double rate;
  double ci_half_width;  // 95% binomial half-width
};

// Misclassification rate on n_test fresh pairs from the data distribution;
// never reuses training data.  Requires n_test >= 1000.
ErrorEstimate estimate_error(const MdaModel& model, const Eigen::VectorXd& mu,
                             Eigen::Index n_test, RngStream& rng);

struct McEstimate {
  double value;
  double std_error;
};

// Monte Carlo estimate of the total variation distance between the true
// class-conditional N(sign mu, I) and the fitted mixture for that class:
//   (1/2) E_{X ~ N(sign mu, I)} | 1 - f_fit(X) / phi(X - sign mu) |.
// Requires n_mc >= 10000 and sign in {-1, +1}.
McEstimate tv_gap_estimate(const MdaModel& model, const Eigen::VectorXd& mu, int sign,
                           Eigen::Index n_mc, RngStream& rng);

}  // namespace omda
