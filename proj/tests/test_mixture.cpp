#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include <Eigen/Dense>

#include "omda/mixture.hpp"
#include "omda/quadrature.hpp"
#include "omda/rng.hpp"

using namespace omda;

namespace {

// Direct (overflow-prone) forms used as oracles for the stable identities.
double naive_tilt(double p, double x) {
  const double a = p * std::exp(x), b = (1.0 - p) * std::exp(-x);
  return (a - b) / (a + b);
}

double naive_log_c(double p, double x) {
  return std::log(p * std::exp(x) + (1.0 - p) * std::exp(-x));
}

Eigen::VectorXd vec2(double a, double b) {
  Eigen::VectorXd v(2);
  v << a, b;
  return v;
}

}  // namespace

TEST_CASE("construction rejects invalid parameters") {
  CHECK_THROWS_AS(MixtureParams(Eigen::VectorXd::Zero(2), 1.0, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(MixtureParams(Eigen::VectorXd::Zero(2), 1.0, 0.3), std::invalid_argument);
  CHECK_THROWS_AS(MixtureParams(Eigen::VectorXd::Zero(2), 1.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(MixtureParams(Eigen::VectorXd::Zero(2), 0.0, 0.8), std::invalid_argument);
  CHECK_THROWS_AS(MixtureParams(Eigen::VectorXd::Zero(2), -1.0, 0.8), std::invalid_argument);
  CHECK_THROWS_AS(MixtureParams(Eigen::VectorXd(), 1.0, 0.8), std::invalid_argument);
}

TEST_CASE("tilt at zero equals 2p - 1") {
  CHECK(tilt(0.8, 0.0) == doctest::Approx(0.6).epsilon(1e-14));
  CHECK(tilt(0.6, 0.0) == doctest::Approx(0.2).epsilon(1e-14));
}

TEST_CASE("tilt saturates without overflow") {
  CHECK(tilt(0.8, 1e6) == 1.0);
  CHECK(tilt(0.8, -1e6) == -1.0);
}

TEST_CASE("tilt matches the direct formula at moderate arguments") {
  CHECK(std::abs(tilt(0.6, 0.7) - naive_tilt(0.6, 0.7)) < 1e-14);
  for (double p : {0.6, 0.8, 0.9}) {
    for (double x = -30.0; x <= 30.0; x += 1.7) {
      CHECK(std::abs(tilt(p, x) - naive_tilt(p, x)) < 1e-12);
    }
  }
}

TEST_CASE("log_weighted_cosh at zero vanishes for every weight") {
  for (double p : {0.51, 0.6, 0.8, 0.99}) {
    CHECK(std::abs(log_weighted_cosh(p, 0.0)) < 1e-14);
  }
}

TEST_CASE("log_weighted_cosh follows the dominant-term asymptote") {
  CHECK(log_weighted_cosh(0.8, 800.0) ==
        doctest::Approx(800.0 + std::log(0.8)).epsilon(1e-12));
}

TEST_CASE("log_weighted_cosh matches the direct formula for |x| <= 30") {
  for (double p : {0.6, 0.8, 0.9}) {
    for (double x = -30.0; x <= 30.0; x += 1.3) {
      CHECK(std::abs(log_weighted_cosh(p, x) - naive_log_c(p, x)) < 1e-12);
    }
  }
}

TEST_CASE("derivative of log_weighted_cosh is the tilt") {
  const double h = 1e-5;
  for (double x : {-2.0, -0.3, 0.0, 0.4, 1.9}) {
    const double fd =
        (log_weighted_cosh(0.8, x + h) - log_weighted_cosh(0.8, x - h)) / (2.0 * h);
    CHECK(std::abs(fd - tilt(0.8, x)) < 1e-6);
  }
}

TEST_CASE("log-density collapses to the standard normal at theta=0, sigma2=1") {
  const MixtureParams params(Eigen::VectorXd::Zero(3), 1.0, 0.8);
  Eigen::VectorXd x(3);
  x << 0.3, -1.2, 2.0;
  const double expected = -1.5 * std::log(2.0 * M_PI) - 0.5 * x.squaredNorm();
  CHECK(log_density(x, params) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("log-density equals the naive two-component sum") {
  const MixtureParams params(vec2(0.2, 0.05), 0.9, 0.8);
  RngStream rng(5, 0);
  for (int i = 0; i < 50; ++i) {
    Eigen::VectorXd x = vec2(3.0 * rng.normal(), 3.0 * rng.normal());
    auto gauss = [&](const Eigen::VectorXd& mean) {
      return std::exp(-(x - mean).squaredNorm() / (2.0 * params.sigma_sq)) /
             (2.0 * M_PI * params.sigma_sq);
    };
    const double naive =
        std::log(0.2 * gauss(-params.theta) + 0.8 * gauss(params.theta));
    CHECK(log_density(x, params) == doctest::Approx(naive).epsilon(1e-12));
  }
}

TEST_CASE("log-density rejects dimension mismatch") {
  const MixtureParams params(vec2(0.2, 0.05), 0.9, 0.8);
  CHECK_THROWS_AS(log_density(Eigen::VectorXd::Zero(3), params), std::invalid_argument);
}

TEST_CASE("density integrates to one (d=1 trapezoid oracle)") {
  Eigen::VectorXd theta(1);
  theta << 0.3;
  const MixtureParams params(theta, 0.9, 0.8);
  const double lo = -12.0, hi = 12.0;
  const int cells = 24000;
  const double h = (hi - lo) / cells;
  double integral = 0.0;
  Eigen::VectorXd x(1);
  for (int i = 0; i <= cells; ++i) {
    x(0) = lo + i * h;
    const double f = std::exp(log_density(x, params));
    integral += (i == 0 || i == cells) ? 0.5 * f : f;
  }
  integral *= h;
  CHECK(std::abs(integral - 1.0) < 1e-3);
}

TEST_CASE("sampling: centered case has near-zero mean per coordinate") {
  const MixtureParams params(Eigen::VectorXd::Zero(2), 1.0, 0.8);
  RngStream rng(9, 0);
  const int n = 100000;
  const Eigen::MatrixXd sample = sample_mixture(params, n, rng);
  const double bound = 4.0 / std::sqrt(static_cast<double>(n));
  for (int j = 0; j < 2; ++j) CHECK(std::abs(sample.col(j).mean()) < bound);
}

TEST_CASE("sampling: majority component dominates the sign of theta'X") {
  const MixtureParams params(vec2(0.8, 0.3), 0.5, 0.8);
  RngStream rng(10, 0);
  const int n = 50000;
  const Eigen::MatrixXd sample = sample_mixture(params, n, rng);
  const Eigen::VectorXd proj = sample * params.theta;
  const double frac_positive =
      static_cast<double>((proj.array() > 0.0).count()) / static_cast<double>(n);
  CHECK(frac_positive > 0.5);
}

TEST_CASE("sampling: E|X|^2 = d sigma^2 + |theta|^2") {
  const MixtureParams params(vec2(0.4, -0.2), 0.8, 0.7);
  RngStream rng(11, 0);
  const int n = 200000;
  const Eigen::MatrixXd sample = sample_mixture(params, n, rng);
  const Eigen::ArrayXd sq = sample.rowwise().squaredNorm().array();
  const double mean = sq.mean();
  const double se = std::sqrt((sq - mean).square().mean() / n);
  const double expected = 2.0 * params.sigma_sq + params.theta.squaredNorm();
  CHECK(std::abs(mean - expected) < 4.0 * se);
}

TEST_CASE("KL vanishes when the mixture collapses to N(0, I)") {
  const QuadratureRule rule = gauss_hermite_rule(64);
  const MixtureParams params(Eigen::VectorXd::Zero(4), 1.0, 0.8);
  CHECK(std::abs(kl_vs_standard_normal(params, rule)) < 1e-12);
}

TEST_CASE("KL is rotation invariant") {
  const QuadratureRule rule = gauss_hermite_rule(64);
  Eigen::VectorXd theta(3);
  theta << 0.25, -0.1, 0.07;
  const MixtureParams base(theta, 0.95, 0.8);
  const double kl0 = kl_vs_standard_normal(base, rule);
  RngStream rng(13, 0);
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::MatrixXd g(3, 3);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) g(i, j) = rng.normal();
    const Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    const Eigen::MatrixXd q = qr.householderQ();
    const MixtureParams rotated(q * theta, 0.95, 0.8);
    CHECK(std::abs(kl_vs_standard_normal(rotated, rule) - kl0) < 1e-12);
  }
}

TEST_CASE("KL is nonnegative across the parameter grid") {
  const QuadratureRule rule = gauss_hermite_rule(64);
  for (double p : {0.6, 0.8, 0.9}) {
    for (double tn : {0.0, 0.1, 0.3, 0.5}) {
      for (double s2 : {0.7, 0.9, 1.1}) {
        for (int d : {1, 2, 10}) {
          CAPTURE(p); CAPTURE(tn); CAPTURE(s2); CAPTURE(d);
          Eigen::VectorXd theta = Eigen::VectorXd::Zero(d);
          theta(0) = tn;
          const MixtureParams params(theta, s2, p);
          CHECK(kl_vs_standard_normal(params, rule) >= -1e-10);
        }
      }
    }
  }
}

TEST_CASE("KL matches a Monte Carlo oracle") {
  const QuadratureRule rule = gauss_hermite_rule(64);
  Eigen::VectorXd theta = vec2(0.20, 0.05);
  const double s2 = 1.0 - theta.squaredNorm() / 2.0;
  const MixtureParams params(theta, s2, 0.8);
  const double quad = kl_vs_standard_normal(params, rule);

  // E_{Z~N(0,I)}[log phi(Z) - log f(Z)] by direct sampling
  RngStream rng(14, 0);
  const long long n = 10'000'000;
  double sum = 0.0, sum_sq = 0.0;
  Eigen::VectorXd z(2);
  for (long long i = 0; i < n; ++i) {
    z << rng.normal(), rng.normal();
    const double log_phi = -std::log(2.0 * M_PI) - 0.5 * z.squaredNorm();
    const double v = log_phi - log_density(z, params);
    sum += v;
    sum_sq += v * v;
  }
  const double mean = sum / n;
  const double se = std::sqrt((sum_sq / n - mean * mean) / n);
  CHECK(std::abs(quad - mean) < 3 * se);
}
