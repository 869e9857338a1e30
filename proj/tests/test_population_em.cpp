#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include <Eigen/Dense>

#include "omda/mixture.hpp"
#include "omda/population_em.hpp"
#include "omda/rng.hpp"

using namespace omda;

namespace {

PopulationSetting make_setting(int d, double p) {
  return PopulationSetting(d, p, gauss_hermite_rule(64));
}

}  // namespace

TEST_CASE("operator fixes the origin") {
  const auto setting = make_setting(2, 0.8);
  CHECK(std::abs(pop_em_operator(0.0, setting)) < 1e-12);
  const auto [t, s2] = pop_em_step(0.0, setting);
  CHECK(std::abs(t) < 1e-12);
  CHECK(s2 == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("operator is positive on a positive grid") {
  const auto setting = make_setting(2, 0.8);
  for (double t = 0.01; t < 0.5; t += 0.02) CHECK(pop_em_operator(t, setting) > 0.0);
}

TEST_CASE("operator matches a Monte Carlo oracle") {
  const auto setting = make_setting(2, 0.8);
  const double theta = 0.2;
  const double quad = pop_em_operator(theta, setting);

  const double s2 = 1.0 - theta * theta / 2.0;
  RngStream rng(21, 0);
  const long long n = 10'000'000;
  double sum = 0.0, sum_sq = 0.0;
  for (long long i = 0; i < n; ++i) {
    const double z = rng.normal();
    const double v = tilt(0.8, theta * z / s2) * z;
    sum += v;
    sum_sq += v * v;
  }
  const double mean = sum / n;
  const double se = std::sqrt((sum_sq / n - mean * mean) / n);
  CHECK(std::abs(quad - mean) < 3 * se);
}

TEST_CASE("operator rejects theta with nonpositive hypersurface variance") {
  const auto setting = make_setting(2, 0.8);
  CHECK_THROWS_AS(pop_em_operator(std::sqrt(2.0), setting), std::domain_error);
  CHECK_THROWS_AS(pop_em_operator(1.5, setting), std::domain_error);
}

TEST_CASE("steps stay on the hypersurface and contract") {
  const auto setting = make_setting(2, 0.8);
  double theta = Eigen::Vector2d(0.20, 0.05).norm();
  for (int t = 0; t < 8; ++t) {
    const auto [next, s2] = pop_em_step(theta, setting);
    CHECK(s2 == 1.0 - next * next / 2.0);  // exact by construction
    CHECK(next < theta);
    theta = next;
  }
}

TEST_CASE("radial risk at zero has the closed form") {
  for (int d : {1, 2, 10}) {
    const auto setting = make_setting(d, 0.8);
    const double expected = 0.5 * d * std::log(2.0 * M_PI) + 0.5 * d;
    CHECK(radial_risk(0.0, setting) == doctest::Approx(expected).epsilon(1e-13));
  }
}

TEST_CASE("risk gap equals the mixture KL on the hypersurface") {
  const auto setting = make_setting(2, 0.8);
  const QuadratureRule rule = gauss_hermite_rule(64);
  for (double t : {0.05, 0.15, 0.25}) {
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(2);
    theta(0) = t;
    const MixtureParams params(theta, 1.0 - t * t / 2.0, 0.8);
    const double gap = radial_risk(t, setting) - radial_risk(0.0, setting);
    CHECK(std::abs(gap - kl_vs_standard_normal(params, rule)) < 1e-10);
  }
}

TEST_CASE("risk is minimized at the origin on the admissible grid") {
  const auto setting = make_setting(2, 0.8);
  const double risk0 = radial_risk(0.0, setting);
  const double radius = init_radius(setting);
  for (int i = 1; i <= 100; ++i) {
    CHECK(radial_risk(radius * i / 100.0, setting) > risk0);
  }
}

TEST_CASE("risk derivative matches finite differences and is positive") {
  const auto setting = make_setting(2, 0.8);
  CHECK(std::abs(radial_risk_derivative(0.0, setting)) < 1e-12);
  const double h = 1e-5;
  const double radius = init_radius(setting);
  for (int i = 1; i <= 40; ++i) {
    const double t = radius * i / 41.0;
    const double fd = (radial_risk(t + h, setting) - radial_risk(t - h, setting)) / (2.0 * h);
    CHECK(std::abs(radial_risk_derivative(t, setting) - fd) < 1e-6);
    CHECK(radial_risk_derivative(t, setting) > 0.0);
  }
}

TEST_CASE("initialization radius closed forms") {
  // d=2, p=0.9: q=0.68, first branch sqrt(2*(2.68-sqrt(5.9024))/2) ~ 0.5005,
  // second branch 1/(sqrt2+1/(2 sqrt2)) ~ 0.5657; the min is the first.
  const auto setting = make_setting(2, 0.9);
  const double first = std::sqrt(2.0 * (2.68 - std::sqrt(5.9024)) / 2.0);
  const double second = 1.0 / (std::sqrt(2.0) + 1.0 / (2.0 * std::sqrt(2.0)));
  CHECK(contraction_radius(setting) == doctest::Approx(first).epsilon(1e-12));
  CHECK(lower_bound_radius(setting) == doctest::Approx(second).epsilon(1e-12));
  CHECK(init_radius(setting) == doctest::Approx(std::min(first, second)).epsilon(1e-12));

  // p -> 1 limit of the first branch: q -> 1/2
  const auto near_one = make_setting(3, 0.9999999);
  const double q_limit = 0.5;
  const double limit = std::sqrt(3.0 * (2.0 + q_limit - std::sqrt(8.0 * q_limit + q_limit * q_limit)) / 2.0);
  CHECK(contraction_radius(near_one) == doctest::Approx(limit).epsilon(1e-5));
}

TEST_CASE("initialization radius grows with the unbalance") {
  // the contraction branch grows strictly with p; the overall radius saturates
  // once the weight-independent branch becomes the minimum
  for (int d : {1, 2, 10}) {
    double prev_contraction = 0.0;
    double prev_radius = 0.0;
    for (double p = 0.55; p < 0.99; p += 0.02) {
      const auto setting = make_setting(d, p);
      CHECK(contraction_radius(setting) > prev_contraction);
      CHECK(init_radius(setting) >= prev_radius);
      prev_contraction = contraction_radius(setting);
      prev_radius = init_radius(setting);
    }
  }
}

TEST_CASE("contraction factor: value at zero, range, and operator bound") {
  const auto setting = make_setting(2, 0.8);
  CHECK(contraction_rho(0.0, setting) == doctest::Approx(0.82).epsilon(1e-14));

  const double radius = contraction_radius(setting);
  for (double frac : {0.2, 0.5, 0.9, 0.99}) {
    const double rho = contraction_rho(frac * radius, setting);
    CHECK(rho > 0.0);
    CHECK(rho < 1.0);
  }

  // m(theta) <= rho * theta on [1e-4, theta0]
  const double theta0 = 0.9 * radius;
  const double rho = contraction_rho(theta0, setting);
  for (int i = 0; i < 200; ++i) {
    const double t = 1e-4 + (theta0 - 1e-4) * i / 199.0;
    CHECK(pop_em_operator(t, setting) <= rho * t + 1e-8);
  }
}

TEST_CASE("contraction factor rejects theta0 at or beyond the radius") {
  const auto setting = make_setting(2, 0.8);
  const double radius = contraction_radius(setting);
  CHECK_THROWS_WITH_AS(contraction_rho(radius * 1.01, setting), doctest::Contains("radius"),
                       std::domain_error);
}

TEST_CASE("trace from the origin stays at zero KL") {
  const auto setting = make_setting(2, 0.8);
  const EmTrace trace = run_population_em(0.0, 5, setting);
  for (const auto& e : trace.entries) {
    CHECK(std::abs(e.theta_norm) < 1e-12);
    CHECK(e.kl < 1e-14);
  }
}

TEST_CASE("traces decay monotonically, uniformly faster for larger p") {
  // The starting KL grows with p (a more unbalanced mixture at the same theta0
  // sits farther from N(0,I)), so the raw curves cross during the first steps.
  // The ordered quantity is the per-step decay ratio.
  const double theta0 = Eigen::Vector2d(0.20, 0.05).norm();
  std::vector<std::vector<double>> ratios;
  for (double p : {0.6, 0.8, 0.9}) {
    const auto setting = make_setting(2, p);
    const EmTrace trace = run_population_em(theta0, 25, setting);
    std::vector<double> ratio;
    for (std::size_t i = 1; i < trace.entries.size(); ++i) {
      const double prev = trace.entries[i - 1].kl;
      if (prev < 1e-14) break;
      CHECK(trace.entries[i].kl < prev);
      ratio.push_back(trace.entries[i].kl / prev);
    }
    ratios.push_back(ratio);
  }
  for (std::size_t b = 0; b + 1 < ratios.size(); ++b) {
    const std::size_t common = std::min(ratios[b].size(), ratios[b + 1].size());
    for (std::size_t t = 0; t < common; ++t) CHECK(ratios[b + 1][t] < ratios[b][t]);
  }
  // faster decay wins eventually: raw ordering at the last shared iteration
  const auto setting06 = make_setting(2, 0.6);
  const auto setting09 = make_setting(2, 0.9);
  const EmTrace slow = run_population_em(theta0, 10, setting06);
  const EmTrace fast = run_population_em(theta0, 10, setting09);
  CHECK(fast.entries.back().kl < slow.entries.back().kl);
}

TEST_CASE("per-step KL ratio honors the geometric decay bound") {
  const double theta0 = Eigen::Vector2d(0.20, 0.05).norm();
  for (double p : {0.6, 0.8, 0.9}) {
    const auto setting = make_setting(2, p);
    const double bound = kl_decay_bound(theta0, setting);
    const EmTrace trace = run_population_em(theta0, 30, setting);
    for (std::size_t i = 1; i < trace.entries.size(); ++i) {
      const double prev = trace.entries[i - 1].kl;
      if (prev < 1e-14) break;
      CHECK(trace.entries[i].kl / prev <= bound + 1e-10);
    }
  }
}

TEST_CASE("trace rejects theta0 outside the initialization radius") {
  const auto setting = make_setting(2, 0.8);
  CHECK_THROWS_WITH_AS(run_population_em(0.6, 10, setting), doctest::Contains("radius"),
                       std::domain_error);
}

TEST_CASE("operator lower bound: anchors and validity") {
  const auto setting = make_setting(2, 0.8);
  CHECK(pop_em_operator_lower_bound(0.0, setting) == 0.0);
  CHECK(pop_em_operator_lower_bound(0.01, setting) > 0.0);
  CHECK_THROWS_AS(pop_em_operator_lower_bound(0.7, setting), std::domain_error);

  for (double p : {0.6, 0.8, 0.9}) {
    for (int d : {1, 2, 10}) {
      const auto s = make_setting(d, p);
      const double hi = lower_bound_radius(s);
      for (int i = 0; i <= 50; ++i) {
        const double t = hi * i / 50.0;
        CHECK(pop_em_operator(t, s) >= pop_em_operator_lower_bound(t, s) - 1e-8);
      }
    }
  }
}

TEST_CASE("property report passes on the reference settings") {
  {
    const auto setting = make_setting(1, 0.8);
    const PropertyReport report = property_report(setting, 0.2, 200);
    CHECK(report.checks.size() == 5);
    CHECK(report.all_pass());
  }
  {
    const auto setting = make_setting(10, 0.6);
    const PropertyReport report = property_report(setting, 0.9 * init_radius(setting), 200);
    CHECK(report.all_pass());
  }
}

TEST_CASE("property report refuses an out-of-radius start") {
  const auto setting = make_setting(2, 0.8);
  CHECK_THROWS_WITH_AS(property_report(setting, contraction_radius(setting) * 1.001, 100),
                       doctest::Contains("radius"), std::domain_error);
}

TEST_CASE("vector EM operator norm is radial (Monte Carlo, d=3)") {
  const auto setting = make_setting(3, 0.8);
  RngStream dir_rng(31, 0);
  const long long n = 400000;
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd dir(3);
    for (int j = 0; j < 3; ++j) dir(j) = dir_rng.normal();
    dir.normalize();
    const double theta_norm = 0.05 + 0.3 * dir_rng.uniform();
    const Eigen::VectorXd theta = theta_norm * dir;
    const double s2 = 1.0 - theta_norm * theta_norm / 3.0;

    RngStream rng(32, 100 + trial);
    Eigen::Vector3d sum = Eigen::Vector3d::Zero();
    Eigen::Vector3d sum_sq = Eigen::Vector3d::Zero();
    Eigen::Vector3d z;
    for (long long i = 0; i < n; ++i) {
      z << rng.normal(), rng.normal(), rng.normal();
      const double w = tilt(0.8, theta.dot(z) / s2);
      const Eigen::Vector3d v = w * z;
      sum += v;
      sum_sq += v.cwiseProduct(v);
    }
    const Eigen::Vector3d mean = sum / static_cast<double>(n);
    const Eigen::Vector3d var =
        (sum_sq / static_cast<double>(n) - mean.cwiseProduct(mean)) / static_cast<double>(n);
    const double se_norm = std::sqrt(var.sum());
    CHECK(std::abs(mean.norm() - pop_em_operator(theta_norm, setting)) < 4.0 * se_norm);
  }
}
