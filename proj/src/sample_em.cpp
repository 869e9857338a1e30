#include "omda/sample_em.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace omda {

namespace {

constexpr double kDenominatorFloor = 1e-10;

double quantile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return 0.0;
  const double pos = q * (sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

}  // namespace

SampleContext::SampleContext(Eigen::MatrixXd data, double p) : data_(std::move(data)), p_(p) {
  if (data_.rows() < 2) throw std::invalid_argument("SampleContext: need n >= 2 observations");
  if (data_.cols() < 1) throw std::invalid_argument("SampleContext: need d >= 1");
  if (!(p_ > 0.5 && p_ < 1.0)) {
    throw std::invalid_argument("SampleContext: p must lie in (1/2, 1), got " +
                                std::to_string(p_));
  }
  sum_sq_ = data_.squaredNorm();
}

MixtureParams em_step(const SampleContext& ctx, const MixtureParams& params) {
  if (params.theta.size() != ctx.d()) {
    throw std::invalid_argument("em_step: theta has dimension " +
                                std::to_string(params.theta.size()) + ", data has " +
                                std::to_string(ctx.d()));
  }
  const double n = static_cast<double>(ctx.n());
  const double d = static_cast<double>(ctx.d());
  const double second_moment = ctx.sum_sq() / (n * d);

  const double denom = second_moment - params.theta.squaredNorm() / d;
  if (denom <= kDenominatorFloor) {
    throw DegenerateVarianceError("em_step: update denominator " + std::to_string(denom) +
                                  " fell below " + std::to_string(kDenominatorFloor));
  }

  const double bias = half_log_odds(params.p);
  const Eigen::ArrayXd arg = (ctx.data() * params.theta).array() / denom + bias;
  const Eigen::VectorXd weights = arg.tanh().matrix();
  const Eigen::VectorXd theta_next = ctx.data().transpose() * weights / n;

  const double sigma_sq_next = second_moment - theta_next.squaredNorm() / d;
  if (sigma_sq_next <= kDenominatorFloor) {
    throw DegenerateVarianceError("em_step: updated variance " +
                                  std::to_string(sigma_sq_next) + " is not positive");
  }
  return {theta_next, sigma_sq_next, params.p};
}

double sample_em_operator(const SampleContext& ctx, double theta_norm,
                          const Eigen::VectorXd& direction) {
  if (!(theta_norm > 0.0)) {
    throw std::invalid_argument("sample_em_operator: theta_norm must be positive, got " +
                                std::to_string(theta_norm));
  }
  if (direction.size() != ctx.d()) {
    throw std::invalid_argument("sample_em_operator: direction dimension mismatch");
  }
  if (std::abs(direction.norm() - 1.0) > 1e-8) {
    throw std::invalid_argument("sample_em_operator: direction must be a unit vector");
  }
  const double n = static_cast<double>(ctx.n());
  const double d = static_cast<double>(ctx.d());
  const double denom = ctx.sum_sq() / (n * d) - theta_norm * theta_norm / d;
  if (denom <= kDenominatorFloor) {
    throw DegenerateVarianceError("sample_em_operator: denominator " + std::to_string(denom) +
                                  " fell below " + std::to_string(kDenominatorFloor));
  }
  const double bias = half_log_odds(ctx.p());
  const Eigen::ArrayXd proj = (ctx.data() * direction).array();
  return ((theta_norm * proj / denom + bias).tanh() * proj).mean();
}

int FitBudget::iterations(Eigen::Index n) const {
  const double budget = c2 * std::log(static_cast<double>(n) / std::log(1.0 / delta));
  return std::max(static_cast<int>(std::ceil(budget)), min_iterations);
}

double fit_init_radius(int d, double p) {
  PopulationSetting probe(d, p, gauss_hermite_rule(1));
  const double branch = 1.0 / (1.0 + std::sqrt(1.0 + 1.0 / d));
  return std::min(contraction_radius(probe), branch);
}

FitResult fit(const SampleContext& ctx, const Eigen::VectorXd& theta0,
              const FitBudget& budget, const QuadratureRule& rule) {
  if (theta0.size() != ctx.d()) throw std::invalid_argument("fit: theta0 dimension mismatch");
  const double radius = fit_init_radius(static_cast<int>(ctx.d()), ctx.p());
  if (theta0.norm() >= radius) {
    throw std::domain_error("fit: |theta0| must lie below the initialization radius " +
                            std::to_string(radius) + ", got " + std::to_string(theta0.norm()));
  }

  const double n = static_cast<double>(ctx.n());
  const double d = static_cast<double>(ctx.d());
  const double sigma_sq0 = ctx.sum_sq() / (n * d) - theta0.squaredNorm() / d;
  if (sigma_sq0 <= kDenominatorFloor) {
    throw DegenerateVarianceError("fit: initial variance is not positive", 0);
  }

  MixtureParams params(theta0, sigma_sq0, ctx.p());
  EmTrace trace;
  trace.context = "sample n=" + std::to_string(ctx.n()) + " d=" + std::to_string(ctx.d()) +
                  " p=" + std::to_string(ctx.p());
  trace.entries.push_back({0, params.theta_norm(), params.sigma_sq,
                           kl_vs_standard_normal(params, rule)});

  const int total = budget.iterations(ctx.n());
  for (int t = 1; t <= total; ++t) {
    MixtureParams next = [&] {
      try {
        return em_step(ctx, params);
      } catch (const DegenerateVarianceError& e) {
        throw DegenerateVarianceError(std::string(e.what()) + " (iteration " +
                                      std::to_string(t) + ")", t);
      }
    }();
    const double step_size = (next.theta - params.theta).norm();
    params = std::move(next);
    trace.entries.push_back({t, params.theta_norm(), params.sigma_sq,
                             kl_vs_standard_normal(params, rule)});
    if (step_size < budget.step_tol) break;
  }
  return {params, trace};
}

PerturbationStats perturbation_sup(const PopulationSetting& setting, Eigen::Index n, double r,
                                   int grid_size, int seeds, std::uint64_t seed,
                                   std::uint64_t stream_domain) {
  if (!(r >= 0.0) || r > init_radius(setting)) {
    throw std::domain_error("perturbation_sup: radius must lie in [0, " +
                            std::to_string(init_radius(setting)) + "], got " + std::to_string(r));
  }
  if (grid_size < 1) throw std::invalid_argument("perturbation_sup: grid_size must be >= 1");
  if (seeds < 1) throw std::invalid_argument("perturbation_sup: seeds must be >= 1");

  // The grid {r i/G : i = 1..G} excludes 0, where the scalar operator is not
  // defined; r = 0 leaves it empty and the sup is 0.
  std::vector<double> grid;
  std::vector<double> pop_vals;
  if (r > 0.0) {
    for (int i = 1; i <= grid_size; ++i) {
      grid.push_back(r * i / grid_size);
      pop_vals.push_back(pop_em_operator(grid.back(), setting));
    }
  }

  Eigen::VectorXd e1 = Eigen::VectorXd::Zero(setting.d);
  e1(0) = 1.0;

  PerturbationStats stats;
  for (int s = 0; s < seeds; ++s) {
    RngStream rng(seed, stream_domain + static_cast<std::uint64_t>(s));
    Eigen::MatrixXd data(n, setting.d);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (int j = 0; j < setting.d; ++j) data(i, j) = rng.normal();
    }
    SampleContext ctx(std::move(data), setting.p);
    double sup = 0.0;
    for (std::size_t g = 0; g < grid.size(); ++g) {
      sup = std::max(sup, std::abs(sample_em_operator(ctx, grid[g], e1) - pop_vals[g]));
    }
    stats.sup_by_seed.push_back(sup);
  }

  std::vector<double> sorted = stats.sup_by_seed;
  std::sort(sorted.begin(), sorted.end());
  stats.median = quantile_sorted(sorted, 0.5);
  stats.q25 = quantile_sorted(sorted, 0.25);
  stats.q75 = quantile_sorted(sorted, 0.75);
  return stats;
}

}  // namespace omda
