#include "omda/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

#include "omda/mda.hpp"
#include "omda/mixture.hpp"
#include "omda/population_em.hpp"
#include "omda/rng.hpp"
#include "omda/sample_em.hpp"
#include "omda/svg_plot.hpp"
#include "omda/version.hpp"

namespace omda {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

// Stream ids are partitioned as (role << 56) | (block << 32) | index so no two
// uses of the base seed ever collide.
constexpr std::uint64_t stream_id(std::uint64_t role, std::uint64_t block, std::uint64_t index) {
  return (role << 56) | (block << 32) | index;
}
constexpr std::uint64_t kRoleKlRep = 1;
constexpr std::uint64_t kRoleMdaTrain = 2;
constexpr std::uint64_t kRoleMdaTest = 3;
constexpr std::uint64_t kRoleMdaTvPlus = 4;
constexpr std::uint64_t kRoleMdaTvMinus = 5;
constexpr std::uint64_t kRolePerturbation = 6;

double median_of(std::vector<double> values) {
  if (values.empty()) return kNan;
  std::sort(values.begin(), values.end());
  const std::size_t k = values.size() / 2;
  return values.size() % 2 == 1 ? values[k] : 0.5 * (values[k - 1] + values[k]);
}

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream stream(s);
  std::string item;
  while (std::getline(stream, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double parse_real(const std::string& key, const std::string& value) {
  std::size_t pos = 0;
  double parsed = 0.0;
  try {
    parsed = std::stod(value, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != value.size() || value.empty()) {
    throw std::invalid_argument("config: cannot parse '" + value + "' as a real for key '" +
                                key + "'");
  }
  return parsed;
}

long long parse_integer(const std::string& key, const std::string& value) {
  std::size_t pos = 0;
  long long parsed = 0;
  try {
    parsed = std::stoll(value, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != value.size() || value.empty()) {
    throw std::invalid_argument("config: cannot parse '" + value + "' as an integer for key '" +
                                key + "'");
  }
  return parsed;
}

bool parse_flag(const std::string& key, const std::string& value) {
  if (value == "1" || value == "true" || value == "yes" || value == "on") return true;
  if (value == "0" || value == "false" || value == "no" || value == "off") return false;
  throw std::invalid_argument("config: cannot parse '" + value + "' as a flag for key '" + key +
                              "'");
}

std::string format_check_margin(double margin) {
  std::ostringstream os;
  os.precision(6);
  os << margin;
  return os.str();
}

nlohmann::ordered_json slope_to_json(const SlopeFit& fit) {
  nlohmann::ordered_json j;
  j["valid"] = fit.valid;
  if (fit.valid) {
    j["slope"] = fit.slope;
    j["std_error"] = fit.std_error;
    j["intercept"] = fit.intercept;
    j["points"] = fit.points;
  }
  if (!fit.note.empty()) j["note"] = fit.note;
  return j;
}

nlohmann::ordered_json base_metadata(const ExperimentConfig& config) {
  nlohmann::ordered_json meta;
  meta["artifact_version"] = kArtifactVersion;
  meta["config_hash"] = config.hash();
  meta["config"] = config.to_json();
  std::vector<int> seed_indices(config.seeds);
  for (int i = 0; i < config.seeds; ++i) seed_indices[i] = i;
  meta["seed_indices"] = seed_indices;
  return meta;
}

Eigen::VectorXd to_eigen(const std::vector<double>& v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<Eigen::Index>(i)) = v[i];
  return out;
}

// Resolves a {single value = norm along e1} or full-length vector field.
Eigen::VectorXd resolve_vector(const std::vector<double>& raw, int d, const char* what) {
  if (raw.size() == static_cast<std::size_t>(d)) return to_eigen(raw);
  if (raw.size() == 1) {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(d);
    out(0) = raw[0];
    return out;
  }
  throw std::invalid_argument(std::string(what) + " must have length d = " + std::to_string(d) +
                              " or a single entry, got length " + std::to_string(raw.size()));
}

}  // namespace

ExperimentKind experiment_kind_from_name(const std::string& name) {
  if (name == "pop-trace") return ExperimentKind::PopTrace;
  if (name == "kl-vs-n") return ExperimentKind::KlVsN;
  if (name == "mda-error") return ExperimentKind::MdaError;
  if (name == "perturbation") return ExperimentKind::Perturbation;
  if (name == "properties") return ExperimentKind::Properties;
  throw std::invalid_argument("unknown experiment '" + name + "'");
}

std::string experiment_kind_name(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::PopTrace: return "pop-trace";
    case ExperimentKind::KlVsN: return "kl-vs-n";
    case ExperimentKind::MdaError: return "mda-error";
    case ExperimentKind::Perturbation: return "perturbation";
    case ExperimentKind::Properties: return "properties";
  }
  throw std::logic_error("unreachable");
}

void ExperimentConfig::finalize(ExperimentKind kind) {
  experiment = kind;
  if (d < 1) throw std::invalid_argument("config: d must be >= 1");

  if (p_values.empty()) {
    if (kind == ExperimentKind::PopTrace || kind == ExperimentKind::Properties) {
      p_values = {0.6, 0.8, 0.9};
    } else {
      p_values = {0.8};
    }
  }
  for (double p : p_values) {
    if (!(p > 0.5 && p < 1.0)) {
      throw std::invalid_argument("config: every p must lie in (1/2, 1), got " +
                                  std::to_string(p));
    }
  }

  if (theta0.empty() && kind != ExperimentKind::Properties) {
    theta0 = d == 2 ? std::vector<double>{0.20, 0.05} : std::vector<double>{0.2};
  }
  if (!theta0.empty() && theta0.size() != 1 && theta0.size() != static_cast<std::size_t>(d)) {
    throw std::invalid_argument("config: theta0 must have length d or a single entry");
  }

  if (n_list.empty()) {
    switch (kind) {
      case ExperimentKind::KlVsN: n_list = {100, 316, 1000, 3162, 10000}; break;
      case ExperimentKind::MdaError: n_list = {1000, 10000, 100000}; break;
      case ExperimentKind::Perturbation: n_list = {100, 1000, 10000}; break;
      default: break;
    }
  }
  for (long long n : n_list) {
    if (n < 2) throw std::invalid_argument("config: every n must be >= 2");
  }

  if (d_list.empty()) {
    d_list = kind == ExperimentKind::Properties ? std::vector<int>{1, 2, 10}
                                                : std::vector<int>{d};
  }
  for (int dv : d_list) {
    if (dv < 1) throw std::invalid_argument("config: every d must be >= 1");
  }

  if (seeds == 0) seeds = kind == ExperimentKind::Perturbation ? 50 : 10;
  if (seeds < 1) throw std::invalid_argument("config: seeds must be >= 1");
  if (replications == 0) replications = 10;
  if (replications < 1) throw std::invalid_argument("config: replications must be >= 1");
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("config: delta must be in (0,1)");
  if (!(alpha > 0.0 && alpha < 0.5)) {
    throw std::invalid_argument("config: alpha must be in (0,1/2)");
  }
  if (quad_order < 1 || quad_order > 512) {
    throw std::invalid_argument("config: quad_order must be in [1, 512]");
  }
  if (grid_size == 0) grid_size = 200;
  if (grid_size < 3) throw std::invalid_argument("config: grid_size must be >= 3");
  if (iterations == 0) iterations = 30;
  if (iterations < 1) throw std::invalid_argument("config: iterations must be >= 1");
  if (!(radius >= 0.0)) throw std::invalid_argument("config: radius must be >= 0");

  if (mu.empty()) mu = {1.0};
  if (mu.size() != 1 && mu.size() != static_cast<std::size_t>(d)) {
    throw std::invalid_argument("config: mu must have length d or a single entry");
  }
  if (n_test < 1000) throw std::invalid_argument("config: n_test must be >= 1000");
  if (n_mc < 10000) throw std::invalid_argument("config: n_mc must be >= 10000");
  if (output_dir.empty()) throw std::invalid_argument("config: output_dir must be nonempty");
}

std::vector<double> ExperimentConfig::theta0_vector() const {
  Eigen::VectorXd v = resolve_vector(theta0, d, "theta0");
  return {v.data(), v.data() + v.size()};
}

nlohmann::ordered_json ExperimentConfig::to_json() const {
  nlohmann::ordered_json j;
  j["experiment"] = experiment_kind_name(experiment);
  j["d"] = d;
  j["d_list"] = d_list;
  j["p"] = p_values;
  j["theta0"] = theta0;
  j["n_list"] = n_list;
  j["seeds"] = seeds;
  j["replications"] = replications;
  j["delta"] = delta;
  j["alpha"] = alpha;
  j["quad_order"] = quad_order;
  j["grid_size"] = grid_size;
  j["iterations"] = iterations;
  j["radius"] = radius;
  j["mu"] = mu;
  j["n_test"] = n_test;
  j["n_mc"] = n_mc;
  j["base_seed"] = base_seed;
  j["output_dir"] = output_dir;
  j["plot"] = plot;
  return j;
}

std::string ExperimentConfig::hash() const {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(to_json().dump())));
  return buf;
}

void apply_config_line(ExperimentConfig& config, const std::string& key,
                       const std::string& value) {
  auto reals = [&] {
    std::vector<double> out;
    for (const auto& item : split_list(value)) out.push_back(parse_real(key, item));
    return out;
  };
  auto integers = [&] {
    std::vector<long long> out;
    for (const auto& item : split_list(value)) out.push_back(parse_integer(key, item));
    return out;
  };

  if (key == "d") config.d = static_cast<int>(parse_integer(key, value));
  else if (key == "p") config.p_values = reals();
  else if (key == "theta0") config.theta0 = reals();
  else if (key == "n_list") config.n_list = integers();
  else if (key == "d_list") {
    config.d_list.clear();
    for (long long v : integers()) config.d_list.push_back(static_cast<int>(v));
  }
  else if (key == "seeds") config.seeds = static_cast<int>(parse_integer(key, value));
  else if (key == "reps" || key == "replications") {
    config.replications = static_cast<int>(parse_integer(key, value));
  }
  else if (key == "delta") config.delta = parse_real(key, value);
  else if (key == "alpha") config.alpha = parse_real(key, value);
  else if (key == "quad_order") config.quad_order = static_cast<int>(parse_integer(key, value));
  else if (key == "grid_size") config.grid_size = static_cast<int>(parse_integer(key, value));
  else if (key == "iterations") config.iterations = static_cast<int>(parse_integer(key, value));
  else if (key == "radius") config.radius = parse_real(key, value);
  else if (key == "mu") config.mu = reals();
  else if (key == "n_test") config.n_test = parse_integer(key, value);
  else if (key == "n_mc") config.n_mc = parse_integer(key, value);
  else if (key == "base_seed") {
    config.base_seed = static_cast<std::uint64_t>(parse_integer(key, value));
  }
  else if (key == "out" || key == "output_dir") config.output_dir = value;
  else if (key == "plot") config.plot = parse_flag(key, value);
  else throw std::invalid_argument("config: unknown key '" + key + "'");
}

void apply_config_file(ExperimentConfig& config, const std::string& path) {
  std::ifstream file(path);
  if (!file) throw std::invalid_argument("config: cannot open file '" + path + "'");
  std::string line;
  int line_no = 0;
  while (std::getline(file, line)) {
    ++line_no;
    const auto hash_pos = line.find('#');
    if (hash_pos != std::string::npos) line = line.substr(0, hash_pos);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config: expected 'key = value' at " + path + ":" +
                                  std::to_string(line_no));
    }
    apply_config_line(config, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

SlopeFit fit_log_log_slope(const std::vector<double>& x, const std::vector<double>& y) {
  SlopeFit fit;
  if (x.size() != y.size()) throw std::invalid_argument("fit_log_log_slope: size mismatch");
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0) || !std::isfinite(y[i])) {
      fit.note = "nonpositive or non-finite value excluded at x = " + format_real(x[i]);
      continue;
    }
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(y[i]));
  }
  std::vector<double> distinct = lx;
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (distinct.size() < 2) {
    fit.note = "slope undefined: need at least two distinct positive points, have " +
               std::to_string(distinct.size());
    return fit;
  }

  const std::size_t k = lx.size();
  double mean_x = 0.0, mean_y = 0.0;
  for (std::size_t i = 0; i < k; ++i) { mean_x += lx[i]; mean_y += ly[i]; }
  mean_x /= static_cast<double>(k);
  mean_y /= static_cast<double>(k);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    sxx += (lx[i] - mean_x) * (lx[i] - mean_x);
    sxy += (lx[i] - mean_x) * (ly[i] - mean_y);
  }
  fit.valid = true;
  fit.slope = sxy / sxx;
  fit.intercept = mean_y - fit.slope * mean_x;
  fit.points = static_cast<int>(k);
  double rss = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double r = ly[i] - fit.intercept - fit.slope * lx[i];
    rss += r * r;
  }
  fit.std_error = k > 2 ? std::sqrt(rss / (static_cast<double>(k) - 2.0) / sxx) : 0.0;
  return fit;
}

bool ExperimentResult::all_checks_pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

ExperimentResult run_pop_trace(const ExperimentConfig& config) {
  const QuadratureRule rule = gauss_hermite_rule(config.quad_order);
  const Eigen::VectorXd theta0 = resolve_vector(config.theta0, config.d, "theta0");
  const double t0 = theta0.norm();

  ExperimentResult result;
  result.table.schema = {"p", "t", "theta_norm", "sigma_sq", "kl", "kl_ratio"};
  result.table.metadata = base_metadata(config);

  std::vector<double> sorted_p = config.p_values;
  std::sort(sorted_p.begin(), sorted_p.end());
  std::map<double, std::vector<double>> ratios_by_p;
  nlohmann::ordered_json blocks = nlohmann::ordered_json::array();

  for (double p : sorted_p) {
    const PopulationSetting setting(config.d, p, rule);
    const EmTrace trace = run_population_em(t0, config.iterations, setting);
    const double ratio_bound = kl_decay_bound(t0, setting);

    bool monotone = true;
    bool ratio_ok = true;
    double worst_ratio = 0.0;
    for (std::size_t i = 0; i < trace.entries.size(); ++i) {
      const auto& e = trace.entries[i];
      double ratio = kNan;
      if (i > 0) {
        const double prev = trace.entries[i - 1].kl;
        ratio = prev > 0.0 ? e.kl / prev : kNan;
        if (prev >= 1e-14) {
          if (!(e.kl < prev)) monotone = false;
          if (!(ratio <= ratio_bound + 1e-10)) ratio_ok = false;
          worst_ratio = std::max(worst_ratio, ratio);
          ratios_by_p[p].push_back(ratio);
        }
      }
      result.table.rows.push_back({p, static_cast<double>(e.iteration), e.theta_norm,
                                   e.sigma_sq, e.kl, ratio});
    }

    const std::string tag = format_check_margin(p);
    result.checks.push_back({"kl_monotone_p=" + tag, monotone,
                             monotone ? "strictly decreasing" : "violation found"});
    result.checks.push_back({"kl_ratio_bound_p=" + tag, ratio_ok,
                             "worst ratio " + format_check_margin(worst_ratio) + " vs bound " +
                                 format_check_margin(ratio_bound)});

    nlohmann::ordered_json block;
    block["p"] = p;
    block["entries"] = trace.entries.size();
    block["final_kl"] = trace.entries.back().kl;
    block["kl_ratio_bound"] = ratio_bound;
    blocks.push_back(block);
  }

  if (sorted_p.size() > 1) {
    // Larger p decays uniformly faster.  The raw KL curves cross during the
    // first couple of steps because the starting KL grows with p, so the
    // ordered quantity is the per-step decay ratio.
    bool ordered = true;
    for (std::size_t i = 0; i + 1 < sorted_p.size(); ++i) {
      const auto& slow = ratios_by_p[sorted_p[i]];
      const auto& fast = ratios_by_p[sorted_p[i + 1]];
      const std::size_t common = std::min(slow.size(), fast.size());
      for (std::size_t t = 0; t < common; ++t) {
        if (!(fast[t] < slow[t])) { ordered = false; break; }
      }
    }
    result.checks.push_back({"decay_ordered_in_p", ordered,
                             ordered ? "per-step KL ratios uniformly smaller for larger p"
                                     : "decay ordering violated at some step"});
  }

  result.summary["theta0_norm"] = t0;
  result.summary["blocks"] = blocks;
  return result;
}

ExperimentResult run_kl_vs_n(const ExperimentConfig& config) {
  const QuadratureRule rule = gauss_hermite_rule(config.quad_order);
  const double p = config.p_values.front();
  const Eigen::VectorXd theta0 = resolve_vector(config.theta0, config.d, "theta0");
  FitBudget budget;
  budget.delta = config.delta;

  ExperimentResult result;
  result.table.schema = {"n", "rep", "iterations", "final_theta_norm", "final_sigma_sq",
                         "final_kl"};
  result.table.metadata = base_metadata(config);

  std::vector<double> n_vals, mean_kls;
  nlohmann::ordered_json per_n = nlohmann::ordered_json::array();
  long long total_failures = 0;

  for (std::size_t ni = 0; ni < config.n_list.size(); ++ni) {
    const long long n = config.n_list[ni];
    double kl_sum = 0.0;
    long long ok = 0, failed = 0;
    for (int rep = 0; rep < config.replications; ++rep) {
      // One stream per replication, restarted per n: smaller samples are
      // prefixes of larger ones, which stabilizes the cross-n comparison.
      RngStream rng(config.base_seed, stream_id(kRoleKlRep, 0, rep));
      Eigen::MatrixXd data(n, config.d);
      for (long long i = 0; i < n; ++i) {
        for (int j = 0; j < config.d; ++j) data(i, j) = rng.normal();
      }
      try {
        const SampleContext ctx(std::move(data), p);
        const FitResult fit_res = fit(ctx, theta0, budget, rule);
        const TraceEntry& last = fit_res.trace.entries.back();
        result.table.rows.push_back({static_cast<double>(n), static_cast<double>(rep),
                                     static_cast<double>(last.iteration), last.theta_norm,
                                     last.sigma_sq, last.kl});
        kl_sum += last.kl;
        ++ok;
      } catch (const DegenerateVarianceError&) {
        ++failed;
      }
    }
    total_failures += failed;
    nlohmann::ordered_json item;
    item["n"] = n;
    item["replications_ok"] = ok;
    item["replications_failed"] = failed;
    if (ok > 0) {
      const double mean_kl = kl_sum / static_cast<double>(ok);
      item["mean_final_kl"] = mean_kl;
      n_vals.push_back(static_cast<double>(n));
      mean_kls.push_back(mean_kl);
    }
    per_n.push_back(item);
  }

  const SlopeFit slope = fit_log_log_slope(n_vals, mean_kls);
  result.summary["per_n"] = per_n;
  result.summary["failed_replications"] = total_failures;
  result.summary["slope"] = slope_to_json(slope);

  const bool in_band = slope.valid && slope.slope >= -1.25 && slope.slope <= -0.80;
  std::string detail = slope.valid
      ? "slope " + format_check_margin(slope.slope) + " +/- " +
            format_check_margin(slope.std_error) + ", band [-1.25, -0.80]"
      : slope.note;
  result.checks.push_back({"kl_slope_in_band", in_band, detail});
  return result;
}

ExperimentResult run_mda_error(const ExperimentConfig& config) {
  const QuadratureRule rule = gauss_hermite_rule(config.quad_order);
  const double p = config.p_values.front();
  const Eigen::VectorXd theta0 = resolve_vector(config.theta0, config.d, "theta0");
  const Eigen::VectorXd mu = resolve_vector(config.mu, config.d, "mu");
  const double bayes = bayes_risk(mu.norm());
  FitBudget budget;
  budget.delta = config.delta;

  ExperimentResult result;
  result.table.schema = {"n", "seed", "error_rate", "excess_risk", "ci", "tv_plus", "tv_minus"};
  result.table.metadata = base_metadata(config);

  bool sandwich_ok = true, above_neg_ci = true;
  double worst_sandwich = -std::numeric_limits<double>::infinity();
  std::vector<double> n_vals, medians;
  nlohmann::ordered_json per_n = nlohmann::ordered_json::array();
  long long total_failures = 0;

  for (std::size_t ni = 0; ni < config.n_list.size(); ++ni) {
    const long long n = config.n_list[ni];
    std::vector<double> excesses;
    long long failed = 0;
    for (int seed = 0; seed < config.seeds; ++seed) {
      // Training stream restarted per n (nested samples); test and TV streams
      // depend only on the seed so every n faces identical fresh draws.
      RngStream train_rng(config.base_seed, stream_id(kRoleMdaTrain, 0, seed));
      const LabeledDataset ds = generate_labeled(mu, n, train_rng);
      std::optional<MdaFit> mda_fit;
      try {
        mda_fit = fit_mda(ds, theta0, p, budget, rule);
      } catch (const DegenerateVarianceError&) {
        ++failed;
        continue;
      }

      RngStream test_rng(config.base_seed, stream_id(kRoleMdaTest, 0, seed));
      const ErrorEstimate est = estimate_error(mda_fit->model, mu, config.n_test, test_rng);
      RngStream tvp_rng(config.base_seed, stream_id(kRoleMdaTvPlus, 0, seed));
      RngStream tvm_rng(config.base_seed, stream_id(kRoleMdaTvMinus, 0, seed));
      const McEstimate tvp = tv_gap_estimate(mda_fit->model, mu, 1, config.n_mc, tvp_rng);
      const McEstimate tvm = tv_gap_estimate(mda_fit->model, mu, -1, config.n_mc, tvm_rng);

      const double excess = est.rate - bayes;
      excesses.push_back(excess);
      result.table.rows.push_back({static_cast<double>(n), static_cast<double>(seed), est.rate,
                                   excess, est.ci_half_width, tvp.value, tvm.value});

      const double se_err = est.ci_half_width / 1.959963984540054;
      const double combined =
          std::sqrt(se_err * se_err + tvp.std_error * tvp.std_error +
                    tvm.std_error * tvm.std_error);
      const double slack = excess - (tvp.value + tvm.value) - 3.0 * combined;
      worst_sandwich = std::max(worst_sandwich, slack);
      if (slack > 0.0) sandwich_ok = false;
      if (excess < -est.ci_half_width) above_neg_ci = false;
    }
    total_failures += failed;
    const double med = median_of(excesses);
    nlohmann::ordered_json item;
    item["n"] = n;
    item["median_excess_risk"] = med;
    item["seeds_ok"] = excesses.size();
    item["seeds_failed"] = failed;
    per_n.push_back(item);
    if (!excesses.empty()) {
      n_vals.push_back(static_cast<double>(n));
      medians.push_back(med);
    }
  }

  bool nonincreasing = true;
  for (std::size_t i = 0; i + 1 < medians.size(); ++i) {
    if (!(medians[i + 1] <= medians[i])) nonincreasing = false;
  }
  result.checks.push_back({"median_excess_nonincreasing", nonincreasing,
                           nonincreasing ? "medians nonincreasing in n" : "ordering violated"});
  result.checks.push_back({"tv_sandwich", sandwich_ok,
                           "worst slack " + format_check_margin(worst_sandwich) +
                               " (<= 0 passes)"});
  result.checks.push_back({"excess_above_neg_ci", above_neg_ci,
                           above_neg_ci ? "no run beats Bayes beyond noise"
                                        : "a run beat Bayes beyond its CI"});

  result.summary["bayes_risk"] = bayes;
  result.summary["per_n"] = per_n;
  result.summary["failed_fits"] = total_failures;
  result.summary["median_excess_slope"] = slope_to_json(fit_log_log_slope(n_vals, medians));
  return result;
}

ExperimentResult run_perturbation(const ExperimentConfig& config) {
  const QuadratureRule rule = gauss_hermite_rule(config.quad_order);
  const double p = config.p_values.front();
  const PopulationSetting setting(config.d, p, rule);

  ExperimentResult result;
  result.table.schema = {"n", "seed", "sup_gap"};
  result.table.metadata = base_metadata(config);

  std::vector<double> n_vals, medians;
  nlohmann::ordered_json per_n = nlohmann::ordered_json::array();
  for (std::size_t ni = 0; ni < config.n_list.size(); ++ni) {
    const long long n = config.n_list[ni];
    const PerturbationStats stats =
        perturbation_sup(setting, n, config.radius, config.grid_size, config.seeds,
                         config.base_seed, stream_id(kRolePerturbation, ni + 1, 0));
    for (std::size_t s = 0; s < stats.sup_by_seed.size(); ++s) {
      result.table.rows.push_back({static_cast<double>(n), static_cast<double>(s),
                                   stats.sup_by_seed[s]});
    }
    nlohmann::ordered_json item;
    item["n"] = n;
    item["median_sup"] = stats.median;
    item["q25"] = stats.q25;
    item["q75"] = stats.q75;
    per_n.push_back(item);
    n_vals.push_back(static_cast<double>(n));
    medians.push_back(stats.median);
  }

  const SlopeFit slope = fit_log_log_slope(n_vals, medians);
  result.summary["radius"] = config.radius;
  result.summary["per_n"] = per_n;
  result.summary["slope"] = slope_to_json(slope);

  const bool in_band = slope.valid && slope.slope >= -0.65 && slope.slope <= -0.35;
  std::string detail = slope.valid
      ? "slope " + format_check_margin(slope.slope) + " +/- " +
            format_check_margin(slope.std_error) + ", band [-0.65, -0.35]"
      : slope.note;
  result.checks.push_back({"sup_gap_slope_in_band", in_band, detail});
  return result;
}

ExperimentResult run_properties(const ExperimentConfig& config) {
  const QuadratureRule rule = gauss_hermite_rule(config.quad_order);

  ExperimentResult result;
  result.table.schema = {"d", "p", "theta0", "rho", "init_radius", "property", "pass",
                         "worst_margin", "skipped"};
  result.table.metadata = base_metadata(config);

  bool all_pass = true;
  long long skipped = 0;
  nlohmann::ordered_json combos = nlohmann::ordered_json::array();

  for (int d : config.d_list) {
    for (double p : config.p_values) {
      const PopulationSetting setting(d, p, rule);
      const double radius = init_radius(setting);
      const double t0 =
          config.theta0.empty() ? 0.9 * radius : to_eigen(config.theta0).norm();

      nlohmann::ordered_json combo;
      combo["d"] = d;
      combo["p"] = p;
      combo["theta0"] = t0;
      combo["init_radius"] = radius;

      if (!(t0 > 0.0) || t0 >= contraction_radius(setting)) {
        ++skipped;
        for (int prop = 1; prop <= 5; ++prop) {
          result.table.rows.push_back({static_cast<double>(d), p, t0, kNan, radius,
                                       static_cast<double>(prop), 0.0, kNan, 1.0});
        }
        combo["status"] = "skipped: radius";
        combos.push_back(combo);
        continue;
      }

      const PropertyReport report = property_report(setting, t0, config.grid_size);
      nlohmann::ordered_json check_json;
      for (std::size_t i = 0; i < report.checks.size(); ++i) {
        const PropertyCheck& check = report.checks[i];
        result.table.rows.push_back({static_cast<double>(d), p, t0, report.rho, radius,
                                     static_cast<double>(i + 1), check.pass ? 1.0 : 0.0,
                                     check.worst_margin, 0.0});
        check_json[check.name] = check.pass;
        if (!check.pass) all_pass = false;
      }
      combo["status"] = report.all_pass() ? "pass" : "fail";
      combo["rho"] = report.rho;
      combo["checks"] = check_json;
      combos.push_back(combo);
    }
  }

  result.checks.push_back({"all_properties_pass", all_pass,
                           all_pass ? "every non-skipped combination passed"
                                    : "at least one property failed"});
  result.summary["property_codes"] = {
      {"1", "m_derivative_below_one"}, {"2", "contraction"},      {"3", "convexity"},
      {"4", "pl_inequality"},          {"5", "operator_lower_bound"}};
  result.summary["combinations"] = combos;
  result.summary["skipped_combinations"] = skipped;
  return result;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  switch (config.experiment) {
    case ExperimentKind::PopTrace: return run_pop_trace(config);
    case ExperimentKind::KlVsN: return run_kl_vs_n(config);
    case ExperimentKind::MdaError: return run_mda_error(config);
    case ExperimentKind::Perturbation: return run_perturbation(config);
    case ExperimentKind::Properties: return run_properties(config);
  }
  throw std::logic_error("unreachable");
}

namespace {

// Column lookup for plot assembly.
std::size_t column(const ResultTable& table, const std::string& name) {
  const auto it = std::find(table.schema.begin(), table.schema.end(), name);
  if (it == table.schema.end()) throw std::logic_error("missing column " + name);
  return static_cast<std::size_t>(it - table.schema.begin());
}

std::optional<PlotSpec> build_plot(const ExperimentConfig& config,
                                   const ExperimentResult& result) {
  PlotSpec spec;
  switch (config.experiment) {
    case ExperimentKind::PopTrace: {
      spec.title = "Population EM: KL vs iteration";
      spec.x_label = "t";
      spec.y_label = "KL";
      spec.log_y = true;
      const std::size_t cp = column(result.table, "p");
      const std::size_t ct = column(result.table, "t");
      const std::size_t ck = column(result.table, "kl");
      std::map<double, PlotSeries> by_p;
      for (const auto& row : result.table.rows) {
        PlotSeries& s = by_p[row[cp]];
        if (s.label.empty()) s.label = "p = " + format_check_margin(row[cp]);
        s.x.push_back(row[ct]);
        s.y.push_back(row[ck]);
      }
      for (auto& [p, s] : by_p) spec.series.push_back(std::move(s));
      return spec;
    }
    case ExperimentKind::KlVsN: {
      spec.title = "Sample EM: mean final KL vs n";
      spec.x_label = "n";
      spec.y_label = "mean final KL";
      spec.log_x = spec.log_y = true;
      PlotSeries s;
      s.label = "mean KL";
      for (const auto& item : result.summary["per_n"]) {
        if (!item.contains("mean_final_kl")) continue;
        s.x.push_back(item["n"].get<double>());
        s.y.push_back(item["mean_final_kl"].get<double>());
      }
      spec.series.push_back(std::move(s));
      return spec;
    }
    case ExperimentKind::MdaError: {
      spec.title = "MDA: median excess risk vs n";
      spec.x_label = "n";
      spec.y_label = "median excess risk";
      spec.log_x = true;
      PlotSeries s;
      s.label = "median excess";
      for (const auto& item : result.summary["per_n"]) {
        s.x.push_back(item["n"].get<double>());
        s.y.push_back(item["median_excess_risk"].get<double>());
      }
      spec.series.push_back(std::move(s));
      return spec;
    }
    case ExperimentKind::Perturbation: {
      spec.title = "Operator perturbation: median sup gap vs n";
      spec.x_label = "n";
      spec.y_label = "median sup gap";
      spec.log_x = spec.log_y = true;
      PlotSeries s;
      s.label = "median sup";
      for (const auto& item : result.summary["per_n"]) {
        s.x.push_back(item["n"].get<double>());
        s.y.push_back(item["median_sup"].get<double>());
      }
      spec.series.push_back(std::move(s));
      return spec;
    }
    case ExperimentKind::Properties: return std::nullopt;
  }
  return std::nullopt;
}

}  // namespace

std::string write_outputs(const ExperimentConfig& config, const ExperimentResult& result) {
  namespace fs = std::filesystem;
  const fs::path dir(config.output_dir);
  fs::create_directories(dir);
  const std::string name = experiment_kind_name(config.experiment);

  write_csv(result.table, dir / (name + ".csv"));

  nlohmann::ordered_json summary;
  summary["artifact_version"] = kArtifactVersion;
  summary["experiment"] = name;
  summary["config_hash"] = config.hash();
  summary["config"] = config.to_json();
  nlohmann::ordered_json checks = nlohmann::ordered_json::array();
  for (const Check& check : result.checks) {
    nlohmann::ordered_json c;
    c["name"] = check.name;
    c["pass"] = check.pass;
    c["detail"] = check.detail;
    checks.push_back(c);
  }
  summary["checks"] = checks;
  summary["all_checks_pass"] = result.all_checks_pass();
  summary["results"] = result.summary;
  summary["table_file"] = name + ".csv";

  const fs::path summary_path = dir / (name + "_summary.json");
  std::ofstream file(summary_path, std::ios::binary);
  if (!file) throw std::runtime_error("write_outputs: cannot open " + summary_path.string());
  file << summary.dump(2) << '\n';

  if (config.plot) {
    if (auto spec = build_plot(config, result)) {
      write_svg_plot(*spec, dir / (name + ".svg"));
    }
  }
  return summary_path.string();
}

}  // namespace omda
