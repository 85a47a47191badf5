#pragma once

// Replicated Monte Carlo experiments over the synthetic generators, with
// long-format CSV and JSON result emission.
//
// Random streams: replicate r of condition c in experiment e draws from
// derive_seed(seed, {e, c, r}) with e the position of the experiment name in
// experiment_names(). Within a replicate, data generation comes first, then
// the estimators in the order their rows are emitted.

#include "applications.hpp"
#include "divergence.hpp"
#include "kde.hpp"
#include "kliep.hpp"
#include "parallel.hpp"
#include "synthetic.hpp"
#include "two_sample.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#ifndef LSDD_VERSION
#define LSDD_VERSION "unknown"
#endif

namespace lsdd {

inline const std::vector<std::string>&
experiment_names()
{
  static const std::vector<std::string> names = {
    "l2-curve", "kde-compare", "robustness", "two-sample-power", "class-balance", "change-detection",
  };
  return names;
}

struct ExperimentConfig
{
  std::string name = "l2-curve";
  Index d = 1;
  Index n = 200;
  Index n_prime = 200;
  std::vector<double> mus = {0.0, 0.2, 0.4, 0.6, 0.8};
  std::vector<double> etas = {0.1};
  std::vector<double> pi_stars = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  Index n_labeled_per_class = 20;
  Index n_test = 50;
  double separation = 2.0;
  double classifier_reg = 1e-2;
  Index length = 600;
  std::vector<Index> change_times = {120, 240, 360, 480};
  double shift = 3.0;
  double noise_sd = 1.0;
  Index k = 5;
  Index r = 50;
  std::string scorer = "positive-part";
  int folds = kDefaultFolds;
  Index max_centers = kDefaultMaxCenters;
  std::vector<double> sigma_grid;
  std::vector<double> lambda_grid;
  int permutations = 100;
  double alpha = 0.05;
  //! Statistics run by two-sample-power: any of "lsdd", "kliep".
  std::vector<std::string> statistics = {"lsdd", "kliep"};
  int replicates = 100;
  std::uint64_t seed = 0;
  std::string output;

  //! Per-experiment dataset defaults; unknown names are rejected.
  static ExperimentConfig defaults(const std::string& name);

  void validate() const;

  std::optional<HyperGrid> grid_override(const PointMatrix& pooled) const
  {
    if (sigma_grid.empty() && lambda_grid.empty()) {
      return std::nullopt;
    }
    HyperGrid g = HyperGrid::for_points(pooled);
    if (!sigma_grid.empty()) {
      g.sigmas = sigma_grid;
    }
    if (!lambda_grid.empty()) {
      g.lambdas = lambda_grid;
    }
    g.validate();
    return g;
  }
};

inline std::size_t
experiment_index(const std::string& name)
{
  const auto& names = experiment_names();
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) {
    std::string known;
    for (const auto& n : names) {
      known += (known.empty() ? "" : ", ") + n;
    }
    throw InvalidArgument("unknown experiment '" + name + "' (known: " + known + ")");
  }
  return static_cast<std::size_t>(it - names.begin());
}

inline ExperimentConfig
ExperimentConfig::defaults(const std::string& name)
{
  experiment_index(name);
  ExperimentConfig c;
  c.name = name;
  if (name == "kde-compare") {
    c.d = 5;
  } else if (name == "robustness") {
    c.n = c.n_prime = 100;
    c.mus = {0.0, 2.0, 4.0, 6.0, 8.0, 10.0};
    c.etas = {0.1};
  } else if (name == "two-sample-power") {
    c.n = c.n_prime = 100;
    c.mus = {0.0, 2.0, 4.0, 6.0, 8.0, 10.0};
    c.etas = {0.1};
  } else if (name == "class-balance") {
    c.d = 2;
    c.replicates = 200;
  } else if (name == "change-detection") {
    c.replicates = 10;
  }
  return c;
}

inline void
ExperimentConfig::validate() const
{
  experiment_index(name);
  if (replicates < 1) {
    throw InvalidArgument("experiment: replicates must be >= 1");
  }
  if (folds < 2) {
    throw InvalidArgument("experiment: folds must be >= 2");
  }
  if (d < 1 || n < 1 || n_prime < 1 || max_centers < 1) {
    throw InvalidArgument("experiment: d, n, n' and max-centers must be positive");
  }
  if (permutations < 1) {
    throw InvalidArgument("experiment: permutations must be >= 1");
  }
  parse_change_scorer(scorer);
  for (const auto& s : statistics) {
    if (s != "lsdd" && s != "kliep") {
      throw InvalidArgument("experiment: unknown statistic '" + s + "'");
    }
  }
}

inline void
to_json(nlohmann::json& j, const ExperimentConfig& c)
{
  j = nlohmann::json{
    {"name", c.name},
    {"d", c.d},
    {"n", c.n},
    {"n_prime", c.n_prime},
    {"mus", c.mus},
    {"etas", c.etas},
    {"pi_stars", c.pi_stars},
    {"n_labeled_per_class", c.n_labeled_per_class},
    {"n_test", c.n_test},
    {"separation", c.separation},
    {"classifier_reg", c.classifier_reg},
    {"length", c.length},
    {"change_times", c.change_times},
    {"shift", c.shift},
    {"noise_sd", c.noise_sd},
    {"k", c.k},
    {"r", c.r},
    {"scorer", c.scorer},
    {"folds", c.folds},
    {"max_centers", c.max_centers},
    {"sigma_grid", c.sigma_grid},
    {"lambda_grid", c.lambda_grid},
    {"permutations", c.permutations},
    {"alpha", c.alpha},
    {"statistics", c.statistics},
    {"replicates", c.replicates},
    {"seed", c.seed},
  };
}

struct ResultRow
{
  int replicate = 0;
  std::string condition;
  std::string estimator;
  double value = 0.0;
};

struct SummaryRow
{
  std::string condition;
  std::string estimator;
  std::size_t count = 0;
  double mean = 0.0;
  //! Sample standard deviation (n - 1 denominator) over sqrt(count).
  double se = 0.0;
};

struct ResultTable
{
  std::vector<ResultRow> rows;
  std::vector<SummaryRow> summaries;

  //! Recomputes summaries from rows; groups keep first-appearance order.
  void summarize()
  {
    summaries.clear();
    std::vector<std::vector<double>> values;
    for (const auto& row : rows) {
      auto it = std::find_if(summaries.begin(), summaries.end(), [&](const SummaryRow& s) {
        return s.condition == row.condition && s.estimator == row.estimator;
      });
      if (it == summaries.end()) {
        summaries.push_back({row.condition, row.estimator});
        values.emplace_back();
        it = summaries.end() - 1;
      }
      values[static_cast<std::size_t>(it - summaries.begin())].push_back(row.value);
    }
    for (std::size_t i = 0; i < summaries.size(); ++i) {
      const auto& v = values[i];
      double mean = 0.0;
      for (double x : v) {
        mean += x;
      }
      mean /= static_cast<double>(v.size());
      double ss = 0.0;
      for (double x : v) {
        ss += (x - mean) * (x - mean);
      }
      summaries[i].count = v.size();
      summaries[i].mean = mean;
      summaries[i].se = v.size() > 1
                          ? std::sqrt(ss / static_cast<double>(v.size() - 1)) /
                              std::sqrt(static_cast<double>(v.size()))
                          : 0.0;
    }
  }

  const SummaryRow& summary(const std::string& condition, const std::string& estimator) const
  {
    for (const auto& s : summaries) {
      if (s.condition == condition && s.estimator == estimator) {
        return s;
      }
    }
    throw InvalidArgument("no summary for " + condition + " / " + estimator);
  }
};

namespace detail {

inline std::string
format_number(double v)
{
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

inline std::string
short_number(double v)
{
  std::ostringstream os;
  os << v;
  return os.str();
}

//! RFC 4180 quoting when needed.
inline std::string
csv_field(const std::string& s)
{
  if (s.find_first_of(",\"\r\n") == std::string::npos) {
    return s;
  }
  std::string out = "\"";
  for (char c : s) {
    out += c;
    if (c == '"') {
      out += '"';
    }
  }
  return out + "\"";
}

struct Condition
{
  std::string label;
  double a = 0.0;
  double b = 0.0;
};

struct ReplicateOutput
{
  std::vector<std::pair<std::string, double>> values;
};

inline ReplicateOutput
run_l2_curve(const ExperimentConfig& c, const Condition& cond, Rng& rng, bool with_kde)
{
  const double mu = cond.a;
  auto [x, xp] = gen_gaussian_shift(c.d, c.n, c.n_prime, mu, rng);
  const auto pooled = SampleSet::concat(x, xp);
  const HyperGrid grid = c.grid_override(pooled.points()).value_or(HyperGrid::for_points(pooled.points()));
  const auto fit = fit_cv(x, xp, grid, c.folds, rng, c.max_centers);
  const auto est = l2_estimates(fit.model, x, xp);
  ReplicateOutput out;
  out.values.emplace_back("lsdd_combined", est.combined);
  if (with_kde) {
    const auto cands = default_bandwidths(pooled.points());
    const auto kp = fit_kde(x, cands, c.folds, rng);
    const auto kq = fit_kde(xp, cands, c.folds, rng);
    out.values.emplace_back("kde_l2", kde_l2(kp, kq));
  } else {
    out.values.emplace_back("lsdd_plain_h", est.plain_h);
    out.values.emplace_back("lsdd_plain_quadratic", est.plain_quadratic);
    out.values.emplace_back("lsdd_bias_corrected", est.bias_corrected);
    out.values.emplace_back("lsdd_positive_part", est.positive_part);
  }
  out.values.emplace_back("truth", true_l2_gaussian_shift(mu));
  return out;
}

inline ReplicateOutput
run_robustness(const ExperimentConfig& c, const Condition& cond, Rng& rng)
{
  const double eta = cond.a;
  const double mu = cond.b;
  auto [x, xp] = gen_outlier_mixture(c.n, c.n_prime, eta, mu, rng);
  const auto pooled = SampleSet::concat(x, xp);
  const HyperGrid grid = c.grid_override(pooled.points()).value_or(HyperGrid::for_points(pooled.points()));
  const auto fit = fit_cv(x, xp, grid, c.folds, rng, c.max_centers);
  const auto est = l2_estimates(fit.model, x, xp);
  const auto kl = kliep_fit_cv(x, xp, default_kliep_sigmas(x, xp), c.folds, KliepOptions{}, rng);
  ReplicateOutput out;
  out.values.emplace_back("lsdd_combined", est.combined);
  out.values.emplace_back("kliep_kl", kliep_kl_estimate(kl.model, x));
  out.values.emplace_back("truth_l2", true_l2_outlier_mixture(eta, mu));
  return out;
}

inline ReplicateOutput
run_two_sample(const ExperimentConfig& c, const Condition& cond, Rng& rng)
{
  auto [x, xp] = gen_outlier_mixture(c.n, c.n_prime, cond.a, cond.b, rng);
  ReplicateOutput out;
  for (const auto& name : c.statistics) {
    PermutationOptions popt;
    popt.permutations = c.permutations;
    popt.alpha = c.alpha;
    popt.seed = rng.next_seed();
    TestResult res;
    if (name == "lsdd") {
      LsddStatistic::Options o;
      o.folds = c.folds;
      o.max_centers = c.max_centers;
      o.grid = c.grid_override(SampleSet::concat(x, xp).points());
      o.center_seed = rng.next_seed();
      LsddStatistic stat(o);
      res = permutation_test(x, xp, stat, popt);
    } else {
      KliepStatistic::Options o;
      o.folds = c.folds;
      KliepStatistic stat(o);
      res = permutation_test(x, xp, stat, popt);
    }
    out.values.emplace_back(name + "_reject", res.reject ? 1.0 : 0.0);
    out.values.emplace_back(name + "_p_value", res.p_value);
  }
  return out;
}

inline ReplicateOutput
run_class_balance(const ExperimentConfig& c, const Condition& cond, Rng& rng)
{
  const double pi_star = cond.a;
  const auto data = gen_class_balance(c.d, c.n_labeled_per_class, c.n_test, pi_star,
                                      c.separation, rng);
  const auto grid = default_pi_grid();
  const auto all = SampleSet::concat(SampleSet::concat(data.train.positives, data.train.negatives),
                                     data.test);
  const auto lsdd = class_balance_estimate(data.train, data.test, grid,
                                           c.grid_override(all.points()), c.folds, rng,
                                           c.max_centers);
  const auto kde = class_balance_estimate_kde(data.train, data.test, grid, c.folds, rng);
  const double width = median_pairwise_distance(
    SampleSet::concat(data.train.positives, data.train.negatives).points());
  const auto clf_lsdd = weighted_rls_fit(data.train, lsdd.pi_hat, width, c.classifier_reg);
  const auto clf_kde = weighted_rls_fit(data.train, kde.pi_hat, width, c.classifier_reg);
  ReplicateOutput out;
  out.values.emplace_back("lsdd_pi_hat", lsdd.pi_hat);
  out.values.emplace_back("kde_pi_hat", kde.pi_hat);
  out.values.emplace_back("lsdd_sq_error", (lsdd.pi_hat - pi_star) * (lsdd.pi_hat - pi_star));
  out.values.emplace_back("kde_sq_error", (kde.pi_hat - pi_star) * (kde.pi_hat - pi_star));
  out.values.emplace_back("lsdd_misclass", misclassification_rate(clf_lsdd, data.test, data.test_labels));
  out.values.emplace_back("kde_misclass", misclassification_rate(clf_kde, data.test, data.test_labels));
  return out;
}

inline ReplicateOutput
run_change_detection(const ExperimentConfig& c, Rng& rng)
{
  const auto series = gen_step_series(c.length, c.change_times, c.shift, c.noise_sd, rng);
  ChangeOptions opt;
  opt.k = c.k;
  opt.r = c.r;
  opt.scorer = parse_change_scorer(c.scorer);
  opt.folds = c.folds;
  opt.seed = rng.next_seed();
  if (!c.sigma_grid.empty() || !c.lambda_grid.empty()) {
    opt.grid = c.grid_override(build_subsequences(series, c.k).windows);
  }
  const auto scores = change_scores(series, opt);
  const auto peaks = top_local_maxima(scores, c.change_times.size(), c.r);
  std::size_t hits = 0;
  for (Index t : c.change_times) {
    if (std::any_of(peaks.begin(), peaks.end(), [&](Index p) { return std::abs(p - t) <= c.r; })) {
      ++hits;
    }
  }
  ReplicateOutput out;
  out.values.emplace_back("changes_found", static_cast<double>(hits));
  out.values.emplace_back("all_found", hits == c.change_times.size() ? 1.0 : 0.0);
  return out;
}

inline std::vector<Condition>
conditions_for(const ExperimentConfig& c)
{
  std::vector<Condition> out;
  const auto& name = c.name;
  if (name == "l2-curve" || name == "kde-compare") {
    for (double mu : c.mus) {
      out.push_back({"mu=" + short_number(mu), mu, 0.0});
    }
  } else if (name == "robustness" || name == "two-sample-power") {
    for (double eta : c.etas) {
      for (double mu : c.mus) {
        out.push_back({"eta=" + short_number(eta) + ";mu=" + short_number(mu), eta, mu});
      }
    }
  } else if (name == "class-balance") {
    for (double p : c.pi_stars) {
      out.push_back({"pi=" + short_number(p), p, 0.0});
    }
  } else {
    out.push_back({"series", 0.0, 0.0});
  }
  if (out.empty()) {
    throw InvalidArgument("experiment '" + name + "': no conditions configured");
  }
  return out;
}

} // namespace detail

//! Runs every (condition, replicate) pair in parallel; rows are ordered by
//! condition, then replicate, then estimator.
inline ResultTable
run_experiment(const ExperimentConfig& config)
{
  config.validate();
  const auto exp_id = static_cast<std::uint64_t>(experiment_index(config.name));
  const auto conds = detail::conditions_for(config);
  const auto reps = static_cast<std::size_t>(config.replicates);
  std::vector<detail::ReplicateOutput> outputs(conds.size() * reps);

  parallel_for(outputs.size(), [&](std::size_t job) {
    const std::size_t ci = job / reps;
    const std::size_t r = job % reps;
    Rng rng(derive_seed(config.seed, {exp_id, ci, r}));
    const auto& cond = conds[ci];
    const auto& name = config.name;
    if (name == "l2-curve") {
      outputs[job] = detail::run_l2_curve(config, cond, rng, false);
    } else if (name == "kde-compare") {
      outputs[job] = detail::run_l2_curve(config, cond, rng, true);
    } else if (name == "robustness") {
      outputs[job] = detail::run_robustness(config, cond, rng);
    } else if (name == "two-sample-power") {
      outputs[job] = detail::run_two_sample(config, cond, rng);
    } else if (name == "class-balance") {
      outputs[job] = detail::run_class_balance(config, cond, rng);
    } else {
      outputs[job] = detail::run_change_detection(config, rng);
    }
  });

  ResultTable table;
  for (std::size_t job = 0; job < outputs.size(); ++job) {
    for (const auto& [estimator, value] : outputs[job].values) {
      table.rows.push_back({static_cast<int>(job % reps), conds[job / reps].label, estimator, value});
    }
  }
  table.summarize();
  return table;
}

//! Long format: kind,replicate,condition,estimator,value,se,count. Replicate
//! rows have kind "row"; summary rows have kind "summary", an empty
//! replicate, value = mean.
inline void
write_result_csv(std::ostream& out, const ResultTable& table)
{
  out << "kind,replicate,condition,estimator,value,se,count\n";
  for (const auto& row : table.rows) {
    out << "row," << row.replicate << ',' << detail::csv_field(row.condition) << ','
        << detail::csv_field(row.estimator) << ',' << detail::format_number(row.value) << ",,\n";
  }
  for (const auto& s : table.summaries) {
    out << "summary,," << detail::csv_field(s.condition) << ',' << detail::csv_field(s.estimator)
        << ',' << detail::format_number(s.mean) << ',' << detail::format_number(s.se) << ','
        << s.count << '\n';
  }
}

inline nlohmann::json
result_json(const ResultTable& table, const nlohmann::json& config)
{
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : table.rows) {
    rows.push_back({{"replicate", row.replicate},
                    {"condition", row.condition},
                    {"estimator", row.estimator},
                    {"value", row.value}});
  }
  nlohmann::json summaries = nlohmann::json::array();
  for (const auto& s : table.summaries) {
    summaries.push_back({{"condition", s.condition},
                         {"estimator", s.estimator},
                         {"count", s.count},
                         {"mean", s.mean},
                         {"se", s.se}});
  }
  return {{"version", LSDD_VERSION}, {"config", config}, {"rows", rows}, {"summaries", summaries}};
}

} // namespace lsdd
