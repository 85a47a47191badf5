// Command-line front end: estimation on CSV inputs, synthetic data generation
// and replicated experiments.

#include <lsdd/lsdd.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

using nlohmann::json;

enum ExitCode
{
  kOk = 0,
  kUsage = 1,
  kData = 2,
  kNumerical = 3,
};

struct Common
{
  std::uint64_t seed = 0;
  int folds = lsdd::kDefaultFolds;
  std::vector<double> sigma_grid;
  std::vector<double> lambda_grid;
  lsdd::Index max_centers = lsdd::kDefaultMaxCenters;
  std::string output;
  std::string format = "csv";
  bool header = false;
  std::size_t threads = 0;
};

void
add_common(CLI::App* cmd, Common& c)
{
  cmd->add_option("--seed", c.seed, "Base random seed")->capture_default_str();
  cmd->add_option("--folds", c.folds, "Cross-validation folds")->capture_default_str()->check(CLI::Range(2, 1000));
  cmd->add_option("--sigma-grid", c.sigma_grid, "Comma-separated kernel widths")->delimiter(',');
  cmd->add_option("--lambda-grid", c.lambda_grid, "Comma-separated regularization values")->delimiter(',');
  cmd->add_option("--max-centers", c.max_centers, "Maximum number of kernel centers")->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--output", c.output, "Output path (default: stdout)");
  cmd->add_option("--format", c.format, "Output format")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
  cmd->add_flag("--header", c.header, "Input CSV files start with a header row");
  cmd->add_option("--threads", c.threads, "Worker threads (0 = all cores)")->capture_default_str();
}

std::optional<lsdd::HyperGrid>
grid_from(const Common& c, const lsdd::PointMatrix& pooled)
{
  if (c.sigma_grid.empty() && c.lambda_grid.empty()) {
    return std::nullopt;
  }
  auto g = lsdd::HyperGrid::for_points(pooled);
  if (!c.sigma_grid.empty()) {
    g.sigmas = c.sigma_grid;
  }
  if (!c.lambda_grid.empty()) {
    g.lambdas = c.lambda_grid;
  }
  g.validate();
  return g;
}

json
common_json(const Common& c)
{
  return {{"seed", c.seed},
          {"folds", c.folds},
          {"sigma_grid", c.sigma_grid},
          {"lambda_grid", c.lambda_grid},
          {"max_centers", c.max_centers}};
}

//! Tabular result plus scalar summaries, rendered as CSV or JSON. In CSV
//! mode the summaries go to stderr as key=value lines.
struct Report
{
  json config = json::object();
  std::vector<std::string> columns;
  std::vector<std::vector<json>> rows;
  json summaries = json::object();
};

std::string
csv_cell(const json& v)
{
  if (v.is_string()) {
    return lsdd::detail::csv_field(v.get<std::string>());
  }
  if (v.is_number_float()) {
    return lsdd::detail::format_number(v.get<double>());
  }
  return v.dump();
}

void
render(const Report& r, const Common& c, std::ostream& out)
{
  if (c.format == "json") {
    json rows = json::array();
    for (const auto& row : r.rows) {
      json obj = json::object();
      for (std::size_t i = 0; i < r.columns.size(); ++i) {
        obj[r.columns[i]] = row[i];
      }
      rows.push_back(std::move(obj));
    }
    json doc = {{"version", LSDD_VERSION}, {"config", r.config}, {"rows", rows}, {"summaries", r.summaries}};
    out << doc.dump(2) << '\n';
    return;
  }
  for (std::size_t i = 0; i < r.columns.size(); ++i) {
    out << (i ? "," : "") << lsdd::detail::csv_field(r.columns[i]);
  }
  out << '\n';
  for (const auto& row : r.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      out << (i ? "," : "") << csv_cell(row[i]);
    }
    out << '\n';
  }
  for (const auto& [key, value] : r.summaries.items()) {
    std::cerr << key << '=' << (value.is_number_float() ? csv_cell(value) : value.dump()) << '\n';
  }
}

void
emit(const Report& r, const Common& c)
{
  if (c.output.empty()) {
    render(r, c, std::cout);
    return;
  }
  std::ofstream out(c.output);
  if (!out) {
    throw lsdd::DataError("cannot write '" + c.output + "'");
  }
  render(r, c, out);
}

std::vector<std::string>
coordinate_names(const std::string& prefix, lsdd::Index d)
{
  std::vector<std::string> out;
  for (lsdd::Index k = 1; k <= d; ++k) {
    out.push_back(prefix + std::to_string(k));
  }
  return out;
}

// ---------------------------------------------------------------------------

struct TwoFiles
{
  std::string x;
  std::string x_prime;
};

void
add_two_files(CLI::App* cmd, TwoFiles& f)
{
  cmd->add_option("--x", f.x, "CSV sample from p")->required()->check(CLI::ExistingFile);
  cmd->add_option("--x-prime", f.x_prime, "CSV sample from p'")->required()->check(CLI::ExistingFile);
}

std::pair<lsdd::SampleSet, lsdd::SampleSet>
load_pair(const TwoFiles& f, const Common& c)
{
  auto x = lsdd::load_csv(f.x, c.header);
  auto xp = lsdd::load_csv(f.x_prime, c.header);
  if (x.dim() != xp.dim()) {
    throw lsdd::DataError("'" + f.x + "' has " + std::to_string(x.dim()) + " columns but '" +
                          f.x_prime + "' has " + std::to_string(xp.dim()));
  }
  return {std::move(x), std::move(xp)};
}

lsdd::CvFit
fit_pair(const lsdd::SampleSet& x, const lsdd::SampleSet& xp, const Common& c, lsdd::Rng& rng)
{
  const auto pooled = lsdd::SampleSet::concat(x, xp);
  const auto grid = grid_from(c, pooled.points()).value_or(lsdd::HyperGrid::for_points(pooled.points()));
  return lsdd::fit_cv(x, xp, grid, c.folds, rng, c.max_centers);
}

int
run_fit(const Common& c, const TwoFiles& f, const std::string& eval_path)
{
  const auto [x, xp] = load_pair(f, c);
  lsdd::Rng rng(c.seed);
  const auto fit = fit_pair(x, xp, c, rng);
  Report r;
  r.config = common_json(c);
  r.config["x"] = f.x;
  r.config["x_prime"] = f.x_prime;
  const lsdd::Index d = x.dim();
  if (!eval_path.empty()) {
    const auto pts = lsdd::load_csv(eval_path, c.header);
    if (pts.dim() != d) {
      throw lsdd::DataError("'" + eval_path + "' has " + std::to_string(pts.dim()) +
                            " columns, expected " + std::to_string(d));
    }
    r.config["eval"] = eval_path;
    r.columns = coordinate_names("x", d);
    r.columns.push_back("f_hat");
    const auto values = lsdd::predict(fit.model, pts.points());
    for (lsdd::Index i = 0; i < pts.size(); ++i) {
      std::vector<json> row;
      for (lsdd::Index k = 0; k < d; ++k) {
        row.emplace_back(pts.points()(i, k));
      }
      row.emplace_back(values[i]);
      r.rows.push_back(std::move(row));
    }
  } else {
    r.columns = coordinate_names("c", d);
    r.columns.push_back("theta");
    const auto& centers = fit.model.basis.centers();
    for (lsdd::Index i = 0; i < centers.rows(); ++i) {
      std::vector<json> row;
      for (lsdd::Index k = 0; k < d; ++k) {
        row.emplace_back(centers(i, k));
      }
      row.emplace_back(fit.model.theta[i]);
      r.rows.push_back(std::move(row));
    }
  }
  r.summaries = {{"sigma", fit.report.sigma()},
                 {"lambda", fit.report.lambda()},
                 {"cv_score", fit.report.best_score()},
                 {"squared_norm", lsdd::squared_norm(fit.model)},
                 {"pseudo_inverse_solves", fit.report.pseudo_inverse_solves}};
  emit(r, c);
  return kOk;
}

int
run_l2(const Common& c, const TwoFiles& f, bool with_kde)
{
  const auto [x, xp] = load_pair(f, c);
  lsdd::Rng rng(c.seed);
  const auto fit = fit_pair(x, xp, c, rng);
  const auto est = lsdd::l2_estimates(fit.model, x, xp);
  Report r;
  r.config = common_json(c);
  r.config["x"] = f.x;
  r.config["x_prime"] = f.x_prime;
  r.columns = {"estimator", "value"};
  r.rows = {{"plain_h", est.plain_h},
            {"plain_quadratic", est.plain_quadratic},
            {"combined", est.combined},
            {"bias_corrected", est.bias_corrected},
            {"positive_part", est.positive_part}};
  if (with_kde) {
    const auto cands = lsdd::default_bandwidths(lsdd::SampleSet::concat(x, xp).points());
    const auto kp = lsdd::fit_kde(x, cands, c.folds, rng);
    const auto kq = lsdd::fit_kde(xp, cands, c.folds, rng);
    r.rows.push_back({"kde", lsdd::kde_l2(kp, kq)});
  }
  r.summaries = {{"sigma", fit.report.sigma()},
                 {"lambda", fit.report.lambda()},
                 {"gram_condition", est.gram_condition},
                 {"trace_pseudo_inverse", est.trace_pseudo_inverse}};
  emit(r, c);
  return kOk;
}

int
run_test(const Common& c, const TwoFiles& f, const std::string& statistic, int permutations,
         double alpha)
{
  const auto [x, xp] = load_pair(f, c);
  lsdd::PermutationOptions popt;
  popt.permutations = permutations;
  popt.alpha = alpha;
  popt.seed = c.seed;
  lsdd::TestResult res;
  if (statistic == "lsdd") {
    lsdd::LsddStatistic::Options o;
    o.folds = c.folds;
    o.max_centers = c.max_centers;
    o.grid = grid_from(c, lsdd::SampleSet::concat(x, xp).points());
    o.center_seed = lsdd::derive_seed(c.seed, {~0ULL});
    lsdd::LsddStatistic stat(o);
    res = lsdd::permutation_test(x, xp, stat, popt);
  } else {
    lsdd::KliepStatistic::Options o;
    o.folds = c.folds;
    o.sigmas = c.sigma_grid;
    lsdd::KliepStatistic stat(o);
    res = lsdd::permutation_test(x, xp, stat, popt);
  }
  Report r;
  r.config = common_json(c);
  r.config["x"] = f.x;
  r.config["x_prime"] = f.x_prime;
  r.config["statistic"] = statistic;
  r.config["permutations"] = permutations;
  r.config["alpha"] = alpha;
  r.columns = {"replicate", "statistic"};
  r.rows.push_back({0, res.observed_stat});
  for (std::size_t i = 0; i < res.permuted_stats.size(); ++i) {
    r.rows.push_back({i + 1, res.permuted_stats[i]});
  }
  r.summaries = {{"observed", res.observed_stat}, {"p_value", res.p_value}, {"reject", res.reject}};
  emit(r, c);
  return kOk;
}

int
run_class_balance(const Common& c, const std::string& pos, const std::string& neg,
                  const std::string& test, const std::string& method)
{
  lsdd::LabeledSet train(lsdd::load_csv(pos, c.header), lsdd::load_csv(neg, c.header));
  const auto t = lsdd::load_csv(test, c.header);
  if (t.dim() != train.dim()) {
    throw lsdd::DataError("test set has " + std::to_string(t.dim()) + " columns, training sets have " +
                          std::to_string(train.dim()));
  }
  lsdd::Rng rng(c.seed);
  lsdd::ClassBalanceResult res;
  if (method == "lsdd") {
    const auto all = lsdd::SampleSet::concat(lsdd::SampleSet::concat(train.positives, train.negatives), t);
    res = lsdd::class_balance_estimate(train, t, lsdd::default_pi_grid(), grid_from(c, all.points()),
                                       c.folds, rng, c.max_centers);
  } else {
    std::optional<std::vector<double>> bw;
    if (!c.sigma_grid.empty()) {
      bw = c.sigma_grid;
    }
    res = lsdd::class_balance_estimate_kde(train, t, lsdd::default_pi_grid(), c.folds, rng, bw);
  }
  Report r;
  r.config = common_json(c);
  r.config["positives"] = pos;
  r.config["negatives"] = neg;
  r.config["test"] = test;
  r.config["method"] = method;
  r.columns = {"pi", "distance"};
  for (const auto& [pi, dist] : res.curve) {
    r.rows.push_back({pi, dist});
  }
  r.summaries = {{"pi_hat", res.pi_hat}};
  if (method == "lsdd") {
    r.summaries["sigma"] = res.sigma;
    r.summaries["lambda"] = res.lambda;
  }
  emit(r, c);
  return kOk;
}

struct ChangeArgs
{
  std::string series;
  lsdd::Index k = 5;
  lsdd::Index r = 50;
  lsdd::Index stride = 1;
  std::string scorer = "positive-part";
  bool norm = false;
  bool frozen = false;
  std::size_t top = 0;
};

int
run_change(const Common& c, const ChangeArgs& a)
{
  auto series = lsdd::load_csv(a.series, c.header).points();
  if (a.norm) {
    series = lsdd::row_norms(series);
  }
  lsdd::ChangeOptions opt;
  opt.k = a.k;
  opt.r = a.r;
  opt.stride = a.stride;
  opt.folds = c.folds;
  opt.frozen = a.frozen;
  opt.seed = c.seed;
  opt.scorer = lsdd::parse_change_scorer(a.scorer);
  if (opt.scorer == lsdd::ChangeScorer::kliep) {
    opt.kliep_sigmas = c.sigma_grid;
  } else if (!c.sigma_grid.empty() || !c.lambda_grid.empty()) {
    opt.grid = grid_from(c, lsdd::build_subsequences(series, a.k).windows);
  }
  const auto scores = lsdd::change_scores(series, opt);
  Report r;
  r.config = common_json(c);
  r.config["series"] = a.series;
  r.config["k"] = a.k;
  r.config["r"] = a.r;
  r.config["stride"] = a.stride;
  r.config["scorer"] = a.scorer;
  r.config["norm"] = a.norm;
  r.config["frozen"] = a.frozen;
  r.columns = {"time", "score"};
  for (std::size_t i = 0; i < scores.times.size(); ++i) {
    r.rows.push_back({scores.times[i], scores.scores[i]});
  }
  if (a.top > 0) {
    r.summaries["peaks"] = lsdd::top_local_maxima(scores, a.top, a.r);
  }
  emit(r, c);
  return kOk;
}

struct SynthArgs
{
  std::string kind = "gaussian-shift";
  lsdd::Index d = 1;
  lsdd::Index n = 200;
  lsdd::Index n_prime = 200;
  double mu = 0.5;
  double eta = 0.1;
  double pi_star = 0.3;
  double separation = 2.0;
  lsdd::Index n_labeled = 20;
  lsdd::Index n_test = 50;
  lsdd::Index length = 600;
  std::vector<lsdd::Index> change_times = {120, 240, 360, 480};
  double shift = 3.0;
  double noise_sd = 1.0;
};

int
run_synth(const Common& c, const SynthArgs& a)
{
  if (c.output.empty()) {
    throw lsdd::InvalidArgument("synth: --output PREFIX is required");
  }
  lsdd::Rng rng(c.seed);
  auto save = [&](const std::string& suffix, const lsdd::PointMatrix& m, const std::string& prefix) {
    lsdd::save_csv(c.output + suffix, m, coordinate_names(prefix, m.cols()));
    std::cout << c.output + suffix << '\n';
  };
  if (a.kind == "gaussian-shift" || a.kind == "outlier-mixture") {
    const auto [x, xp] = a.kind == "gaussian-shift"
                           ? lsdd::gen_gaussian_shift(a.d, a.n, a.n_prime, a.mu, rng)
                           : lsdd::gen_outlier_mixture(a.n, a.n_prime, a.eta, a.mu, rng);
    save("_x.csv", x.points(), "x");
    save("_x_prime.csv", xp.points(), "x");
  } else if (a.kind == "class-balance") {
    const auto data = lsdd::gen_class_balance(a.d, a.n_labeled, a.n_test, a.pi_star, a.separation, rng);
    save("_positives.csv", data.train.positives.points(), "x");
    save("_negatives.csv", data.train.negatives.points(), "x");
    save("_test.csv", data.test.points(), "x");
    lsdd::PointMatrix labels(a.n_test, 1);
    for (lsdd::Index i = 0; i < a.n_test; ++i) {
      labels(i, 0) = data.test_labels[static_cast<std::size_t>(i)];
    }
    lsdd::save_csv(c.output + "_test_labels.csv", labels, {"label"});
    std::cout << c.output + "_test_labels.csv" << '\n';
  } else {
    save(".csv", lsdd::gen_step_series(a.length, a.change_times, a.shift, a.noise_sd, rng), "y");
  }
  return kOk;
}

int
run_experiment_cmd(const Common& c, lsdd::ExperimentConfig cfg)
{
  cfg.seed = c.seed;
  cfg.folds = c.folds;
  cfg.max_centers = c.max_centers;
  cfg.sigma_grid = c.sigma_grid;
  cfg.lambda_grid = c.lambda_grid;
  cfg.output = c.output;
  const auto table = lsdd::run_experiment(cfg);
  const json doc = lsdd::result_json(table, cfg);
  if (c.output.empty()) {
    if (c.format == "json") {
      std::cout << doc.dump(2) << '\n';
    } else {
      lsdd::write_result_csv(std::cout, table);
    }
    return kOk;
  }
  std::string stem = c.output;
  for (const char* ext : {".csv", ".json"}) {
    const std::string e(ext);
    if (stem.size() > e.size() && stem.compare(stem.size() - e.size(), e.size(), e) == 0) {
      stem.erase(stem.size() - e.size());
    }
  }
  std::ofstream csv(stem + ".csv");
  std::ofstream js(stem + ".json");
  if (!csv || !js) {
    throw lsdd::DataError("cannot write '" + stem + ".csv' / '" + stem + ".json'");
  }
  lsdd::write_result_csv(csv, table);
  js << doc.dump(2) << '\n';
  if (!csv || !js) {
    throw lsdd::DataError("write failed for '" + stem + "'");
  }
  return kOk;
}

} // namespace

int
main(int argc, char** argv)
{
  CLI::App app{"Least-squares density-difference estimation"};
  app.set_version_flag("--version", std::string(LSDD_VERSION));
  app.require_subcommand(1);

  Common common;
  TwoFiles files;

  auto* fit = app.add_subcommand("fit", "Fit a density-difference model by cross-validation");
  add_common(fit, common);
  add_two_files(fit, files);
  std::string eval_path;
  fit->add_option("--eval", eval_path, "CSV points at which to evaluate f-hat")->check(CLI::ExistingFile);

  auto* l2 = app.add_subcommand("l2", "Estimate the L2 distance between two samples");
  add_common(l2, common);
  add_two_files(l2, files);
  bool with_kde = false;
  l2->add_flag("--kde", with_kde, "Also report the KDE plug-in estimate");

  auto* test = app.add_subcommand("test", "Permutation two-sample test");
  add_common(test, common);
  add_two_files(test, files);
  std::string statistic = "lsdd";
  int permutations = 100;
  double alpha = 0.05;
  test->add_option("--statistic", statistic)->check(CLI::IsMember({"lsdd", "kliep"}))->capture_default_str();
  test->add_option("--permutations", permutations)->check(CLI::PositiveNumber)->capture_default_str();
  test->add_option("--alpha", alpha)->check(CLI::Range(0.0, 1.0))->capture_default_str();

  auto* cb = app.add_subcommand("class-balance", "Estimate the positive-class prior of a test set");
  add_common(cb, common);
  std::string pos, neg, test_path, method = "lsdd";
  cb->add_option("--positives", pos, "CSV of labeled positives")->required()->check(CLI::ExistingFile);
  cb->add_option("--negatives", neg, "CSV of labeled negatives")->required()->check(CLI::ExistingFile);
  cb->add_option("--test", test_path, "CSV of unlabeled test points")->required()->check(CLI::ExistingFile);
  cb->add_option("--method", method)->check(CLI::IsMember({"lsdd", "kde"}))->capture_default_str();

  auto* cd = app.add_subcommand("change-detect", "Change-point scores over a time series");
  add_common(cd, common);
  ChangeArgs change;
  cd->add_option("--series", change.series, "CSV with one observation per row")->required()->check(CLI::ExistingFile);
  cd->add_option("--k", change.k, "Subsequence length")->check(CLI::PositiveNumber)->capture_default_str();
  cd->add_option("--r", change.r, "Subsequences per segment")->check(CLI::PositiveNumber)->capture_default_str();
  cd->add_option("--stride", change.stride)->check(CLI::PositiveNumber)->capture_default_str();
  cd->add_option("--scorer", change.scorer)->check(CLI::IsMember({"combined", "positive-part", "kliep"}))->capture_default_str();
  cd->add_flag("--norm", change.norm, "Score the Euclidean norm of each row");
  cd->add_flag("--frozen", change.frozen, "Select hyperparameters at the first time only");
  cd->add_option("--top", change.top, "Report this many separated score maxima");

  auto* synth = app.add_subcommand("synth", "Write a synthetic data set to PREFIX*.csv");
  add_common(synth, common);
  SynthArgs sa;
  synth->add_option("--kind", sa.kind)
    ->check(CLI::IsMember({"gaussian-shift", "outlier-mixture", "class-balance", "step-series"}))
    ->capture_default_str();
  synth->add_option("--d", sa.d)->check(CLI::PositiveNumber)->capture_default_str();
  synth->add_option("--n", sa.n)->check(CLI::PositiveNumber)->capture_default_str();
  synth->add_option("--n-prime", sa.n_prime)->check(CLI::PositiveNumber)->capture_default_str();
  synth->add_option("--mu", sa.mu)->capture_default_str();
  synth->add_option("--eta", sa.eta)->check(CLI::Range(0.0, 1.0))->capture_default_str();
  synth->add_option("--pi-star", sa.pi_star)->check(CLI::Range(0.0, 1.0))->capture_default_str();
  synth->add_option("--separation", sa.separation)->capture_default_str();
  synth->add_option("--n-labeled", sa.n_labeled)->check(CLI::PositiveNumber)->capture_default_str();
  synth->add_option("--n-test", sa.n_test)->check(CLI::PositiveNumber)->capture_default_str();
  synth->add_option("--length", sa.length)->check(CLI::PositiveNumber)->capture_default_str();
  synth->add_option("--change-times", sa.change_times)->delimiter(',');
  synth->add_option("--shift", sa.shift)->capture_default_str();
  synth->add_option("--noise-sd", sa.noise_sd)->capture_default_str();

  auto* exp = app.add_subcommand("experiment", "Run a replicated experiment");
  add_common(exp, common);
  std::string exp_name;
  exp->add_option("name", exp_name, "Experiment name")->required();
  std::optional<lsdd::Index> e_d, e_n, e_np, e_length, e_k, e_r, e_nlab, e_ntest;
  std::optional<int> e_reps, e_perms;
  std::optional<double> e_alpha, e_sep, e_shift, e_noise;
  std::vector<double> e_mus, e_etas, e_pis;
  std::vector<lsdd::Index> e_changes;
  std::vector<std::string> e_stats;
  std::string e_scorer;
  exp->add_option("--replicates", e_reps)->check(CLI::PositiveNumber);
  exp->add_option("--d", e_d)->check(CLI::PositiveNumber);
  exp->add_option("--n", e_n)->check(CLI::PositiveNumber);
  exp->add_option("--n-prime", e_np)->check(CLI::PositiveNumber);
  exp->add_option("--mus", e_mus)->delimiter(',');
  exp->add_option("--etas", e_etas)->delimiter(',');
  exp->add_option("--pi-stars", e_pis)->delimiter(',');
  exp->add_option("--n-labeled", e_nlab)->check(CLI::PositiveNumber);
  exp->add_option("--n-test", e_ntest)->check(CLI::PositiveNumber);
  exp->add_option("--separation", e_sep);
  exp->add_option("--permutations", e_perms)->check(CLI::PositiveNumber);
  exp->add_option("--alpha", e_alpha)->check(CLI::Range(0.0, 1.0));
  exp->add_option("--statistics", e_stats)->delimiter(',')->check(CLI::IsMember({"lsdd", "kliep"}));
  exp->add_option("--length", e_length)->check(CLI::PositiveNumber);
  exp->add_option("--change-times", e_changes)->delimiter(',');
  exp->add_option("--shift", e_shift);
  exp->add_option("--noise-sd", e_noise);
  exp->add_option("--k", e_k)->check(CLI::PositiveNumber);
  exp->add_option("--r", e_r)->check(CLI::PositiveNumber);
  exp->add_option("--scorer", e_scorer)->check(CLI::IsMember({"combined", "positive-part", "kliep"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  lsdd::default_thread_count() = common.threads;
  try {
    if (*fit) {
      return run_fit(common, files, eval_path);
    }
    if (*l2) {
      return run_l2(common, files, with_kde);
    }
    if (*test) {
      return run_test(common, files, statistic, permutations, alpha);
    }
    if (*cb) {
      return run_class_balance(common, pos, neg, test_path, method);
    }
    if (*cd) {
      return run_change(common, change);
    }
    if (*synth) {
      return run_synth(common, sa);
    }
    auto cfg = lsdd::ExperimentConfig::defaults(exp_name);
    auto set = [](auto& dst, const auto& src) {
      if (src) {
        dst = *src;
      }
    };
    auto set_list = [](auto& dst, const auto& src) {
      if (!src.empty()) {
        dst = src;
      }
    };
    set(cfg.replicates, e_reps);
    set(cfg.d, e_d);
    set(cfg.n, e_n);
    set(cfg.n_prime, e_np);
    set(cfg.n_labeled_per_class, e_nlab);
    set(cfg.n_test, e_ntest);
    set(cfg.separation, e_sep);
    set(cfg.permutations, e_perms);
    set(cfg.alpha, e_alpha);
    set(cfg.length, e_length);
    set(cfg.shift, e_shift);
    set(cfg.noise_sd, e_noise);
    set(cfg.k, e_k);
    set(cfg.r, e_r);
    set_list(cfg.mus, e_mus);
    set_list(cfg.etas, e_etas);
    set_list(cfg.pi_stars, e_pis);
    set_list(cfg.change_times, e_changes);
    set_list(cfg.statistics, e_stats);
    if (!e_scorer.empty()) {
      cfg.scorer = e_scorer;
    }
    return run_experiment_cmd(common, std::move(cfg));
  } catch (const lsdd::DimensionMismatch& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  } catch (const lsdd::InvalidArgument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const lsdd::DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNumerical;
  }
}
