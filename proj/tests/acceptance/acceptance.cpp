// End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and
// exits nonzero if any criterion fails. `--only 2,7` runs a subset.

#include "../support/gaussian_oracle.hpp"

#include <lsdd/lsdd.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace lsdd;
using lsdd::testing::IsoNormal;

namespace {

struct Outcome
{
  bool pass = false;
  std::string detail;
};

std::string
fmt(double v, int precision = 4)
{
  std::ostringstream os;
  os.precision(precision);
  os << v;
  return os.str();
}

// 1 -------------------------------------------------------------------------
Outcome
identity_zero()
{
  Rng rng(101);
  PointMatrix pts(80, 2);
  for (Index i = 0; i < pts.rows(); ++i) {
    pts(i, 0) = rng.normal();
    pts(i, 1) = rng.normal();
  }
  const SampleSet x(pts);
  const auto start = std::chrono::steady_clock::now();
  const auto fit = fit_cv(x, x, rng);
  const auto est = l2_estimates(fit.model, x, x);
  const Vector h = mean_diff_vector(fit.model.basis, x, x);
  const DesignPair design(fit.model.gram, h);
  const double seconds =
    std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  const bool zero_h = (h.array() == 0.0).all();
  const bool zero_theta = (fit.model.theta.array() == 0.0).all();
  const double generalized = l2_generalized(design, fit.model.theta, 0.5);
  const bool zero_est = est.plain_h == 0.0 && est.plain_quadratic == 0.0 &&
                        est.combined == 0.0 && generalized == 0.0 && est.positive_part == 0.0;
  const bool correction_only = est.bias_corrected <= 0.0;
  Outcome o;
  o.pass = zero_h && zero_theta && zero_est && correction_only && seconds < 1.0;
  o.detail = "h=0:" + std::to_string(zero_h) + " theta=0:" + std::to_string(zero_theta) +
             " plain_h/plain_quadratic/generalized/combined/positive_part=0:" +
             std::to_string(zero_est) + " bias_corrected=" + fmt(est.bias_corrected) +
             " (pure trace term) time=" + fmt(seconds, 3) + "s";
  return o;
}

// 2 -------------------------------------------------------------------------
Outcome
l2_curve()
{
  auto cfg = ExperimentConfig::defaults("l2-curve");
  cfg.d = 1;
  cfg.n = cfg.n_prime = 200;
  cfg.mus = {0.0, 0.2, 0.4, 0.6, 0.8};
  cfg.replicates = 100;
  cfg.seed = 2;
  const auto table = run_experiment(cfg);
  Outcome o{true, ""};
  for (double mu : cfg.mus) {
    const std::string cond = "mu=" + detail::short_number(mu);
    const double mean = table.summary(cond, "lsdd_combined").mean;
    const double truth = true_l2_gaussian_shift(mu);
    const bool ok = std::abs(mean - truth) <= 0.10;
    o.pass = o.pass && ok;
    o.detail += cond + ": " + fmt(mean) + " vs " + fmt(truth) + (ok ? "" : " (out of band)") + "; ";
  }
  return o;
}

// 3 -------------------------------------------------------------------------
Outcome
kde_underestimation()
{
  auto cfg = ExperimentConfig::defaults("kde-compare");
  cfg.d = 5;
  cfg.n = cfg.n_prime = 200;
  cfg.mus = {0.8};
  cfg.replicates = 100;
  cfg.seed = 3;
  const auto table = run_experiment(cfg);
  const double kde = table.summary("mu=0.8", "kde_l2").mean;
  const double lsdd = table.summary("mu=0.8", "lsdd_combined").mean;
  const double truth = true_l2_gaussian_shift(0.8);
  return {kde < lsdd && kde < 0.5 * truth,
          "mean kde_l2=" + fmt(kde) + " mean lsdd=" + fmt(lsdd) + " truth=" + fmt(truth)};
}

// 4 -------------------------------------------------------------------------
Outcome
ordering()
{
  Rng rng(4);
  double worst = 0.0;
  int violations = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const Index d = 1 + static_cast<Index>(rng.below(3));
    const Index n = 10 + static_cast<Index>(rng.below(60));
    const Index np = 10 + static_cast<Index>(rng.below(60));
    const double shift = rng.uniform(0.0, 2.0);
    PointMatrix a(n, d);
    PointMatrix b(np, d);
    for (Index i = 0; i < n; ++i) {
      for (Index k = 0; k < d; ++k) {
        a(i, k) = rng.normal(k == 0 ? shift : 0.0, 1.0);
      }
    }
    for (Index i = 0; i < np; ++i) {
      for (Index k = 0; k < d; ++k) {
        b(i, k) = rng.normal();
      }
    }
    const SampleSet x(a);
    const SampleSet xp(b);
    const double sigma = std::exp(rng.uniform(std::log(0.05), std::log(5.0)));
    const double lambda = std::exp(rng.uniform(std::log(1e-6), std::log(10.0)));
    const auto centers = select_centers(x, xp, 40, rng);
    const auto model = fit_fixed(x, xp, sigma, lambda, centers);
    const DesignPair design(model.gram, mean_diff_vector(model.basis, x, xp));
    const double ph = l2_plain_h(design, model.theta);
    const double pq = l2_plain_quadratic(design, model.theta);
    const double cb = l2_combined(design, model.theta);
    const double v = std::max(ph - cb, pq - ph);
    worst = std::max(worst, v);
    if (v > 1e-10) {
      ++violations;
    }
  }
  return {violations == 0,
          "violations=" + std::to_string(violations) + "/1000, worst excess=" + fmt(worst)};
}

// 5 -------------------------------------------------------------------------
Outcome
bias_identity()
{
  PointMatrix c(5, 1);
  c << -1.5, -0.5, 0.5, 1.5, 2.5;
  const GaussianBasis basis(c, 0.8);
  const IsoNormal p{Eigen::RowVectorXd::Constant(1, 0.5), 1.0};
  const IsoNormal q{Eigen::RowVectorXd::Constant(1, 0.0), 1.2};
  const Index n = 100;
  const Index np = 100;
  const Matrix gram = gram_matrix(basis);
  const Eigen::LLT<Matrix> llt(gram);
  const Vector h = testing::basis_expectation(basis, p) - testing::basis_expectation(basis, q);
  const Matrix v = testing::basis_covariance(basis, p) / static_cast<double>(n) +
                   testing::basis_covariance(basis, q) / static_cast<double>(np);
  const double expected = llt.solve(v).trace();
  const double truth = h.dot(llt.solve(h));

  const int resamples = 2000;
  std::vector<double> values(resamples);
  parallel_for(values.size(), [&](std::size_t r) {
    Rng rng(derive_seed(5, {r}));
    const SampleSet x(testing::sample_normal(p, n, rng));
    const SampleSet xp(testing::sample_normal(q, np, rng));
    const Vector hh = mean_diff_vector(basis, x, xp);
    values[r] = hh.dot(llt.solve(hh));
  });
  double mean = 0.0;
  for (double x : values) {
    mean += x;
  }
  mean /= resamples;
  double ss = 0.0;
  for (double x : values) {
    ss += (x - mean) * (x - mean);
  }
  const double se = std::sqrt(ss / (resamples - 1)) / std::sqrt(static_cast<double>(resamples));
  const double bias = mean - truth;
  return {std::abs(bias - expected) <= 3.0 * se,
          "empirical bias=" + fmt(bias, 5) + " trace=" + fmt(expected, 5) + " mc se=" + fmt(se, 3) +
            " (|diff|/se=" + fmt(std::abs(bias - expected) / se, 3) + ")"};
}

// 6 -------------------------------------------------------------------------
Outcome
expansion_remainder()
{
  PointMatrix c(5, 1);
  c << -6.0, -3.0, 0.0, 3.0, 6.0;
  const GaussianBasis basis(c, 1.0);
  const Matrix gram = gram_matrix(basis);
  Vector h(5);
  h << 0.30, -0.12, 0.05, 0.21, -0.08;
  const Eigen::LLT<Matrix> llt(gram);
  const Vector hinv = llt.solve(h);
  const double q1 = h.dot(hinv);
  const double q2 = hinv.squaredNorm();
  const DesignPair design(gram, h);
  auto remainder = [&](double beta, double lambda) {
    const auto coef = solve_regularized(design, lambda);
    const double first_order = q1 - lambda * (2.0 - beta) * q2;
    return std::abs(l2_generalized(design, coef.theta, beta) - first_order);
  };
  Outcome o{true, ""};
  for (double beta : {0.0, 1.0, 2.0}) {
    for (double lambda : {1e-2, 5e-3}) {
      const double ratio = remainder(beta, lambda) / remainder(beta, lambda / 2.0);
      const bool ok = ratio >= 2.5 && ratio <= 6.0;
      o.pass = o.pass && ok;
      o.detail += "beta=" + fmt(beta, 1) + ",lambda=" + fmt(lambda, 2) +
                  ": R(l)/R(l/2)=" + fmt(ratio) + (ok ? "" : " (out of band)") + "; ";
    }
  }
  return o;
}

// 7 -------------------------------------------------------------------------
Outcome
permutation_level()
{
  auto cfg = ExperimentConfig::defaults("two-sample-power");
  cfg.n = cfg.n_prime = 100;
  cfg.etas = {0.0};
  cfg.mus = {0.0};
  cfg.statistics = {"lsdd"};
  cfg.permutations = 100;
  cfg.alpha = 0.05;
  cfg.replicates = 200;
  cfg.seed = 7;
  const auto table = run_experiment(cfg);
  const double rate = table.summary("eta=0;mu=0", "lsdd_reject").mean;
  return {rate >= 0.02 && rate <= 0.08, "rejection rate=" + fmt(rate) + " over 200 trials"};
}

// 8 -------------------------------------------------------------------------
Outcome
outlier_robustness()
{
  auto cfg = ExperimentConfig::defaults("two-sample-power");
  cfg.n = cfg.n_prime = 100;
  cfg.etas = {0.1};
  cfg.mus = {10.0};
  cfg.statistics = {"lsdd", "kliep"};
  cfg.permutations = 100;
  cfg.alpha = 0.05;
  cfg.replicates = 100;
  cfg.seed = 8;
  const auto table = run_experiment(cfg);
  const double lsdd = table.summary("eta=0.1;mu=10", "lsdd_reject").mean;
  const double kliep = table.summary("eta=0.1;mu=10", "kliep_reject").mean;
  return {lsdd < kliep, "LSDD rejection=" + fmt(lsdd) + " KLIEP rejection=" + fmt(kliep)};
}

// 9 -------------------------------------------------------------------------
Outcome
parametric_rate()
{
  PointMatrix c(5, 1);
  c << -1.0, -0.5, 0.0, 0.5, 1.0;
  const GaussianBasis basis(c, 0.7);
  const IsoNormal p{Eigen::RowVectorXd::Constant(1, 0.3), 1.0};
  const IsoNormal q{Eigen::RowVectorXd::Constant(1, 0.0), 1.0};
  const Matrix gram = gram_matrix(basis);
  const Vector h = testing::basis_expectation(basis, p) - testing::basis_expectation(basis, q);
  const double lambda = 0.0;
  const RegularizedSolver solver(gram, lambda, false);
  const Vector theta_star = solver.solve(h);

  const std::vector<Index> sizes = {100, 400, 1600, 6400};
  std::vector<double> lx, ly;
  std::string detail;
  for (std::size_t s = 0; s < sizes.size(); ++s) {
    const Index n = sizes[s];
    std::vector<double> err(200);
    parallel_for(err.size(), [&](std::size_t r) {
      Rng rng(derive_seed(9, {s, r}));
      const SampleSet x(testing::sample_normal(p, n, rng));
      const SampleSet xp(testing::sample_normal(q, n, rng));
      err[r] = (solver.solve(mean_diff_vector(basis, x, xp)) - theta_star).squaredNorm();
    });
    double mean = 0.0;
    for (double e : err) {
      mean += e;
    }
    mean /= static_cast<double>(err.size());
    lx.push_back(std::log(static_cast<double>(n)));
    ly.push_back(std::log(mean));
    detail += "n=" + std::to_string(n) + ": " + fmt(mean) + "; ";
  }
  const double mx = (lx[0] + lx[1] + lx[2] + lx[3]) / 4.0;
  const double my = (ly[0] + ly[1] + ly[2] + ly[3]) / 4.0;
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  const double slope = sxy / sxx;
  return {std::abs(slope + 1.0) <= 0.3, "slope=" + fmt(slope) + "; " + detail};
}

// 10 ------------------------------------------------------------------------
Outcome
change_detection()
{
  auto cfg = ExperimentConfig::defaults("change-detection");
  cfg.k = 5;
  cfg.r = 50;
  cfg.shift = 3.0;
  cfg.noise_sd = 1.0;
  cfg.replicates = 10;
  cfg.seed = 10;
  const auto table = run_experiment(cfg);
  int found = 0;
  std::string per_seed;
  for (const auto& row : table.rows) {
    if (row.estimator == "all_found") {
      found += row.value == 1.0 ? 1 : 0;
    } else if (row.estimator == "changes_found") {
      per_seed += fmt(row.value, 1) + " ";
    }
  }
  return {found >= 9, "seeds with all 4 changes found=" + std::to_string(found) +
                        "/10 (changes found per seed: " + per_seed + ")"};
}

// 11 ------------------------------------------------------------------------
Outcome
class_balance()
{
  auto cfg = ExperimentConfig::defaults("class-balance");
  cfg.n_labeled_per_class = 20;
  cfg.n_test = 50;
  cfg.pi_stars = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  cfg.replicates = 200;
  cfg.seed = 11;
  const auto table = run_experiment(cfg);
  int wins = 0;
  std::string detail;
  for (double pi : cfg.pi_stars) {
    const std::string cond = "pi=" + detail::short_number(pi);
    const double l = table.summary(cond, "lsdd_sq_error").mean;
    const double k = table.summary(cond, "kde_sq_error").mean;
    wins += l <= k ? 1 : 0;
    detail += cond + ": " + fmt(l, 3) + " vs " + fmt(k, 3) + "; ";
  }
  return {wins >= 7, "LSDD <= KDE at " + std::to_string(wins) + "/9; " + detail};
}

} // namespace

int
main(int argc, char** argv)
{
  std::set<int> only;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--only") == 0 && i + 1 < argc) {
      std::stringstream ss(argv[++i]);
      std::string item;
      while (std::getline(ss, item, ',')) {
        only.insert(std::stoi(item));
      }
    } else {
      std::cerr << "usage: " << argv[0] << " [--only N[,N...]]\n";
      return 2;
    }
  }

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
    {"identity zero", identity_zero},
    {"L2 curve vs closed form", l2_curve},
    {"KDE underestimation", kde_underestimation},
    {"ordering inequality", ordering},
    {"bias identity", bias_identity},
    {"expansion remainder", expansion_remainder},
    {"permutation test level", permutation_level},
    {"outlier robustness", outlier_robustness},
    {"parametric rate", parametric_rate},
    {"change detection", change_detection},
    {"class balance", class_balance},
  };

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) {
      continue;
    }
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failures += o.pass ? 0 : 1;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << id << " (" << criteria[i].first
              << "): " << o.detail << " [" << fmt(seconds, 3) << " s]" << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
