#pragma once

// Class-balance estimation by mixture matching, a weighted regularized
// least-squares classifier, and change-point scoring over sliding windows.

#include "density_difference.hpp"
#include "divergence.hpp"
#include "kde.hpp"
#include "kliep.hpp"
#include "parallel.hpp"

#include <algorithm>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace lsdd {

// ---------------------------------------------------------------------------
// Class balance

struct LabeledSet
{
  SampleSet positives;
  SampleSet negatives;

  LabeledSet(SampleSet pos, SampleSet neg)
    : positives(std::move(pos))
    , negatives(std::move(neg))
  {
    require_same_dim("LabeledSet", positives.dim(), negatives.dim());
  }

  Index dim() const { return positives.dim(); }
};

struct ClassBalanceResult
{
  double pi_hat = 0.0;
  //! (pi, estimated L2 distance between the pi-mixture and the test density)
  std::vector<std::pair<double, double>> curve;
  double sigma = 0.0;
  double lambda = 0.0;
};

//! {0, 0.01, ..., 1}.
inline std::vector<double>
default_pi_grid()
{
  std::vector<double> g;
  for (int i = 0; i <= 100; ++i) {
    g.push_back(i / 100.0);
  }
  return g;
}

namespace detail {

inline void
check_pi_grid(const std::vector<double>& pi_grid)
{
  if (pi_grid.empty()) {
    throw InvalidArgument("class balance: empty pi grid");
  }
  for (double p : pi_grid) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw InvalidArgument("class balance: pi values must lie in [0, 1]");
    }
  }
}

inline ClassBalanceResult
argmin_curve(std::vector<std::pair<double, double>> curve)
{
  ClassBalanceResult out;
  std::size_t best = 0;
  for (std::size_t i = 1; i < curve.size(); ++i) {
    if (curve[i].second < curve[best].second) {
      best = i;
    }
  }
  out.pi_hat = curve[best].first;
  out.curve = std::move(curve);
  return out;
}

} // namespace detail

//! Matches pi p(x|+) + (1 - pi) p(x|-) to the test density with the combined
//! LSDD L2 estimate. (sigma, lambda) are chosen once by cross-validation of
//! the pi = 0.5 mixture and reused for every pi, so the distance curve is an
//! exact quadratic in pi.
inline ClassBalanceResult
class_balance_estimate(const LabeledSet& train, const SampleSet& test,
                       const std::vector<double>& pi_grid,
                       const std::optional<HyperGrid>& hyper, int folds, Rng& rng,
                       Index max_centers = kDefaultMaxCenters)
{
  detail::check_pi_grid(pi_grid);
  require_same_dim("class_balance_estimate", train.dim(), test.dim());
  const Index np = train.positives.size();
  const Index nn = train.negatives.size();
  const Index nt = test.size();
  PointMatrix pooled(np + nn + nt, train.dim());
  pooled << train.positives.points(), train.negatives.points(), test.points();

  const auto centers =
    SampleSet(pooled).subset(select_center_indices(pooled.rows(), max_centers, rng));
  const HyperGrid grid = hyper ? *hyper : HyperGrid::for_points(pooled);
  const PooledCrossValidator cv(pooled, centers.points(), grid, folds);

  GroupedSplit half;
  half.plus = {{index_range(0, np), 0.5}, {index_range(np, nn), 0.5}};
  half.minus = {{index_range(np + nn, nt), 1.0}};
  const auto fit = cv.fit(half, rng);

  const Matrix& psi = cv.design(fit.sigma_index);
  const Matrix& gram = cv.gram(fit.sigma_index);
  const RegularizedSolver& solver = cv.solver(fit.sigma_index, fit.lambda_index);
  const Vector mean_pos = psi.topRows(np).colwise().mean().transpose();
  const Vector mean_neg = psi.middleRows(np, nn).colwise().mean().transpose();
  const Vector mean_test = psi.bottomRows(nt).colwise().mean().transpose();

  std::vector<std::pair<double, double>> curve;
  for (double pi : pi_grid) {
    const Vector h = pi * mean_pos + (1.0 - pi) * mean_neg - mean_test;
    const Vector theta = solver.solve(h);
    curve.emplace_back(pi, 2.0 * h.dot(theta) - theta.dot(gram * theta));
  }
  auto out = detail::argmin_curve(std::move(curve));
  out.sigma = fit.report.sigma();
  out.lambda = fit.report.lambda();
  return out;
}

//! Two-step comparator: KDEs of each class and of the test set (bandwidths
//! chosen independently by likelihood cross-validation), matched in exact
//! L2 distance.
inline ClassBalanceResult
class_balance_estimate_kde(const LabeledSet& train, const SampleSet& test,
                           const std::vector<double>& pi_grid, int folds, Rng& rng,
                           std::optional<std::vector<double>> bandwidths = std::nullopt)
{
  detail::check_pi_grid(pi_grid);
  require_same_dim("class_balance_estimate_kde", train.dim(), test.dim());
  const auto cands = bandwidths ? *bandwidths
                                : default_bandwidths(SampleSet::concat(
                                    SampleSet::concat(train.positives, train.negatives), test)
                                                       .points());
  const KdeModel kp = fit_kde(train.positives, cands, folds, rng);
  const KdeModel kn = fit_kde(train.negatives, cands, folds, rng);
  const KdeModel kt = fit_kde(test, cands, folds, rng);
  const double pp = kde_inner(kp, kp);
  const double nn = kde_inner(kn, kn);
  const double tt = kde_inner(kt, kt);
  const double pn = kde_inner(kp, kn);
  const double pt = kde_inner(kp, kt);
  const double ntt = kde_inner(kn, kt);
  std::vector<std::pair<double, double>> curve;
  for (double pi : pi_grid) {
    const double q = 1.0 - pi;
    curve.emplace_back(pi, pi * pi * pp + q * q * nn + tt + 2.0 * pi * q * pn -
                             2.0 * pi * pt - 2.0 * q * ntt);
  }
  return detail::argmin_curve(std::move(curve));
}

// ---------------------------------------------------------------------------
// Weighted regularized least-squares classifier

//! g(x) = sum_j coef_j k(x, x_j) over all training points; label = sign(g).
struct WeightedRlsClassifier
{
  GaussianBasis basis;
  Vector coef;

  double score(const PointRef& x) const { return coef.dot(basis_eval(basis, x)); }
  int classify(const PointRef& x) const { return score(x) >= 0.0 ? 1 : -1; }
};

//! Minimizes sum_i w_i (g(x_i) - y_i)^2 + reg |g|^2_RKHS with class weights
//! w = pi/n+ on positives and (1 - pi)/n- on negatives. With W = diag(w) the
//! solution is coef = W^{1/2} (W^{1/2} K W^{1/2} + reg I)^{-1} W^{1/2} y.
inline WeightedRlsClassifier
weighted_rls_fit(const LabeledSet& train, double pi_hat, double kernel_width, double reg)
{
  if (!(pi_hat >= 0.0 && pi_hat <= 1.0)) {
    throw InvalidArgument("weighted_rls_fit: pi must lie in [0, 1]");
  }
  if (!(reg >= 0.0)) {
    throw InvalidArgument("weighted_rls_fit: reg must be nonnegative");
  }
  const Index np = train.positives.size();
  const Index nn = train.negatives.size();
  const auto all = SampleSet::concat(train.positives, train.negatives);
  GaussianBasis basis(all.points(), kernel_width);
  const Matrix k = design_matrix(basis, all.points());
  Vector sqrt_w(np + nn);
  Vector y(np + nn);
  sqrt_w.head(np).setConstant(std::sqrt(pi_hat / static_cast<double>(np)));
  sqrt_w.tail(nn).setConstant(std::sqrt((1.0 - pi_hat) / static_cast<double>(nn)));
  y.head(np).setOnes();
  y.tail(nn).setConstant(-1.0);
  const Matrix a = sqrt_w.asDiagonal() * k * sqrt_w.asDiagonal();
  const RegularizedSolver solver(a, reg, /*allow_fallback=*/false);
  Vector coef = sqrt_w.cwiseProduct(solver.solve(Vector(sqrt_w.cwiseProduct(y))));
  return {std::move(basis), std::move(coef)};
}

inline double
misclassification_rate(const WeightedRlsClassifier& clf, const SampleSet& x,
                       const std::vector<int>& labels)
{
  if (static_cast<Index>(labels.size()) != x.size()) {
    throw InvalidArgument("misclassification_rate: label count mismatch");
  }
  Index wrong = 0;
  for (Index i = 0; i < x.size(); ++i) {
    if (clf.classify(x.point(i)) != labels[static_cast<std::size_t>(i)]) {
      ++wrong;
    }
  }
  return static_cast<double>(wrong) / static_cast<double>(x.size());
}

// ---------------------------------------------------------------------------
// Change detection

struct SubsequenceSet
{
  //! Row t is [y(t)^T, ..., y(t+k-1)^T].
  PointMatrix windows;
  Index k = 1;
  Index m = 1;

  Index size() const { return windows.rows(); }
};

//! `series` holds one m-dimensional observation per row.
inline SubsequenceSet
build_subsequences(const PointMatrix& series, Index k)
{
  if (k < 1) {
    throw InvalidArgument("build_subsequences: k must be >= 1");
  }
  if (series.rows() < k) {
    throw InvalidArgument("build_subsequences: series of length " +
                          std::to_string(series.rows()) + " is shorter than k = " +
                          std::to_string(k));
  }
  const Index m = series.cols();
  SubsequenceSet out;
  out.k = k;
  out.m = m;
  out.windows.resize(series.rows() - k + 1, k * m);
  for (Index t = 0; t < out.windows.rows(); ++t) {
    for (Index j = 0; j < k; ++j) {
      out.windows.block(t, j * m, 1, m) = series.row(t + j);
    }
  }
  return out;
}

//! Euclidean norm of each row, e.g. for orientation-free accelerometer input.
inline PointMatrix
row_norms(const PointMatrix& series)
{
  PointMatrix out(series.rows(), 1);
  out.col(0) = series.rowwise().norm();
  return out;
}

enum class ChangeScorer
{
  combined,
  positive_part,
  kliep,
};

//! Accepts "combined", "positive-part" and "kliep".
inline ChangeScorer
parse_change_scorer(const std::string& name)
{
  if (name == "combined") {
    return ChangeScorer::combined;
  }
  if (name == "positive-part") {
    return ChangeScorer::positive_part;
  }
  if (name == "kliep") {
    return ChangeScorer::kliep;
  }
  throw InvalidArgument("unknown change scorer '" + name + "'");
}

struct ChangeOptions
{
  Index k = 5;
  Index r = 50;
  Index stride = 1;
  ChangeScorer scorer = ChangeScorer::positive_part;
  int folds = kDefaultFolds;
  //! Grid for LSDD scorers; default is the median heuristic of each window pair.
  std::optional<HyperGrid> grid;
  //! KLIEP widths; default is five values around the window-pair median.
  std::vector<double> kliep_sigmas;
  //! Select hyperparameters at the first evaluation time only.
  bool frozen = false;
  std::uint64_t seed = 0;
};

struct ChangeScoreSeries
{
  //! Boundary time t + r between the two compared segments.
  std::vector<Index> times;
  std::vector<double> scores;
};

namespace detail {

inline double
score_window_pair(const PointMatrix& pooled, Index r, const ChangeOptions& opt,
                  const std::optional<std::pair<double, double>>& frozen, Rng& rng,
                  std::pair<double, double>* selected)
{
  const auto first = index_range(0, r);
  const auto second = index_range(r, r);
  if (opt.scorer == ChangeScorer::kliep) {
    const SampleSet a(pooled.topRows(r));
    const SampleSet b(pooled.bottomRows(r));
    std::vector<double> sigmas = opt.kliep_sigmas;
    if (frozen) {
      sigmas = {frozen->first};
    } else if (sigmas.empty()) {
      sigmas = default_kliep_sigmas(a, b);
    }
    const auto fit = kliep_fit_cv(a, b, sigmas, opt.folds, KliepOptions{}, rng);
    if (selected) {
      *selected = {fit.report.sigma(), 0.0};
    }
    return kliep_kl_estimate(fit.model, a);
  }
  HyperGrid grid = opt.grid ? *opt.grid : HyperGrid::for_points(pooled);
  if (frozen) {
    grid = HyperGrid{{frozen->first}, {frozen->second}};
  }
  const PooledCrossValidator cv(pooled, pooled, std::move(grid), opt.folds);
  const auto split = GroupedSplit::two_sample(first, second);
  const auto fit = cv.fit(split, rng);
  if (selected) {
    *selected = {fit.report.sigma(), fit.report.lambda()};
  }
  const Matrix& gram = cv.gram(fit.sigma_index);
  const double combined = 2.0 * fit.mean_diff.dot(fit.theta) - fit.theta.dot(gram * fit.theta);
  if (opt.scorer == ChangeScorer::combined) {
    return combined;
  }
  const Matrix& psi = cv.design(fit.sigma_index);
  const auto trace = bias_trace(gram, moments_from_design(psi.topRows(r)),
                                moments_from_design(psi.bottomRows(r)), r, r);
  return l2_positive_part(combined - trace.value);
}

} // namespace detail

//! Scores the dissimilarity of the r windows starting at t against the r
//! windows starting at t + r, for t = 0, stride, 2 stride, ... Every
//! evaluation time t draws from its own stream derive_seed(seed, {t}), so
//! scores at shared times agree across strides. Kernel centers are all 2r
//! windows of the pair.
inline ChangeScoreSeries
change_scores(const PointMatrix& series, const ChangeOptions& opt)
{
  if (opt.r < opt.folds || opt.stride < 1) {
    throw InvalidArgument("change_scores: need r >= folds and stride >= 1");
  }
  const auto subs = build_subsequences(series, opt.k);
  if (subs.size() < 2 * opt.r) {
    throw InvalidArgument("change_scores: series too short for two segments of " +
                          std::to_string(opt.r) + " windows of length " +
                          std::to_string(opt.k));
  }
  ChangeScoreSeries out;
  for (Index t = 0; t + 2 * opt.r <= subs.size(); t += opt.stride) {
    out.times.push_back(t + opt.r);
  }
  out.scores.resize(out.times.size());

  std::optional<std::pair<double, double>> frozen;
  std::size_t start = 0;
  if (opt.frozen && !out.times.empty()) {
    Rng rng(derive_seed(opt.seed, {0}));
    std::pair<double, double> sel;
    out.scores[0] = detail::score_window_pair(subs.windows.middleRows(0, 2 * opt.r), opt.r,
                                              opt, std::nullopt, rng, &sel);
    frozen = sel;
    start = 1;
  }
  parallel_for(out.times.size() - start, [&](std::size_t j) {
    const std::size_t i = j + start;
    const Index t = out.times[i] - opt.r;
    Rng rng(derive_seed(opt.seed, {static_cast<std::uint64_t>(t)}));
    out.scores[i] = detail::score_window_pair(subs.windows.middleRows(t, 2 * opt.r), opt.r,
                                              opt, frozen, rng, nullptr);
  });
  return out;
}

//! Up to `count` positions of the highest scores such that no two picks lie
//! within `radius` of each other (greedy non-maximum suppression).
inline std::vector<Index>
top_local_maxima(const ChangeScoreSeries& s, std::size_t count, Index radius)
{
  std::vector<std::size_t> order(s.scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return s.scores[a] > s.scores[b]; });
  std::vector<Index> picked;
  for (std::size_t i : order) {
    if (picked.size() == count) {
      break;
    }
    const Index t = s.times[i];
    const bool clear = std::none_of(picked.begin(), picked.end(),
                                    [&](Index p) { return std::abs(p - t) <= radius; });
    if (clear) {
      picked.push_back(t);
    }
  }
  return picked;
}

} // namespace lsdd
