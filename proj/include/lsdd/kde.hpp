#pragma once

// Gaussian kernel density estimation, the two-step density-difference
// baseline and its closed-form L2 distance.

#include "kernel_core.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

namespace lsdd {

struct KdeModel
{
  SampleSet samples;
  double bandwidth;

  KdeModel(SampleSet s, double h)
    : samples(std::move(s))
    , bandwidth(h)
  {
    if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) {
      throw InvalidArgument("KdeModel: bandwidth must be positive");
    }
  }

  Index dim() const { return samples.dim(); }
};

inline double
kde_eval(const KdeModel& model, const PointRef& x)
{
  require_same_dim("kde_eval", model.dim(), x.size());
  const double h2 = model.bandwidth * model.bandwidth;
  const double norm =
    1.0 / (static_cast<double>(model.samples.size()) *
           std::pow(2.0 * std::numbers::pi * h2, static_cast<double>(model.dim()) / 2.0));
  double s = 0.0;
  for (Index i = 0; i < model.samples.size(); ++i) {
    s += std::exp(-squared_distance(x, model.samples.point(i)) / (2.0 * h2));
  }
  return norm * s;
}

inline Vector
kde_eval_rows(const KdeModel& model, const PointMatrix& xs)
{
  Vector out(xs.rows());
  for (Index i = 0; i < xs.rows(); ++i) {
    out[i] = kde_eval(model, xs.row(i));
  }
  return out;
}

//! p-hat(x) - p-hat'(x) pointwise.
inline Vector
kde_diff_eval(const KdeModel& p, const KdeModel& p_prime, const PointMatrix& xs)
{
  require_same_dim("kde_diff_eval", p.dim(), p_prime.dim());
  return kde_eval_rows(p, xs) - kde_eval_rows(p_prime, xs);
}

//! Integral of p-hat * q-hat: the mean over sample pairs of a Gaussian
//! density with variance (h_p^2 + h_q^2) evaluated at their difference.
inline double
kde_inner(const KdeModel& p, const KdeModel& q)
{
  require_same_dim("kde_inner", p.dim(), q.dim());
  const double v = p.bandwidth * p.bandwidth + q.bandwidth * q.bandwidth;
  const double norm = std::pow(2.0 * std::numbers::pi * v, -static_cast<double>(p.dim()) / 2.0);
  double s = 0.0;
  for (Index i = 0; i < p.samples.size(); ++i) {
    for (Index j = 0; j < q.samples.size(); ++j) {
      s += std::exp(-squared_distance(p.samples.point(i), q.samples.point(j)) / (2.0 * v));
    }
  }
  return norm * s /
         (static_cast<double>(p.samples.size()) * static_cast<double>(q.samples.size()));
}

//! Exact integral of (p-hat - p-hat')^2.
inline double
kde_l2(const KdeModel& p, const KdeModel& p_prime)
{
  const double v = kde_inner(p, p) + kde_inner(p_prime, p_prime) - 2.0 * kde_inner(p, p_prime);
  return std::max(0.0, v);
}

struct BandwidthReport
{
  std::vector<double> candidates;
  std::vector<double> mean_log_likelihood;
  std::size_t selected = 0;

  double bandwidth() const { return candidates.at(selected); }
};

namespace detail {

//! log p-hat(x) from `train` rows of `points`, via log-sum-exp.
inline double
kde_log_density(const PointMatrix& points, const std::vector<Index>& train,
                const PointRef& x, double h)
{
  const double h2 = h * h;
  double max_e = -std::numeric_limits<double>::infinity();
  std::vector<double> e(train.size());
  for (std::size_t i = 0; i < train.size(); ++i) {
    e[i] = -squared_distance(x, points.row(train[i])) / (2.0 * h2);
    max_e = std::max(max_e, e[i]);
  }
  double s = 0.0;
  for (double v : e) {
    s += std::exp(v - max_e);
  }
  return max_e + std::log(s) - std::log(static_cast<double>(train.size())) -
         0.5 * static_cast<double>(points.cols()) * std::log(2.0 * std::numbers::pi * h2);
}

} // namespace detail

//! Chooses the bandwidth maximizing the mean held-out log-likelihood over
//! `folds` random folds.
inline BandwidthReport
kde_bandwidth_cv(const SampleSet& x, const std::vector<double>& candidates, int folds,
                 Rng& rng)
{
  if (candidates.empty()) {
    throw InvalidArgument("kde_select_bandwidth: no candidates");
  }
  if (folds < 2 || x.size() < folds) {
    throw InvalidArgument("kde_select_bandwidth: need at least " + std::to_string(folds) +
                          " samples and 2 folds");
  }
  std::vector<Index> order = index_range(0, x.size());
  rng.shuffle(order);
  const auto n = order.size();
  BandwidthReport report;
  report.candidates = candidates;
  for (double h : candidates) {
    if (!(h > 0.0)) {
      throw InvalidArgument("kde_select_bandwidth: candidates must be positive");
    }
    double total = 0.0;
    for (int t = 0; t < folds; ++t) {
      const auto lo = n * static_cast<std::size_t>(t) / static_cast<std::size_t>(folds);
      const auto hi = n * static_cast<std::size_t>(t + 1) / static_cast<std::size_t>(folds);
      std::vector<Index> train(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(lo));
      train.insert(train.end(), order.begin() + static_cast<std::ptrdiff_t>(hi), order.end());
      double fold_ll = 0.0;
      for (auto i = lo; i < hi; ++i) {
        fold_ll += detail::kde_log_density(x.points(), train, x.point(order[i]), h);
      }
      total += fold_ll / static_cast<double>(hi - lo);
    }
    report.mean_log_likelihood.push_back(total / folds);
  }
  bool any_finite = false;
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    const double v = report.mean_log_likelihood[c];
    if (!std::isfinite(v)) {
      continue;
    }
    if (!any_finite || v > report.mean_log_likelihood[report.selected]) {
      report.selected = c;
    }
    any_finite = true;
  }
  if (!any_finite) {
    throw NumericalError("kde_select_bandwidth: every candidate has -inf likelihood");
  }
  return report;
}

inline double
kde_select_bandwidth(const SampleSet& x, const std::vector<double>& candidates, int folds,
                     Rng& rng)
{
  return kde_bandwidth_cv(x, candidates, folds, rng).bandwidth();
}

//! Thirty bandwidths log-spaced over [0.1 m, 10 m] for median distance m.
inline std::vector<double>
default_bandwidths(const PointMatrix& points)
{
  const double m = median_pairwise_distance(points);
  return log_space(0.1 * m, 10.0 * m, 30);
}

//! KDE with a cross-validated bandwidth.
inline KdeModel
fit_kde(const SampleSet& x, const std::vector<double>& candidates, int folds, Rng& rng)
{
  return {x, kde_select_bandwidth(x, candidates, folds, rng)};
}

} // namespace lsdd
