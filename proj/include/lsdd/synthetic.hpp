#pragma once

// Synthetic data sets and their closed-form L2 distances.

#include "applications.hpp"
#include "random.hpp"
#include "sample_set.hpp"

#include <cmath>
#include <numbers>
#include <utility>
#include <vector>

namespace lsdd {

//! Per-coordinate standard deviation (4 pi)^{-1/2} of the shifted Gaussians.
inline const double kShiftSd = 1.0 / std::sqrt(4.0 * std::numbers::pi);

//! x ~ N((mu, 0, ..., 0), (4 pi)^{-1} I_d), x' ~ N(0, (4 pi)^{-1} I_d).
inline std::pair<SampleSet, SampleSet>
gen_gaussian_shift(Index d, Index n, Index n_prime, double mu, Rng& rng)
{
  if (d < 1 || n < 1 || n_prime < 1) {
    throw InvalidArgument("gen_gaussian_shift: d, n and n' must be positive");
  }
  PointMatrix x(n, d);
  PointMatrix xp(n_prime, d);
  for (Index i = 0; i < n; ++i) {
    for (Index k = 0; k < d; ++k) {
      x(i, k) = rng.normal(k == 0 ? mu : 0.0, kShiftSd);
    }
  }
  for (Index i = 0; i < n_prime; ++i) {
    for (Index k = 0; k < d; ++k) {
      xp(i, k) = rng.normal(0.0, kShiftSd);
    }
  }
  return {SampleSet(std::move(x)), SampleSet(std::move(xp))};
}

//! L2 distance of the shifted pair above; independent of d.
inline double
true_l2_gaussian_shift(double mu)
{
  return 2.0 - 2.0 * std::exp(-std::numbers::pi * mu * mu);
}

inline double
normal_pdf(double x, double mean, double var)
{
  return std::exp(-(x - mean) * (x - mean) / (2.0 * var)) / std::sqrt(2.0 * std::numbers::pi * var);
}

//! x ~ (1 - eta) N(0, 1) + eta N(mu, 1/4^2), x' ~ N(0, 1), one-dimensional.
inline std::pair<SampleSet, SampleSet>
gen_outlier_mixture(Index n, Index n_prime, double eta, double mu, Rng& rng)
{
  if (!(eta >= 0.0 && eta <= 1.0)) {
    throw InvalidArgument("gen_outlier_mixture: eta must lie in [0, 1]");
  }
  PointMatrix x(n, 1);
  PointMatrix xp(n_prime, 1);
  for (Index i = 0; i < n; ++i) {
    x(i, 0) = rng.bernoulli(eta) ? rng.normal(mu, 0.25) : rng.normal();
  }
  for (Index i = 0; i < n_prime; ++i) {
    xp(i, 0) = rng.normal();
  }
  return {SampleSet(std::move(x)), SampleSet(std::move(xp))};
}

//! p - p' = eta (N(mu, 1/16) - N(0, 1)), integrated in closed form.
inline double
true_l2_outlier_mixture(double eta, double mu)
{
  const double self_outlier = 1.0 / (2.0 * std::sqrt(std::numbers::pi) * 0.25);
  const double self_inlier = 1.0 / (2.0 * std::sqrt(std::numbers::pi));
  const double cross = normal_pdf(mu, 0.0, 1.0 + 1.0 / 16.0);
  return eta * eta * (self_outlier + self_inlier - 2.0 * cross);
}

struct ClassBalanceData
{
  LabeledSet train;
  SampleSet test;
  //! +1 / -1 per test row.
  std::vector<int> test_labels;
};

//! Classes N(+separation/2 e_1, I_d) and N(-separation/2 e_1, I_d). The test
//! set holds round(pi_star * n_test) positives, in random order.
inline ClassBalanceData
gen_class_balance(Index d, Index n_labeled_per_class, Index n_test, double pi_star,
                  double separation, Rng& rng)
{
  if (!(pi_star >= 0.0 && pi_star <= 1.0)) {
    throw InvalidArgument("gen_class_balance: pi_star must lie in [0, 1]");
  }
  if (d < 1 || n_labeled_per_class < 1 || n_test < 1) {
    throw InvalidArgument("gen_class_balance: sizes must be positive");
  }
  auto draw = [&](int label) {
    Eigen::RowVectorXd p(d);
    for (Index k = 0; k < d; ++k) {
      p[k] = rng.normal();
    }
    p[0] += 0.5 * separation * label;
    return p;
  };
  PointMatrix pos(n_labeled_per_class, d);
  PointMatrix neg(n_labeled_per_class, d);
  for (Index i = 0; i < n_labeled_per_class; ++i) {
    pos.row(i) = draw(1);
  }
  for (Index i = 0; i < n_labeled_per_class; ++i) {
    neg.row(i) = draw(-1);
  }
  const auto n_pos = static_cast<Index>(std::lround(pi_star * static_cast<double>(n_test)));
  std::vector<int> labels(static_cast<std::size_t>(n_test), -1);
  std::fill(labels.begin(), labels.begin() + n_pos, 1);
  rng.shuffle(labels);
  PointMatrix test(n_test, d);
  for (Index i = 0; i < n_test; ++i) {
    test.row(i) = draw(labels[static_cast<std::size_t>(i)]);
  }
  return {LabeledSet(SampleSet(std::move(pos)), SampleSet(std::move(neg))),
          SampleSet(std::move(test)), std::move(labels)};
}

//! One-dimensional series with i.i.d. N(0, noise_sd^2) noise whose mean is 0
//! before the first change time and alternates between `shift` and 0 at each
//! subsequent change.
inline PointMatrix
gen_step_series(Index length, const std::vector<Index>& change_times, double shift,
                double noise_sd, Rng& rng)
{
  if (length < 1) {
    throw InvalidArgument("gen_step_series: length must be positive");
  }
  for (std::size_t i = 0; i < change_times.size(); ++i) {
    if (change_times[i] <= 0 || change_times[i] >= length) {
      throw InvalidArgument("gen_step_series: change time " + std::to_string(change_times[i]) +
                            " outside (0, " + std::to_string(length) + ")");
    }
    if (i > 0 && change_times[i] <= change_times[i - 1]) {
      throw InvalidArgument("gen_step_series: change times must be strictly increasing");
    }
  }
  PointMatrix y(length, 1);
  std::size_t seg = 0;
  for (Index t = 0; t < length; ++t) {
    while (seg < change_times.size() && t >= change_times[seg]) {
      ++seg;
    }
    y(t, 0) = (seg % 2 == 1 ? shift : 0.0) + rng.normal(0.0, noise_sd);
  }
  return y;
}

} // namespace lsdd
