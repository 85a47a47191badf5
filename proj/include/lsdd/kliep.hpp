#pragma once

// KL-divergence estimation through direct density-ratio fitting (KLIEP).
//
// The ratio w(x) = p(x) / p'(x) is modelled as sum_l alpha_l k(x, c_l) with
// Gaussian kernels centred on numerator samples. alpha maximizes the mean
// log-ratio over numerator samples subject to alpha >= 0 and a unit mean
// ratio over denominator samples. The solver is projected gradient ascent
// with Armijo backtracking. The search direction is the gradient restricted
// to the constraint hyperplane over the weights not pinned at zero, and
// projection clamps negative weights to zero and rescales onto the
// normalization constraint.

#include "kernel_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

namespace lsdd {

struct KliepOptions
{
  Index max_centers = 100;
  int max_iter = 1000;
  //! Stop when the scaled KKT residual falls below this.
  double tol = 1e-5;
  double armijo = 1e-4;
};

struct KliepSolution
{
  Vector alpha;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
  //! Objective after each accepted step, starting with the initial point.
  std::vector<double> trace;
};

namespace detail {

inline constexpr double kRatioFloor = 1e-12;

inline double
kliep_objective(const Matrix& a, const Vector& alpha)
{
  const Vector w = a * alpha;
  double s = 0.0;
  for (Index i = 0; i < w.size(); ++i) {
    s += std::log(std::max(w[i], std::numeric_limits<double>::min()));
  }
  return s / static_cast<double>(w.size());
}

//! Clamp to the nonnegative orthant and rescale to b^T alpha = 1. Returns
//! false when nothing positive survives the clamp.
inline bool
kliep_project(Vector& alpha, const Vector& den_mean)
{
  alpha = alpha.cwiseMax(0.0);
  const double s = den_mean.dot(alpha);
  if (!(s > 0.0) || !std::isfinite(s)) {
    return false;
  }
  alpha /= s;
  return true;
}

} // namespace detail

//! Solves the KLIEP program for a fixed kernel matrix `num_kernel`
//! (numerator samples x centers) and the denominator mean kernel vector.
inline KliepSolution
kliep_solve(const Matrix& num_kernel, const Vector& den_mean, const KliepOptions& opt = {})
{
  if (num_kernel.cols() != den_mean.size()) {
    throw DimensionMismatch("kliep_solve", num_kernel.cols(), den_mean.size());
  }
  if (num_kernel.rows() < 1) {
    throw InvalidArgument("kliep_solve: no numerator samples");
  }
  const Index b = den_mean.size();
  const auto n = static_cast<double>(num_kernel.rows());
  const double b_scale = std::max(den_mean.cwiseAbs().maxCoeff(), 1e-300);

  KliepSolution sol;
  sol.alpha = Vector::Ones(b);
  if (!detail::kliep_project(sol.alpha, den_mean)) {
    throw NumericalError("kliep_solve: denominator kernel means vanish");
  }
  sol.objective = detail::kliep_objective(num_kernel, sol.alpha);
  sol.trace.push_back(sol.objective);

  double step = -1.0;
  for (sol.iterations = 0; sol.iterations < opt.max_iter; ++sol.iterations) {
    const Vector w = (num_kernel * sol.alpha).cwiseMax(std::numeric_limits<double>::min());
    const Vector grad = num_kernel.transpose() * w.cwiseInverse() / n;

    // KKT: grad_l = nu b_l on the support, grad_l <= nu b_l off it
    const double nu = sol.alpha.dot(grad);
    double resid = 0.0;
    for (Index l = 0; l < b; ++l) {
      const double r = grad[l] - nu * den_mean[l];
      resid = std::max(resid, sol.alpha[l] > 0.0 ? std::abs(r) : std::max(r, 0.0));
    }
    if (resid / (nu * b_scale) <= opt.tol) {
      sol.converged = true;
      break;
    }

    // Gradient restricted to the tangent space of b^T alpha = 1, with weights
    // held at zero by an outward-pointing gradient left out.
    Vector free = Vector::Ones(b);
    for (Index l = 0; l < b; ++l) {
      if (sol.alpha[l] == 0.0 && grad[l] <= nu * den_mean[l]) {
        free[l] = 0.0;
      }
    }
    // Steepest ascent in the scaled weights b_l alpha_l, which turns the
    // constraint into a simplex and evens out the coordinate scales.
    const Vector r = grad.cwiseQuotient(den_mean.cwiseMax(std::numeric_limits<double>::min()));
    const double m = r.cwiseProduct(free).sum() / free.sum();
    const Vector dir = ((r.array() - m) / den_mean.cwiseMax(std::numeric_limits<double>::min()).array())
                         .matrix()
                         .cwiseProduct(free);
    if (step < 0.0) {
      step = sol.alpha.cwiseAbs().maxCoeff() / std::max(dir.cwiseAbs().maxCoeff(), 1e-300);
    }
    bool accepted = false;
    for (int halving = 0; halving < 60; ++halving, step *= 0.5) {
      Vector cand = sol.alpha + step * dir;
      if (!detail::kliep_project(cand, den_mean)) {
        continue;
      }
      const double obj = detail::kliep_objective(num_kernel, cand);
      const double decrease = opt.armijo * grad.dot(cand - sol.alpha);
      if (obj >= sol.objective + decrease && obj >= sol.objective) {
        const bool moved = (cand - sol.alpha).cwiseAbs().maxCoeff() > 0.0;
        sol.alpha = std::move(cand);
        sol.objective = obj;
        sol.trace.push_back(obj);
        accepted = moved;
        break;
      }
    }
    if (!accepted) {
      // no ascent direction left at floating-point resolution
      break;
    }
    step *= 2.0;
  }
  return sol;
}

struct RatioModel
{
  GaussianBasis basis;
  Vector alpha;
  bool converged = false;
  int iterations = 0;
  double objective = 0.0;
};

//! w-hat(x) = alpha^T psi(x).
inline double
kliep_ratio(const RatioModel& model, const PointRef& x)
{
  return model.alpha.dot(basis_eval(model.basis, x));
}

inline Vector
kliep_ratio_rows(const RatioModel& model, const PointMatrix& xs)
{
  return design_matrix(model.basis, xs) * model.alpha;
}

//! Mean log w-hat over numerator samples, with w-hat floored at 1e-12.
inline double
kliep_kl_estimate(const RatioModel& model, const SampleSet& x)
{
  const Vector w = kliep_ratio_rows(model, x.points());
  double s = 0.0;
  for (Index i = 0; i < w.size(); ++i) {
    s += std::log(std::max(w[i], detail::kRatioFloor));
  }
  return s / static_cast<double>(w.size());
}

inline PointMatrix
kliep_centers(const SampleSet& x, Index max_centers, Rng& rng)
{
  return x.subset(select_center_indices(x.size(), max_centers, rng)).points();
}

inline RatioModel
kliep_fit(const SampleSet& x, const SampleSet& x_prime, double sigma,
          const KliepOptions& opt, Rng& rng)
{
  require_same_dim("kliep_fit", x.dim(), x_prime.dim());
  GaussianBasis basis(kliep_centers(x, opt.max_centers, rng), sigma);
  const Matrix a = design_matrix(basis, x.points());
  const Vector den = design_matrix(basis, x_prime.points()).colwise().mean().transpose();
  auto sol = kliep_solve(a, den, opt);
  return {std::move(basis), std::move(sol.alpha), sol.converged, sol.iterations,
          sol.objective};
}

struct KliepCvReport
{
  std::vector<double> sigmas;
  std::vector<double> mean_holdout_log_ratio;
  std::size_t selected = 0;

  double sigma() const { return sigmas.at(selected); }
};

//! Cross-validation core on precomputed kernels. `num_kernels[s]` holds the
//! numerator-sample x center kernel matrix at candidate width s, and
//! `den_means[s]` the denominator mean kernel vector. Numerator samples are
//! split into folds; each fold is scored by its mean held-out log-ratio.
//! `center_rows[l]` is the numerator row that center l was drawn from; those
//! centers are dropped while their row is held out.
inline std::pair<KliepCvReport, KliepSolution>
kliep_cv_select(std::span<const double> sigmas, std::span<const Matrix> num_kernels,
                std::span<const Vector> den_means, std::span<const Index> center_rows,
                int folds, const KliepOptions& opt, Rng& rng)
{
  if (sigmas.empty()) {
    throw InvalidArgument("kliep_fit_cv: no sigma candidates");
  }
  const Index n = num_kernels[0].rows();
  if (folds < 2 || n < folds) {
    throw InvalidArgument("kliep_fit_cv: need at least " + std::to_string(folds) +
                          " numerator samples and 2 folds");
  }
  if (static_cast<Index>(center_rows.size()) != num_kernels[0].cols()) {
    throw DimensionMismatch("kliep_fit_cv: center rows", num_kernels[0].cols(),
                            static_cast<Index>(center_rows.size()));
  }
  std::vector<Index> order = index_range(0, n);
  rng.shuffle(order);
  std::vector<Index> position(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < order.size(); ++i) {
    position[static_cast<std::size_t>(order[i])] = static_cast<Index>(i);
  }

  KliepCvReport report;
  report.sigmas.assign(sigmas.begin(), sigmas.end());
  for (std::size_t s = 0; s < sigmas.size(); ++s) {
    const Matrix& k = num_kernels[s];
    double total = 0.0;
    for (int t = 0; t < folds; ++t) {
      const auto lo = static_cast<Index>(order.size() * static_cast<std::size_t>(t) / static_cast<std::size_t>(folds));
      const auto hi = static_cast<Index>(order.size() * static_cast<std::size_t>(t + 1) / static_cast<std::size_t>(folds));
      std::vector<Index> cols;
      for (std::size_t l = 0; l < center_rows.size(); ++l) {
        const Index p = position[static_cast<std::size_t>(center_rows[l])];
        if (p < lo || p >= hi) {
          cols.push_back(static_cast<Index>(l));
        }
      }
      if (cols.empty()) {
        throw InvalidArgument("kliep_fit_cv: a fold holds out every center");
      }
      Matrix train(n - (hi - lo), static_cast<Index>(cols.size()));
      Matrix hold(hi - lo, static_cast<Index>(cols.size()));
      Vector den(static_cast<Index>(cols.size()));
      for (std::size_t c = 0; c < cols.size(); ++c) {
        den[static_cast<Index>(c)] = den_means[s][cols[c]];
      }
      Index r_train = 0;
      for (Index i = 0; i < n; ++i) {
        const Index row = order[static_cast<std::size_t>(i)];
        auto dst = (i >= lo && i < hi) ? hold.row(i - lo) : train.row(r_train++);
        for (std::size_t c = 0; c < cols.size(); ++c) {
          dst[static_cast<Index>(c)] = k(row, cols[c]);
        }
      }
      const auto sol = kliep_solve(train, den, opt);
      const Vector w = hold * sol.alpha;
      double ll = 0.0;
      for (Index i = 0; i < w.size(); ++i) {
        ll += std::log(std::max(w[i], detail::kRatioFloor));
      }
      total += ll / static_cast<double>(w.size());
    }
    report.mean_holdout_log_ratio.push_back(total / folds);
  }
  for (std::size_t s = 1; s < sigmas.size(); ++s) {
    if (report.mean_holdout_log_ratio[s] > report.mean_holdout_log_ratio[report.selected]) {
      report.selected = s;
    }
  }
  auto sol = kliep_solve(num_kernels[report.selected], den_means[report.selected], opt);
  return {std::move(report), std::move(sol)};
}

struct KliepCvFit
{
  RatioModel model;
  KliepCvReport report;
};

//! Selects sigma by held-out mean log-ratio and refits on all data. Centers
//! are drawn once from `x` and shared by all candidates.
inline KliepCvFit
kliep_fit_cv(const SampleSet& x, const SampleSet& x_prime,
             const std::vector<double>& sigma_candidates, int folds,
             const KliepOptions& opt, Rng& rng)
{
  require_same_dim("kliep_fit_cv", x.dim(), x_prime.dim());
  const auto center_rows = select_center_indices(x.size(), opt.max_centers, rng);
  const PointMatrix centers = x.subset(center_rows).points();
  const Matrix num_sq = squared_distances(x.points(), centers);
  const Matrix den_sq = squared_distances(x_prime.points(), centers);
  std::vector<Matrix> num_k;
  std::vector<Vector> den_m;
  for (double s : sigma_candidates) {
    if (!(s > 0.0)) {
      throw InvalidArgument("kliep_fit_cv: sigma candidates must be positive");
    }
    num_k.push_back(gaussian_from_sqdist(num_sq, s));
    den_m.push_back(gaussian_from_sqdist(den_sq, s).colwise().mean().transpose());
  }
  auto [report, sol] = kliep_cv_select(sigma_candidates, num_k, den_m, center_rows, folds, opt, rng);
  RatioModel model{GaussianBasis(centers, report.sigma()), std::move(sol.alpha),
                   sol.converged, sol.iterations, sol.objective};
  return {std::move(model), std::move(report)};
}

//! Five widths log-spaced over [0.5 m, 10 m] for the median distance m of
//! `pooled`.
inline std::vector<double>
default_kliep_sigmas(const PointMatrix& pooled)
{
  const double m = median_pairwise_distance(pooled);
  return log_space(0.5 * m, 10.0 * m, 5);
}

inline std::vector<double>
default_kliep_sigmas(const SampleSet& x, const SampleSet& x_prime)
{
  return default_kliep_sigmas(SampleSet::concat(x, x_prime).points());
}

} // namespace lsdd
