#pragma once

// Least-squares density-difference estimation with cross-validated kernel
// width and regularization.

#include "kernel_core.hpp"

#include <limits>
#include <memory>
#include <vector>

namespace lsdd {

//! Candidate kernel widths and regularization strengths. Both lists must be
//! nonempty and sorted ascending; repeated values are permitted and resolve
//! to the first occurrence during selection.
struct HyperGrid
{
  std::vector<double> sigmas;
  std::vector<double> lambdas;

  void validate() const
  {
    if (sigmas.empty() || lambdas.empty()) {
      throw InvalidArgument("HyperGrid: sigma and lambda lists must be nonempty");
    }
    for (std::size_t i = 0; i < sigmas.size(); ++i) {
      if (!(sigmas[i] > 0.0) || !std::isfinite(sigmas[i])) {
        throw InvalidArgument("HyperGrid: sigmas must be positive");
      }
      if (i > 0 && sigmas[i] < sigmas[i - 1]) {
        throw InvalidArgument("HyperGrid: sigmas must be ascending");
      }
    }
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
      if (!(lambdas[i] >= 0.0) || !std::isfinite(lambdas[i])) {
        throw InvalidArgument("HyperGrid: lambdas must be nonnegative");
      }
      if (i > 0 && lambdas[i] < lambdas[i - 1]) {
        throw InvalidArgument("HyperGrid: lambdas must be ascending");
      }
    }
  }

  std::size_t size() const { return sigmas.size() * lambdas.size(); }

  static std::vector<double> default_lambdas() { return {1e-3, 1e-2, 1e-1, 1.0, 10.0}; }

  //! Ten widths log-spaced over [0.1 m, 10 m] for median distance m.
  static HyperGrid from_median(double median_distance)
  {
    return {log_space(0.1 * median_distance, 10.0 * median_distance, 10),
            default_lambdas()};
  }

  static HyperGrid for_points(const PointMatrix& pooled)
  {
    return from_median(median_pairwise_distance(pooled));
  }

  static HyperGrid for_samples(const SampleSet& x, const SampleSet& x_prime)
  {
    return for_points(SampleSet::concat(x, x_prime).points());
  }
};

struct CvCandidate
{
  double sigma = 0.0;
  double lambda = 0.0;
  std::vector<double> fold_scores;
  double mean_score = 0.0;
};

struct CvReport
{
  //! Sigma-major order: candidate (i, j) sits at i * lambdas + j.
  std::vector<CvCandidate> candidates;
  std::size_t selected = 0;
  int folds = 0;
  //! Number of solves that fell back to the eigenvalue pseudo-inverse.
  Index pseudo_inverse_solves = 0;

  double sigma() const { return candidates.at(selected).sigma; }
  double lambda() const { return candidates.at(selected).lambda; }
  double best_score() const { return candidates.at(selected).mean_score; }
};

//! f-hat(x) = theta^T psi(x).
struct DensityDiffModel
{
  GaussianBasis basis;
  Vector theta;
  Matrix gram;
  double lambda = 0.0;
  bool pseudo_inverse = false;

  double operator()(const PointRef& x) const { return theta.dot(basis_eval(basis, x)); }
};

inline DensityDiffModel
fit_fixed(const SampleSet& x, const SampleSet& x_prime, double sigma, double lambda,
          const PointMatrix& centers)
{
  require_same_dim("fit_fixed", x.dim(), x_prime.dim());
  require_same_dim("fit_fixed", x.dim(), centers.cols());
  GaussianBasis basis(centers, sigma);
  DesignPair design = DesignPair::build(basis, x, x_prime);
  Coefficients coef = solve_regularized(design, lambda);
  return {std::move(basis), std::move(coef.theta), std::move(design.gram), lambda,
          coef.pseudo_inverse};
}

inline Vector
predict(const DensityDiffModel& model, const PointMatrix& xs)
{
  return design_matrix(model.basis, xs) * model.theta;
}

//! Integral of f-hat squared, theta^T H theta.
inline double
squared_norm(const DensityDiffModel& model)
{
  const double v = model.theta.dot(model.gram * model.theta);
  return (v < 0.0 && v >= -1e-10) ? 0.0 : v;
}

//! Hold-out error: int f^2 - 2 mean_{X_t} f + 2 mean_{X'_t} f.
inline double
cv_score(const DensityDiffModel& model, const SampleSet& holdout_x,
         const SampleSet& holdout_x_prime)
{
  return model.theta.dot(model.gram * model.theta) -
         2.0 * predict(model, holdout_x.points()).mean() +
         2.0 * predict(model, holdout_x_prime.points()).mean();
}

//! A group of pooled rows entering the mean-difference vector with a weight.
struct WeightedGroup
{
  std::vector<Index> rows;
  double weight = 1.0;
};

//! h-hat = sum over `plus` of w * mean psi  -  sum over `minus` of w * mean psi.
//! The plain two-sample case is one group with weight 1 on each side.
struct GroupedSplit
{
  std::vector<WeightedGroup> plus;
  std::vector<WeightedGroup> minus;

  static GroupedSplit two_sample(std::vector<Index> first, std::vector<Index> second)
  {
    GroupedSplit s;
    s.plus.push_back({std::move(first), 1.0});
    s.minus.push_back({std::move(second), 1.0});
    return s;
  }
};

//! Cross-validation over a fixed pool of points and fixed kernel centers.
//!
//! Design matrices, Gram matrices and the factorizations of H + lambda I are
//! computed once per grid point on construction; every subsequent call to
//! fit() only forms fold-wise mean vectors and back-substitutes. This is what
//! makes repeated fits on re-labelled subsets of the same pool (permutation
//! tests, sliding windows) affordable.
class PooledCrossValidator
{
public:
  struct Fit
  {
    std::size_t sigma_index = 0;
    std::size_t lambda_index = 0;
    Vector theta;
    Vector mean_diff;
    CvReport report;
  };

  PooledCrossValidator(const PointMatrix& pooled, PointMatrix centers, HyperGrid grid,
                       int folds)
    : grid_(std::move(grid))
    , centers_(std::move(centers))
    , folds_(folds)
  {
    grid_.validate();
    require_same_dim("PooledCrossValidator", pooled.cols(), centers_.cols());
    if (folds_ < 2) {
      throw InvalidArgument("cross-validation needs at least 2 folds");
    }
    const Matrix point_sq = squared_distances(pooled, centers_);
    const Matrix center_sq = squared_distances(centers_, centers_);
    for (double sigma : grid_.sigmas) {
      PerSigma ps;
      ps.psi = gaussian_from_sqdist(point_sq, sigma);
      ps.gram = gram_from_sqdist(center_sq, sigma, centers_.cols());
      for (double lambda : grid_.lambdas) {
        ps.solvers.push_back(std::make_shared<RegularizedSolver>(ps.gram, lambda));
      }
      per_sigma_.push_back(std::move(ps));
    }
  }

  const HyperGrid& grid() const { return grid_; }
  const PointMatrix& centers() const { return centers_; }
  int folds() const { return folds_; }
  const Matrix& design(std::size_t sigma_index) const { return per_sigma_.at(sigma_index).psi; }
  const Matrix& gram(std::size_t sigma_index) const { return per_sigma_.at(sigma_index).gram; }
  const RegularizedSolver& solver(std::size_t sigma_index, std::size_t lambda_index) const
  {
    return *per_sigma_.at(sigma_index).solvers.at(lambda_index);
  }

  //! Mean-difference vector of `split` on all of its rows.
  Vector mean_diff(std::size_t sigma_index, const GroupedSplit& split) const
  {
    const Matrix& psi = design(sigma_index);
    Vector h = Vector::Zero(psi.cols());
    auto accumulate = [&](const std::vector<WeightedGroup>& groups, double sign) {
      for (const auto& g : groups) {
        Vector sum = Vector::Zero(psi.cols());
        for (Index r : g.rows) {
          sum += psi.row(r).transpose();
        }
        h += sign * g.weight * sum / static_cast<double>(g.rows.size());
      }
    };
    accumulate(split.plus, 1.0);
    accumulate(split.minus, -1.0);
    return h;
  }

  //! Shuffles each group independently into near-equal folds, scores every
  //! grid candidate, and refits the best one on all rows of the split.
  Fit fit(const GroupedSplit& split, Rng& rng) const
  {
    const auto groups = fold_groups(split, rng);
    const Index b = centers_.rows();
    const auto n_sigma = grid_.sigmas.size();
    const auto n_lambda = grid_.lambdas.size();

    Fit out;
    out.report.folds = folds_;
    out.report.candidates.resize(n_sigma * n_lambda);

    for (std::size_t s = 0; s < n_sigma; ++s) {
      const Matrix& psi = per_sigma_[s].psi;
      const Matrix& gram = per_sigma_[s].gram;
      // per group: fold sums and total sum of psi rows
      std::vector<Matrix> fold_sums(groups.size(), Matrix::Zero(b, folds_));
      for (std::size_t g = 0; g < groups.size(); ++g) {
        for (int t = 0; t < folds_; ++t) {
          for (Index r : groups[g].folds[static_cast<std::size_t>(t)]) {
            fold_sums[g].col(t) += psi.row(r).transpose();
          }
        }
      }
      std::vector<Vector> train_h(static_cast<std::size_t>(folds_), Vector::Zero(b));
      std::vector<Vector> hold_h(static_cast<std::size_t>(folds_), Vector::Zero(b));
      for (std::size_t g = 0; g < groups.size(); ++g) {
        const auto& gi = groups[g];
        const Vector total = fold_sums[g].rowwise().sum();
        for (int t = 0; t < folds_; ++t) {
          const auto nt = static_cast<double>(gi.folds[static_cast<std::size_t>(t)].size());
          const auto nrest = static_cast<double>(gi.size) - nt;
          const double w = gi.sign * gi.weight;
          train_h[static_cast<std::size_t>(t)] += w * (total - fold_sums[g].col(t)) / nrest;
          hold_h[static_cast<std::size_t>(t)] += w * fold_sums[g].col(t) / nt;
        }
      }
      for (std::size_t l = 0; l < n_lambda; ++l) {
        const RegularizedSolver& solver = *per_sigma_[s].solvers[l];
        if (solver.pseudo_inverse()) {
          out.report.pseudo_inverse_solves += folds_;
        }
        CvCandidate& cand = out.report.candidates[s * n_lambda + l];
        cand.sigma = grid_.sigmas[s];
        cand.lambda = grid_.lambdas[l];
        cand.fold_scores.resize(static_cast<std::size_t>(folds_));
        double total = 0.0;
        for (int t = 0; t < folds_; ++t) {
          const auto ti = static_cast<std::size_t>(t);
          const Vector theta = solver.solve(train_h[ti]);
          double score = theta.dot(gram * theta) - 2.0 * theta.dot(hold_h[ti]);
          if (!std::isfinite(score)) {
            score = std::numeric_limits<double>::infinity();
          }
          cand.fold_scores[ti] = score;
          total += score;
        }
        cand.mean_score = total / folds_;
      }
    }

    std::size_t best = 0;
    for (std::size_t c = 1; c < out.report.candidates.size(); ++c) {
      if (out.report.candidates[c].mean_score < out.report.candidates[best].mean_score) {
        best = c;
      }
    }
    out.report.selected = best;
    out.sigma_index = best / n_lambda;
    out.lambda_index = best % n_lambda;
    out.mean_diff = mean_diff(out.sigma_index, split);
    const RegularizedSolver& solver = *per_sigma_[out.sigma_index].solvers[out.lambda_index];
    out.theta = solver.solve(out.mean_diff);
    if (!out.theta.allFinite()) {
      throw NumericalError("fit_cv: non-finite coefficients for the selected model");
    }
    return out;
  }

  DensityDiffModel model(const Fit& fit) const
  {
    const auto& solver = *per_sigma_.at(fit.sigma_index).solvers.at(fit.lambda_index);
    return {GaussianBasis(centers_, grid_.sigmas[fit.sigma_index]), fit.theta,
            per_sigma_[fit.sigma_index].gram, grid_.lambdas[fit.lambda_index],
            solver.pseudo_inverse()};
  }

private:
  struct PerSigma
  {
    Matrix psi;
    Matrix gram;
    std::vector<std::shared_ptr<const RegularizedSolver>> solvers;
  };

  struct FoldedGroup
  {
    std::vector<std::vector<Index>> folds;
    std::size_t size = 0;
    double weight = 1.0;
    double sign = 1.0;
  };

  std::vector<FoldedGroup> fold_groups(const GroupedSplit& split, Rng& rng) const
  {
    std::vector<FoldedGroup> out;
    auto add = [&](const std::vector<WeightedGroup>& groups, double sign) {
      for (const auto& g : groups) {
        if (g.rows.size() < static_cast<std::size_t>(folds_)) {
          throw InvalidArgument("fit_cv: each sample set needs at least " +
                                std::to_string(folds_) + " points for " +
                                std::to_string(folds_) + "-fold cross-validation");
        }
        std::vector<Index> rows = g.rows;
        rng.shuffle(rows);
        FoldedGroup fg;
        fg.size = rows.size();
        fg.weight = g.weight;
        fg.sign = sign;
        fg.folds.resize(static_cast<std::size_t>(folds_));
        for (int t = 0; t < folds_; ++t) {
          const auto lo = rows.size() * static_cast<std::size_t>(t) / static_cast<std::size_t>(folds_);
          const auto hi = rows.size() * static_cast<std::size_t>(t + 1) / static_cast<std::size_t>(folds_);
          fg.folds[static_cast<std::size_t>(t)].assign(rows.begin() + static_cast<std::ptrdiff_t>(lo),
                                                       rows.begin() + static_cast<std::ptrdiff_t>(hi));
        }
        out.push_back(std::move(fg));
      }
    };
    add(split.plus, 1.0);
    add(split.minus, -1.0);
    return out;
  }

  HyperGrid grid_;
  PointMatrix centers_;
  int folds_;
  std::vector<PerSigma> per_sigma_;
};

struct CvFit
{
  DensityDiffModel model;
  CvReport report;
};

inline constexpr int kDefaultFolds = 5;

//! Selects (sigma, lambda) by `folds`-fold cross-validation and refits on all
//! data. Centers are drawn once from the pooled sample and shared by every
//! fold and candidate.
inline CvFit
fit_cv(const SampleSet& x, const SampleSet& x_prime, const HyperGrid& grid, int folds,
       Rng& rng, Index max_centers = kDefaultMaxCenters)
{
  require_same_dim("fit_cv", x.dim(), x_prime.dim());
  if (x.size() < folds || x_prime.size() < folds) {
    throw InvalidArgument("fit_cv: too few samples for " + std::to_string(folds) + " folds");
  }
  const auto pooled = SampleSet::concat(x, x_prime);
  const auto centers = pooled.subset(select_center_indices(pooled.size(), max_centers, rng));
  const PooledCrossValidator cv(pooled.points(), centers.points(), grid, folds);
  const auto fit = cv.fit(
    GroupedSplit::two_sample(index_range(0, x.size()), index_range(x.size(), x_prime.size())),
    rng);
  return {cv.model(fit), fit.report};
}

inline CvFit
fit_cv(const SampleSet& x, const SampleSet& x_prime, Rng& rng)
{
  return fit_cv(x, x_prime, HyperGrid::for_samples(x, x_prime), kDefaultFolds, rng);
}

} // namespace lsdd
