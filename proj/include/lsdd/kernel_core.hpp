#pragma once

// Gaussian basis functions, their analytic Gram matrix, empirical
// mean-difference vectors and the regularized solve shared by every
// estimator in the library.

#include "error.hpp"
#include "random.hpp"
#include "sample_set.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

namespace lsdd {

inline constexpr Index kDefaultMaxCenters = 300;

//! Kernel centers c_1..c_b and a common width sigma.
class GaussianBasis
{
public:
  GaussianBasis(PointMatrix centers, double width)
    : centers_(std::move(centers))
    , width_(width)
  {
    if (centers_.rows() < 1 || centers_.cols() < 1) {
      throw InvalidArgument("GaussianBasis: need at least one center");
    }
    if (!(width_ > 0.0) || !std::isfinite(width_)) {
      throw InvalidArgument("GaussianBasis: width must be positive and finite");
    }
  }

  Index size() const { return centers_.rows(); }
  Index dim() const { return centers_.cols(); }
  double width() const { return width_; }
  const PointMatrix& centers() const { return centers_; }

  GaussianBasis with_width(double width) const { return {centers_, width}; }

private:
  PointMatrix centers_;
  double width_;
};

//! Picks kernel centers from the pooled samples (first set, then second).
//! Returns row indices into that pooled order: all of them when the pool has
//! at most `max_centers` points, otherwise a uniform subset drawn without
//! replacement, reported in ascending index order.
inline std::vector<Index>
select_center_indices(Index pooled_size, Index max_centers, Rng& rng)
{
  if (max_centers < 1) {
    throw InvalidArgument("select_centers: max_centers must be >= 1");
  }
  std::vector<Index> all = index_range(0, pooled_size);
  if (pooled_size <= max_centers) {
    return all;
  }
  // partial Fisher-Yates: the first max_centers slots end up uniform
  for (Index i = 0; i < max_centers; ++i) {
    const auto j = i + static_cast<Index>(
                         rng.below(static_cast<std::uint64_t>(pooled_size - i)));
    std::swap(all[static_cast<std::size_t>(i)], all[static_cast<std::size_t>(j)]);
  }
  all.resize(static_cast<std::size_t>(max_centers));
  std::sort(all.begin(), all.end());
  return all;
}

inline PointMatrix
select_centers(const SampleSet& x, const SampleSet& x_prime, Index max_centers,
               Rng& rng)
{
  require_same_dim("select_centers", x.dim(), x_prime.dim());
  const auto pooled = SampleSet::concat(x, x_prime);
  const auto idx = select_center_indices(pooled.size(), max_centers, rng);
  return pooled.subset(idx).points();
}

//! psi(x): component l is exp(-|x - c_l|^2 / (2 sigma^2)).
inline Vector
basis_eval(const GaussianBasis& basis, const PointRef& x)
{
  require_same_dim("basis_eval", basis.dim(), x.size());
  const double scale = 1.0 / (2.0 * basis.width() * basis.width());
  Vector out(basis.size());
  for (Index l = 0; l < basis.size(); ++l) {
    out[l] = std::exp(-squared_distance(x, basis.centers().row(l)) * scale);
  }
  return out;
}

//! Pairwise squared distances, rows of `a` against rows of `b`.
inline Matrix
squared_distances(const PointMatrix& a, const PointMatrix& b)
{
  require_same_dim("squared_distances", a.cols(), b.cols());
  Matrix out(a.rows(), b.rows());
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < b.rows(); ++j) {
      out(i, j) = squared_distance(a.row(i), b.row(j));
    }
  }
  return out;
}

inline Matrix
gaussian_from_sqdist(const Matrix& sqdist, double width)
{
  const double scale = -1.0 / (2.0 * width * width);
  return (sqdist.array() * scale).exp().matrix();
}

//! Design matrix: row i is psi(x_i)^T.
inline Matrix
design_matrix(const GaussianBasis& basis, const PointMatrix& points)
{
  require_same_dim("design_matrix", basis.dim(), points.cols());
  return gaussian_from_sqdist(squared_distances(points, basis.centers()),
                              basis.width());
}

//! H_{l,l'} = (pi sigma^2)^{d/2} exp(-|c_l - c_l'|^2 / (4 sigma^2)).
inline Matrix
gram_matrix(const GaussianBasis& basis)
{
  const double s2 = basis.width() * basis.width();
  const double front =
    std::pow(std::numbers::pi * s2, static_cast<double>(basis.dim()) / 2.0);
  const Index b = basis.size();
  Matrix h(b, b);
  for (Index l = 0; l < b; ++l) {
    h(l, l) = front;
    for (Index m = l + 1; m < b; ++m) {
      const double v =
        front *
        std::exp(-squared_distance(basis.centers().row(l), basis.centers().row(m)) /
                 (4.0 * s2));
      h(l, m) = v;
      h(m, l) = v;
    }
  }
  return h;
}

//! Gram matrix from precomputed center-to-center squared distances.
inline Matrix
gram_from_sqdist(const Matrix& center_sqdist, double width, Index dim)
{
  const double s2 = width * width;
  const double front =
    std::pow(std::numbers::pi * s2, static_cast<double>(dim) / 2.0);
  Matrix h = front * (center_sqdist.array() * (-1.0 / (4.0 * s2))).exp().matrix();
  h.diagonal().setConstant(front);
  return h;
}

//! (1/n) sum psi(x_i) - (1/n') sum psi(x'_i').
inline Vector
mean_diff_vector(const GaussianBasis& basis, const SampleSet& x,
                 const SampleSet& x_prime)
{
  require_same_dim("mean_diff_vector", basis.dim(), x.dim());
  require_same_dim("mean_diff_vector", basis.dim(), x_prime.dim());
  const Vector mean_x = design_matrix(basis, x.points()).colwise().mean();
  const Vector mean_xp = design_matrix(basis, x_prime.points()).colwise().mean();
  return mean_x - mean_xp;
}

//! Gram matrix H and mean-difference vector h-hat for one basis and split.
struct DesignPair
{
  Matrix gram;
  Vector mean_diff;

  DesignPair(Matrix h, Vector hhat)
    : gram(std::move(h))
    , mean_diff(std::move(hhat))
  {
    if (gram.rows() != gram.cols() || gram.rows() != mean_diff.size()) {
      throw InvalidArgument("DesignPair: H must be b x b and h-hat length b");
    }
  }

  static DesignPair build(const GaussianBasis& basis, const SampleSet& x,
                          const SampleSet& x_prime)
  {
    return {gram_matrix(basis), mean_diff_vector(basis, x, x_prime)};
  }

  Index size() const { return mean_diff.size(); }
};

struct Coefficients
{
  Vector theta;
  //! Set when the Cholesky factorization failed and an eigenvalue
  //! pseudo-solve was used instead.
  bool pseudo_inverse = false;
};

//! Factorization of H + lambda I, reusable across right-hand sides.
class RegularizedSolver
{
public:
  //! LLT reciprocal-condition estimates below this trigger the fallback.
  static constexpr double kMinRcond = 1e-10;

  RegularizedSolver(const Matrix& gram, double lambda, bool allow_fallback = true)
  {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
      throw InvalidArgument("solve_regularized: lambda must be >= 0");
    }
    if (!gram.allFinite()) {
      throw NumericalError("solve_regularized: non-finite Gram matrix");
    }
    Matrix a = gram;
    a.diagonal().array() += lambda;
    llt_.compute(a);
    if (llt_.info() == Eigen::Success && llt_.rcond() >= kMinRcond) {
      system_ = std::move(a);
      return;
    }
    if (!allow_fallback) {
      throw NumericalError(
        "solve_regularized: H + lambda I is singular (Cholesky failed)");
    }
    Eigen::SelfAdjointEigenSolver<Matrix> eig(a);
    if (eig.info() != Eigen::Success) {
      throw NumericalError("solve_regularized: eigendecomposition failed");
    }
    const Vector& ev = eig.eigenvalues();
    const double cutoff = std::max(ev.cwiseAbs().maxCoeff(), 0.0) *
                          static_cast<double>(a.rows()) *
                          std::numeric_limits<double>::epsilon();
    inv_eig_ = ev.unaryExpr([cutoff](double e) { return e > cutoff ? 1.0 / e : 0.0; });
    eigvec_ = eig.eigenvectors();
    pseudo_ = true;
  }

  //! Cholesky solve followed by one step of iterative refinement.
  Vector solve(const Vector& rhs) const
  {
    if (pseudo_) {
      return eigvec_ * inv_eig_.cwiseProduct(eigvec_.transpose() * rhs);
    }
    Vector x = llt_.solve(rhs);
    x += llt_.solve(Vector(rhs - system_ * x));
    return x;
  }

  Matrix solve(const Matrix& rhs) const
  {
    if (pseudo_) {
      return eigvec_ * (inv_eig_.asDiagonal() * (eigvec_.transpose() * rhs));
    }
    Matrix x = llt_.solve(rhs);
    x += llt_.solve(Matrix(rhs - system_ * x));
    return x;
  }

  bool pseudo_inverse() const { return pseudo_; }

private:
  Eigen::LLT<Matrix> llt_;
  Matrix system_;
  Matrix eigvec_;
  Vector inv_eig_;
  bool pseudo_ = false;
};

//! theta-hat = (H + lambda I)^{-1} h-hat.
inline Coefficients
solve_regularized(const DesignPair& design, double lambda,
                  bool allow_fallback = true)
{
  const RegularizedSolver solver(design.gram, lambda, allow_fallback);
  Coefficients out{solver.solve(design.mean_diff), solver.pseudo_inverse()};
  if (!out.theta.allFinite()) {
    throw NumericalError("solve_regularized: non-finite solution");
  }
  return out;
}

//! Empirical mean and (biased, 1/n) covariance of psi(x).
struct BasisMoments
{
  Vector mean;
  Matrix cov;
};

inline BasisMoments
moments_from_design(const Matrix& psi)
{
  const auto n = static_cast<double>(psi.rows());
  BasisMoments m;
  m.mean = psi.colwise().mean().transpose();
  const Matrix centered = psi.rowwise() - m.mean.transpose();
  m.cov = centered.transpose() * centered / n;
  m.cov = 0.5 * (m.cov + m.cov.transpose()).eval();
  return m;
}

inline BasisMoments
basis_moments(const GaussianBasis& basis, const SampleSet& x)
{
  return moments_from_design(design_matrix(basis, x.points()));
}

//! Median of the pairwise Euclidean distances (median heuristic). At most
//! `max_points` evenly strided rows are used. Returns 1 when every distance
//! is zero so that the result is always a usable kernel width; throws
//! NumericalError when the median overflows.
inline double
median_pairwise_distance(const PointMatrix& points, Index max_points = 1000)
{
  const Index n = points.rows();
  const Index stride = std::max<Index>(1, (n + max_points - 1) / max_points);
  std::vector<Index> rows;
  for (Index i = 0; i < n; i += stride) {
    rows.push_back(i);
  }
  std::vector<double> dists;
  dists.reserve(rows.size() * (rows.size() - 1) / 2);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = i + 1; j < rows.size(); ++j) {
      dists.push_back(std::sqrt(squared_distance(points.row(rows[i]), points.row(rows[j]))));
    }
  }
  if (dists.empty()) {
    return 1.0;
  }
  const auto mid = dists.begin() + static_cast<std::ptrdiff_t>(dists.size() / 2);
  std::nth_element(dists.begin(), mid, dists.end());
  double med = *mid;
  if (dists.size() % 2 == 0) {
    med = 0.5 * (med + *std::max_element(dists.begin(), mid));
  }
  if (!std::isfinite(med)) {
    throw NumericalError("median_pairwise_distance: distances overflow");
  }
  return med > 0.0 ? med : 1.0;
}

//! `count` log-spaced values from lo to hi inclusive.
inline std::vector<double>
log_space(double lo, double hi, int count)
{
  std::vector<double> out;
  if (count == 1) {
    out.push_back(lo);
    return out;
  }
  const double a = std::log(lo);
  const double b = std::log(hi);
  for (int i = 0; i < count; ++i) {
    out.push_back(std::exp(a + (b - a) * i / (count - 1)));
  }
  return out;
}

} // namespace lsdd
