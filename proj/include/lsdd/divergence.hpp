#pragma once

// L2-distance estimators built on a fitted density-difference model.

#include "density_difference.hpp"
#include "kernel_core.hpp"

#include <algorithm>

namespace lsdd {

namespace detail {

inline void
check_sizes(const char* where, const DesignPair& design, const Vector& theta)
{
  if (theta.size() != design.size()) {
    throw DimensionMismatch(where, design.size(), theta.size());
  }
}

} // namespace detail

//! h-hat^T theta-hat.
inline double
l2_plain_h(const DesignPair& design, const Vector& theta)
{
  detail::check_sizes("l2_plain_h", design, theta);
  return design.mean_diff.dot(theta);
}

//! theta-hat^T H theta-hat.
inline double
l2_plain_quadratic(const DesignPair& design, const Vector& theta)
{
  detail::check_sizes("l2_plain_quadratic", design, theta);
  return theta.dot(design.gram * theta);
}

//! beta h^T theta + (1 - beta) theta^T H theta.
inline double
l2_generalized(const DesignPair& design, const Vector& theta, double beta)
{
  return beta * l2_plain_h(design, theta) +
         (1.0 - beta) * l2_plain_quadratic(design, theta);
}

//! 2 h^T theta - theta^T H theta. Equals the negated minimum of the
//! unregularized objective theta^T H theta - 2 h^T theta when lambda = 0.
inline double
l2_combined(const DesignPair& design, const Vector& theta)
{
  return 2.0 * l2_plain_h(design, theta) - l2_plain_quadratic(design, theta);
}

inline double l2_plain_h(const DesignPair& d, const Coefficients& c) { return l2_plain_h(d, c.theta); }
inline double l2_plain_quadratic(const DesignPair& d, const Coefficients& c) { return l2_plain_quadratic(d, c.theta); }
inline double l2_combined(const DesignPair& d, const Coefficients& c) { return l2_combined(d, c.theta); }
inline double l2_generalized(const DesignPair& d, const Coefficients& c, double beta) { return l2_generalized(d, c.theta, beta); }

struct BiasTrace
{
  double value = 0.0;
  bool pseudo_inverse = false;
};

//! tr(H^{-1} (V_p / n + V_p' / n')). The factorization is of H itself, never
//! of H + lambda I.
inline BiasTrace
bias_trace(const Matrix& gram, const BasisMoments& moments_p,
           const BasisMoments& moments_p_prime, Index n, Index n_prime,
           bool allow_fallback = true)
{
  if (n < 1 || n_prime < 1) {
    throw InvalidArgument("bias_trace: sample sizes must be positive");
  }
  if (moments_p.cov.rows() != gram.rows() || moments_p_prime.cov.rows() != gram.rows()) {
    throw DimensionMismatch("bias_trace", gram.rows(), moments_p.cov.rows());
  }
  const Matrix m = moments_p.cov / static_cast<double>(n) +
                   moments_p_prime.cov / static_cast<double>(n_prime);
  const RegularizedSolver h_solver(gram, 0.0, allow_fallback);
  return {h_solver.solve(m).trace(), h_solver.pseudo_inverse()};
}

inline double
l2_bias_corrected(const DesignPair& design, const Vector& theta,
                  const BasisMoments& moments_p, const BasisMoments& moments_p_prime,
                  Index n, Index n_prime, bool allow_fallback = true)
{
  return l2_combined(design, theta) -
         bias_trace(design.gram, moments_p, moments_p_prime, n, n_prime, allow_fallback).value;
}

inline double
l2_positive_part(double bias_corrected)
{
  return std::max(0.0, bias_corrected);
}

//! 2-norm condition number of a symmetric PSD matrix (infinite if singular).
inline double
condition_number(const Matrix& gram)
{
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  return lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
}

//! Every L2 estimator for one fit. `combined` is the recommended one;
//! `bias_corrected` and `positive_part` rely on H^{-1} and become unreliable
//! when `gram_condition` is large.
struct L2Estimates
{
  double plain_h = 0.0;
  double plain_quadratic = 0.0;
  double combined = 0.0;
  double bias_corrected = 0.0;
  double positive_part = 0.0;
  double gram_condition = 0.0;
  bool trace_pseudo_inverse = false;
};

inline L2Estimates
l2_estimates(const DesignPair& design, const Vector& theta,
             const BasisMoments& moments_p, const BasisMoments& moments_p_prime,
             Index n, Index n_prime)
{
  L2Estimates out;
  out.plain_h = l2_plain_h(design, theta);
  out.plain_quadratic = l2_plain_quadratic(design, theta);
  out.combined = 2.0 * out.plain_h - out.plain_quadratic;
  const auto trace = bias_trace(design.gram, moments_p, moments_p_prime, n, n_prime);
  out.bias_corrected = out.combined - trace.value;
  out.positive_part = l2_positive_part(out.bias_corrected);
  out.trace_pseudo_inverse = trace.pseudo_inverse;
  out.gram_condition = condition_number(design.gram);
  return out;
}

//! Estimates for a fitted model and the samples it was fitted on.
inline L2Estimates
l2_estimates(const DensityDiffModel& model, const SampleSet& x, const SampleSet& x_prime)
{
  const Matrix psi_x = design_matrix(model.basis, x.points());
  const Matrix psi_xp = design_matrix(model.basis, x_prime.points());
  const auto mp = moments_from_design(psi_x);
  const auto mpp = moments_from_design(psi_xp);
  const DesignPair design(model.gram, mp.mean - mpp.mean);
  return l2_estimates(design, model.theta, mp, mpp, x.size(), x_prime.size());
}

} // namespace lsdd
