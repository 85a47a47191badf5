#pragma once

#include "error.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <span>
#include <string>
#include <vector>

namespace lsdd {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
//! Points stored one per row.
using PointMatrix =
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using PointRef = Eigen::Ref<const Eigen::RowVectorXd>;

inline double
squared_distance(const PointRef& a, const PointRef& b)
{
  double s = 0.0;
  for (Index k = 0; k < a.size(); ++k) {
    const double diff = a[k] - b[k];
    s += diff * diff;
  }
  return s;
}

//! A nonempty set of points sharing one dimension.
class SampleSet
{
public:
  explicit SampleSet(PointMatrix points)
    : points_(std::move(points))
  {
    if (points_.rows() < 1) {
      throw InvalidArgument("SampleSet: at least one point is required");
    }
    if (points_.cols() < 1) {
      throw InvalidArgument("SampleSet: dimension must be positive");
    }
    if (!points_.allFinite()) {
      throw InvalidArgument("SampleSet: points must be finite");
    }
  }

  static SampleSet from_rows(const std::vector<std::vector<double>>& rows)
  {
    if (rows.empty()) {
      throw InvalidArgument("SampleSet: at least one point is required");
    }
    const auto d = static_cast<Index>(rows.front().size());
    PointMatrix m(static_cast<Index>(rows.size()), d);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (static_cast<Index>(rows[i].size()) != d) {
        throw DimensionMismatch("SampleSet row " + std::to_string(i), d,
                                static_cast<Index>(rows[i].size()));
      }
      for (Index k = 0; k < d; ++k) {
        m(static_cast<Index>(i), k) = rows[i][static_cast<std::size_t>(k)];
      }
    }
    return SampleSet(std::move(m));
  }

  //! One-dimensional samples.
  static SampleSet from_values(std::span<const double> values)
  {
    PointMatrix m(static_cast<Index>(values.size()), 1);
    for (std::size_t i = 0; i < values.size(); ++i) {
      m(static_cast<Index>(i), 0) = values[i];
    }
    return SampleSet(std::move(m));
  }

  Index size() const { return points_.rows(); }
  Index dim() const { return points_.cols(); }
  const PointMatrix& points() const { return points_; }
  auto point(Index i) const { return points_.row(i); }

  SampleSet subset(std::span<const Index> indices) const
  {
    PointMatrix m(static_cast<Index>(indices.size()), dim());
    for (std::size_t i = 0; i < indices.size(); ++i) {
      m.row(static_cast<Index>(i)) = points_.row(indices[i]);
    }
    return SampleSet(std::move(m));
  }

  //! Rows of `a` followed by rows of `b`.
  static SampleSet concat(const SampleSet& a, const SampleSet& b)
  {
    if (a.dim() != b.dim()) {
      throw DimensionMismatch("SampleSet::concat", a.dim(), b.dim());
    }
    PointMatrix m(a.size() + b.size(), a.dim());
    m.topRows(a.size()) = a.points_;
    m.bottomRows(b.size()) = b.points_;
    return SampleSet(std::move(m));
  }

  bool operator==(const SampleSet& other) const
  {
    return points_.rows() == other.points_.rows() &&
           points_.cols() == other.points_.cols() && points_ == other.points_;
  }

private:
  PointMatrix points_;
};

inline void
require_same_dim(const char* where, Index expected, Index actual)
{
  if (expected != actual) {
    throw DimensionMismatch(where, expected, actual);
  }
}

//! Indices 0, 1, ..., n-1 offset by `start`.
inline std::vector<Index>
index_range(Index start, Index count)
{
  std::vector<Index> out(static_cast<std::size_t>(count));
  for (Index i = 0; i < count; ++i) {
    out[static_cast<std::size_t>(i)] = start + i;
  }
  return out;
}

} // namespace lsdd
