#pragma once

#include <lsdd/sample_set.hpp>
#include <lsdd/random.hpp>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <initializer_list>
#include <vector>

namespace lsdd::testing {

inline SampleSet
line(std::initializer_list<double> values)
{
  const std::vector<double> v(values);
  return SampleSet::from_values(v);
}

inline SampleSet
normal_sample(Index n, Index d, double mean, double sd, Rng& rng)
{
  PointMatrix m(n, d);
  for (Index i = 0; i < n; ++i) {
    for (Index k = 0; k < d; ++k) {
      m(i, k) = rng.normal(mean, sd);
    }
  }
  return SampleSet(std::move(m));
}

//! Adaptive Gauss-Kronrod over [a, b].
template<class F>
double
integrate(F f, double a, double b)
{
  using boost::math::quadrature::gauss_kronrod;
  return gauss_kronrod<double, 61>::integrate(f, a, b, 15, 1e-12);
}

//! Iterated Gauss-Kronrod over [a, b] x [c, d].
template<class F>
double
integrate2(F f, double a, double b, double c, double d)
{
  return integrate([&](double x) { return integrate([&](double y) { return f(x, y); }, c, d); }, a, b);
}

} // namespace lsdd::testing
