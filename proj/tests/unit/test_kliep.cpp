#include "../support/helpers.hpp"

#include <lsdd/kliep.hpp>
#include <lsdd/synthetic.hpp>

#include <catch_amalgamated.hpp>

#include <cmath>

using namespace lsdd;
using lsdd::testing::integrate;
using lsdd::testing::normal_sample;

namespace {

double
mixture_kl(double mu)
{
  auto p = [&](double x) { return 0.9 * normal_pdf(x, 0.0, 1.0) + 0.1 * normal_pdf(x, mu, 1.0 / 16.0); };
  return integrate([&](double x) { return p(x) * std::log(p(x) / normal_pdf(x, 0.0, 1.0)); }, -12.0, 12.0);
}

} // namespace

TEST_CASE("kliep_solve feasibility and monotone objective")
{
  Rng rng(1);
  const auto x = normal_sample(80, 2, 0.0, 1.0, rng);
  const auto xp = normal_sample(70, 2, 0.5, 1.2, rng);
  const GaussianBasis basis(kliep_centers(x, 30, rng), 0.8);
  const Matrix a = design_matrix(basis, x.points());
  const Vector den = design_matrix(basis, xp.points()).colwise().mean().transpose();
  const auto sol = kliep_solve(a, den);
  CHECK((sol.alpha.array() >= 0.0).all());
  CHECK(den.dot(sol.alpha) == Catch::Approx(1.0).epsilon(1e-12));
  for (std::size_t i = 1; i < sol.trace.size(); ++i) {
    CHECK(sol.trace[i] >= sol.trace[i - 1]);
  }
  CHECK(sol.objective == sol.trace.back());
  CHECK(sol.converged);

  // no feasible random perturbation improves on the solution
  for (int t = 0; t < 100; ++t) {
    Vector alt = sol.alpha;
    for (Index l = 0; l < alt.size(); ++l) {
      alt[l] = std::max(0.0, alt[l] + rng.normal(0.0, 1e-2 * alt.maxCoeff()));
    }
    alt /= den.dot(alt);
    CHECK(detail::kliep_objective(a, alt) <= sol.objective + 1e-6);
  }
}

TEST_CASE("kliep_solve errors")
{
  CHECK_THROWS_AS(kliep_solve(Matrix::Ones(3, 2), Vector::Ones(3)), DimensionMismatch);
  CHECK_THROWS_AS(kliep_solve(Matrix::Ones(0, 2), Vector::Ones(2)), InvalidArgument);
  CHECK_THROWS_AS(kliep_solve(Matrix::Ones(3, 2), Vector::Zero(2)), NumericalError);
}

TEST_CASE("kliep on identical sets")
{
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(10 + seed);
    const auto x = normal_sample(100, 1, 0.0, 1.0, rng);
    const auto fit = kliep_fit_cv(x, x, default_kliep_sigmas(x, x), 5, KliepOptions{}, rng);
    const double kl = kliep_kl_estimate(fit.model, x);
    CHECK(kl >= -0.05);
    CHECK(kl <= 0.15);
    const Vector w = kliep_ratio_rows(fit.model, x.points());
    CHECK(w.mean() == Catch::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("reference KL for the outlier mixture")
{
  CHECK(mixture_kl(0.0) == Catch::Approx(0.008966738127624281).epsilon(1e-7));
  CHECK(mixture_kl(2.0) == Catch::Approx(0.06689063451015936).epsilon(1e-7));
  CHECK(mixture_kl(4.0) == Catch::Approx(0.5691281930231831).epsilon(1e-7));
}

TEST_CASE("kliep estimate grows with the outlier mean")
{
  std::vector<double> means;
  for (double mu : {0.0, 2.0, 4.0}) {
    double total = 0.0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      Rng rng(derive_seed(20, {seed}));
      const auto [x, xp] = gen_outlier_mixture(100, 100, 0.1, mu, rng);
      const auto fit = kliep_fit_cv(x, xp, default_kliep_sigmas(x, xp), 5, KliepOptions{}, rng);
      total += kliep_kl_estimate(fit.model, x);
    }
    means.push_back(total / 10.0);
  }
  CHECK(means[0] > 0.0);
  CHECK(means[1] > means[0]);
  CHECK(means[2] > means[1]);
}

TEST_CASE("kliep fits are deterministic")
{
  Rng data(30);
  const auto x = normal_sample(60, 2, 0.0, 1.0, data);
  const auto xp = normal_sample(60, 2, 1.0, 1.0, data);
  Rng a(31);
  Rng b(31);
  const auto f1 = kliep_fit_cv(x, xp, default_kliep_sigmas(x, xp), 5, KliepOptions{}, a);
  const auto f2 = kliep_fit_cv(x, xp, default_kliep_sigmas(x, xp), 5, KliepOptions{}, b);
  CHECK(f1.report.selected == f2.report.selected);
  CHECK(f1.model.alpha == f2.model.alpha);
  CHECK(f1.report.sigmas.size() == 5);

  Rng c(32);
  const auto fixed = kliep_fit(x, xp, 1.0, KliepOptions{}, c);
  CHECK(fixed.basis.width() == 1.0);
  CHECK(kliep_ratio(fixed, x.point(0)) == Catch::Approx(kliep_ratio_rows(fixed, x.points())[0]));
  CHECK_THROWS_AS(kliep_fit_cv(x, xp, {}, 5, KliepOptions{}, c), InvalidArgument);
  CHECK_THROWS_AS(kliep_fit_cv(x, xp, {-1.0}, 5, KliepOptions{}, c), InvalidArgument);
}
