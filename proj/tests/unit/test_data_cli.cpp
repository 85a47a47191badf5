#include <lsdd/csv.hpp>
#include <lsdd/experiment.hpp>
#include <lsdd/synthetic.hpp>

#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <string>

using namespace lsdd;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;

namespace {

SampleSet
parse(const std::string& text, bool header = false)
{
  std::istringstream in(text);
  return parse_csv(in, header);
}

std::string
experiment_csv(const ExperimentConfig& c)
{
  std::ostringstream out;
  write_result_csv(out, run_experiment(c));
  return out.str();
}

} // namespace

TEST_CASE("csv parsing")
{
  const auto s = parse("x,y\n1, 2\n\n-3.5,+4e-1\n", true);
  REQUIRE(s.size() == 2);
  REQUIRE(s.dim() == 2);
  CHECK(s.points()(0, 1) == 2.0);
  CHECK(s.points()(1, 0) == -3.5);
  CHECK(s.points()(1, 1) == 0.4);

  CHECK(parse("\xEF\xBB\xBF" "1\n2\n").size() == 2);
  CHECK(parse("\"1.5\",2\n").points()(0, 0) == 1.5);
}

TEST_CASE("csv errors name the offending row")
{
  CHECK_THROWS_WITH(parse("1,2\n3\n"), ContainsSubstring("row 2"));
  CHECK_THROWS_WITH(parse("1,2\n3,abc\n"), ContainsSubstring("column 2"));
  CHECK_THROWS_AS(parse("1,nan\n"), DataError);
  CHECK_THROWS_AS(parse("1,\n"), DataError);
  CHECK_THROWS_AS(parse("a,b\n", true), DataError);
  CHECK_THROWS_AS(parse(""), DataError);
  CHECK_THROWS_AS(load_csv("/nonexistent/file.csv", false), DataError);
}

TEST_CASE("csv round trip")
{
  Rng rng(3);
  PointMatrix m(25, 3);
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index k = 0; k < m.cols(); ++k) {
      m(i, k) = rng.normal(0.0, 1e3) * std::pow(10.0, static_cast<double>(k - 1) * 5.0);
    }
  }
  std::ostringstream out;
  write_csv(out, m, {"a", "b", "c"});
  const auto back = parse(out.str(), true).points();
  REQUIRE(back.rows() == m.rows());
  REQUIRE(back.cols() == m.cols());
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index k = 0; k < m.cols(); ++k) {
      CHECK(std::abs(back(i, k) - m(i, k)) <= 1e-12 * std::max(1.0, std::abs(m(i, k))));
    }
  }
}

TEST_CASE("generators are deterministic per seed")
{
  Rng a(9);
  Rng b(9);
  const auto [x1, y1] = gen_gaussian_shift(2, 30, 40, 0.5, a);
  const auto [x2, y2] = gen_gaussian_shift(2, 30, 40, 0.5, b);
  CHECK(x1.points() == x2.points());
  CHECK(y1.points() == y2.points());
  CHECK(x1.size() == 30);
  CHECK(y1.size() == 40);
  CHECK(x1.dim() == 2);

  Rng c(9);
  const auto [x3, y3] = gen_gaussian_shift(2, 30, 40, 0.6, c);
  CHECK(x3.points() != x1.points());
}

TEST_CASE("gaussian shift sample moments")
{
  Rng rng(4);
  const auto [x, xp] = gen_gaussian_shift(1, 20000, 20000, 0.7, rng);
  CHECK_THAT(x.points().mean(), WithinAbs(0.7, 0.01));
  CHECK_THAT(xp.points().mean(), WithinAbs(0.0, 0.01));
  const double var = (xp.points().array() - xp.points().mean()).square().mean();
  CHECK_THAT(var, WithinAbs(1.0 / (4.0 * std::numbers::pi), 0.003));
  CHECK_THAT(true_l2_gaussian_shift(0.0), WithinAbs(0.0, 1e-15));
}

TEST_CASE("outlier mixture with eta one is pure outliers")
{
  Rng rng(8);
  const auto [x, xp] = gen_outlier_mixture(5000, 10, 1.0, 5.0, rng);
  CHECK_THAT(x.points().mean(), WithinAbs(5.0, 0.02));
  CHECK(x.points().minCoeff() > 3.0);

  Rng rng2(8);
  const auto [z, zp] = gen_outlier_mixture(5000, 10, 0.0, 5.0, rng2);
  CHECK_THAT(z.points().mean(), WithinAbs(0.0, 0.05));

  Rng rng3(1);
  CHECK_THROWS_AS(gen_outlier_mixture(10, 10, 1.5, 0.0, rng3), InvalidArgument);
}

TEST_CASE("outlier mixture L2 values")
{
  CHECK_THAT(true_l2_outlier_mixture(0.1, 0.0), WithinAbs(0.0063641, 1e-7));
  CHECK_THAT(true_l2_outlier_mixture(0.1, 2.0), WithinAbs(0.0129264, 1e-7));
  CHECK_THAT(true_l2_outlier_mixture(0.1, 4.0), WithinAbs(0.0141006, 1e-7));
  CHECK_THAT(true_l2_outlier_mixture(0.1, 6.0), WithinAbs(0.0141047, 1e-7));
  double prev = 0.0;
  for (double mu = 0.0; mu <= 10.0; mu += 0.5) {
    const double v = true_l2_outlier_mixture(0.1, mu);
    CHECK(v >= prev);
    prev = v;
  }
}

TEST_CASE("step series")
{
  Rng rng(2);
  const auto y = gen_step_series(400, {100, 200, 300}, 3.0, 0.1, rng);
  REQUIRE(y.rows() == 400);
  CHECK_THAT(y.block(0, 0, 100, 1).mean(), WithinAbs(0.0, 0.05));
  CHECK_THAT(y.block(100, 0, 100, 1).mean(), WithinAbs(3.0, 0.05));
  CHECK_THAT(y.block(200, 0, 100, 1).mean(), WithinAbs(0.0, 0.05));
  CHECK_THAT(y.block(300, 0, 100, 1).mean(), WithinAbs(3.0, 0.05));

  CHECK_THROWS_AS(gen_step_series(0, {}, 1.0, 1.0, rng), InvalidArgument);
  CHECK_THROWS_AS(gen_step_series(10, {0}, 1.0, 1.0, rng), InvalidArgument);
  CHECK_THROWS_AS(gen_step_series(10, {10}, 1.0, 1.0, rng), InvalidArgument);
  CHECK_THROWS_AS(gen_step_series(10, {5, 5}, 1.0, 1.0, rng), InvalidArgument);
}

TEST_CASE("class balance data")
{
  Rng rng(6);
  const auto data = gen_class_balance(2, 15, 40, 0.3, 2.0, rng);
  CHECK(data.train.positives.size() == 15);
  CHECK(data.test.size() == 40);
  CHECK(std::count(data.test_labels.begin(), data.test_labels.end(), 1) == 12);
  CHECK_THROWS_AS(gen_class_balance(2, 15, 40, -0.1, 2.0, rng), InvalidArgument);
}

TEST_CASE("experiments are deterministic and summaries recomputable")
{
  auto c = ExperimentConfig::defaults("l2-curve");
  c.n = c.n_prime = 40;
  c.mus = {0.0, 0.5};
  c.replicates = 3;
  c.seed = 17;
  const auto first = experiment_csv(c);
  CHECK(first == experiment_csv(c));
  c.seed = 18;
  CHECK(first != experiment_csv(c));

  c.seed = 17;
  auto table = run_experiment(c);
  REQUIRE(table.rows.size() == 2 * 3 * 6);
  CHECK(table.rows.front().condition == "mu=0");
  const auto before = table.summaries;
  table.summarize();
  REQUIRE(table.summaries.size() == before.size());
  for (std::size_t i = 0; i < before.size(); ++i) {
    CHECK(table.summaries[i].mean == before[i].mean);
    CHECK(table.summaries[i].se == before[i].se);
  }
  double sum = 0.0;
  for (const auto& r : table.rows) {
    if (r.condition == "mu=0.5" && r.estimator == "lsdd_combined") {
      sum += r.value;
    }
  }
  CHECK_THAT(table.summary("mu=0.5", "lsdd_combined").mean, WithinAbs(sum / 3.0, 1e-15));
  CHECK(table.summary("mu=0.5", "truth").se == 0.0);
  CHECK_THROWS_AS(table.summary("mu=9", "truth"), InvalidArgument);
}

TEST_CASE("zero shift estimate is close to zero on average")
{
  auto c = ExperimentConfig::defaults("l2-curve");
  c.mus = {0.0};
  c.replicates = 20;
  c.seed = 1;
  const auto table = run_experiment(c);
  CHECK_THAT(table.summary("mu=0", "lsdd_combined").mean, WithinAbs(0.0, 0.05));
}

TEST_CASE("experiment configuration")
{
  CHECK_THROWS_WITH(ExperimentConfig::defaults("nope"), ContainsSubstring("unknown experiment"));
  CHECK(ExperimentConfig::defaults("kde-compare").d == 5);
  CHECK(ExperimentConfig::defaults("change-detection").replicates == 10);

  auto c = ExperimentConfig::defaults("two-sample-power");
  c.statistics = {"mmd"};
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  c = ExperimentConfig::defaults("l2-curve");
  c.folds = 1;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  c.folds = 5;
  c.scorer = "other";
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
}

TEST_CASE("result json layout")
{
  auto c = ExperimentConfig::defaults("l2-curve");
  c.n = c.n_prime = 30;
  c.mus = {0.2};
  c.replicates = 2;
  nlohmann::json cfg;
  to_json(cfg, c);
  const auto j = result_json(run_experiment(c), cfg);
  CHECK(j.contains("version"));
  CHECK(j.at("config").at("name") == "l2-curve");
  CHECK(j.at("rows").size() == 12);
  CHECK(j.at("summaries").size() == 6);
  CHECK(j.at("summaries")[0].contains("se"));
  CHECK(j.at("rows")[0].at("condition") == "mu=0.2");
}

TEST_CASE("csv fields are quoted when needed")
{
  CHECK(detail::csv_field("plain") == "plain");
  CHECK(detail::csv_field("eta=0.1;mu=2") == "eta=0.1;mu=2");
  CHECK(detail::csv_field("a,b") == "\"a,b\"");
  CHECK(detail::csv_field("say \"x\"") == "\"say \"\"x\"\"\"");
}
