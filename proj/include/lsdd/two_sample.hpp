#pragma once

// Permutation two-sample test over a distance statistic.

#include "density_difference.hpp"
#include "divergence.hpp"
#include "kliep.hpp"
#include "parallel.hpp"
#include "random.hpp"

#include <concepts>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace lsdd {

//! Row indices of the pooled sample assigned to the first and second set.
struct IndexSplit
{
  std::vector<Index> first;
  std::vector<Index> second;
};

//! A statistic evaluated on re-splits of one pooled sample. bind() is called
//! once with the pool; evaluate() must then be const and thread-safe.
template<class S>
concept PooledStatistic =
  requires(S& s, const S& cs, const SampleSet& pooled, const IndexSplit& split, Rng& rng) {
    s.bind(pooled);
    { cs.evaluate(split, rng) } -> std::convertible_to<double>;
  };

//! Adapts any callable double(const SampleSet&, const SampleSet&, Rng&).
template<class Fn>
class CallableStatistic
{
public:
  explicit CallableStatistic(Fn fn)
    : fn_(std::move(fn))
  {}

  void bind(const SampleSet& pooled) { pooled_.emplace(pooled); }

  double evaluate(const IndexSplit& split, Rng& rng) const
  {
    return fn_(pooled_->subset(split.first), pooled_->subset(split.second), rng);
  }

private:
  Fn fn_;
  std::optional<SampleSet> pooled_;
};

//! Combined LSDD L2 estimate with full cross-validation on every split.
//! Kernel centers and the (sigma, lambda) grid are functions of the pooled
//! sample only, so they are fixed once in bind() and the expensive
//! factorizations are shared by all permutations.
class LsddStatistic
{
public:
  struct Options
  {
    int folds = kDefaultFolds;
    Index max_centers = kDefaultMaxCenters;
    std::optional<HyperGrid> grid;
    std::uint64_t center_seed = 0;
  };

  LsddStatistic() = default;
  explicit LsddStatistic(Options opt)
    : opt_(std::move(opt))
  {}

  void bind(const SampleSet& pooled)
  {
    Rng center_rng(opt_.center_seed);
    const auto idx = select_center_indices(pooled.size(), opt_.max_centers, center_rng);
    HyperGrid grid = opt_.grid ? *opt_.grid : HyperGrid::for_points(pooled.points());
    cv_ = std::make_shared<const PooledCrossValidator>(
      pooled.points(), pooled.subset(idx).points(), std::move(grid), opt_.folds);
  }

  double evaluate(const IndexSplit& split, Rng& rng) const
  {
    const auto fit = cv_->fit(GroupedSplit::two_sample(split.first, split.second), rng);
    const Matrix& gram = cv_->gram(fit.sigma_index);
    return 2.0 * fit.mean_diff.dot(fit.theta) - fit.theta.dot(gram * fit.theta);
  }

private:
  Options opt_;
  std::shared_ptr<const PooledCrossValidator> cv_;
};

//! KLIEP KL-divergence estimate with sigma chosen by cross-validation on
//! every split. Centers are redrawn from the first set of each split.
class KliepStatistic
{
public:
  struct Options
  {
    int folds = kDefaultFolds;
    KliepOptions kliep;
    std::vector<double> sigmas;
  };

  KliepStatistic() = default;
  explicit KliepStatistic(Options opt)
    : opt_(std::move(opt))
  {}

  void bind(const SampleSet& pooled)
  {
    sqdist_ = std::make_shared<const Matrix>(squared_distances(pooled.points(), pooled.points()));
    if (opt_.sigmas.empty()) {
      opt_.sigmas = default_kliep_sigmas(pooled.points());
    }
  }

  double evaluate(const IndexSplit& split, Rng& rng) const
  {
    const auto local = select_center_indices(static_cast<Index>(split.first.size()),
                                             opt_.kliep.max_centers, rng);
    std::vector<Index> centers;
    for (Index i : local) {
      centers.push_back(split.first[static_cast<std::size_t>(i)]);
    }
    Matrix num_sq(static_cast<Index>(split.first.size()), static_cast<Index>(centers.size()));
    Matrix den_sq(static_cast<Index>(split.second.size()), static_cast<Index>(centers.size()));
    for (std::size_t c = 0; c < centers.size(); ++c) {
      for (std::size_t i = 0; i < split.first.size(); ++i) {
        num_sq(static_cast<Index>(i), static_cast<Index>(c)) = (*sqdist_)(split.first[i], centers[c]);
      }
      for (std::size_t i = 0; i < split.second.size(); ++i) {
        den_sq(static_cast<Index>(i), static_cast<Index>(c)) = (*sqdist_)(split.second[i], centers[c]);
      }
    }
    std::vector<Matrix> num_k;
    std::vector<Vector> den_m;
    for (double s : opt_.sigmas) {
      num_k.push_back(gaussian_from_sqdist(num_sq, s));
      den_m.push_back(gaussian_from_sqdist(den_sq, s).colwise().mean().transpose());
    }
    const auto [report, sol] = kliep_cv_select(opt_.sigmas, num_k, den_m, local, opt_.folds, opt_.kliep, rng);
    const Vector w = num_k[report.selected] * sol.alpha;
    double s = 0.0;
    for (Index i = 0; i < w.size(); ++i) {
      s += std::log(std::max(w[i], detail::kRatioFloor));
    }
    return s / static_cast<double>(w.size());
  }

private:
  Options opt_;
  std::shared_ptr<const Matrix> sqdist_;
};

struct TestResult
{
  double observed_stat = 0.0;
  std::vector<double> permuted_stats;
  double p_value = 1.0;
  bool reject = false;
  double alpha = 0.05;
};

struct PermutationOptions
{
  int permutations = 100;
  double alpha = 0.05;
  std::uint64_t seed = 0;
};

//! (1 + #{permuted >= observed}) / (1 + #permutations).
inline double
permutation_p_value(double observed, const std::vector<double>& permuted)
{
  std::size_t count = 0;
  for (double v : permuted) {
    if (v >= observed) {
      ++count;
    }
  }
  return static_cast<double>(1 + count) / static_cast<double>(1 + permuted.size());
}

//! Replicate r (0 = observed data, 1..P = permutations) draws everything,
//! including the statistic's internal fold shuffles, from the stream
//! derive_seed(seed, {r}); results do not depend on evaluation order.
template<PooledStatistic S>
TestResult
permutation_test(const SampleSet& x, const SampleSet& x_prime, S& statistic,
                 const PermutationOptions& opt)
{
  require_same_dim("permutation_test", x.dim(), x_prime.dim());
  if (opt.permutations < 1) {
    throw InvalidArgument("permutation_test: need at least one permutation");
  }
  if (!(opt.alpha > 0.0 && opt.alpha < 1.0)) {
    throw InvalidArgument("permutation_test: alpha must lie in (0, 1)");
  }
  const auto pooled = SampleSet::concat(x, x_prime);
  statistic.bind(pooled);
  const auto n = static_cast<std::size_t>(x.size());
  const auto total = static_cast<Index>(pooled.size());

  const auto replicates = static_cast<std::size_t>(opt.permutations) + 1;
  std::vector<double> stats(replicates);
  parallel_for(replicates, [&](std::size_t r) {
    Rng rng(derive_seed(opt.seed, {static_cast<std::uint64_t>(r)}));
    IndexSplit split;
    std::vector<Index> order = index_range(0, total);
    if (r > 0) {
      rng.shuffle(order);
    }
    split.first.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n));
    split.second.assign(order.begin() + static_cast<std::ptrdiff_t>(n), order.end());
    try {
      stats[r] = statistic.evaluate(split, rng);
    } catch (const std::exception& e) {
      const std::string what = r == 0 ? std::string("observed data")
                                      : "permutation " + std::to_string(r);
      throw Error("permutation_test: statistic failed on " + what + ": " + e.what());
    }
  });

  TestResult out;
  out.alpha = opt.alpha;
  out.observed_stat = stats[0];
  out.permuted_stats.assign(stats.begin() + 1, stats.end());
  out.p_value = permutation_p_value(out.observed_stat, out.permuted_stats);
  out.reject = out.p_value <= opt.alpha;
  return out;
}

template<class Fn>
  requires std::invocable<Fn, const SampleSet&, const SampleSet&, Rng&>
TestResult
permutation_test(const SampleSet& x, const SampleSet& x_prime, Fn statistic,
                 const PermutationOptions& opt)
{
  CallableStatistic<Fn> stat(std::move(statistic));
  return permutation_test(x, x_prime, stat, opt);
}

} // namespace lsdd
