#include <lsdd/random.hpp>

#include <catch_amalgamated.hpp>

#include <algorithm>
#include <numeric>
#include <set>
#include <vector>

using namespace lsdd;

TEST_CASE("splitmix64 reference values")
{
  // First outputs of the reference SplitMix64 generator seeded with 0.
  CHECK(splitmix64(0) == 0xe220a8397b1dcdafULL);
  CHECK(splitmix64(0x9e3779b97f4a7c15ULL) == 0x6e789e6aa1b965f4ULL);
}

TEST_CASE("derive_seed separates streams")
{
  std::set<std::uint64_t> seen;
  for (std::uint64_t a = 0; a < 20; ++a) {
    for (std::uint64_t b = 0; b < 20; ++b) {
      seen.insert(derive_seed(7, {a, b}));
    }
  }
  CHECK(seen.size() == 400);
  CHECK(derive_seed(7, {1, 2}) != derive_seed(7, {2, 1}));
  CHECK(derive_seed(7, {1}) != derive_seed(8, {1}));
  CHECK(derive_seed(7, {1, 2}) == derive_seed(7, {1, 2}));
}

TEST_CASE("Rng is deterministic per seed")
{
  Rng a(42);
  Rng b(42);
  Rng c(43);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const double x = a.normal();
    CHECK(x == b.normal());
    differs = differs || x != c.normal();
  }
  CHECK(differs);
}

TEST_CASE("uniform and normal moments")
{
  Rng rng(1);
  const int n = 200000;
  double su = 0.0;
  double sn = 0.0;
  double sn2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    su += u;
    const double z = rng.normal();
    sn += z;
    sn2 += z * z;
  }
  CHECK(su / n == Catch::Approx(0.5).margin(0.005));
  CHECK(sn / n == Catch::Approx(0.0).margin(0.01));
  CHECK(sn2 / n == Catch::Approx(1.0).margin(0.015));
}

TEST_CASE("below is in range and roughly uniform")
{
  Rng rng(2);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 70000; ++i) {
    const auto v = rng.below(7);
    REQUIRE(v < 7);
    ++counts[v];
  }
  for (int c : counts) {
    CHECK(c == Catch::Approx(10000).margin(500));
  }
  CHECK(rng.below(1) == 0);
  CHECK(rng.below(0) == 0);
}

TEST_CASE("shuffle permutes")
{
  Rng rng(3);
  std::vector<int> v(50);
  std::iota(v.begin(), v.end(), 0);
  auto w = v;
  rng.shuffle(w);
  CHECK(w != v);
  std::sort(w.begin(), w.end());
  CHECK(w == v);
}
