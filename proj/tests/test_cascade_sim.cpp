#include <cmath>
#include <vector>

#include "doctest.h"
#include "stats.hpp"

#include "trielab/cascade_sim.hpp"
#include "trielab/error.hpp"
#include "trielab/oracle.hpp"
#include "trielab/spectral_core.hpp"

using namespace trielab;
using trielab::testing::moments;

namespace {

EnvironmentModel iid() { return deterministic_env({{0.7, 0.3}, {0.7, 0.3}}); }
EnvironmentModel markov() { return deterministic_env({{0.9, 0.1}, {0.2, 0.8}}); }
EnvironmentModel uniform2() { return deterministic_env({{0.5, 0.5}, {0.5, 0.5}}); }
EnvironmentModel dirichlet11() { return dirichlet_env({{1, 1}, {1, 1}}); }

template <class F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return ErrorCode::ConfigError;
}

double total_mass(const LevelProfile& p) {
  double s = 0.0;
  for (const auto& boxes : p.per_type_boxes)
    for (double x : boxes) s += std::exp(-x);
  return s;
}

}  // namespace

TEST_CASE("simulate_occupancy: root below threshold") {
  RandomStream rng(1);
  for (const auto& env : {iid(), markov(), dirichlet11()}) {
    const TrieObservation o = simulate_occupancy(env, 1, 2, rng);
    CHECK(o.height == 0);
    CHECK(o.saturation == 0);
  }
  const TrieObservation o = simulate_occupancy(iid(), 4, 5, rng);
  CHECK(o.height == 0);
  CHECK(o.saturation == 0);
}

TEST_CASE("simulate_occupancy: two balls that separate at once") {
  int found = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    RandomStream rng(seed);
    const TrieObservation o = simulate_occupancy(uniform2(), 2, 2, rng);
    if (o.height == 1) {
      CHECK(o.saturation == 1);
      ++found;
    }
  }
  // each seed separates at generation 1 with probability 1/2
  CHECK(found > 50);
}

TEST_CASE("simulate_occupancy: j = 1 has no height") {
  RandomStream rng(1);
  CHECK(code_of([&] { simulate_occupancy(iid(), 10, 1, rng); }) == ErrorCode::HeightUndefined);
}

TEST_CASE("simulate_occupancy: depth cap") {
  RandomStream rng(1);
  SimulationOptions tight;
  tight.depth_cap = 3;
  CHECK(code_of([&] { simulate_occupancy(iid(), 100000, 2, rng, tight); }) == ErrorCode::DepthCapExceeded);
}

TEST_CASE("simulate_saturation examples") {
  RandomStream rng(3);
  for (int j = 1; j <= 4; ++j) CHECK(simulate_saturation(iid(), static_cast<std::uint64_t>(j - 1 + (j == 1)), j, rng).saturation == (j == 1 ? 1 : 0));
  const auto golden = deterministic_env({{0.5, 0.5}, {1.0, 0.0}});
  for (int t = 0; t < 20; ++t) CHECK(simulate_saturation(golden, 1, 1, rng).saturation == 1);
}

TEST_CASE("saturation from both simulators agrees on a shared seed") {
  for (const auto& env : {iid(), markov(), dirichlet11()})
    for (std::uint64_t seed = 0; seed < 30; ++seed)
      for (int j : {2, 3}) {
        RandomStream a(seed), b(seed);
        const TrieObservation dfs = simulate_occupancy(env, 5000, j, a);
        const TrieObservation bfs = simulate_saturation(env, 5000, j, b);
        CHECK(dfs.saturation == bfs.saturation);
        CHECK(dfs.saturation <= dfs.height);
      }
}

TEST_CASE("height is nonincreasing in j on one realized cascade") {
  for (const auto& env : {iid(), markov(), dirichlet11()})
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      int prev = 1 << 30;
      for (int j = 2; j <= 8; ++j) {
        RandomStream rng(seed);
        const int h = simulate_occupancy(env, 20000, j, rng).height;
        CHECK(h <= prev);
        prev = h;
      }
    }
}

TEST_CASE("height is nondecreasing in m when balls are added to one cascade") {
  for (const auto& env : {markov(), dirichlet11()})
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      RandomStream rng(seed);
      const auto words = oracle::sample_words(env, 300, 60, rng);
      int prev = 0;
      for (std::size_t m = 1; m <= words.words.size(); m += 13) {
        oracle::WordSet first{{words.words.begin(), words.words.begin() + static_cast<std::ptrdiff_t>(m)},
                              words.support};
        const int h = oracle::brute_force_trie(first, 2).height;
        CHECK(h >= prev);
        prev = h;
      }
    }
}

TEST_CASE("power regime threshold and dispatch") {
  CHECK(power_regime_threshold(4, 0.5) == 2);
  CHECK(power_regime_threshold(1u << 20, 0.5) == 1024);
  CHECK(power_regime_threshold(2, 0.5) == 2);
  CHECK(power_regime_threshold(10, 0.5) == 4);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    RandomStream a(seed), b(seed);
    const TrieObservation p = simulate_power_regime(uniform2(), 4, 0.5, a);
    const TrieObservation o = simulate_occupancy(uniform2(), 4, 2, b);
    CHECK(p.j == 2);
    CHECK(p.height == o.height);
    CHECK(p.saturation == o.saturation);
  }
  RandomStream rng(0);
  CHECK(code_of([&] { simulate_power_regime(dirichlet11(), 100, 0.5, rng); }) == ErrorCode::OutsideRegime);
}

TEST_CASE("enumerate_level: i.i.d. extremes are pure-letter words") {
  RandomStream rng(0);
  const LevelProfile p = enumerate_level(iid(), 10, {1.0}, {}, 1u << 20, rng);
  CHECK_FALSE(p.truncated);
  CHECK(p.max_log_size == doctest::Approx(-10 * std::log(0.7)).epsilon(1e-13));
  CHECK(p.min_log_size == doctest::Approx(-10 * std::log(0.3)).epsilon(1e-13));
}

TEST_CASE("enumerate_level: mass partition and unit Laplace at one") {
  const std::vector<EnvironmentModel> envs{iid(), markov(), dirichlet11(),
                                           deterministic_env({{0.5, 0.5}, {1.0, 0.0}}),
                                           mixture_env({0.5, 0.5}, {{{0.5, 0.5}, {0.5, 0.5}}, {{0.9, 0.1}, {0.9, 0.1}}})};
  RandomStream rng(9);
  for (const auto& env : envs)
    for (int n : {0, 1, 5, 12}) {
      const LevelProfile p = enumerate_level(env, n, {1.0}, {}, 1u << 13, rng);
      REQUIRE_FALSE(p.truncated);
      CHECK(std::abs(total_mass(p) - 1.0) <= 1e-9);
      double lap = 0.0;
      for (double x : p.laplace[0].per_type) lap += x;
      CHECK(std::abs(lap - 1.0) <= 1e-9);
    }
}

TEST_CASE("enumerate_level: Laplace vector equals the first row of A(theta)^n") {
  RandomStream rng(0);
  for (const auto& env : {markov(), iid(), deterministic_env({{0.5, 0.5}, {1.0, 0.0}})})
    for (double theta : {-1.0, 0.5, 2.0})
      for (int n = 0; n <= 10; ++n) {
        const LevelProfile p = enumerate_level(env, n, {theta}, {}, 1u << 12, rng);
        const auto expected = oracle::first_row_of_power(oracle::tilted(env, theta), n);
        const auto by_words = oracle::laplace_by_words(env.mean_matrix(), n, theta);
        for (std::size_t i = 0; i < env.K(); ++i) {
          CHECK(p.laplace[0].per_type[i] == doctest::Approx(expected[i]).epsilon(1e-9));
          CHECK(by_words[i] == doctest::Approx(expected[i]).epsilon(1e-9));
        }
      }
}

TEST_CASE("enumerate_level: window count exponent") {
  RandomStream rng(0);
  const int n = 14;
  const LevelProfile p = enumerate_level(iid(), n, {}, {{2.0, 1.0, 0.0}}, 1u << 15, rng);
  REQUIRE(p.window_counts.size() == 1);
  const double rate = std::log(static_cast<double>(p.window_counts[0].count)) / n;
  CHECK(std::abs(rate - shape_values(iid(), 2.0).psi) <= 0.15);
}

TEST_CASE("enumerate_level: truncated extremes match full enumeration") {
  RandomStream rng(0);
  for (const auto& env : {markov(), iid(), deterministic_env({{0.5, 0.5}, {1.0, 0.0}})}) {
    const LevelProfile full = enumerate_level(env, 11, {}, {}, 1u << 12, rng);
    const LevelProfile cut = enumerate_level(env, 11, {}, {}, 16, rng);
    CHECK(cut.truncated);
    CHECK(cut.min_log_size == doctest::Approx(full.min_log_size).epsilon(1e-12));
    CHECK(cut.max_log_size == doctest::Approx(full.max_log_size).epsilon(1e-12));
  }
  CHECK(code_of([&] { enumerate_level(dirichlet11(), 11, {}, {}, 16, rng); }) == ErrorCode::CapExceeded);
}

TEST_CASE("enumerate_level: extremes approach the cycle-mean slopes") {
  // smallest cycle 1->1 (0.01) and largest cycle 2->2 (0.95) are both off the
  // root type, so the finite-n error is a start-up cost that decays like 1/n
  const auto env = deterministic_env({{0.3, 0.35, 0.35}, {0.49, 0.01, 0.5}, {0.025, 0.025, 0.95}});
  const ConstantsReport c = asymptotic_constants(env);
  RandomStream rng(0);
  double prev_small = 1e300, prev_large = 1e300;
  for (int n : {8, 16}) {
    const LevelProfile p = enumerate_level(env, n, {}, {}, 1, rng);
    const double small = std::abs(p.min_log_size / n - 1.0 / c.c_star_lower);
    const double large = std::abs(p.max_log_size / n - 1.0 / c.c_star_upper);
    CHECK(small < prev_small);
    CHECK(large < prev_large);
    prev_small = small;
    prev_large = large;
  }
  CHECK(1.0 / c.c_star_lower == doctest::Approx(-std::log(0.01)).epsilon(1e-4));
  CHECK(1.0 / c.c_star_upper == doctest::Approx(-std::log(0.95)).epsilon(1e-4));
}

TEST_CASE("enumerate_level: martingale has unit mean away from theta = 1") {
  // At theta = 1 the Dirichlet(1,1) martingale is identically 1 (sizes sum to
  // one and v is flat); theta = 0.5 exercises a nondegenerate case.
  for (int n : {4, 8}) {
    std::vector<double> w1, wh;
    for (std::uint64_t r = 0; r < 1000; ++r) {
      RandomStream rng(derive_seed({77, static_cast<std::uint64_t>(n), r}));
      const LevelProfile p = enumerate_level(dirichlet11(), n, {1.0, 0.5}, {}, 1u << 12, rng);
      w1.push_back(p.martingale[0].value);
      wh.push_back(p.martingale[1].value);
    }
    const auto m1 = moments(w1);
    CHECK(std::abs(m1.mean - 1.0) <= 1e-12);
    const auto mh = moments(wh);
    CHECK(std::abs(mh.mean - 1.0) <= 3 * mh.stderr_);
  }
}

TEST_CASE("size_biased_walk examples") {
  RandomStream rng(5);
  for (int t = 0; t < 20; ++t) {
    const WalkResult w = size_biased_walk(uniform2(), 5, rng);
    CHECK(w.log_size == doctest::Approx(5 * std::log(2.0)).epsilon(1e-14));
    CHECK(w.types.size() == 6);
  }
  const int n = 100000;
  int big = 0;
  for (int t = 0; t < n; ++t)
    if (std::abs(size_biased_walk(iid(), 1, rng).log_size + std::log(0.7)) < 1e-12) ++big;
  CHECK(std::abs(big / double(n) - 0.7) <= 4 * std::sqrt(0.21 / n));

  std::vector<double> rates;
  for (int t = 0; t < 4000; ++t) rates.push_back(size_biased_walk(iid(), 60, rng).log_size / 60);
  const auto m = moments(rates);
  CHECK(std::abs(m.mean - 0.610864) <= 3 * m.stderr_ + 1e-6);
}

TEST_CASE("coupon_time examples") {
  RandomStream rng(8);
  CHECK(coupon_time(iid(), 0, 5, rng).throws == 5);
  std::vector<double> t;
  for (int r = 0; r < 10000; ++r) t.push_back(static_cast<double>(coupon_time(uniform2(), 1, 1, rng).throws));
  const auto m = moments(t);
  CHECK(std::abs(m.mean - 3.0) <= 4 * m.stderr_);

  std::vector<double> rates;
  for (int r = 0; r < 100; ++r) {
    const CouponOutcome c = coupon_time(iid(), 8, 1, rng);
    CHECK(c.throws >= 256);
    rates.push_back(std::log(static_cast<double>(c.throws)) / 8);
  }
  std::sort(rates.begin(), rates.end());
  const double median = 0.5 * (rates[49] + rates[50]);
  CHECK(std::abs(median + std::log(0.3)) <= 0.25 * -std::log(0.3));

  const auto golden = deterministic_env({{0.5, 0.5}, {1.0, 0.0}});
  for (int r = 0; r < 20; ++r) CHECK(coupon_time(golden, 6, 2, rng).throws >= 2 * positive_box_count(golden, 6));
  CHECK(positive_box_count(golden, 6) == 21);
  CHECK(code_of([&] { coupon_time(iid(), 21, 1, rng); }) == ErrorCode::CapExceeded);
}
