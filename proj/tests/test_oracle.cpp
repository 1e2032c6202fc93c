#include <cmath>
#include <utility>
#include <vector>

#include "doctest.h"
#include "stats.hpp"

#include "trielab/cascade_sim.hpp"
#include "trielab/error.hpp"
#include "trielab/oracle.hpp"
#include "trielab/spectral_core.hpp"

using namespace trielab;
using namespace trielab::oracle;

namespace {

SupportPattern full2() { return SupportPattern(2, true); }

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

}  // namespace

TEST_CASE("brute_force_trie examples") {
  const TrieShape a = brute_force_trie({{{0, 0}, {0, 1}}, full2()}, 2);
  CHECK(a.height == 2);
  CHECK(a.saturation == 1);

  const TrieShape b = brute_force_trie({{{0}, {1}}, full2()}, 2);
  CHECK(b.height == 1);
  CHECK(b.saturation == 1);

  CHECK(code_of([] { brute_force_trie({{{0, 1, 1}, {0, 1, 1}, {0, 1, 1}}, full2()}, 2); }) ==
        ErrorCode::LengthTooShort);

  // fewer than j words: nothing to split
  const TrieShape c = brute_force_trie({{{0, 1}}, full2()}, 2);
  CHECK(c.height == 0);
  CHECK(c.saturation == 0);

  // a forbidden transition never counts as an empty box
  SupportPattern golden(2, true);
  golden.set(1, 1, false);
  const TrieShape d = brute_force_trie({{{1, 0, 0}, {1, 0, 1}, {0, 1, 0}, {0, 0, 1}}, golden}, 2);
  CHECK(d.height == 3);
  CHECK(d.saturation == 2);
}

TEST_CASE("grid_sup examples") {
  const GridMax q = grid_sup([](double mu) { return -(mu - 1) * (mu - 1); }, -5, 5, 10000);
  CHECK(std::abs(q.argmax - 1.0) <= 1e-3);
  CHECK(std::abs(q.max) <= 1e-6);

  const auto uniform = deterministic_env({{0.5, 0.5}, {0.5, 0.5}});
  const double z = -std::log(2.0);
  const GridMax r =
      grid_sup([&](double mu) { return mu * z - log_perron_root(tilted(uniform, mu + 1)); }, -40, 40, 80000);
  CHECK(std::abs(r.max) <= 1e-6);

  // f has one zero on [0.1, 20]; maximizing -|f| locates it
  const auto f = [](double t) { return std::log(2.0) - std::log1p(t) + t / (1 + t); };
  const GridMax root = grid_sup([&](double t) { return -std::abs(f(t)); }, 0.1, 20, 20000);
  CHECK(std::abs(root.argmax - 3.3111) <= 1e-3);
  CHECK(f(root.argmax - 1e-3) > 0);
  CHECK(f(root.argmax + 1e-3) < 0);
}

TEST_CASE("grid_sup agrees with the bisection roots") {
  const auto env = dirichlet_env({{1, 1}, {1, 1}});
  const ConstantsReport c = asymptotic_constants(env);
  const auto f = [&](double t) { return -std::abs(shape_values(env, t).f); };
  CHECK(std::abs(grid_sup(f, 0.1, 20, 4000).argmax - c.theta_star_upper) <= 1e-3);
  CHECK(std::abs(grid_sup(f, -0.99, -0.1, 4000).argmax - c.theta_star_lower) <= 1e-3);
}

TEST_CASE("sample_words letter frequencies") {
  RandomStream rng(11);
  const std::size_t m = 100000;
  const WordSet w = sample_words(deterministic_env({{0.7, 0.3}, {0.7, 0.3}}), m, 1, rng);
  double first = 0;
  for (const auto& word : w.words) {
    REQUIRE(word.size() == 1);
    if (word[0] == 0) first += 1;
  }
  CHECK(std::abs(first / m - 0.7) <= 4 * std::sqrt(0.21 / m));

  const WordSet v = sample_words(deterministic_env({{0.9, 0.1}, {0.2, 0.8}}), m, 2, rng);
  double hits = 0;
  for (const auto& word : v.words)
    if (word[0] == 0 && word[1] == 1) hits += 1;
  CHECK(std::abs(hits / m - 0.09) <= 4 * std::sqrt(0.09 * 0.91 / m));
}

TEST_CASE("sample_words in a random environment respects support") {
  const auto golden = dirichlet_env({{1, 1}, {1, 0}});
  RandomStream rng(4);
  const WordSet w = sample_words(golden, 500, 12, rng);
  for (const auto& word : w.words) {
    std::size_t prev = 0;
    for (std::size_t t : word) {
      CHECK(golden.support()(prev, t));
      prev = t;
    }
  }
}

TEST_CASE("log_perron_root against closed forms") {
  CHECK(log_perron_root(tilted(deterministic_env({{0.7, 0.3}, {0.7, 0.3}}), 2.0)) ==
        doctest::Approx(std::log(0.58)).epsilon(1e-12));
  CHECK(log_perron_root(tilted(dirichlet_env({{1, 1}, {1, 1}}), 1.0)) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("simulator and brute-force tries have the same law") {
  const auto env = deterministic_env({{0.7, 0.3}, {0.4, 0.6}});
  const int runs = 5000;
  std::vector<std::pair<int, int>> sim, brute;
  for (int r = 0; r < runs; ++r) {
    RandomStream a(derive_seed({1, static_cast<std::uint64_t>(r)}));
    const TrieObservation o = simulate_occupancy(env, 12, 2, a);
    sim.emplace_back(o.height, o.saturation);
    RandomStream b(derive_seed({2, static_cast<std::uint64_t>(r)}));
    const TrieShape t = brute_force_trie(sample_words(env, 12, 80, b), 2);
    brute.emplace_back(t.height, t.saturation);
  }
  const auto chi = trielab::testing::homogeneity(sim, brute);
  INFO("chi2 = " << chi.statistic << " dof = " << chi.dof);
  CHECK(chi.dof >= 3);
  CHECK(chi.p_value > 0.001);
}

TEST_CASE("random-environment simulator and brute force have the same law") {
  const auto env = dirichlet_env({{1, 1}, {1, 1}});
  const int runs = 3000;
  std::vector<std::pair<int, int>> sim, brute;
  for (int r = 0; r < runs; ++r) {
    RandomStream a(derive_seed({3, static_cast<std::uint64_t>(r)}));
    const TrieObservation o = simulate_occupancy(env, 10, 2, a);
    sim.emplace_back(o.height, o.saturation);
    RandomStream b(derive_seed({4, static_cast<std::uint64_t>(r)}));
    const TrieShape t = brute_force_trie(sample_words(env, 10, 80, b), 2);
    brute.emplace_back(t.height, t.saturation);
  }
  const auto chi = trielab::testing::homogeneity(sim, brute);
  INFO("chi2 = " << chi.statistic << " dof = " << chi.dof);
  CHECK(chi.p_value > 0.001);
}
