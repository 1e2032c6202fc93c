#include <cmath>
#include <vector>

#include "doctest.h"

#include "trielab/env_models.hpp"
#include "trielab/error.hpp"

using namespace trielab;

namespace {

SupportPattern pattern(std::vector<std::vector<bool>> cells) {
  SupportPattern s(cells.size());
  for (std::size_t i = 0; i < cells.size(); ++i)
    for (std::size_t j = 0; j < cells.size(); ++j) s.set(i, j, cells[i][j]);
  return s;
}

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

EnvironmentModel mixture_example() {
  return mixture_env({0.5, 0.5}, {{{0.5, 0.5}, {0.5, 0.5}}, {{0.9, 0.1}, {0.9, 0.1}}});
}

}  // namespace

TEST_CASE("make_env: deterministic rows give the whole real line") {
  const auto env = deterministic_env({{0.7, 0.3}, {0.7, 0.3}});
  CHECK(env.kind() == EnvKind::Deterministic);
  CHECK(std::isinf(env.domain().lo));
  CHECK(std::isinf(env.domain().hi));
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j) CHECK(env.supported(i, j));
}

TEST_CASE("make_env: Dirichlet domain starts at minus the smallest concentration") {
  const auto env = dirichlet_env({{1, 1}, {1, 1}});
  CHECK(env.domain().lo == doctest::Approx(-1.0));
  CHECK(std::isinf(env.domain().hi));
  const auto skewed = dirichlet_env({{2.5, 0.4}, {3, 1}});
  CHECK(skewed.domain().lo == doctest::Approx(-0.4));
}

TEST_CASE("make_env: mixture of two matrices") {
  const auto env = mixture_example();
  CHECK(env.kind() == EnvKind::FiniteMixture);
  CHECK(std::isinf(env.domain().lo));
}

TEST_CASE("make_env: validation errors") {
  CHECK(code_of([] { deterministic_env({{0.7, 0.2}, {0.5, 0.5}}); }) == ErrorCode::BadRows);
  CHECK(code_of([] { deterministic_env({{1.0}}); }) == ErrorCode::BadRows);
  CHECK(code_of([] { dirichlet_env({{1, -1}, {1, 1}}); }) == ErrorCode::BadAlpha);
  CHECK(code_of([] {
          mixture_env({0.5, 0.5}, {{{0.5, 0.5}, {0.5, 0.5}}, {{1.0, 0.0}, {0.5, 0.5}}});
        }) == ErrorCode::BadSupport);
  CHECK(code_of([] { mixture_env({0.3, 0.3}, {{{0.5, 0.5}, {0.5, 0.5}}, {{0.9, 0.1}, {0.9, 0.1}}}); }) ==
        ErrorCode::BadRows);
  CHECK(code_of([] { deterministic_env({{0, 1}, {1, 0}}); }) == ErrorCode::NotRegular);
}

TEST_CASE("laplace_entry examples") {
  const auto dir = dirichlet_env({{1, 1}, {1, 1}});
  CHECK(dir.laplace_entry(0, 0, 2.0) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  const auto det = deterministic_env({{0.7, 0.3}, {0.7, 0.3}});
  CHECK(det.laplace_entry(0, 0, -1.0) == doctest::Approx(1.0 / 0.7).epsilon(1e-12));
  CHECK(mixture_example().laplace_entry(0, 0, 2.0) == doctest::Approx(0.53).epsilon(1e-12));
  CHECK(code_of([&] { dir.laplace_entry(0, 0, -1.0); }) == ErrorCode::ThetaOutOfDomain);
}

TEST_CASE("laplace_entry at zero is the support indicator") {
  const auto partial = deterministic_env({{0.5, 0.5}, {1.0, 0.0}});
  CHECK(partial.laplace_entry(0, 0, 0.0) == 1.0);
  CHECK(partial.laplace_entry(1, 0, 0.0) == 1.0);
  CHECK(partial.laplace_entry(1, 1, 0.0) == 0.0);
  const auto dir = dirichlet_env({{2, 3}, {1, 0}});
  CHECK(dir.laplace_entry(1, 1, 0.0) == 0.0);
  CHECK(dir.laplace_entry(0, 1, 0.0) == doctest::Approx(1.0));
  CHECK(mixture_example().laplace_entry(1, 1, 0.0) == doctest::Approx(1.0));
}

TEST_CASE("laplace_entry is strictly decreasing in theta") {
  const std::vector<EnvironmentModel> envs{deterministic_env({{0.9, 0.1}, {0.2, 0.8}}),
                                           dirichlet_env({{1, 2}, {0.5, 0.5}}), mixture_example()};
  for (const auto& env : envs)
    for (std::size_t i = 0; i < 2; ++i)
      for (std::size_t j = 0; j < 2; ++j) {
        const double a = env.laplace_entry(i, j, -0.3), b = env.laplace_entry(i, j, 0.7),
                     c = env.laplace_entry(i, j, 2.5);
        CHECK(a > b);
        CHECK(b > c);
      }
}

TEST_CASE("dlog_laplace_entry matches finite differences") {
  const std::vector<EnvironmentModel> envs{deterministic_env({{0.9, 0.1}, {0.2, 0.8}}),
                                           dirichlet_env({{1, 2}, {0.5, 3}}), mixture_example()};
  for (const auto& env : envs)
    for (double theta : {-0.2, 0.5, 3.0}) {
      const double h = 1e-6;
      const double fd = (env.log_laplace_entry(0, 1, theta + h) - env.log_laplace_entry(0, 1, theta - h)) / (2 * h);
      CHECK(env.dlog_laplace_entry(0, 1, theta) == doctest::Approx(fd).epsilon(1e-6));
    }
}

TEST_CASE("regularity examples") {
  const auto full = regularity(pattern({{true, true}, {true, true}}));
  CHECK(full.irreducible);
  CHECK(full.aperiodic);
  CHECK(full.positive_regular);
  CHECK(full.r == 1);

  const auto cycle = regularity(pattern({{false, true}, {true, false}}));
  CHECK(cycle.irreducible);
  CHECK_FALSE(cycle.aperiodic);
  CHECK_FALSE(cycle.positive_regular);

  const auto golden = regularity(pattern({{true, true}, {true, false}}));
  CHECK(golden.positive_regular);
  CHECK(golden.r == 2);

  const auto reducible = regularity(pattern({{true, true}, {false, true}}));
  CHECK_FALSE(reducible.irreducible);
  CHECK_FALSE(reducible.positive_regular);
}

TEST_CASE("regularity: Wielandt extreme needs (K-1)^2 + 1 steps") {
  // 0->1->2->3->0 plus 3->1: primitive with exponent (K-1)^2 + 1 = 10.
  auto s = SupportPattern(4);
  s.set(0, 1, true);
  s.set(1, 2, true);
  s.set(2, 3, true);
  s.set(3, 0, true);
  s.set(3, 1, true);
  const auto rep = regularity(s);
  CHECK(rep.positive_regular);
  CHECK(rep.r == 10);
}

TEST_CASE("sample_row examples") {
  RandomStream rng(7);
  std::vector<double> row(2);
  const auto det = deterministic_env({{0.7, 0.3}, {0.7, 0.3}});
  for (int t = 0; t < 10; ++t) {
    det.sample_row(0, rng, row);
    CHECK(row[0] == 0.7);
    CHECK(row[1] == 0.3);
  }

  const int n = 100000;
  const auto dir = dirichlet_env({{1, 1}, {1, 1}});
  double sum = 0.0, sq = 0.0;
  for (int t = 0; t < n; ++t) {
    dir.sample_row(0, rng, row);
    CHECK(std::abs(row[0] + row[1] - 1.0) <= 1e-12);
    sum += row[0];
    sq += row[0] * row[0];
  }
  const double mean = sum / n, se = std::sqrt((sq / n - mean * mean) / n);
  CHECK(std::abs(mean - 0.5) <= 3 * se);

  const auto mix = mixture_example();
  int hits = 0;
  for (int t = 0; t < n; ++t) {
    mix.sample_row(0, rng, row);
    if (row[0] == 0.9) ++hits;
  }
  CHECK(std::abs(hits / double(n) - 0.5) <= 3 * std::sqrt(0.25 / n));
}

TEST_CASE("sample_row keeps the support pattern") {
  RandomStream rng(11);
  std::vector<double> row(3);
  const auto dir = dirichlet_env({{1, 0, 2}, {1, 1, 1}, {0.5, 0.5, 0}});
  for (int t = 0; t < 1000; ++t) {
    dir.sample_row(0, rng, row);
    CHECK(row[1] == 0.0);
    dir.sample_row(2, rng, row);
    CHECK(row[2] == 0.0);
  }
}

TEST_CASE("laplace_entry at one is the mean row entry") {
  const std::vector<EnvironmentModel> envs{dirichlet_env({{1, 2}, {0.5, 0.7}}), mixture_example(),
                                           deterministic_env({{0.9, 0.1}, {0.2, 0.8}})};
  RandomStream rng(3);
  std::vector<double> row(2);
  const int n = 100000;
  for (const auto& env : envs)
    for (std::size_t i = 0; i < 2; ++i) {
      double sum = 0.0, sq = 0.0;
      for (int t = 0; t < n; ++t) {
        env.sample_row(i, rng, row);
        sum += row[1];
        sq += row[1] * row[1];
      }
      const double mean = sum / n, se = std::sqrt(std::max(0.0, sq / n - mean * mean) / n);
      CHECK(std::abs(mean - env.laplace_entry(i, 1, 1.0)) <= 4 * se + 1e-9);
    }
}

TEST_CASE("environment file round trip is bit identical") {
  const std::vector<EnvironmentModel> envs{deterministic_env({{0.1, 0.9}, {1.0 / 3.0, 2.0 / 3.0}}),
                                           dirichlet_env({{0.1, 7.25}, {1e-3, 0}}), mixture_example()};
  for (const auto& env : envs) {
    const std::string text = serialize_env(env);
    const auto back = make_env(parse_env_text(text));
    CHECK(back.spec().rows == env.spec().rows);
    CHECK(back.spec().alpha == env.spec().alpha);
    CHECK(back.spec().weights == env.spec().weights);
    CHECK(back.spec().components == env.spec().components);
    CHECK(serialize_env(back) == text);
  }
}

TEST_CASE("environment file parse errors carry line numbers") {
  auto message = [](const std::string& text) {
    try {
      parse_env_text(text);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::ParseError);
      return std::string(e.what());
    }
    return std::string("no error");
  };
  CHECK(message("[env]\nkind = deterministic\nK = 2\nrow.1 = 0.5 0.5\nrow.1 = 0.5 0.5\n").find("line 5") == 0);
  CHECK(message("[env]\nkind = deterministic\nK = 2\nrow.1 = 0.5\nrow.2 = 0.5 0.5\n").find("line 4") == 0);
  CHECK(message("[env]\nkind = deterministic\nK = 2\nrow.1 = 0.5 x\nrow.2 = 0.5 0.5\n").find("line 4") == 0);
  CHECK(message("[env]\nkind = weird\nK = 2\n").find("line 2") == 0);
  CHECK(message("[env]\nkind = deterministic\nK = 2\nrow.1 = 0.123456789012345678 0.5\nrow.2 = 0.5 0.5\n")
            .find("line 4") == 0);
  CHECK(message("kind = deterministic\n").find("line 1") == 0);
}

TEST_CASE("environment file with comments") {
  const auto spec = parse_env_text(
      "# two-state source\n[env]\nkind = mixture  # comment\nK = 2\nweights = 0.5 0.5\n"
      "comp.1.row.1 = 0.5 0.5\ncomp.1.row.2 = 0.5 0.5\ncomp.2.row.1 = 0.9 0.1\ncomp.2.row.2 = 0.9 0.1\n");
  const auto env = make_env(spec);
  CHECK(env.laplace_entry(0, 0, 2.0) == doctest::Approx(0.53));
}
