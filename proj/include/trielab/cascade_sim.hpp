#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "trielab/env_models.hpp"
#include "trielab/rng.hpp"

namespace trielab {

// Randomness model
// ----------------
// Every box of the K-ary tree owns a 64-bit key: the root key is drawn from
// the caller's stream and child_key() derives the rest. All randomness used at
// a box (its environment row, then the multinomial split of its balls) comes
// from a RandomStream seeded with that key. Two calls that draw the same root
// key therefore see the same realized cascade and, for equal ball counts at a
// box, the same split. That is what makes H monotone in j for a fixed seed.

/// Row of the box with this key (deterministic row, or a draw for random
/// environments). Consumes the head of the box's stream.
void node_row(const EnvironmentModel& env, std::uint64_t key, std::size_t type, std::span<double> out);

struct SimulationOptions {
  int depth_cap = 10000;
};

struct TrieObservation {
  std::uint64_t m = 0;
  int j = 0;
  int height = -1;      // H_{m,j}; -1 when not measured
  int saturation = -1;  // G_{m,j}
  std::uint64_t expanded_nodes = 0;
  int max_depth_reached = 0;
};

/// Depth-first occupancy simulation measuring H_{m,j} and G_{m,j}, j >= 2.
TrieObservation simulate_occupancy(const EnvironmentModel& env, std::uint64_t m, int j, RandomStream& rng,
                                   const SimulationOptions& options = {});

/// Level-by-level variant measuring G_{m,j} only; valid for j = 1.
TrieObservation simulate_saturation(const EnvironmentModel& env, std::uint64_t m, int j, RandomStream& rng,
                                    const SimulationOptions& options = {});

/// j = max(2, ceil(m^alpha)).
int power_regime_threshold(std::uint64_t m, double alpha);

/// simulate_occupancy with j = power_regime_threshold(m, alpha); deterministic
/// environments only.
TrieObservation simulate_power_regime(const EnvironmentModel& env, std::uint64_t m, double alpha,
                                      RandomStream& rng, const SimulationOptions& options = {});

/// Box-count window: boxes whose size lies in [e^{n d - a}, e^{n d - b}],
/// d = rho'(theta)/rho(theta), a > b.
struct Window {
  double theta = 0.0;
  double a = 1.0;
  double b = 0.0;
};

struct LaplaceValue {
  double theta = 0.0;
  std::vector<double> per_type;  // L_i^{(n)}(theta)
};

struct WindowCount {
  Window window;
  std::uint64_t count = 0;
};

struct MartingaleValue {
  double theta = 0.0;
  double value = 0.0;  // W^n(theta) from type 0
};

/// Box sizes at generation n. Log-sizes are -ln(size), so they are
/// nonnegative and larger for smaller boxes.
struct LevelProfile {
  int n = 0;
  std::vector<std::vector<double>> per_type_boxes;
  std::vector<LaplaceValue> laplace;
  double min_log_size = 0.0;  // log-size of the smallest box
  double max_log_size = 0.0;  // log-size of the largest box
  std::vector<WindowCount> window_counts;
  std::vector<MartingaleValue> martingale;
  bool truncated = false;
};

/// Number of positive-size boxes at generation n (exact, as a double).
double positive_box_count(const EnvironmentModel& env, int n);

/// Enumerates every positive box at generation n, or only the extremes when
/// the count exceeds `cap` (deterministic environments; random ones then
/// raise CapExceeded).
LevelProfile enumerate_level(const EnvironmentModel& env, int n, const std::vector<double>& thetas,
                             const std::vector<Window>& windows, std::uint64_t cap, RandomStream& rng);

struct WalkResult {
  std::vector<std::size_t> types;  // n + 1 entries, starting at type 0
  double log_size = 0.0;
};

/// Follows one ball for n generations; the landing box is a size-biased pick.
WalkResult size_biased_walk(const EnvironmentModel& env, int n, RandomStream& rng);

struct CouponOutcome {
  int n = 0;
  int j = 0;
  std::uint64_t throws = 0;
};

/// Balls thrown one at a time until every positive generation-n box holds at
/// least j balls.
CouponOutcome coupon_time(const EnvironmentModel& env, int n, int j, RandomStream& rng);

}  // namespace trielab
