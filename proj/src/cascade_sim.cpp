#include "trielab/cascade_sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "trielab/error.hpp"
#include "trielab/spectral_core.hpp"

namespace trielab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Frame {
  std::uint64_t key;
  std::uint64_t count;
  std::uint32_t type;
  std::uint32_t depth;
};

// Draws the box's row and splits `count` balls over its supported children
// with sequential conditional binomials. counts[k] is 0 for unsupported k.
class Splitter {
 public:
  explicit Splitter(const EnvironmentModel& env) : env_(env), row_(env.K()), tail_(env.K() + 1) {}

  void split(std::uint64_t key, std::size_t type, std::uint64_t count, std::vector<std::uint64_t>& counts) {
    const std::size_t K = env_.K();
    RandomStream rng(key);
    env_.sample_row(type, rng, row_);
    tail_[K] = 0.0;
    for (std::size_t k = K; k-- > 0;) tail_[k] = tail_[k + 1] + (env_.supported(type, k) ? row_[k] : 0.0);
    counts.assign(K, 0);
    std::uint64_t left = count;
    std::size_t last = K;
    for (std::size_t k = K; k-- > 0;)
      if (env_.supported(type, k)) {
        last = k;
        break;
      }
    for (std::size_t k = 0; k < K && left > 0; ++k) {
      if (!env_.supported(type, k)) continue;
      if (k == last) {
        counts[k] = left;
        break;
      }
      const double p = tail_[k] > 0.0 ? std::clamp(row_[k] / tail_[k], 0.0, 1.0) : 0.0;
      std::uint64_t c = 0;
      if (p >= 1.0) c = left;
      else if (p > 0.0) c = std::binomial_distribution<std::uint64_t>(left, p)(rng);
      counts[k] = c;
      left -= c;
    }
  }

 private:
  const EnvironmentModel& env_;
  std::vector<double> row_;
  std::vector<double> tail_;
};

void require_depth(std::uint32_t depth, const SimulationOptions& options) {
  if (static_cast<int>(depth) >= options.depth_cap)
    throw Error(ErrorCode::DepthCapExceeded, "depth cap " + std::to_string(options.depth_cap) + " reached");
}

struct Box {
  double log_size;
  std::uint32_t type;
  std::uint64_t key;
};

std::vector<Box> level_boxes(const EnvironmentModel& env, int n, std::uint64_t root_key) {
  const std::size_t K = env.K();
  std::vector<Box> level{{0.0, 0, root_key}};
  std::vector<double> row(K);
  for (int g = 0; g < n; ++g) {
    std::vector<Box> next;
    next.reserve(level.size() * K);
    for (const Box& b : level) {
      node_row(env, b.key, b.type, row);
      for (std::size_t k = 0; k < K; ++k) {
        if (!env.supported(b.type, k) || !(row[k] > 0.0)) continue;
        next.push_back({b.log_size - std::log(row[k]), static_cast<std::uint32_t>(k), child_key(b.key, k)});
      }
    }
    level = std::move(next);
  }
  return level;
}

}  // namespace

void node_row(const EnvironmentModel& env, std::uint64_t key, std::size_t type, std::span<double> out) {
  RandomStream rng(key);
  env.sample_row(type, rng, out);
}

TrieObservation simulate_occupancy(const EnvironmentModel& env, std::uint64_t m, int j, RandomStream& rng,
                                   const SimulationOptions& options) {
  if (j < 2) throw Error(ErrorCode::HeightUndefined, "height needs j >= 2, got j = " + std::to_string(j));
  if (m < 1) throw Error(ErrorCode::ConfigError, "m must be at least 1");
  TrieObservation obs;
  obs.m = m;
  obs.j = j;
  const std::uint64_t root = rng();
  if (m < static_cast<std::uint64_t>(j)) {
    obs.height = 0;
    obs.saturation = 0;
    return obs;
  }

  const std::size_t K = env.K();
  const auto threshold = static_cast<std::uint64_t>(j);
  Splitter splitter(env);
  std::vector<std::uint64_t> counts;
  std::vector<Frame> stack{{root, m, 0, 0}};
  std::uint32_t deepest = 0;
  auto saturation = std::numeric_limits<std::uint32_t>::max();
  while (!stack.empty()) {
    const Frame f = stack.back();
    stack.pop_back();
    require_depth(f.depth, options);
    ++obs.expanded_nodes;
    deepest = std::max(deepest, f.depth);
    splitter.split(f.key, f.type, f.count, counts);
    for (std::size_t k = K; k-- > 0;) {
      if (!env.supported(f.type, k)) continue;
      if (counts[k] >= threshold)
        stack.push_back({child_key(f.key, k), counts[k], static_cast<std::uint32_t>(k), f.depth + 1});
      else
        saturation = std::min(saturation, f.depth + 1);
    }
  }
  obs.height = static_cast<int>(deepest) + 1;
  obs.saturation = static_cast<int>(saturation);
  obs.max_depth_reached = static_cast<int>(deepest);
  return obs;
}

TrieObservation simulate_saturation(const EnvironmentModel& env, std::uint64_t m, int j, RandomStream& rng,
                                    const SimulationOptions& options) {
  if (j < 1) throw Error(ErrorCode::ConfigError, "j must be at least 1");
  if (m < 1) throw Error(ErrorCode::ConfigError, "m must be at least 1");
  TrieObservation obs;
  obs.m = m;
  obs.j = j;
  const std::uint64_t root = rng();
  if (m < static_cast<std::uint64_t>(j)) {
    obs.saturation = 0;
    return obs;
  }

  const std::size_t K = env.K();
  const auto threshold = static_cast<std::uint64_t>(j);
  Splitter splitter(env);
  std::vector<std::uint64_t> counts;
  std::vector<Frame> level{{root, m, 0, 0}};
  std::vector<Frame> next;
  for (std::uint32_t depth = 0;; ++depth) {
    require_depth(depth, options);
    next.clear();
    for (const Frame& f : level) {
      ++obs.expanded_nodes;
      splitter.split(f.key, f.type, f.count, counts);
      for (std::size_t k = 0; k < K; ++k) {
        if (!env.supported(f.type, k)) continue;
        if (counts[k] < threshold) {
          obs.saturation = static_cast<int>(depth) + 1;
          obs.max_depth_reached = static_cast<int>(depth);
          return obs;
        }
        next.push_back({child_key(f.key, k), counts[k], static_cast<std::uint32_t>(k), depth + 1});
      }
    }
    level.swap(next);
  }
}

int power_regime_threshold(std::uint64_t m, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorCode::ConfigError, "alpha must lie in (0, 1)");
  const double x = std::pow(static_cast<double>(m), alpha);
  const double r = std::round(x);
  // m^alpha that is an integer up to rounding must not be bumped to the next one
  const double c = std::abs(x - r) <= 1e-9 * std::max(1.0, x) ? r : std::ceil(x);
  return std::max(2, static_cast<int>(c));
}

TrieObservation simulate_power_regime(const EnvironmentModel& env, std::uint64_t m, double alpha,
                                      RandomStream& rng, const SimulationOptions& options) {
  if (env.is_random())
    throw Error(ErrorCode::OutsideRegime, "the j = m^alpha regime is only covered for deterministic environments");
  return simulate_occupancy(env, m, power_regime_threshold(m, alpha), rng, options);
}

double positive_box_count(const EnvironmentModel& env, int n) {
  const std::size_t K = env.K();
  std::vector<double> c(K, 0.0), next(K);
  c[0] = 1.0;
  for (int g = 0; g < n; ++g) {
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t i = 0; i < K; ++i)
      for (std::size_t k = 0; k < K; ++k)
        if (env.supported(i, k)) next[k] += c[i];
    c.swap(next);
  }
  double total = 0.0;
  for (double x : c) total += x;
  return total;
}

LevelProfile enumerate_level(const EnvironmentModel& env, int n, const std::vector<double>& thetas,
                             const std::vector<Window>& windows, std::uint64_t cap, RandomStream& rng) {
  if (n < 0) throw Error(ErrorCode::ConfigError, "generation must be nonnegative");
  const std::size_t K = env.K();
  LevelProfile profile;
  profile.n = n;
  const std::uint64_t root = rng();

  if (positive_box_count(env, n) > static_cast<double>(cap)) {
    if (env.is_random())
      throw Error(ErrorCode::CapExceeded, "level " + std::to_string(n) + " has more than " + std::to_string(cap) +
                                              " boxes and the smallest box of a random cascade cannot be found "
                                              "without visiting all of them");
    // Extremes by dynamic programming over types: exact for a fixed matrix.
    const Matrix& p = env.mean_matrix();
    std::vector<double> lo(K, kInf), hi(K, -kInf);
    lo[0] = hi[0] = 0.0;
    for (int g = 0; g < n; ++g) {
      std::vector<double> nlo(K, kInf), nhi(K, -kInf);
      for (std::size_t i = 0; i < K; ++i) {
        if (lo[i] == kInf) continue;
        for (std::size_t k = 0; k < K; ++k) {
          if (!env.supported(i, k)) continue;
          const double step = -std::log(p(i, k));
          nlo[k] = std::min(nlo[k], lo[i] + step);
          nhi[k] = std::max(nhi[k], hi[i] + step);
        }
      }
      lo.swap(nlo);
      hi.swap(nhi);
    }
    profile.truncated = true;
    profile.max_log_size = *std::min_element(lo.begin(), lo.end());
    profile.min_log_size = *std::max_element(hi.begin(), hi.end());
    return profile;
  }

  const std::vector<Box> boxes = level_boxes(env, n, root);
  profile.per_type_boxes.assign(K, {});
  profile.max_log_size = kInf;
  profile.min_log_size = -kInf;
  for (const Box& b : boxes) {
    profile.per_type_boxes[b.type].push_back(b.log_size);
    profile.max_log_size = std::min(profile.max_log_size, b.log_size);
    profile.min_log_size = std::max(profile.min_log_size, b.log_size);
  }

  for (double theta : thetas) {
    LaplaceValue lv{theta, std::vector<double>(K, 0.0)};
    for (const Box& b : boxes) lv.per_type[b.type] += std::exp(-theta * b.log_size);
    profile.laplace.push_back(lv);

    const TiltedMatrix tm = tilted_matrix(env, theta);
    const PerronTriplet t = perron_triplet(tm);
    double w = 0.0;
    for (const Box& b : boxes) w += t.v[b.type] / t.v[0] * std::exp(-theta * b.log_size - n * t.log_rho);
    profile.martingale.push_back({theta, w});
  }

  for (const Window& win : windows) {
    if (!(win.a > win.b)) throw Error(ErrorCode::ConfigError, "window needs a > b");
    const double centre = -n * drift(env, win.theta);
    const double lo = centre + win.b;
    const double hi = centre + win.a;
    std::uint64_t count = 0;
    for (const Box& b : boxes)
      if (b.log_size >= lo && b.log_size <= hi) ++count;
    profile.window_counts.push_back({win, count});
  }
  return profile;
}

WalkResult size_biased_walk(const EnvironmentModel& env, int n, RandomStream& rng) {
  const std::size_t K = env.K();
  WalkResult walk;
  walk.types.reserve(static_cast<std::size_t>(n) + 1);
  walk.types.push_back(0);
  std::vector<double> row(K);
  std::size_t type = 0;
  for (int g = 0; g < n; ++g) {
    env.sample_row(type, rng, row);
    const double u = rng.uniform();
    double acc = 0.0;
    std::size_t pick = K;
    for (std::size_t k = 0; k < K; ++k) {
      if (!env.supported(type, k)) continue;
      pick = k;
      acc += row[k];
      if (u < acc) break;
    }
    walk.log_size -= std::log(row[pick]);
    type = pick;
    walk.types.push_back(type);
  }
  return walk;
}

CouponOutcome coupon_time(const EnvironmentModel& env, int n, int j, RandomStream& rng) {
  constexpr double kMaxBoxes = 1e6;
  constexpr std::uint64_t kMaxThrows = 1ULL << 40;
  if (j < 1) throw Error(ErrorCode::ConfigError, "j must be at least 1");
  if (n < 0) throw Error(ErrorCode::ConfigError, "generation must be nonnegative");
  if (positive_box_count(env, n) > kMaxBoxes)
    throw Error(ErrorCode::CapExceeded, "level " + std::to_string(n) + " has more than 1e6 boxes");

  const std::vector<Box> boxes = level_boxes(env, n, rng());
  std::vector<double> cdf(boxes.size());
  double acc = 0.0;
  for (std::size_t b = 0; b < boxes.size(); ++b) cdf[b] = acc += std::exp(-boxes[b].log_size);

  CouponOutcome out{n, j, 0};
  std::vector<int> held(boxes.size(), 0);
  std::size_t short_boxes = boxes.size();
  while (short_boxes > 0) {
    if (++out.throws > kMaxThrows) throw Error(ErrorCode::CapExceeded, "more than 2^40 throws");
    const double u = rng.uniform() * acc;
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    if (it == cdf.end()) --it;
    if (++held[static_cast<std::size_t>(it - cdf.begin())] == j) --short_boxes;
  }
  return out;
}

}  // namespace trielab
