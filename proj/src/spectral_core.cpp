#include "trielab/spectral_core.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>

#include "trielab/error.hpp"

namespace trielab {

namespace {

constexpr int kIterationCap = 100000;
constexpr double kEigenTolerance = 1e-13;
constexpr double kInf = std::numeric_limits<double>::infinity();

// Working-interval clip for the theta scans of random environments.
constexpr double kEntryCeiling = 1e12;
constexpr double kEntryFloor = 1e-12;
constexpr int kScanPointsPerSide = 256;
constexpr double kRootTolerance = 1e-10;

struct PowerResult {
  double scale = 0.0;
  std::vector<double> vec;
  int iterations = 0;
};

PowerResult power_iterate(const Matrix& a, bool transpose) {
  const std::size_t K = a.rows();
  std::vector<double> v(K, 1.0);
  std::vector<double> u(K);
  for (int it = 1; it <= kIterationCap; ++it) {
    for (std::size_t i = 0; i < K; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < K; ++j) acc += (transpose ? a(j, i) : a(i, j)) * v[j];
      u[i] = acc;
    }
    // Collatz-Wielandt bounds: min and max of (Av)_i / v_i bracket rho.
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (std::size_t i = 0; i < K; ++i)
      if (v[i] > 0.0) {
        lo = std::min(lo, u[i] / v[i]);
        hi = std::max(hi, u[i] / v[i]);
      }
    if (!(hi > 0.0) || !std::isfinite(hi))
      throw Error(ErrorCode::NoConvergence, "power iteration collapsed to the zero vector");
    if (hi - lo <= kEigenTolerance * hi) return {0.5 * (lo + hi), v, it};
    // Step with A + cI, c inside the bracket. The shift keeps a second
    // eigenvalue near -rho (near-periodic matrices) from stalling the iteration.
    const double shift = std::sqrt(lo * hi);
    double s = 0.0;
    for (std::size_t i = 0; i < K; ++i) {
      u[i] += shift * v[i];
      s = std::max(s, u[i]);
    }
    for (std::size_t i = 0; i < K; ++i) v[i] = u[i] / s;
  }
  throw Error(ErrorCode::NoConvergence,
              "power iteration did not converge within " + std::to_string(kIterationCap) + " iterations");
}

double max_abs(const std::vector<double>& x) {
  double m = 0.0;
  for (double e : x) m = std::max(m, std::abs(e));
  return m;
}

// Everything downstream needs from one theta: the tilted matrix, its triplet,
// the scaled Perron root and the drift rho'/rho.
struct Evaluation {
  TiltedMatrix tilted;
  PerronTriplet triplet;
  double scaled_rho = 0.0;
  double drift = 0.0;
};

Evaluation evaluate(const EnvironmentModel& env, double theta) {
  Evaluation e;
  e.tilted = tilted_matrix(env, theta);
  e.triplet = perron_triplet(e.tilted.scaled);
  e.scaled_rho = e.triplet.rho;
  e.triplet.log_rho = std::log(e.scaled_rho) + e.tilted.log_scale;
  e.triplet.rho = std::exp(e.triplet.log_rho);
  const std::size_t K = env.K();
  double num = 0.0;
  for (std::size_t i = 0; i < K; ++i)
    for (std::size_t j = 0; j < K; ++j)
      num += e.triplet.w[i] * e.tilted.scaled(i, j) * e.tilted.dlog(i, j) * e.triplet.v[j];
  e.drift = num / e.scaled_rho;
  return e;
}

double log_rho_at(const EnvironmentModel& env, double theta) { return evaluate(env, theta).triplet.log_rho; }

// lim rho/(-rho') along theta = sign * 2^k, k = 4..14.
double ratio_limit(const EnvironmentModel& env, int sign) {
  double prev = std::numeric_limits<double>::quiet_NaN();
  for (int k = 4; k <= 14; ++k) {
    const double theta = sign * std::ldexp(1.0, k);
    double value;
    try {
      value = -1.0 / drift(env, theta);
    } catch (const Error& err) {
      if (err.code() == ErrorCode::NoConvergence && std::isfinite(prev)) return prev;
      throw;
    }
    if (std::isfinite(prev) && std::abs(value - prev) < 1e-6 * std::abs(value)) return value;
    prev = value;
  }
  return prev;
}

double max_log_entry(const EnvironmentModel& env, double theta) {
  double m = -kInf;
  for (std::size_t i = 0; i < env.K(); ++i)
    for (std::size_t j = 0; j < env.K(); ++j)
      if (env.supported(i, j)) m = std::max(m, env.log_laplace_entry(i, j, theta));
  return m;
}

double min_log_entry(const EnvironmentModel& env, double theta) {
  double m = kInf;
  for (std::size_t i = 0; i < env.K(); ++i)
    for (std::size_t j = 0; j < env.K(); ++j)
      if (env.supported(i, j)) m = std::min(m, env.log_laplace_entry(i, j, theta));
  return m;
}

// Finds the theta where a monotone predicate flips, with `inside` satisfying it
// and `outside` not. Bisection in theta.
double bisect_boundary(double inside, double outside, const std::function<bool(double)>& ok) {
  for (int it = 0; it < 200 && std::abs(outside - inside) > 1e-12 * std::max(1.0, std::abs(inside)); ++it) {
    const double mid = 0.5 * (inside + outside);
    (ok(mid) ? inside : outside) = mid;
  }
  return inside;
}

// Lower end of the scan interval: entries stay <= 1e12.
double working_lower(const EnvironmentModel& env) {
  const double ceiling = std::log(kEntryCeiling);
  auto ok = [&](double t) { return max_log_entry(env, t) <= ceiling; };
  const Interval& L = env.domain();
  if (std::isfinite(L.lo)) {
    const double width = -L.lo;
    double inside = 0.0;
    for (int k = 1; k <= 1000; ++k) {
      const double t = L.lo + width * std::ldexp(1.0, -k);
      if (!(t > L.lo)) break;
      if (!ok(t)) return bisect_boundary(inside, t, ok);
      inside = t;
    }
    return inside;
  }
  double inside = 0.0;
  for (int k = 0; k <= 40; ++k) {
    const double t = -std::ldexp(1.0, k);
    if (!ok(t)) return bisect_boundary(inside, t, ok);
    inside = t;
  }
  return inside;
}

// Upper end of the scan interval: supported entries stay >= 1e-12.
double working_upper(const EnvironmentModel& env) {
  const double floor = std::log(kEntryFloor);
  auto ok = [&](double t) { return min_log_entry(env, t) >= floor; };
  double inside = 0.0;
  for (int k = 0; k <= 60; ++k) {
    const double t = std::ldexp(1.0, k);
    if (!ok(t)) return bisect_boundary(inside, t, ok);
    inside = t;
  }
  return inside;
}

std::vector<double> log_spaced(double from, double to, int count) {
  std::vector<double> out(count);
  const double a = std::log(from), b = std::log(to);
  for (int k = 0; k < count; ++k) out[k] = std::exp(a + (b - a) * k / (count - 1));
  return out;
}

double f_at(const EnvironmentModel& env, double theta) { return shape_values(env, theta).f; }

// theta with f(theta) = 0 between a point where f <= 0 and one where f > 0.
double bisect_root(const EnvironmentModel& env, double nonpositive, double positive) {
  while (std::abs(positive - nonpositive) > kRootTolerance) {
    const double mid = 0.5 * (nonpositive + positive);
    (f_at(env, mid) > 0.0 ? positive : nonpositive) = mid;
  }
  return 0.5 * (nonpositive + positive);
}

// Value at x = 0 of the least-squares line through (x_k, y_k).
double extrapolate_to_zero(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sx += x[k];
    sy += y[k];
    sxx += x[k] * x[k];
    sxy += x[k] * y[k];
  }
  const double denom = n * sxx - sx * sx;
  if (denom == 0.0) return y.front();
  const double slope = (n * sxy - sx * sy) / denom;
  return (sy - slope * sx) / n;
}

std::optional<Interval> cycle_mean_bounds(const EnvironmentModel& env) {
  const std::size_t K = env.K();
  if (env.is_random() || K > 8) return std::nullopt;
  const Matrix& p = env.mean_matrix();
  double best = -kInf, worst = kInf;  // extreme mean log-probability per step

  std::vector<std::size_t> path;
  std::vector<char> on_path(K, 0);
  // Simple cycles whose smallest vertex is `start`.
  std::function<void(std::size_t, std::size_t, double)> dfs = [&](std::size_t start, std::size_t u, double sum) {
    for (std::size_t next = start; next < K; ++next) {
      if (!env.supported(u, next)) continue;
      const double s = sum + std::log(p(u, next));
      if (next == start) {
        const double mean = s / static_cast<double>(path.size());
        best = std::max(best, mean);
        worst = std::min(worst, mean);
      } else if (!on_path[next]) {
        on_path[next] = 1;
        path.push_back(next);
        dfs(start, next, s);
        path.pop_back();
        on_path[next] = 0;
      }
    }
  };
  for (std::size_t s = 0; s < K; ++s) {
    path.assign(1, s);
    on_path.assign(K, 0);
    on_path[s] = 1;
    dfs(s, s, 0.0);
  }
  return Interval{-1.0 / worst, -1.0 / best};
}

ConstantsReport deterministic_constants(const EnvironmentModel& env) {
  ConstantsReport r;
  r.domain = env.domain();
  r.c_star_lower = ratio_limit(env, -1);
  r.c_star_upper = ratio_limit(env, +1);
  r.theta_star_lower = -kInf;
  r.theta_star_upper = kInf;
  r.condition_saturation_ok = true;
  r.cycle_mean_bounds = cycle_mean_bounds(env);
  r.notes = "deterministic regime";
  return r;
}

ConstantsReport random_constants(const EnvironmentModel& env) {
  ConstantsReport r;
  r.domain = env.domain();
  std::ostringstream notes;

  const double f0 = f_at(env, 0.0);
  if (!(f0 > 0.0)) throw Error(ErrorCode::DomainTooNarrow, "f(0) is not positive");

  const double lo_work = working_lower(env);
  const double hi_work = working_upper(env);
  const Interval& L = env.domain();

  // Negative side, ascending. Points approach the lower end geometrically.
  std::vector<double> neg;
  if (std::isfinite(L.lo)) {
    const double eps_min = lo_work - L.lo, eps_max = -L.lo;
    std::vector<double> eps = log_spaced(eps_min, eps_max, kScanPointsPerSide + 1);
    eps.pop_back();  // theta = 0 handled separately
    for (double e : eps) neg.push_back(L.lo + e);
  } else {
    std::vector<double> d = log_spaced(1e-3, std::max(-lo_work, 2e-3), kScanPointsPerSide);
    for (auto it = d.rbegin(); it != d.rend(); ++it) neg.push_back(-*it);
  }
  const std::vector<double> pos = log_spaced(1e-3, std::max(hi_work, 2e-3), kScanPointsPerSide);

  std::vector<double> f_neg(neg.size()), f_pos(pos.size());
  for (std::size_t k = 0; k < neg.size(); ++k) f_neg[k] = f_at(env, neg[k]);
  for (std::size_t k = 0; k < pos.size(); ++k) f_pos[k] = f_at(env, pos[k]);

  // theta_*: walk from 0 towards the lower end.
  double lim_f_lower = std::numeric_limits<double>::quiet_NaN();
  r.theta_lower_interior = false;
  {
    double positive = 0.0;
    for (std::size_t k = neg.size(); k-- > 0;) {
      if (!(f_neg[k] > 0.0)) {
        r.theta_star_lower = bisect_root(env, neg[k], positive);
        r.theta_lower_interior = true;
        break;
      }
      positive = neg[k];
    }
    if (!r.theta_lower_interior) {
      r.theta_star_lower = L.lo;
      std::vector<double> x, y;
      for (std::size_t k = 0; k < 5 && k < neg.size(); ++k) {
        x.push_back(std::isfinite(L.lo) ? neg[k] - L.lo : -1.0 / neg[k]);
        y.push_back(f_neg[k]);
      }
      lim_f_lower = extrapolate_to_zero(x, y);
    }
  }

  // theta^*: walk from 0 upwards.
  r.theta_upper_interior = false;
  {
    double positive = 0.0;
    for (std::size_t k = 0; k < pos.size(); ++k) {
      if (!(f_pos[k] > 0.0)) {
        r.theta_star_upper = bisect_root(env, pos[k], positive);
        r.theta_upper_interior = true;
        break;
      }
      positive = pos[k];
    }
    if (!r.theta_upper_interior) r.theta_star_upper = kInf;
  }

  // Strict convexity of ln rho on the interval that matters.
  {
    const double a = r.theta_lower_interior ? r.theta_star_lower : std::max(neg.front(), -16.0);
    const double b = r.theta_upper_interior ? r.theta_star_upper : std::min(pos.back(), 16.0);
    constexpr int n = 64;
    std::vector<double> g(n);
    for (int k = 0; k < n; ++k) g[k] = log_rho_at(env, a + (b - a) * k / (n - 1));
    for (int k = 1; k + 1 < n; ++k) {
      const double d2 = g[k + 1] - 2.0 * g[k] + g[k - 1];
      if (!(d2 > 1e-9)) {
        std::ostringstream os;
        os << "second difference of ln rho is " << d2 << " near theta=" << a + (b - a) * k / (n - 1);
        throw Error(ErrorCode::NotStrictlyConvex, os.str());
      }
    }
  }

  if (r.theta_lower_interior) {
    r.c_star_lower = -1.0 / drift(env, r.theta_star_lower);
  } else if (std::isfinite(L.lo)) {
    r.c_star_lower = -1.0 / drift(env, neg.front());
  } else {
    r.c_star_lower = ratio_limit(env, -1);
  }
  r.c_star_upper = r.theta_upper_interior ? -1.0 / drift(env, r.theta_star_upper) : ratio_limit(env, +1);

  const bool finite_negative = std::isfinite(r.theta_star_lower) && r.theta_star_lower < 0.0;
  const bool vanishes = r.theta_lower_interior || std::abs(lim_f_lower) < 1e-6;
  r.condition_saturation_ok = finite_negative && vanishes;

  notes << "scan interval [" << neg.front() << ", " << pos.back() << "]; ";
  if (r.theta_lower_interior) notes << "theta_* is an interior zero of f; ";
  else notes << "f has no zero below 0, extrapolated limit " << lim_f_lower << " at the lower end; ";
  if (r.theta_upper_interior) notes << "theta^* is an interior zero of f";
  else notes << "f stays positive above 0";
  r.notes = notes.str();
  return r;
}

}  // namespace

double TiltedMatrix::value(std::size_t i, std::size_t j) const {
  const double s = scaled(i, j);
  return s == 0.0 ? 0.0 : s * std::exp(log_scale);
}

TiltedMatrix tilted_matrix(const EnvironmentModel& env, double theta) {
  const std::size_t K = env.K();
  TiltedMatrix t;
  t.theta = theta;
  t.scaled = Matrix(K, K);
  t.dlog = Matrix(K, K);
  Matrix logs(K, K, -kInf);
  double peak = -kInf;
  for (std::size_t i = 0; i < K; ++i)
    for (std::size_t j = 0; j < K; ++j) {
      logs(i, j) = env.log_laplace_entry(i, j, theta);
      if (env.supported(i, j)) {
        if (!std::isfinite(logs(i, j))) {
          std::ostringstream os;
          os << "entry (" << i + 1 << "," << j + 1 << ") is not finite at theta=" << theta;
          throw Error(ErrorCode::ThetaOutOfDomain, os.str());
        }
        peak = std::max(peak, logs(i, j));
        t.dlog(i, j) = env.dlog_laplace_entry(i, j, theta);
      }
    }
  // Keep the natural scale unless it would lose range.
  t.log_scale = std::abs(peak) > 300.0 ? peak : 0.0;
  for (std::size_t i = 0; i < K; ++i)
    for (std::size_t j = 0; j < K; ++j)
      t.scaled(i, j) = env.supported(i, j) ? std::exp(logs(i, j) - t.log_scale) : 0.0;
  return t;
}

PerronTriplet perron_triplet(const Matrix& a, VectorScaling scaling) {
  const std::size_t K = a.rows();
  if (K == 0 || a.cols() != K) throw Error(ErrorCode::NoConvergence, "matrix must be square and non-empty");
  PowerResult right = power_iterate(a, false);
  PowerResult left = power_iterate(a, true);

  PerronTriplet t;
  t.iterations = std::max(right.iterations, left.iterations);
  t.v = std::move(right.vec);
  t.w = std::move(left.vec);

  const double norm = scaling == VectorScaling::UnitSum ? std::accumulate(t.v.begin(), t.v.end(), 0.0) : max_abs(t.v);
  for (double& x : t.v) x /= norm;
  double wv = 0.0;
  for (std::size_t i = 0; i < K; ++i) wv += t.w[i] * t.v[i];
  for (double& x : t.w) x /= wv;

  // Two-sided Rayleigh quotient w^T A v / w^T v, with w^T v = 1.
  std::vector<double> av(K, 0.0), wa(K, 0.0);
  for (std::size_t i = 0; i < K; ++i)
    for (std::size_t j = 0; j < K; ++j) {
      av[i] += a(i, j) * t.v[j];
      wa[j] += t.w[i] * a(i, j);
    }
  double rho = 0.0;
  for (std::size_t i = 0; i < K; ++i) rho += t.w[i] * av[i];
  t.rho = rho;
  t.log_rho = std::log(rho);

  double rr = 0.0, lr = 0.0;
  for (std::size_t i = 0; i < K; ++i) {
    rr = std::max(rr, std::abs(av[i] - rho * t.v[i]));
    lr = std::max(lr, std::abs(wa[i] - rho * t.w[i]));
  }
  t.residual = std::max(rr / max_abs(t.v), lr / max_abs(t.w));
  return t;
}

PerronTriplet perron_triplet(const TiltedMatrix& m, VectorScaling scaling) {
  PerronTriplet t = perron_triplet(m.scaled, scaling);
  t.log_rho += m.log_scale;
  t.rho = std::exp(t.log_rho);
  return t;
}

double drift(const EnvironmentModel& env, double theta) { return evaluate(env, theta).drift; }

double rho_prime(const EnvironmentModel& env, double theta) {
  const Evaluation e = evaluate(env, theta);
  return e.drift * e.triplet.rho;
}

ShapeValues shape_values(const EnvironmentModel& env, double theta) {
  const Evaluation e = evaluate(env, theta);
  ShapeValues s;
  s.theta = theta;
  s.log_rho = e.triplet.log_rho;
  s.drift = e.drift;
  s.psi = s.log_rho - theta * s.drift;
  s.phi = s.log_rho - (theta - 1.0) * s.drift;
  s.f = s.psi;
  return s;
}

double rate_function(const EnvironmentModel& env, double z) {
  if (env.is_random())
    throw Error(ErrorCode::OutsideRegime, "rate function is defined for deterministic environments");
  // Attainable drifts run from -1/C_* (theta -> -inf) to -1/C^* (theta -> +inf).
  const double d_lo = -1.0 / ratio_limit(env, -1);
  const double d_hi = -1.0 / ratio_limit(env, +1);
  const double tol = 1e-9 * std::max(1.0, std::abs(z));
  if (z < d_lo - tol || z > d_hi + tol) {
    std::ostringstream os;
    os << "z=" << z << " outside attainable drifts [" << d_lo << ", " << d_hi << "]";
    throw Error(ErrorCode::ZOutOfRange, os.str());
  }
  auto objective = [&](double theta) { return (theta - 1.0) * z - log_rho_at(env, theta); };
  if (d_hi - d_lo <= 1e-12 * std::max(1.0, std::abs(d_lo))) return 0.0;

  const double d1 = drift(env, 1.0);
  if (z == d1) return 0.0;
  const int sign = z > d1 ? 1 : -1;
  double inner = 1.0;
  for (int k = 0; k <= 14; ++k) {
    const double outer = 1.0 + sign * std::ldexp(1.0, k);
    const double d = drift(env, outer);
    if ((sign > 0 && d >= z) || (sign < 0 && d <= z)) {
      // drift is increasing in theta; bisect drift(theta) = z.
      double a = inner, b = outer;
      for (int it = 0; it < 200 && std::abs(b - a) > 1e-13 * std::max(1.0, std::abs(a)); ++it) {
        const double mid = 0.5 * (a + b);
        const double dm = drift(env, mid);
        ((sign > 0) == (dm < z) ? a : b) = mid;
      }
      return std::max(0.0, objective(0.5 * (a + b)));
    }
    inner = outer;
  }
  // z sits at (or numerically on) the edge of the drift range: the supremum is
  // approached as theta -> sign * inf and the objective increases along the way.
  double prev = objective(inner);
  for (int k = 15; k <= 40; ++k) {
    const double value = objective(1.0 + sign * std::ldexp(1.0, k));
    if (std::abs(value - prev) <= 1e-13 * std::max(1.0, std::abs(value))) return std::max(0.0, value);
    prev = std::max(prev, value);
  }
  return std::max(0.0, prev);
}

ConstantsReport asymptotic_constants(const EnvironmentModel& env) {
  return env.is_random() ? random_constants(env) : deterministic_constants(env);
}

double predicted_height_constant(const EnvironmentModel& env, int j) {
  if (j < 2) throw Error(ErrorCode::OutsideRegime, "height needs j >= 2");
  const double theta = static_cast<double>(j);
  if (!env.is_random()) return theta / -log_rho_at(env, theta);
  const ConstantsReport c = asymptotic_constants(env);
  if (theta <= c.theta_star_lower)
    throw Error(ErrorCode::OutsideRegime, "j <= theta_*: no height prediction in this regime");
  if (theta < c.theta_star_upper) return theta / -log_rho_at(env, theta);
  return c.c_star_upper;
}

double predicted_power_height_constant(const EnvironmentModel& env, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorCode::ConfigError, "alpha must lie in (0, 1)");
  if (env.is_random())
    throw Error(ErrorCode::OutsideRegime, "the j = m^alpha regime is only predicted for deterministic environments");
  return (1.0 - alpha) * asymptotic_constants(env).c_star_upper;
}

double predicted_saturation_constant(const EnvironmentModel& env) {
  const ConstantsReport c = asymptotic_constants(env);
  if (!c.condition_saturation_ok)
    throw Error(ErrorCode::ConditionsNotMet, "saturation condition fails: " + c.notes);
  return c.c_star_lower;
}

SpectralProfile spectral_profile(const EnvironmentModel& env, std::vector<double> theta_grid) {
  std::sort(theta_grid.begin(), theta_grid.end());
  SpectralProfile profile;
  for (std::size_t k = 0; k < theta_grid.size(); ++k) {
    const double theta = theta_grid[k];
    if (!env.domain().contains(theta)) {
      std::ostringstream os;
      os << "grid index " << k << " (theta=" << theta << ") outside L=(" << env.domain().lo << ","
         << env.domain().hi << ")";
      throw Error(ErrorCode::ThetaOutOfDomain, os.str());
    }
    const Evaluation e = evaluate(env, theta);
    SpectralRow row;
    row.triplet = e.triplet;
    row.shape.theta = theta;
    row.shape.log_rho = e.triplet.log_rho;
    row.shape.drift = e.drift;
    row.shape.psi = row.shape.log_rho - theta * e.drift;
    row.shape.phi = row.shape.log_rho - (theta - 1.0) * e.drift;
    row.shape.f = row.shape.psi;
    profile.rows.push_back(std::move(row));
  }
  profile.constants = asymptotic_constants(env);
  return profile;
}

SaturationCheck check_saturation_conditions(const EnvironmentModel& env) {
  if (!env.is_random()) return {true, "deterministic regime"};
  try {
    const ConstantsReport c = asymptotic_constants(env);
    return {c.condition_saturation_ok, c.notes};
  } catch (const Error& e) {
    return {false, std::string(error_code_name(e.code())) + ": " + e.what()};
  }
}

}  // namespace trielab
