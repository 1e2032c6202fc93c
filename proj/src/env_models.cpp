#include "trielab/env_models.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include <boost/math/special_functions/digamma.hpp>

#include "trielab/error.hpp"

namespace trielab {

namespace {

constexpr double kSumTolerance = 1e-12;

std::string entry_label(std::size_t i, std::size_t j) {
  return "(" + std::to_string(i + 1) + "," + std::to_string(j + 1) + ")";
}

SupportPattern support_of(const Matrix& m) {
  SupportPattern s(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) s.set(i, j, m(i, j) > 0.0);
  return s;
}

void check_stochastic(const Matrix& m, std::size_t K, const std::string& what) {
  if (m.rows() != K || m.cols() != K)
    throw Error(ErrorCode::BadRows, what + ": expected a " + std::to_string(K) + "x" +
                                        std::to_string(K) + " matrix");
  for (std::size_t i = 0; i < K; ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < K; ++j) {
      const double p = m(i, j);
      if (!std::isfinite(p) || p < 0.0 || p > 1.0)
        throw Error(ErrorCode::BadRows, what + ": entry " + entry_label(i, j) + " is not a probability");
      sum += p;
    }
    if (std::abs(sum - 1.0) > kSumTolerance)
      throw Error(ErrorCode::BadRows, what + ": row " + std::to_string(i + 1) + " sums to " +
                                          std::to_string(sum));
  }
}

using BoolMatrix = std::vector<unsigned char>;

BoolMatrix bool_product(const BoolMatrix& a, const BoolMatrix& b, std::size_t K) {
  BoolMatrix c(K * K, 0);
  for (std::size_t i = 0; i < K; ++i)
    for (std::size_t l = 0; l < K; ++l)
      if (a[i * K + l])
        for (std::size_t j = 0; j < K; ++j) c[i * K + j] |= b[l * K + j];
  return c;
}

Matrix to_matrix(const std::vector<std::vector<double>>& rows) {
  const std::size_t K = rows.size();
  Matrix m(K, K);
  for (std::size_t i = 0; i < K; ++i) {
    if (rows[i].size() != K)
      throw Error(ErrorCode::BadRows, "row " + std::to_string(i + 1) + " has " +
                                          std::to_string(rows[i].size()) + " entries, expected " +
                                          std::to_string(K));
    for (std::size_t j = 0; j < K; ++j) m(i, j) = rows[i][j];
  }
  return m;
}

}  // namespace

std::string_view env_kind_name(EnvKind kind) noexcept {
  switch (kind) {
    case EnvKind::Deterministic: return "deterministic";
    case EnvKind::DirichletRows: return "dirichlet";
    case EnvKind::FiniteMixture: return "mixture";
  }
  return "unknown";
}

RegularityReport regularity(const SupportPattern& support) {
  const std::size_t K = support.size();
  RegularityReport report;
  BoolMatrix base(K * K);
  for (std::size_t i = 0; i < K; ++i)
    for (std::size_t j = 0; j < K; ++j) base[i * K + j] = support(i, j);

  // Reachability by closure over path lengths 1..K.
  BoolMatrix reach = base;
  BoolMatrix power = base;
  for (std::size_t n = 2; n <= K; ++n) {
    power = bool_product(power, base, K);
    for (std::size_t c = 0; c < K * K; ++c) reach[c] |= power[c];
  }
  report.irreducible = std::all_of(reach.begin(), reach.end(), [](unsigned char c) { return c != 0; });

  // Period through state 0: gcd of closed-walk lengths, walks up to 2K^2 + 2.
  const std::size_t max_power = K * K + 1;
  const std::size_t walk_limit = 2 * K * K + 2;
  int period = 0;
  power = base;
  for (std::size_t n = 1; n <= walk_limit; ++n) {
    if (n > 1) power = bool_product(power, base, K);
    if (power[0]) period = std::gcd(period, static_cast<int>(n));
    const bool all_true = std::all_of(power.begin(), power.end(), [](unsigned char c) { return c != 0; });
    if (all_true && report.r == 0 && n <= max_power) report.r = static_cast<int>(n);
  }
  report.aperiodic = period == 1;
  report.positive_regular = report.r > 0;
  return report;
}

RegularityReport regularity(const EnvironmentModel& env) { return regularity(env.support()); }

EnvironmentModel make_env(const EnvironmentSpec& spec) {
  const std::size_t K = spec.K;
  if (K < 2) throw Error(ErrorCode::BadRows, "K must be at least 2");

  EnvironmentModel env;
  env.spec_ = spec;
  switch (spec.kind) {
    case EnvKind::Deterministic: {
      check_stochastic(spec.rows, K, "deterministic rows");
      env.support_ = support_of(spec.rows);
      env.mean_ = spec.rows;
      break;
    }
    case EnvKind::DirichletRows: {
      const Matrix& a = spec.alpha;
      if (a.rows() != K || a.cols() != K)
        throw Error(ErrorCode::BadAlpha, "alpha must be a K x K matrix");
      env.support_ = SupportPattern(K);
      env.row_alpha_sum_.assign(K, 0.0);
      double min_alpha = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < K; ++i) {
        for (std::size_t j = 0; j < K; ++j) {
          const double alpha = a(i, j);
          if (!std::isfinite(alpha) || alpha < 0.0)
            throw Error(ErrorCode::BadAlpha, "concentration " + entry_label(i, j) + " must be positive (0 marks unsupported)");
          if (alpha > 0.0) {
            env.support_.set(i, j, true);
            env.row_alpha_sum_[i] += alpha;
            min_alpha = std::min(min_alpha, alpha);
          }
        }
        if (env.row_alpha_sum_[i] <= 0.0)
          throw Error(ErrorCode::BadAlpha, "row " + std::to_string(i + 1) + " has no positive concentration");
      }
      env.domain_ = Interval{-min_alpha, std::numeric_limits<double>::infinity()};
      env.mean_ = Matrix(K, K);
      for (std::size_t i = 0; i < K; ++i)
        for (std::size_t j = 0; j < K; ++j) env.mean_(i, j) = a(i, j) / env.row_alpha_sum_[i];
      break;
    }
    case EnvKind::FiniteMixture: {
      if (spec.weights.empty() || spec.weights.size() != spec.components.size())
        throw Error(ErrorCode::BadRows, "mixture needs one weight per component");
      double total = 0.0;
      for (double q : spec.weights) {
        if (!std::isfinite(q) || q <= 0.0) throw Error(ErrorCode::BadRows, "mixture weights must be positive");
        total += q;
      }
      if (std::abs(total - 1.0) > kSumTolerance)
        throw Error(ErrorCode::BadRows, "mixture weights sum to " + std::to_string(total));
      for (std::size_t m = 0; m < spec.components.size(); ++m)
        check_stochastic(spec.components[m], K, "component " + std::to_string(m + 1));
      env.support_ = support_of(spec.components.front());
      for (std::size_t m = 1; m < spec.components.size(); ++m)
        if (!(support_of(spec.components[m]) == env.support_))
          throw Error(ErrorCode::BadSupport, "component " + std::to_string(m + 1) +
                                                 " does not share the support pattern of component 1");
      env.mean_ = Matrix(K, K);
      double running = 0.0;
      for (std::size_t m = 0; m < spec.components.size(); ++m) {
        running += spec.weights[m];
        env.cumulative_weights_.push_back(running);
        for (std::size_t i = 0; i < K; ++i)
          for (std::size_t j = 0; j < K; ++j) env.mean_(i, j) += spec.weights[m] * spec.components[m](i, j);
      }
      env.cumulative_weights_.back() = 1.0;
      break;
    }
  }

  const RegularityReport reg = regularity(env.support_);
  if (!reg.positive_regular) {
    std::string why = !reg.irreducible ? "support is reducible" : "support is periodic";
    throw Error(ErrorCode::NotRegular, why + "; no power up to K^2+1 is all-positive");
  }
  return env;
}

void EnvironmentModel::require_in_domain(double theta, std::size_t i, std::size_t j) const {
  if (domain_.contains(theta)) return;
  std::size_t bi = i, bj = j;
  if (spec_.kind == EnvKind::DirichletRows) {
    // Report the entry whose moment diverges first.
    double min_alpha = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < K(); ++a)
      for (std::size_t b = 0; b < K(); ++b)
        if (support_(a, b) && spec_.alpha(a, b) < min_alpha) {
          min_alpha = spec_.alpha(a, b);
          bi = a;
          bj = b;
        }
  }
  std::ostringstream os;
  os << "theta=" << theta << " outside L=(" << domain_.lo << "," << domain_.hi << "); entry "
     << entry_label(bi, bj) << " is infinite";
  throw Error(ErrorCode::ThetaOutOfDomain, os.str());
}

double EnvironmentModel::log_laplace_entry(std::size_t i, std::size_t j, double theta) const {
  require_in_domain(theta, i, j);
  if (!support_(i, j)) return -std::numeric_limits<double>::infinity();
  switch (spec_.kind) {
    case EnvKind::Deterministic:
      return theta * std::log(spec_.rows(i, j));
    case EnvKind::DirichletRows: {
      const double a = spec_.alpha(i, j);
      const double a0 = row_alpha_sum_[i];
      return std::lgamma(a0) + std::lgamma(a + theta) - std::lgamma(a0 + theta) - std::lgamma(a);
    }
    case EnvKind::FiniteMixture: {
      double peak = -std::numeric_limits<double>::infinity();
      for (std::size_t m = 0; m < spec_.weights.size(); ++m)
        peak = std::max(peak, std::log(spec_.weights[m]) + theta * std::log(spec_.components[m](i, j)));
      double sum = 0.0;
      for (std::size_t m = 0; m < spec_.weights.size(); ++m)
        sum += std::exp(std::log(spec_.weights[m]) + theta * std::log(spec_.components[m](i, j)) - peak);
      return peak + std::log(sum);
    }
  }
  return 0.0;
}

double EnvironmentModel::dlog_laplace_entry(std::size_t i, std::size_t j, double theta) const {
  require_in_domain(theta, i, j);
  if (!support_(i, j)) return 0.0;
  switch (spec_.kind) {
    case EnvKind::Deterministic:
      return std::log(spec_.rows(i, j));
    case EnvKind::DirichletRows: {
      const double a = spec_.alpha(i, j);
      return boost::math::digamma(a + theta) - boost::math::digamma(row_alpha_sum_[i] + theta);
    }
    case EnvKind::FiniteMixture: {
      // Softmax-weighted mean of ln p over components.
      const double log_m = log_laplace_entry(i, j, theta);
      double acc = 0.0;
      for (std::size_t m = 0; m < spec_.weights.size(); ++m) {
        const double lp = std::log(spec_.components[m](i, j));
        acc += std::exp(std::log(spec_.weights[m]) + theta * lp - log_m) * lp;
      }
      return acc;
    }
  }
  return 0.0;
}

double EnvironmentModel::laplace_entry(std::size_t i, std::size_t j, double theta) const {
  const double lm = log_laplace_entry(i, j, theta);
  return std::isinf(lm) && lm < 0 ? 0.0 : std::exp(lm);
}

void EnvironmentModel::sample_row(std::size_t i, RandomStream& rng, std::span<double> out) const {
  const std::size_t K = this->K();
  switch (spec_.kind) {
    case EnvKind::Deterministic:
      for (std::size_t j = 0; j < K; ++j) out[j] = spec_.rows(i, j);
      return;
    case EnvKind::DirichletRows: {
      double total = 0.0;
      do {
        total = 0.0;
        for (std::size_t j = 0; j < K; ++j) {
          if (support_(i, j)) {
            std::gamma_distribution<double> gamma(spec_.alpha(i, j), 1.0);
            out[j] = gamma(rng);
          } else {
            out[j] = 0.0;
          }
          total += out[j];
        }
      } while (!(total > 0.0));
      for (std::size_t j = 0; j < K; ++j) out[j] /= total;
      return;
    }
    case EnvKind::FiniteMixture: {
      const double u = rng.uniform();
      std::size_t m = 0;
      while (m + 1 < cumulative_weights_.size() && u >= cumulative_weights_[m]) ++m;
      for (std::size_t j = 0; j < K; ++j) out[j] = spec_.components[m](i, j);
      return;
    }
  }
}

EnvironmentModel deterministic_env(const std::vector<std::vector<double>>& rows) {
  EnvironmentSpec spec;
  spec.kind = EnvKind::Deterministic;
  spec.K = rows.size();
  spec.rows = to_matrix(rows);
  return make_env(spec);
}

EnvironmentModel dirichlet_env(const std::vector<std::vector<double>>& alpha) {
  EnvironmentSpec spec;
  spec.kind = EnvKind::DirichletRows;
  spec.K = alpha.size();
  spec.alpha = to_matrix(alpha);
  return make_env(spec);
}

EnvironmentModel mixture_env(const std::vector<double>& weights,
                             const std::vector<std::vector<std::vector<double>>>& components) {
  EnvironmentSpec spec;
  spec.kind = EnvKind::FiniteMixture;
  spec.K = components.empty() ? 0 : components.front().size();
  spec.weights = weights;
  for (const auto& c : components) spec.components.push_back(to_matrix(c));
  return make_env(spec);
}

}  // namespace trielab
