#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "trielab/matrix.hpp"
#include "trielab/rng.hpp"

namespace trielab {

enum class EnvKind { Deterministic, DirichletRows, FiniteMixture };

std::string_view env_kind_name(EnvKind kind) noexcept;

/// Open interval (lo, hi); either end may be infinite.
struct Interval {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();

  bool contains(double x) const noexcept { return x > lo && x < hi; }
};

/// Unvalidated environment description, as read from an environment file.
/// Types are 0-based here; the file format numbers them from 1.
struct EnvironmentSpec {
  EnvKind kind = EnvKind::Deterministic;
  std::size_t K = 0;
  Matrix rows;                    // Deterministic: row-stochastic transition matrix
  Matrix alpha;                   // DirichletRows: concentrations, 0 = unsupported
  std::vector<double> weights;    // FiniteMixture: component weights
  std::vector<Matrix> components; // FiniteMixture: row-stochastic components
};

struct RegularityReport {
  bool irreducible = false;
  bool aperiodic = false;
  bool positive_regular = false;
  int r = 0;  // smallest all-positive power; 0 when none exists
};

/// Validated, immutable environment. The root box always has type 0.
///
/// For a deterministic environment the tilted entries are p_ij^theta; for the
/// random ones they are the tilted moments E[p_ij^theta] of one row draw.
/// Unsupported entries are structural zeros for every theta.
class EnvironmentModel {
 public:
  EnvKind kind() const noexcept { return spec_.kind; }
  std::size_t K() const noexcept { return spec_.K; }
  bool is_random() const noexcept { return spec_.kind != EnvKind::Deterministic; }
  bool supported(std::size_t i, std::size_t j) const noexcept { return support_(i, j); }
  const SupportPattern& support() const noexcept { return support_; }
  const Interval& domain() const noexcept { return domain_; }
  const EnvironmentSpec& spec() const noexcept { return spec_; }

  /// Row-stochastic matrix of a deterministic environment; for random
  /// environments, the mean matrix E[A].
  const Matrix& mean_matrix() const noexcept { return mean_; }

  /// m_ij(theta). Throws ThetaOutOfDomain outside the open domain.
  double laplace_entry(std::size_t i, std::size_t j, double theta) const;

  /// ln m_ij(theta) for supported (i, j); -inf for unsupported entries.
  double log_laplace_entry(std::size_t i, std::size_t j, double theta) const;

  /// d/dtheta ln m_ij(theta) for supported (i, j); 0 for unsupported entries.
  double dlog_laplace_entry(std::size_t i, std::size_t j, double theta) const;

  /// Writes one draw of row i into `out` (size K). Deterministic environments
  /// copy the row; random ones draw a fresh row.
  void sample_row(std::size_t i, RandomStream& rng, std::span<double> out) const;

 private:
  friend EnvironmentModel make_env(const EnvironmentSpec& spec);

  void require_in_domain(double theta, std::size_t i, std::size_t j) const;

  EnvironmentSpec spec_;
  SupportPattern support_;
  Interval domain_;
  Matrix mean_;
  std::vector<double> row_alpha_sum_;      // Dirichlet: alpha_i0
  std::vector<double> cumulative_weights_; // mixture component selection
};

/// Validates a description. Errors: BadRows, BadSupport, BadAlpha, NotRegular.
EnvironmentModel make_env(const EnvironmentSpec& spec);

RegularityReport regularity(const SupportPattern& support);
RegularityReport regularity(const EnvironmentModel& env);

// Convenience constructors used by tests and the acceptance suite.
EnvironmentModel deterministic_env(const std::vector<std::vector<double>>& rows);
EnvironmentModel dirichlet_env(const std::vector<std::vector<double>>& alpha);
EnvironmentModel mixture_env(const std::vector<double>& weights,
                             const std::vector<std::vector<std::vector<double>>>& components);

/// Environment file format (line oriented `key = value`, `[env]` section).
EnvironmentSpec parse_env_text(const std::string& text);
EnvironmentModel load_env_file(const std::string& path);
std::string serialize_env(const EnvironmentModel& env);

}  // namespace trielab
