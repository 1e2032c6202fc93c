#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "trielab/env_models.hpp"
#include "trielab/matrix.hpp"

namespace trielab {

/// A(theta) for a deterministic environment, M(theta) for a random one.
///
/// Entries are stored divided by e^{log_scale} (the largest entry is 1) so
/// that theta far from 0 neither overflows nor underflows. `dlog` holds the
/// theta-derivative of the log of each entry, which is what the eigenvalue
/// perturbation formula needs.
struct TiltedMatrix {
  double theta = 0.0;
  double log_scale = 0.0;
  Matrix scaled;
  Matrix dlog;

  std::size_t K() const noexcept { return scaled.rows(); }
  /// True entry, e.g. p_ij^theta.
  double value(std::size_t i, std::size_t j) const;
};

TiltedMatrix tilted_matrix(const EnvironmentModel& env, double theta);

enum class VectorScaling {
  UnitSum,  // v has unit 1-norm, then w.v = 1
  UnitMax,  // v has unit max-norm, then w.v = 1
};

struct PerronTriplet {
  double rho = 0.0;      // Perron root of the matrix the solver was given
  double log_rho = 0.0;  // ln of the true Perron root (log_scale added back)
  std::vector<double> v; // right eigenvector
  std::vector<double> w; // left eigenvector, w.v = 1
  double residual = 0.0; // max of the relative left/right residuals
  int iterations = 0;
};

/// Power iteration on A and A^T. Throws NoConvergence when the cap is hit.
PerronTriplet perron_triplet(const Matrix& matrix, VectorScaling scaling = VectorScaling::UnitSum);
PerronTriplet perron_triplet(const TiltedMatrix& matrix, VectorScaling scaling = VectorScaling::UnitSum);

/// rho'(theta) = w^T A'(theta) v with w.v = 1.
double rho_prime(const EnvironmentModel& env, double theta);

/// rho'(theta)/rho(theta), nats per generation. Finite even where rho itself
/// under- or overflows.
double drift(const EnvironmentModel& env, double theta);

struct ShapeValues {
  double theta = 0.0;
  double log_rho = 0.0;
  double drift = 0.0;
  double psi = 0.0;  // log_rho - theta * drift
  double phi = 0.0;  // log_rho - (theta - 1) * drift
  double f = 0.0;    // same formula as psi, named for random environments
};

ShapeValues shape_values(const EnvironmentModel& env, double theta);

/// Legendre transform sup_mu (mu z - ln rho(mu + 1)). Deterministic only.
double rate_function(const EnvironmentModel& env, double z);

struct ConstantsReport {
  Interval domain;
  double c_star_lower = 0.0;       // C_* or zeta_*
  double c_star_upper = 0.0;       // C^* or zeta^*
  double theta_star_lower = 0.0;   // theta_* (-inf for deterministic)
  double theta_star_upper = 0.0;   // theta^* (+inf for deterministic)
  bool theta_lower_interior = false;
  bool theta_upper_interior = false;
  bool condition_saturation_ok = false;
  /// Deterministic, K <= 8: [C_*, C^*] from extreme geometric cycle means.
  std::optional<Interval> cycle_mean_bounds;
  std::string notes;
};

ConstantsReport asymptotic_constants(const EnvironmentModel& env);

/// Height constant for a fixed threshold j >= 2.
double predicted_height_constant(const EnvironmentModel& env, int j);
/// Height constant when j = m^alpha (deterministic environments only).
double predicted_power_height_constant(const EnvironmentModel& env, double alpha);
/// Saturation constant; the same for every j.
double predicted_saturation_constant(const EnvironmentModel& env);

struct SpectralRow {
  ShapeValues shape;
  PerronTriplet triplet;
};

struct SpectralProfile {
  std::vector<SpectralRow> rows;  // ascending theta
  ConstantsReport constants;
};

SpectralProfile spectral_profile(const EnvironmentModel& env, std::vector<double> theta_grid);

struct SaturationCheck {
  bool ok = false;
  std::string note;
};

/// Condition (theta_* finite, negative, interior, f -> 0) for random
/// environments; always true for deterministic ones.
SaturationCheck check_saturation_conditions(const EnvironmentModel& env);

}  // namespace trielab
