#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "trielab/env_models.hpp"

namespace trielab {

enum class Mode { Spectral, Simulate, Converge, Profile, Coupon };
enum class Statistic { Height, Saturation };
enum class Format { Csv, Json };

std::string_view mode_name(Mode mode) noexcept;
Mode parse_mode(const std::string& text);
Format parse_format(const std::string& text);
Statistic parse_statistic(const std::string& text);

/// start, start*factor, ..., count values, rounded to integers.
struct GeometricGrid {
  std::uint64_t start = 1024;
  double factor = 2.0;
  int count = 11;

  std::vector<std::uint64_t> values() const;
};

/// count points from lo to hi inclusive.
struct ThetaGrid {
  double lo = -4.0;
  double hi = 4.0;
  int steps = 33;

  std::vector<double> values() const;
};

GeometricGrid parse_geometric_grid(const std::string& text);  // START:FACTOR:COUNT
ThetaGrid parse_theta_grid(const std::string& text);          // LO:HI:STEPS

struct ExperimentConfig {
  std::string env_path;
  Mode mode = Mode::Converge;
  std::optional<int> j;
  std::optional<double> alpha;
  std::optional<Statistic> stat;  // default: saturation for j = 1, height otherwise
  GeometricGrid m_grid;
  int replicates = 200;
  std::uint64_t master_seed = 0;
  ThetaGrid theta_grid;
  int depth = 10;
  std::uint64_t cap = 1000000;
  std::string output;
  Format format = Format::Csv;
};

/// Throws ConfigError describing the first problem found.
void validate(const ExperimentConfig& config);

/// The statistic a converge run fits.
Statistic fitted_statistic(const ExperimentConfig& config);

struct ConvergenceRow {
  std::uint64_t m = 0;
  std::string stat;  // "height" or "saturation"
  double mean = 0.0;
  double median = 0.0;
  double stderr_ = 0.0;
  std::uint64_t count = 0;
};

struct ConvergenceReport {
  std::vector<ConvergenceRow> rows;
  double fitted_slope = 0.0;
  double fit_r2 = 0.0;
  double predicted = 0.0;     // NaN when no prediction applies
  double relative_gap = 0.0;  // NaN when no prediction applies
  bool prediction_available = true;
  std::string prediction_note;

  bool operator==(const ConvergenceReport&) const;
};

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

/// Ordinary least squares. DegenerateX with fewer than 3 points or a
/// constant x.
LineFit fit_slope(const std::vector<std::pair<double, double>>& points);

/// Raw per-replicate values of one grid point, in replicate order.
struct ReplicateValues {
  std::vector<double> height;
  std::vector<double> saturation;
};

/// Runs the replicates of every grid m and fits against ln m. Replicate r at
/// grid index i uses the stream derive_seed({master_seed, i, r}).
ConvergenceReport run_converge(const EnvironmentModel& env, const ExperimentConfig& config,
                               std::vector<ReplicateValues>* raw = nullptr);
ConvergenceReport run_converge(const ExperimentConfig& config);

/// Report text in the requested format.
std::string render_report(const ConvergenceReport& report, Format format);
ConvergenceReport parse_report(const std::string& text, Format format);
/// Writes render_report to path. IoError names the path.
void emit_report(const ConvergenceReport& report, const std::string& path, Format format);

/// Output of the non-converge modes, rendered like the report.
std::string run_spectral(const EnvironmentModel& env, const ExperimentConfig& config);
std::string run_simulate(const EnvironmentModel& env, const ExperimentConfig& config);
std::string run_profile(const EnvironmentModel& env, const ExperimentConfig& config);
std::string run_coupon(const EnvironmentModel& env, const ExperimentConfig& config);

void write_text(const std::string& path, const std::string& text);

/// Formats with 17 significant digits; "nan", "inf", "-inf" for the rest.
std::string format_number(double value);

/// Runs task(0..count-1) on a pool of worker threads.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& task);

}  // namespace trielab
