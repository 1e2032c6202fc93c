// trielab: command-line front end for the spectral, simulation and
// convergence experiments.

#include <cstdint>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "trielab/env_models.hpp"
#include "trielab/error.hpp"
#include "trielab/experiments.hpp"

namespace {

enum Exit { kOk = 0, kInternal = 1, kConfig = 2, kEnvInvalid = 3, kNoPrediction = 4, kCapExceeded = 5 };

int exit_code_for(trielab::ErrorCode code) {
  using trielab::ErrorCode;
  switch (code) {
    case ErrorCode::BadRows:
    case ErrorCode::BadSupport:
    case ErrorCode::BadAlpha:
    case ErrorCode::NotRegular:
    case ErrorCode::ParseError:
    case ErrorCode::NotStrictlyConvex:
    case ErrorCode::DomainTooNarrow:
      return kEnvInvalid;
    case ErrorCode::OutsideRegime:
    case ErrorCode::ConditionsNotMet:
    case ErrorCode::PredictionUnavailable:
      return kNoPrediction;
    case ErrorCode::CapExceeded:
    case ErrorCode::DepthCapExceeded:
      return kCapExceeded;
    case ErrorCode::NoConvergence:
      return kInternal;
    default:
      return kConfig;
  }
}

int fail(std::string_view code, const std::string& detail, int exit_code) {
  std::string line = detail;
  for (char& c : line)
    if (c == '\n') c = ' ';
  std::cerr << "error: " << code << ": " << line << '\n';
  return exit_code;
}

std::uint64_t parse_seed(const std::string& text, const char* source) {
  std::size_t used = 0;
  std::uint64_t seed = 0;
  try {
    seed = std::stoull(text, &used, 0);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size() || text.front() == '-')
    throw trielab::Error(trielab::ErrorCode::ConfigError, std::string("bad seed '") + text + "' from " + source);
  return seed;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace trielab;

  CLI::App app{"Tries in Markov and random environments: spectral constants and Monte Carlo checks"};
  std::string mode_text, stat_text, format_text = "csv", m_grid_text, theta_grid_text, seed_text;
  std::optional<int> j;
  std::optional<double> alpha;
  ExperimentConfig config;

  app.add_option("mode", mode_text, "spectral | simulate | converge | profile | coupon")->required();
  app.add_option("--env", config.env_path, "environment file")->required();
  auto* j_opt = app.add_option("--j", j, "ball threshold j");
  app.add_option("--alpha", alpha, "power regime exponent, j = m^alpha")->excludes(j_opt);
  app.add_option("--stat", stat_text, "statistic fitted by converge: height | saturation");
  app.add_option("--m-grid", m_grid_text, "geometric ball-count grid START:FACTOR:COUNT");
  app.add_option("--reps", config.replicates, "replicates per grid point");
  app.add_option("--seed", seed_text, "master seed (default: TRIELAB_SEED, else 0)");
  app.add_option("--theta-grid", theta_grid_text, "LO:HI:STEPS");
  app.add_option("--depth", config.depth, "generation for profile and coupon");
  app.add_option("--cap", config.cap, "box enumeration cap for profile");
  app.add_option("--out", config.output, "output path")->required();
  app.add_option("--format", format_text, "csv | json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("ConfigError", e.what(), kConfig);
  }

  try {
    config.mode = parse_mode(mode_text);
    config.format = parse_format(format_text);
    config.j = j;
    config.alpha = alpha;
    if (!stat_text.empty()) config.stat = parse_statistic(stat_text);
    if (!m_grid_text.empty()) config.m_grid = parse_geometric_grid(m_grid_text);
    if (!theta_grid_text.empty()) config.theta_grid = parse_theta_grid(theta_grid_text);
    if (!seed_text.empty()) config.master_seed = parse_seed(seed_text, "--seed");
    else if (const char* env_seed = std::getenv("TRIELAB_SEED")) config.master_seed = parse_seed(env_seed, "TRIELAB_SEED");
    validate(config);
  } catch (const Error& e) {
    return fail(error_code_name(e.code()), e.what(), kConfig);
  }

  std::optional<EnvironmentModel> env;
  try {
    env = load_env_file(config.env_path);
  } catch (const Error& e) {
    return fail(error_code_name(e.code()), e.what(), e.code() == ErrorCode::IoError ? kConfig : kEnvInvalid);
  }

  try {
    switch (config.mode) {
      case Mode::Converge: {
        const ConvergenceReport report = run_converge(*env, config);
        emit_report(report, config.output, config.format);
        if (!report.prediction_available)
          return fail(error_code_name(ErrorCode::PredictionUnavailable), report.prediction_note, kNoPrediction);
        break;
      }
      case Mode::Spectral: write_text(config.output, run_spectral(*env, config)); break;
      case Mode::Simulate: write_text(config.output, run_simulate(*env, config)); break;
      case Mode::Profile: write_text(config.output, run_profile(*env, config)); break;
      case Mode::Coupon: write_text(config.output, run_coupon(*env, config)); break;
    }
  } catch (const Error& e) {
    return fail(error_code_name(e.code()), e.what(), exit_code_for(e.code()));
  } catch (const std::exception& e) {
    return fail("Internal", e.what(), kInternal);
  }
  return kOk;
}
