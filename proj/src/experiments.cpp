#include "trielab/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "trielab/cascade_sim.hpp"
#include "trielab/error.hpp"
#include "trielab/rng.hpp"
#include "trielab/spectral_core.hpp"

namespace trielab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

[[noreturn]] void config_fail(const std::string& what) { throw Error(ErrorCode::ConfigError, what); }

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::string part;
  std::istringstream in(text);
  while (std::getline(in, part, sep)) parts.push_back(part);
  if (!text.empty() && text.back() == sep) parts.emplace_back();
  return parts;
}

double to_double(const std::string& s, const std::string& what) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) config_fail("bad number '" + s + "' in " + what);
  return v;
}

double median_of(std::vector<double> xs) {
  if (xs.empty()) return kNaN;
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  return n % 2 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

ConvergenceRow summarize(std::uint64_t m, const std::string& stat, const std::vector<double>& xs) {
  ConvergenceRow row;
  row.m = m;
  row.stat = stat;
  row.count = xs.size();
  double sum = 0.0;
  for (double x : xs) sum += x;
  row.mean = sum / static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - row.mean) * (x - row.mean);
  row.stderr_ = xs.size() > 1 ? std::sqrt(ss / static_cast<double>(xs.size() - 1) / static_cast<double>(xs.size())) : 0.0;
  row.median = median_of(xs);
  return row;
}

bool same(double a, double b) { return (std::isnan(a) && std::isnan(b)) || a == b; }

std::string json_number(double v) { return std::isfinite(v) ? format_number(v) : "null"; }

double json_value(const nlohmann::json& j) { return j.is_null() ? kNaN : j.get<double>(); }

EnvironmentModel load_for(const ExperimentConfig& config) { return load_env_file(config.env_path); }

}  // namespace

std::string_view mode_name(Mode mode) noexcept {
  switch (mode) {
    case Mode::Spectral: return "spectral";
    case Mode::Simulate: return "simulate";
    case Mode::Converge: return "converge";
    case Mode::Profile: return "profile";
    case Mode::Coupon: return "coupon";
  }
  return "unknown";
}

Mode parse_mode(const std::string& text) {
  for (Mode m : {Mode::Spectral, Mode::Simulate, Mode::Converge, Mode::Profile, Mode::Coupon})
    if (text == mode_name(m)) return m;
  config_fail("unknown mode '" + text + "'");
}

Format parse_format(const std::string& text) {
  if (text == "csv") return Format::Csv;
  if (text == "json") return Format::Json;
  config_fail("unknown format '" + text + "'");
}

Statistic parse_statistic(const std::string& text) {
  if (text == "height") return Statistic::Height;
  if (text == "saturation") return Statistic::Saturation;
  config_fail("unknown statistic '" + text + "'");
}

std::vector<std::uint64_t> GeometricGrid::values() const {
  std::vector<std::uint64_t> out;
  double x = static_cast<double>(start);
  for (int i = 0; i < count; ++i, x *= factor) out.push_back(static_cast<std::uint64_t>(std::llround(x)));
  return out;
}

std::vector<double> ThetaGrid::values() const {
  std::vector<double> out;
  if (steps == 1) return {lo};
  for (int i = 0; i < steps; ++i) out.push_back(i == steps - 1 ? hi : lo + (hi - lo) * i / (steps - 1));
  return out;
}

GeometricGrid parse_geometric_grid(const std::string& text) {
  const auto parts = split(text, ':');
  if (parts.size() != 3) config_fail("m-grid must be START:FACTOR:COUNT, got '" + text + "'");
  GeometricGrid g;
  const double start = to_double(parts[0], "m-grid");
  const double count = to_double(parts[2], "m-grid");
  if (start < 1 || start != std::floor(start)) config_fail("m-grid start must be a positive integer");
  if (count < 1 || count != std::floor(count)) config_fail("m-grid count must be a positive integer");
  g.start = static_cast<std::uint64_t>(start);
  g.factor = to_double(parts[1], "m-grid");
  g.count = static_cast<int>(count);
  return g;
}

ThetaGrid parse_theta_grid(const std::string& text) {
  const auto parts = split(text, ':');
  if (parts.size() != 3) config_fail("theta-grid must be LO:HI:STEPS, got '" + text + "'");
  ThetaGrid g;
  g.lo = to_double(parts[0], "theta-grid");
  g.hi = to_double(parts[1], "theta-grid");
  const double steps = to_double(parts[2], "theta-grid");
  if (steps < 1 || steps != std::floor(steps)) config_fail("theta-grid steps must be a positive integer");
  g.steps = static_cast<int>(steps);
  return g;
}

void validate(const ExperimentConfig& c) {
  if (c.replicates < 1) config_fail("replicates must be at least 1");
  if (!(c.m_grid.factor > 1.0)) config_fail("m-grid factor must exceed 1");
  if (c.m_grid.start < 1 || c.m_grid.count < 1) config_fail("m-grid needs start >= 1 and count >= 1");
  const auto ms = c.m_grid.values();
  for (std::size_t i = 1; i < ms.size(); ++i)
    if (ms[i] <= ms[i - 1]) config_fail("m-grid is not strictly increasing after rounding");
  if (c.j && c.alpha) config_fail("--j and --alpha are exclusive");
  if (c.j && *c.j < 1) config_fail("j must be at least 1");
  if (c.alpha && !(*c.alpha > 0.0 && *c.alpha < 1.0)) config_fail("alpha must lie in (0, 1)");
  if ((c.mode == Mode::Converge || c.mode == Mode::Simulate) && !c.j && !c.alpha)
    config_fail(std::string(mode_name(c.mode)) + " needs --j or --alpha");
  if (c.alpha && c.stat == Statistic::Saturation) config_fail("--alpha fixes the statistic to height");
  if (c.j && *c.j == 1 && c.stat == Statistic::Height) config_fail("height needs j >= 2");
  if (c.theta_grid.steps < 1 || !(c.theta_grid.lo <= c.theta_grid.hi)) config_fail("theta-grid needs LO <= HI");
  if (c.depth < 0) config_fail("depth must be nonnegative");
  if (c.cap < 1) config_fail("cap must be at least 1");
}

Statistic fitted_statistic(const ExperimentConfig& c) {
  if (c.stat) return *c.stat;
  return c.j && *c.j == 1 ? Statistic::Saturation : Statistic::Height;
}

bool ConvergenceReport::operator==(const ConvergenceReport& o) const {
  if (rows.size() != o.rows.size()) return false;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto &a = rows[i], &b = o.rows[i];
    if (a.m != b.m || a.stat != b.stat || !same(a.mean, b.mean) || !same(a.median, b.median) ||
        !same(a.stderr_, b.stderr_) || a.count != b.count)
      return false;
  }
  return same(fitted_slope, o.fitted_slope) && same(fit_r2, o.fit_r2) && same(predicted, o.predicted) &&
         same(relative_gap, o.relative_gap);
}

LineFit fit_slope(const std::vector<std::pair<double, double>>& points) {
  const std::size_t n = points.size();
  if (n < 3) throw Error(ErrorCode::DegenerateX, "need at least 3 points, got " + std::to_string(n));
  double mx = 0.0, my = 0.0;
  for (const auto& [x, y] : points) {
    mx += x;
    my += y;
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const auto& [x, y] : points) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
    syy += (y - my) * (y - my);
  }
  if (!(sxx > 0.0)) throw Error(ErrorCode::DegenerateX, "all x values are equal");
  LineFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  // A constant y is fitted exactly.
  fit.r2 = syy > 0.0 ? sxy * sxy / (sxx * syy) : 1.0;
  return fit;
}

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& task) {
  const std::size_t workers = std::min<std::size_t>(count, std::max(1u, std::thread::hardware_concurrency()));
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < count;) {
      try {
        task(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  // The lowest failing index wins, so errors do not depend on scheduling.
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

ConvergenceReport run_converge(const EnvironmentModel& env, const ExperimentConfig& config,
                               std::vector<ReplicateValues>* raw) {
  validate(config);
  const Statistic stat = fitted_statistic(config);
  const auto ms = config.m_grid.values();
  const auto reps = static_cast<std::size_t>(config.replicates);
  const bool bfs = config.j && *config.j == 1;
  SimulationOptions options;

  std::vector<ReplicateValues> values(ms.size());
  for (auto& v : values) {
    v.height.assign(bfs ? 0 : reps, 0.0);
    v.saturation.assign(reps, 0.0);
  }
  parallel_for(ms.size() * reps, [&](std::size_t task) {
    const std::size_t i = task / reps, r = task % reps;
    RandomStream rng(derive_seed({config.master_seed, i, r}));
    TrieObservation obs;
    if (config.alpha) obs = simulate_power_regime(env, ms[i], *config.alpha, rng, options);
    else if (bfs) obs = simulate_saturation(env, ms[i], 1, rng, options);
    else obs = simulate_occupancy(env, ms[i], *config.j, rng, options);
    if (!bfs) values[i].height[r] = obs.height;
    values[i].saturation[r] = obs.saturation;
  });

  ConvergenceReport report;
  std::vector<std::pair<double, double>> points;
  for (std::size_t i = 0; i < ms.size(); ++i) {
    if (!bfs) report.rows.push_back(summarize(ms[i], "height", values[i].height));
    report.rows.push_back(summarize(ms[i], "saturation", values[i].saturation));
    const double x = std::log(static_cast<double>(ms[i]));
    points.emplace_back(x, stat == Statistic::Height ? report.rows[report.rows.size() - 2].mean
                                                     : report.rows.back().median);
  }
  const LineFit fit = fit_slope(points);
  report.fitted_slope = fit.slope;
  report.fit_r2 = fit.r2;

  try {
    if (stat == Statistic::Saturation) report.predicted = predicted_saturation_constant(env);
    else if (config.alpha) report.predicted = predicted_power_height_constant(env, *config.alpha);
    else report.predicted = predicted_height_constant(env, *config.j);
    report.relative_gap = std::abs(report.fitted_slope - report.predicted) / report.predicted;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::OutsideRegime && e.code() != ErrorCode::ConditionsNotMet) throw;
    report.prediction_available = false;
    report.prediction_note = std::string(error_code_name(e.code())) + ": " + e.what();
    report.predicted = kNaN;
    report.relative_gap = kNaN;
  }
  if (raw) *raw = std::move(values);
  return report;
}

ConvergenceReport run_converge(const ExperimentConfig& config) { return run_converge(load_for(config), config); }

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

std::string render_report(const ConvergenceReport& report, Format format) {
  std::ostringstream out;
  if (format == Format::Csv) {
    out << "m,stat,mean,median,stderr,count\n";
    for (const auto& r : report.rows)
      out << r.m << ',' << r.stat << ',' << format_number(r.mean) << ',' << format_number(r.median) << ','
          << format_number(r.stderr_) << ',' << r.count << '\n';
    out << "slope," << format_number(report.fitted_slope) << '\n'
        << "r2," << format_number(report.fit_r2) << '\n'
        << "predicted," << format_number(report.predicted) << '\n'
        << "relative_gap," << format_number(report.relative_gap) << '\n';
    return out.str();
  }
  out << "{\n  \"rows\": [";
  for (std::size_t i = 0; i < report.rows.size(); ++i) {
    const auto& r = report.rows[i];
    out << (i ? ",\n" : "\n") << "    {\"m\": " << r.m << ", \"stat\": \"" << r.stat
        << "\", \"mean\": " << json_number(r.mean) << ", \"median\": " << json_number(r.median)
        << ", \"stderr\": " << json_number(r.stderr_) << ", \"count\": " << r.count << "}";
  }
  out << (report.rows.empty() ? "],\n" : "\n  ],\n");
  out << "  \"fitted_slope\": " << json_number(report.fitted_slope) << ",\n"
      << "  \"fit_r2\": " << json_number(report.fit_r2) << ",\n"
      << "  \"predicted\": " << json_number(report.predicted) << ",\n"
      << "  \"relative_gap\": " << json_number(report.relative_gap) << ",\n"
      << "  \"prediction_available\": " << (report.prediction_available ? "true" : "false") << ",\n"
      << "  \"prediction_note\": " << nlohmann::json(report.prediction_note).dump() << "\n}\n";
  return out.str();
}

ConvergenceReport parse_report(const std::string& text, Format format) {
  ConvergenceReport report;
  if (format == Format::Json) {
    const auto j = nlohmann::json::parse(text);
    for (const auto& r : j.at("rows"))
      report.rows.push_back({r.at("m").get<std::uint64_t>(), r.at("stat").get<std::string>(), json_value(r.at("mean")),
                             json_value(r.at("median")), json_value(r.at("stderr")),
                             r.at("count").get<std::uint64_t>()});
    report.fitted_slope = json_value(j.at("fitted_slope"));
    report.fit_r2 = json_value(j.at("fit_r2"));
    report.predicted = json_value(j.at("predicted"));
    report.relative_gap = json_value(j.at("relative_gap"));
    report.prediction_available = j.at("prediction_available").get<bool>();
    report.prediction_note = j.at("prediction_note").get<std::string>();
    return report;
  }
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "m,stat,mean,median,stderr,count")
    throw Error(ErrorCode::ParseError, "line 1: unexpected report header");
  int lineno = 1;
  auto num = [&](const std::string& s) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size())
      throw Error(ErrorCode::ParseError, "line " + std::to_string(lineno) + ": bad number '" + s + "'");
    return v;
  };
  while (std::getline(in, line)) {
    ++lineno;
    const auto f = split(line, ',');
    if (f.size() == 6) {
      report.rows.push_back({std::stoull(f[0]), f[1], num(f[2]), num(f[3]), num(f[4]), std::stoull(f[5])});
    } else if (f.size() == 2) {
      const double v = num(f[1]);
      if (f[0] == "slope") report.fitted_slope = v;
      else if (f[0] == "r2") report.fit_r2 = v;
      else if (f[0] == "predicted") report.predicted = v;
      else if (f[0] == "relative_gap") report.relative_gap = v;
      else throw Error(ErrorCode::ParseError, "line " + std::to_string(lineno) + ": unknown footer " + f[0]);
    } else {
      throw Error(ErrorCode::ParseError, "line " + std::to_string(lineno) + ": unexpected field count");
    }
  }
  report.prediction_available = !std::isnan(report.predicted);
  return report;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  out << text;
  out.flush();
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
}

void emit_report(const ConvergenceReport& report, const std::string& path, Format format) {
  write_text(path, render_report(report, format));
}

std::string run_spectral(const EnvironmentModel& env, const ExperimentConfig& config) {
  const SpectralProfile profile = spectral_profile(env, config.theta_grid.values());
  std::ostringstream out;
  if (config.format == Format::Csv) {
    out << "theta,rho,log_rho,drift,psi,phi,f\n";
    for (const auto& row : profile.rows) {
      const ShapeValues& s = row.shape;
      out << format_number(s.theta) << ',' << format_number(std::exp(s.log_rho)) << ',' << format_number(s.log_rho)
          << ',' << format_number(s.drift) << ',' << format_number(s.psi) << ',' << format_number(s.phi) << ','
          << format_number(s.f) << '\n';
    }
    return out.str();
  }
  const ConstantsReport& c = profile.constants;
  out << "{\n  \"rows\": [";
  for (std::size_t i = 0; i < profile.rows.size(); ++i) {
    const ShapeValues& s = profile.rows[i].shape;
    out << (i ? ",\n" : "\n") << "    {\"theta\": " << json_number(s.theta)
        << ", \"rho\": " << json_number(std::exp(s.log_rho)) << ", \"log_rho\": " << json_number(s.log_rho)
        << ", \"drift\": " << json_number(s.drift) << ", \"psi\": " << json_number(s.psi)
        << ", \"phi\": " << json_number(s.phi) << ", \"f\": " << json_number(s.f) << "}";
  }
  out << (profile.rows.empty() ? "],\n" : "\n  ],\n");
  out << "  \"constants\": {\"c_star_lower\": " << json_number(c.c_star_lower)
      << ", \"c_star_upper\": " << json_number(c.c_star_upper)
      << ", \"theta_star_lower\": " << json_number(c.theta_star_lower)
      << ", \"theta_star_upper\": " << json_number(c.theta_star_upper)
      << ", \"condition_saturation_ok\": " << (c.condition_saturation_ok ? "true" : "false")
      << ", \"notes\": " << nlohmann::json(c.notes).dump() << "}\n}\n";
  return out.str();
}

std::string run_simulate(const EnvironmentModel& env, const ExperimentConfig& config) {
  validate(config);
  const std::uint64_t m = config.m_grid.start;
  const auto reps = static_cast<std::size_t>(config.replicates);
  std::vector<TrieObservation> obs(reps);
  parallel_for(reps, [&](std::size_t r) {
    RandomStream rng(derive_seed({config.master_seed, 0, r}));
    if (config.alpha) obs[r] = simulate_power_regime(env, m, *config.alpha, rng);
    else if (*config.j == 1) obs[r] = simulate_saturation(env, m, 1, rng);
    else obs[r] = simulate_occupancy(env, m, *config.j, rng);
  });
  std::ostringstream out;
  if (config.format == Format::Csv) {
    out << "replicate,m,j,height,saturation,expanded_nodes\n";
    for (std::size_t r = 0; r < reps; ++r)
      out << r << ',' << obs[r].m << ',' << obs[r].j << ',' << obs[r].height << ',' << obs[r].saturation << ','
          << obs[r].expanded_nodes << '\n';
    return out.str();
  }
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t r = 0; r < reps; ++r)
    rows.push_back({{"replicate", r},
                    {"m", obs[r].m},
                    {"j", obs[r].j},
                    {"height", obs[r].height},
                    {"saturation", obs[r].saturation},
                    {"expanded_nodes", obs[r].expanded_nodes}});
  return nlohmann::json{{"rows", rows}}.dump(2) + "\n";
}

std::string run_profile(const EnvironmentModel& env, const ExperimentConfig& config) {
  const auto thetas = config.theta_grid.values();
  std::vector<Window> windows;
  for (double t : thetas) windows.push_back({t, 1.0, 0.0});
  RandomStream rng(derive_seed({config.master_seed, 0, 0}));
  const LevelProfile p = enumerate_level(env, config.depth, thetas, windows, config.cap, rng);
  std::ostringstream out;
  if (config.format == Format::Csv) {
    out << "theta,laplace_total,martingale,window_count,min_log_size,max_log_size\n";
    for (std::size_t i = 0; i < p.laplace.size(); ++i) {
      double total = 0.0;
      for (double x : p.laplace[i].per_type) total += x;
      out << format_number(thetas[i]) << ',' << format_number(total) << ',' << format_number(p.martingale[i].value)
          << ',' << p.window_counts[i].count << ',' << format_number(p.min_log_size) << ','
          << format_number(p.max_log_size) << '\n';
    }
    return out.str();
  }
  out << "{\n  \"n\": " << p.n << ",\n  \"truncated\": " << (p.truncated ? "true" : "false")
      << ",\n  \"min_log_size\": " << json_number(p.min_log_size)
      << ",\n  \"max_log_size\": " << json_number(p.max_log_size) << ",\n  \"rows\": [";
  for (std::size_t i = 0; i < p.laplace.size(); ++i) {
    out << (i ? ",\n" : "\n") << "    {\"theta\": " << json_number(thetas[i]) << ", \"laplace\": [";
    for (std::size_t k = 0; k < p.laplace[i].per_type.size(); ++k)
      out << (k ? ", " : "") << json_number(p.laplace[i].per_type[k]);
    out << "], \"martingale\": " << json_number(p.martingale[i].value)
        << ", \"window_count\": " << p.window_counts[i].count << "}";
  }
  out << (p.laplace.empty() ? "]\n}\n" : "\n  ]\n}\n");
  return out.str();
}

std::string run_coupon(const EnvironmentModel& env, const ExperimentConfig& config) {
  if (config.replicates < 1) config_fail("replicates must be at least 1");
  const int j = config.j.value_or(1);
  const auto reps = static_cast<std::size_t>(config.replicates);
  std::vector<CouponOutcome> outcomes(reps);
  parallel_for(reps, [&](std::size_t r) {
    RandomStream rng(derive_seed({config.master_seed, 0, r}));
    outcomes[r] = coupon_time(env, config.depth, j, rng);
  });
  std::ostringstream out;
  if (config.format == Format::Csv) {
    out << "replicate,n,j,throws\n";
    for (std::size_t r = 0; r < reps; ++r)
      out << r << ',' << outcomes[r].n << ',' << outcomes[r].j << ',' << outcomes[r].throws << '\n';
    return out.str();
  }
  nlohmann::json rows = nlohmann::json::array();
  std::vector<double> throws;
  for (std::size_t r = 0; r < reps; ++r) {
    rows.push_back({{"replicate", r}, {"n", outcomes[r].n}, {"j", outcomes[r].j}, {"throws", outcomes[r].throws}});
    throws.push_back(static_cast<double>(outcomes[r].throws));
  }
  return nlohmann::json{{"rows", rows}, {"median_throws", median_of(throws)}}.dump(2) + "\n";
}

}  // namespace trielab
