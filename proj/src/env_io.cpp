#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include "trielab/env_models.hpp"
#include "trielab/error.hpp"

namespace trielab {

namespace {

struct Entry {
  std::string value;
  int line = 0;
};

[[noreturn]] void parse_fail(int line, const std::string& what) {
  throw Error(ErrorCode::ParseError, "line " + std::to_string(line) + ": " + what);
}

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

int significant_digits(const std::string& token) {
  int digits = 0;
  bool leading = true;
  for (char c : token) {
    if (c == 'e' || c == 'E') break;
    if (!std::isdigit(static_cast<unsigned char>(c))) continue;
    if (leading && c == '0') continue;
    leading = false;
    ++digits;
  }
  return digits;
}

double parse_number(const std::string& token, int line) {
  if (significant_digits(token) > 17) parse_fail(line, "more than 17 significant digits in '" + token + "'");
  char* end = nullptr;
  const double v = std::strtod(token.c_str(), &end);
  if (end != token.c_str() + token.size() || token.empty()) parse_fail(line, "not a decimal number: '" + token + "'");
  return v;
}

std::vector<double> parse_numbers(const Entry& e) {
  std::istringstream in(e.value);
  std::vector<double> out;
  std::string token;
  while (in >> token) out.push_back(parse_number(token, e.line));
  return out;
}

std::size_t parse_index(const std::string& s, int line, std::size_t upper, const char* what) {
  char* end = nullptr;
  const long v = std::strtol(s.c_str(), &end, 10);
  if (s.empty() || end != s.c_str() + s.size() || v < 1 || static_cast<std::size_t>(v) > upper)
    parse_fail(line, std::string("bad ") + what + " index '" + s + "'");
  return static_cast<std::size_t>(v - 1);
}

void fill_row(Matrix& m, std::size_t i, const Entry& e, std::size_t K) {
  const auto values = parse_numbers(e);
  if (values.size() != K)
    parse_fail(e.line, "expected " + std::to_string(K) + " numbers, got " + std::to_string(values.size()));
  for (std::size_t j = 0; j < K; ++j) m(i, j) = values[j];
}

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

EnvironmentSpec parse_env_text(const std::string& text) {
  std::map<std::string, Entry> entries;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  bool in_env = false;
  while (std::getline(in, raw)) {
    ++line;
    if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    const std::string s = trim(raw);
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s != "[env]") parse_fail(line, "unknown section " + s);
      in_env = true;
      continue;
    }
    if (!in_env) parse_fail(line, "key outside [env] section");
    const auto eq = s.find('=');
    if (eq == std::string::npos) parse_fail(line, "expected key = value");
    const std::string key = trim(s.substr(0, eq));
    if (entries.count(key)) parse_fail(line, "duplicate key " + key);
    entries[key] = Entry{trim(s.substr(eq + 1)), line};
  }

  auto require = [&](const std::string& key) -> const Entry& {
    auto it = entries.find(key);
    if (it == entries.end()) parse_fail(line, "missing key " + key);
    return it->second;
  };

  EnvironmentSpec spec;
  const Entry& kind = require("kind");
  if (kind.value == "deterministic") spec.kind = EnvKind::Deterministic;
  else if (kind.value == "dirichlet") spec.kind = EnvKind::DirichletRows;
  else if (kind.value == "mixture") spec.kind = EnvKind::FiniteMixture;
  else parse_fail(kind.line, "unknown kind '" + kind.value + "'");

  const Entry& k_entry = require("K");
  const double k_value = parse_number(k_entry.value, k_entry.line);
  if (k_value < 2 || k_value != static_cast<double>(static_cast<long>(k_value)) || k_value > 64)
    parse_fail(k_entry.line, "K must be an integer in [2, 64]");
  const auto K = static_cast<std::size_t>(k_value);
  spec.K = K;

  for (const auto& [key, e] : entries) {
    if (key == "kind" || key == "K" || key == "weights") continue;
    const bool det = key.rfind("row.", 0) == 0;
    const bool dir = key.rfind("alpha.", 0) == 0;
    const bool comp = key.rfind("comp.", 0) == 0;
    if ((det && spec.kind != EnvKind::Deterministic) || (dir && spec.kind != EnvKind::DirichletRows) ||
        (comp && spec.kind != EnvKind::FiniteMixture) || !(det || dir || comp))
      parse_fail(e.line, "unexpected key " + key + " for kind " + kind.value);
  }

  switch (spec.kind) {
    case EnvKind::Deterministic:
      spec.rows = Matrix(K, K);
      for (std::size_t i = 0; i < K; ++i) fill_row(spec.rows, i, require("row." + std::to_string(i + 1)), K);
      break;
    case EnvKind::DirichletRows:
      spec.alpha = Matrix(K, K);
      for (std::size_t i = 0; i < K; ++i) fill_row(spec.alpha, i, require("alpha." + std::to_string(i + 1)), K);
      break;
    case EnvKind::FiniteMixture: {
      spec.weights = parse_numbers(require("weights"));
      const std::size_t M = spec.weights.size();
      if (M == 0) parse_fail(require("weights").line, "no mixture weights");
      spec.components.assign(M, Matrix(K, K));
      for (const auto& [key, e] : entries) {
        if (key.rfind("comp.", 0) != 0) continue;
        // comp.<m>.row.<i>
        const auto dot = key.find('.', 5);
        if (dot == std::string::npos || key.compare(dot, 5, ".row.") != 0)
          parse_fail(e.line, "expected comp.<m>.row.<i>, got " + key);
        parse_index(key.substr(5, dot - 5), e.line, M, "component");
        parse_index(key.substr(dot + 5), e.line, K, "row");
      }
      for (std::size_t m = 0; m < M; ++m)
        for (std::size_t i = 0; i < K; ++i)
          fill_row(spec.components[m], i,
                   require("comp." + std::to_string(m + 1) + ".row." + std::to_string(i + 1)), K);
      break;
    }
  }
  return spec;
}

EnvironmentModel load_env_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return make_env(parse_env_text(buf.str()));
}

std::string serialize_env(const EnvironmentModel& env) {
  const EnvironmentSpec& spec = env.spec();
  std::ostringstream out;
  out << "[env]\n"
      << "kind = " << env_kind_name(spec.kind) << "\n"
      << "K = " << spec.K << "\n";
  auto write_row = [&](const std::string& key, const Matrix& m, std::size_t i) {
    out << key << " =";
    for (std::size_t j = 0; j < spec.K; ++j) out << ' ' << format_number(m(i, j));
    out << '\n';
  };
  switch (spec.kind) {
    case EnvKind::Deterministic:
      for (std::size_t i = 0; i < spec.K; ++i) write_row("row." + std::to_string(i + 1), spec.rows, i);
      break;
    case EnvKind::DirichletRows:
      for (std::size_t i = 0; i < spec.K; ++i) write_row("alpha." + std::to_string(i + 1), spec.alpha, i);
      break;
    case EnvKind::FiniteMixture:
      out << "weights =";
      for (double q : spec.weights) out << ' ' << format_number(q);
      out << '\n';
      for (std::size_t m = 0; m < spec.components.size(); ++m)
        for (std::size_t i = 0; i < spec.K; ++i)
          write_row("comp." + std::to_string(m + 1) + ".row." + std::to_string(i + 1), spec.components[m], i);
      break;
  }
  return out.str();
}

}  // namespace trielab
