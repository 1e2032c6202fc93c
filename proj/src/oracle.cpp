#include "trielab/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "trielab/error.hpp"

namespace trielab::oracle {

namespace {

using Word = std::vector<std::size_t>;

std::map<Word, int> prefix_counts(const WordSet& ws, std::size_t n) {
  std::map<Word, int> counts;
  for (const Word& w : ws.words) ++counts[Word(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(n))];
  return counts;
}

std::size_t pick(std::span<const double> row, const EnvironmentModel& env, std::size_t type, double u) {
  double acc = 0.0;
  std::size_t last = 0;
  for (std::size_t k = 0; k < row.size(); ++k) {
    if (!env.supported(type, k)) continue;
    last = k;
    acc += row[k];
    if (u < acc) return k;
  }
  return last;
}

Matrix multiply(const Matrix& a, const Matrix& b) {
  const std::size_t K = a.rows();
  Matrix c(K, K);
  for (std::size_t i = 0; i < K; ++i)
    for (std::size_t l = 0; l < K; ++l)
      for (std::size_t j = 0; j < K; ++j) c(i, j) += a(i, l) * b(l, j);
  return c;
}

double entry_sum(const Matrix& a) {
  double s = 0.0;
  for (double x : a.data()) s += x;
  return s;
}

}  // namespace

TrieShape brute_force_trie(const WordSet& ws, int j) {
  if (ws.words.empty()) return {};
  const std::size_t len = ws.words.front().size();
  for (const Word& w : ws.words)
    if (w.size() != len) throw Error(ErrorCode::LengthTooShort, "words of unequal length");

  TrieShape shape{-1, -1};
  for (std::size_t n = 0; n <= len && shape.height < 0; ++n) {
    const auto counts = prefix_counts(ws, n);
    const bool all_small = std::all_of(counts.begin(), counts.end(), [&](const auto& c) { return c.second < j; });
    if (all_small) shape.height = static_cast<int>(n);
  }
  if (shape.height < 0)
    throw Error(ErrorCode::LengthTooShort, "words of length " + std::to_string(len) + " do not separate");

  // Every supported sequence, level by level, starting from the root type.
  const std::size_t K = ws.support.size();
  std::vector<Word> level{Word{}};
  for (std::size_t n = 0; n <= len; ++n) {
    const auto counts = prefix_counts(ws, n);
    for (const Word& s : level) {
      auto it = counts.find(s);
      if (it == counts.end() || it->second < j) {
        shape.saturation = static_cast<int>(n);
        return shape;
      }
    }
    std::vector<Word> next;
    for (const Word& s : level) {
      const std::size_t from = s.empty() ? 0 : s.back();
      for (std::size_t k = 0; k < K; ++k)
        if (ws.support(from, k)) {
          Word t = s;
          t.push_back(k);
          next.push_back(std::move(t));
        }
    }
    level = std::move(next);
  }
  throw Error(ErrorCode::LengthTooShort, "saturation level beyond word length");
}

GridMax grid_sup(const std::function<double(double)>& objective, double lo, double hi, int steps) {
  if (steps < 2) steps = 2;
  const double h = (hi - lo) / steps;
  GridMax best{lo, objective(lo)};
  int best_i = 0;
  for (int i = 1; i <= steps; ++i) {
    const double x = i == steps ? hi : lo + i * h;
    const double y = objective(x);
    if (y > best.max) {
      best = {x, y};
      best_i = i;
    }
  }
  double a = lo + std::max(0, best_i - 1) * h;
  double b = std::min(hi, lo + std::min(steps, best_i + 1) * h);
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = objective(c), fd = objective(d);
  for (int it = 0; it < 200 && b - a > 1e-14 * (1.0 + std::abs(a)); ++it) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = objective(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = objective(d);
    }
  }
  const double x = 0.5 * (a + b);
  const double y = objective(x);
  if (y > best.max) best = {x, y};
  return best;
}

WordSet sample_words(const EnvironmentModel& env, std::size_t m, std::size_t length, RandomStream& rng) {
  const std::size_t K = env.K();
  WordSet ws;
  ws.support = env.support();
  ws.words.assign(m, Word(length));
  std::vector<double> row(K);
  if (!env.is_random()) {
    const Matrix& p = env.mean_matrix();
    for (Word& w : ws.words) {
      std::size_t type = 0;
      for (std::size_t t = 0; t < length; ++t) w[t] = type = pick(p.row(type), env, type, rng.uniform());
    }
    return ws;
  }
  // One realized cascade: the row of a box is a function of its key alone.
  const std::uint64_t root = rng();
  for (Word& w : ws.words) {
    std::uint64_t key = root;
    std::size_t type = 0;
    for (std::size_t t = 0; t < length; ++t) {
      RandomStream box(key);
      env.sample_row(type, box, row);
      const std::size_t k = pick(row, env, type, rng.uniform());
      key = child_key(key, k);
      w[t] = type = k;
    }
  }
  return ws;
}

Matrix tilted(const EnvironmentModel& env, double theta) {
  const std::size_t K = env.K();
  Matrix a(K, K);
  for (std::size_t i = 0; i < K; ++i)
    for (std::size_t j = 0; j < K; ++j)
      if (env.supported(i, j)) a(i, j) = env.laplace_entry(i, j, theta);
  return a;
}

double log_perron_root(const Matrix& a) {
  const double norm = entry_sum(a);
  Matrix b = a;
  for (std::size_t i = 0; i < b.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) b(i, j) /= norm;
  double log_norm = std::log(norm);  // ln ||A^(2^k)|| = log_norm + ln ||b||, ||b|| = 1
  double scale = 1.0;                // 2^k
  for (int k = 0; k < 60; ++k) {
    Matrix sq = multiply(b, b);
    const double s = entry_sum(sq);
    for (std::size_t i = 0; i < sq.rows(); ++i)
      for (std::size_t j = 0; j < sq.cols(); ++j) sq(i, j) /= s;
    b = std::move(sq);
    log_norm = 2.0 * log_norm + std::log(s);
    scale *= 2.0;
  }
  return log_norm / scale;
}

std::vector<double> first_row_of_power(const Matrix& a, int n) {
  const std::size_t K = a.rows();
  std::vector<double> x(K, 0.0);
  x[0] = 1.0;
  for (int g = 0; g < n; ++g) {
    std::vector<double> y(K, 0.0);
    for (std::size_t i = 0; i < K; ++i)
      for (std::size_t j = 0; j < K; ++j) y[j] += x[i] * a(i, j);
    x = std::move(y);
  }
  return x;
}

std::vector<double> laplace_by_words(const Matrix& p, int n, double theta) {
  const std::size_t K = p.rows();
  std::vector<double> out(K, 0.0);
  Word digits(static_cast<std::size_t>(n), 0);
  while (true) {
    double size = 1.0;
    std::size_t type = 0;
    for (std::size_t d : digits) {
      size *= p(type, d);
      type = d;
    }
    if (size > 0.0) out[n == 0 ? 0 : digits.back()] += std::pow(size, theta);
    std::size_t pos = 0;
    while (pos < digits.size() && ++digits[pos] == K) digits[pos++] = 0;
    if (pos == digits.size()) break;
  }
  return out;
}

}  // namespace trielab::oracle
