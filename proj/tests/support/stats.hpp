#pragma once

// Small statistics helpers shared by the unit tests and the acceptance run.

#include <algorithm>
#include <cmath>
#include <map>
#include <utility>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

namespace trielab::testing {

struct Moments {
  double mean = 0.0;
  double variance = 0.0;  // sample variance
  double stderr_ = 0.0;
};

inline Moments moments(const std::vector<double>& xs) {
  Moments m;
  const double n = static_cast<double>(xs.size());
  for (double x : xs) m.mean += x;
  m.mean /= n;
  for (double x : xs) m.variance += (x - m.mean) * (x - m.mean);
  m.variance /= n - 1.0;
  m.stderr_ = std::sqrt(m.variance / n);
  return m;
}

struct ChiSquared {
  double statistic = 0.0;
  int dof = 0;
  double p_value = 1.0;
};

/// Two-sample homogeneity test on categorical outcomes. Categories whose
/// expected count is below 5 in either sample are pooled, smallest first.
template <class Key>
ChiSquared homogeneity(const std::vector<Key>& a, const std::vector<Key>& b) {
  std::map<Key, std::pair<double, double>> table;
  for (const Key& k : a) table[k].first += 1;
  for (const Key& k : b) table[k].second += 1;
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size()), n = na + nb;

  std::vector<std::pair<double, double>> cells;
  for (const auto& [k, c] : table) cells.push_back(c);
  std::sort(cells.begin(), cells.end(),
            [](const auto& x, const auto& y) { return x.first + x.second < y.first + y.second; });
  auto small = [&](const std::pair<double, double>& c) {
    const double t = c.first + c.second;
    return t * std::min(na, nb) / n < 5.0;
  };
  std::vector<std::pair<double, double>> pooled;
  std::pair<double, double> acc{0, 0};
  for (const auto& c : cells) {
    acc.first += c.first;
    acc.second += c.second;
    if (!small(acc)) {
      pooled.push_back(acc);
      acc = {0, 0};
    }
  }
  if (acc.first + acc.second > 0) {
    if (pooled.empty()) pooled.push_back(acc);
    else {
      pooled.back().first += acc.first;
      pooled.back().second += acc.second;
    }
  }

  ChiSquared out;
  out.dof = static_cast<int>(pooled.size()) - 1;
  if (out.dof < 1) return out;
  for (const auto& [oa, ob] : pooled) {
    const double t = oa + ob;
    const double ea = t * na / n, eb = t * nb / n;
    out.statistic += (oa - ea) * (oa - ea) / ea + (ob - eb) * (ob - eb) / eb;
  }
  out.p_value = boost::math::cdf(boost::math::complement(boost::math::chi_squared(out.dof), out.statistic));
  return out;
}

}  // namespace trielab::testing
