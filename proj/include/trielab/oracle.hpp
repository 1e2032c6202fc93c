#pragma once

// Deliberately naive reference implementations. Nothing here calls the
// spectral or simulation code, so agreement between the two is evidence.

#include <cstddef>
#include <functional>
#include <vector>

#include "trielab/env_models.hpp"
#include "trielab/matrix.hpp"
#include "trielab/rng.hpp"

namespace trielab::oracle {

/// Words over types 0..K-1. Letter t is the type of the box at generation
/// t + 1; the root (type 0) is implicit.
struct WordSet {
  std::vector<std::vector<std::size_t>> words;
  SupportPattern support;
};

struct TrieShape {
  int height = 0;
  int saturation = 0;
};

/// Height and saturation level of the (j-1)-trie built from the words.
/// Throws LengthTooShort when the words do not separate within their length.
TrieShape brute_force_trie(const WordSet& words, int j);

struct GridMax {
  double argmax = 0.0;
  double max = 0.0;
};

/// Max over steps + 1 equally spaced points, then golden-section refinement
/// around the best one.
GridMax grid_sup(const std::function<double(double)>& objective, double lo, double hi, int steps);

/// m ball paths of the given length. Deterministic environments run the
/// Markov chain; random ones route every ball through one realized cascade.
WordSet sample_words(const EnvironmentModel& env, std::size_t m, std::size_t length, RandomStream& rng);

/// Entrywise tilted matrix straight from the environment's Laplace entries.
Matrix tilted(const EnvironmentModel& env, double theta);

/// ln of the Perron root from ln ||A^(2^k)|| / 2^k after repeated squaring.
double log_perron_root(const Matrix& a);

/// (1, 0, ..., 0) A^n.
std::vector<double> first_row_of_power(const Matrix& a, int n);

/// sum_k l_{i,k}^theta per end type i, by listing every type word of length n.
std::vector<double> laplace_by_words(const Matrix& p, int n, double theta);

}  // namespace trielab::oracle
