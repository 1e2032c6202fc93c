#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace trielab {

/// Dense row-major real matrix. Only what the spectral and enumeration code
/// needs; no expression templates.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }

  std::span<double> row(std::size_t i) noexcept { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const noexcept {
    return {data_.data() + i * cols_, cols_};
  }

  const std::vector<double>& data() const noexcept { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Boolean K x K pattern; entry (i, j) true when the transition i -> j is possible.
class SupportPattern {
 public:
  SupportPattern() = default;
  explicit SupportPattern(std::size_t k, bool fill = false) : k_(k), cells_(k * k, fill) {}

  std::size_t size() const noexcept { return k_; }
  bool operator()(std::size_t i, std::size_t j) const noexcept { return cells_[i * k_ + j] != 0; }
  void set(std::size_t i, std::size_t j, bool value) noexcept { cells_[i * k_ + j] = value; }

  bool operator==(const SupportPattern&) const = default;

 private:
  std::size_t k_ = 0;
  std::vector<unsigned char> cells_;
};

}  // namespace trielab
