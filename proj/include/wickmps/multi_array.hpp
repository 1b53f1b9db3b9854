#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "wickmps/spectral.hpp"

namespace wickmps {

/// Dense row-major complex array of arbitrary rank (last axis fastest).
class MultiArray {
 public:
  MultiArray() = default;
  explicit MultiArray(std::vector<std::size_t> shape)
      : shape_(std::move(shape)), data_(element_count(shape_)) {}

  static std::size_t element_count(std::span<const std::size_t> shape) {
    std::size_t n = 1;
    for (auto s : shape) n *= s;
    return n;
  }

  std::size_t rank() const { return shape_.size(); }
  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }

  std::vector<Complex>& data() { return data_; }
  const std::vector<Complex>& data() const { return data_; }

  std::size_t flat_index(std::span<const std::size_t> idx) const {
    std::size_t flat = 0;
    for (std::size_t a = 0; a < shape_.size(); ++a) flat = flat * shape_[a] + idx[a];
    return flat;
  }

  /// Inverse of flat_index.
  std::vector<std::size_t> unravel(std::size_t flat) const {
    std::vector<std::size_t> idx(shape_.size());
    for (std::size_t a = shape_.size(); a-- > 0;) {
      idx[a] = flat % shape_[a];
      flat /= shape_[a];
    }
    return idx;
  }

  Complex& operator()(std::span<const std::size_t> idx) { return data_[flat_index(idx)]; }
  const Complex& operator()(std::span<const std::size_t> idx) const {
    return data_[flat_index(idx)];
  }
  Complex& operator[](std::size_t flat) { return data_[flat]; }
  const Complex& operator[](std::size_t flat) const { return data_[flat]; }

  double max_abs() const {
    double m = 0.0;
    for (const auto& z : data_) m = std::max(m, std::abs(z));
    return m;
  }

  bool operator==(const MultiArray&) const = default;

 private:
  std::vector<std::size_t> shape_;
  std::vector<Complex> data_;
};

/// Contract one axis with a matrix: out[.., k, ..] = sum_n m(k, n) in[.., n, ..].
MultiArray contract_axis(const MultiArray& in, std::size_t axis, const Matrix& m);

}  // namespace wickmps
