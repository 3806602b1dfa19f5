// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace aluc {

/// Dense row-major matrix of samples (one feature vector per row).
class SampleMatrix {
 public:
  SampleMatrix() = default;
  SampleMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}
  SampleMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return rows_ == 0; }

  std::span<const double> row(std::size_t i) const noexcept { return {data_.data() + i * cols_, cols_}; }
  std::span<double> row(std::size_t i) noexcept { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> data() const noexcept { return data_; }

  void append(std::span<const double> r) {
    if (rows_ == 0 && cols_ == 0) cols_ = r.size();
    data_.insert(data_.end(), r.begin(), r.end());
    ++rows_;
  }

  /// Rows selected by index, in the given order.
  SampleMatrix gather(std::span<const std::size_t> indices) const {
    SampleMatrix out;
    out.cols_ = cols_;
    out.data_.reserve(indices.size() * cols_);
    for (std::size_t i : indices) out.append(row(i));
    return out;
  }

  bool operator==(const SampleMatrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Samples with integer labels (class index 1..omega, or -1/+1 for binary problems).
struct LabeledSet {
  SampleMatrix x;
  std::vector<int> y;

  std::size_t size() const noexcept { return y.size(); }
  LabeledSet subset(std::span<const std::size_t> indices) const {
    LabeledSet out{x.gather(indices), {}};
    out.y.reserve(indices.size());
    for (std::size_t i : indices) out.y.push_back(y[i]);
    return out;
  }
};

}  // namespace aluc
