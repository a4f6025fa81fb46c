// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace triage::nn {

using Shape = std::vector<std::size_t>;

std::string shape_string(const Shape& shape);

/// Dense row-major array of doubles.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  double* ptr() noexcept { return data_.data(); }
  const double* ptr() const noexcept { return data_.data(); }

  double& operator[](std::size_t i) noexcept { return data_[i]; }
  double operator[](std::size_t i) const noexcept { return data_[i]; }

  double& at(std::size_t i, std::size_t j) noexcept { return data_[i * shape_[1] + j]; }
  double at(std::size_t i, std::size_t j) const noexcept { return data_[i * shape_[1] + j]; }
  double& at(std::size_t i, std::size_t j, std::size_t k) noexcept {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }
  double at(std::size_t i, std::size_t j, std::size_t k) const noexcept {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }

  /// Row `i` of a rank >= 2 tensor, viewed as the trailing dimensions.
  std::span<double> row(std::size_t i) noexcept;
  std::span<const double> row(std::size_t i) const noexcept;

  void fill(double value) noexcept;
  bool all_finite() const noexcept;

  Tensor& operator+=(const Tensor& other);

  bool operator==(const Tensor&) const = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

void require_shape(const Tensor& t, const Shape& expected, const char* what);

/// Trainable value with its accumulated gradient.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;

  Parameter() = default;
  Parameter(std::string name, Tensor value);

  void zero_grad() noexcept { grad.fill(0.0); }
};

// Row-major kernels. x: rows x n, w: n x m, y: rows x m.
/// y += x w
void matmul_add(std::span<const double> x, std::span<const double> w, std::span<double> y,
                std::size_t rows, std::size_t n, std::size_t m);
/// dx += dy w^T
void matmul_add_bt(std::span<const double> dy, std::span<const double> w, std::span<double> dx,
                   std::size_t rows, std::size_t n, std::size_t m);
/// dw += x^T dy
void matmul_add_at(std::span<const double> x, std::span<const double> dy, std::span<double> dw,
                   std::size_t rows, std::size_t n, std::size_t m);

}  // namespace triage::nn
