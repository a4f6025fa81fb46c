// SPDX-License-Identifier: Apache-2.0
#include "triage/nn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "triage/error.hpp"

namespace triage::nn {

namespace {

std::size_t element_count(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

}  // namespace

std::string shape_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

Tensor::Tensor(Shape shape, double fill)
    : shape_(std::move(shape)), data_(element_count(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
  if (data_.size() != element_count(shape_)) {
    throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                     " does not match shape " + shape_string(shape_));
  }
}

std::span<double> Tensor::row(std::size_t i) noexcept {
  const std::size_t width = shape_.empty() ? 0 : data_.size() / shape_[0];
  return std::span<double>(data_).subspan(i * width, width);
}

std::span<const double> Tensor::row(std::size_t i) const noexcept {
  const std::size_t width = shape_.empty() ? 0 : data_.size() / shape_[0];
  return std::span<const double>(data_).subspan(i * width, width);
}

void Tensor::fill(double value) noexcept { std::fill(data_.begin(), data_.end(), value); }

bool Tensor::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Tensor& Tensor::operator+=(const Tensor& other) {
  if (other.shape_ != shape_) {
    throw ShapeError("cannot add " + shape_string(other.shape_) + " to " + shape_string(shape_));
  }
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

void require_shape(const Tensor& t, const Shape& expected, const char* what) {
  if (t.shape() != expected) {
    throw ShapeError(std::string(what) + ": expected " + shape_string(expected) + ", got " +
                     shape_string(t.shape()));
  }
}

Parameter::Parameter(std::string n, Tensor v)
    : name(std::move(n)), value(std::move(v)), grad(value.shape()) {}

void matmul_add(std::span<const double> x, std::span<const double> w, std::span<double> y,
                std::size_t rows, std::size_t n, std::size_t m) {
  for (std::size_t i = 0; i < rows; ++i) {
    double* yi = y.data() + i * m;
    const double* xi = x.data() + i * n;
    for (std::size_t k = 0; k < n; ++k) {
      const double a = xi[k];
      if (a == 0.0) continue;
      const double* wk = w.data() + k * m;
      for (std::size_t j = 0; j < m; ++j) yi[j] += a * wk[j];
    }
  }
}

void matmul_add_bt(std::span<const double> dy, std::span<const double> w, std::span<double> dx,
                   std::size_t rows, std::size_t n, std::size_t m) {
  for (std::size_t i = 0; i < rows; ++i) {
    const double* dyi = dy.data() + i * m;
    double* dxi = dx.data() + i * n;
    for (std::size_t k = 0; k < n; ++k) {
      const double* wk = w.data() + k * m;
      double sum = 0.0;
      for (std::size_t j = 0; j < m; ++j) sum += dyi[j] * wk[j];
      dxi[k] += sum;
    }
  }
}

void matmul_add_at(std::span<const double> x, std::span<const double> dy, std::span<double> dw,
                   std::size_t rows, std::size_t n, std::size_t m) {
  for (std::size_t i = 0; i < rows; ++i) {
    const double* xi = x.data() + i * n;
    const double* dyi = dy.data() + i * m;
    for (std::size_t k = 0; k < n; ++k) {
      const double a = xi[k];
      if (a == 0.0) continue;
      double* dwk = dw.data() + k * m;
      for (std::size_t j = 0; j < m; ++j) dwk[j] += a * dyi[j];
    }
  }
}

}  // namespace triage::nn
