#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace slan {

/// Dense row-major matrix of doubles. Column vectors are (n, 1).
struct Tensor {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Tensor() = default;
  Tensor(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  static Tensor column(std::vector<double> values) {
    Tensor t;
    t.rows = values.size();
    t.cols = 1;
    t.data = std::move(values);
    return t;
  }
  static Tensor scalar(double v) { return Tensor(1, 1, v); }

  std::size_t size() const noexcept { return data.size(); }
  bool is_scalar() const noexcept { return rows == 1 && cols == 1; }
  bool same_shape(const Tensor& o) const noexcept {
    return rows == o.rows && cols == o.cols;
  }

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const {
    return data[r * cols + c];
  }
  double& operator[](std::size_t i) { return data[i]; }
  double operator[](std::size_t i) const { return data[i]; }

  std::string shape_str() const {
    return "(" + std::to_string(rows) + "x" + std::to_string(cols) + ")";
  }

  bool operator==(const Tensor&) const = default;
};

}  // namespace slan
