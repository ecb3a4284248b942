#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "agmh/errors.hpp"

namespace agmh {

std::size_t shape_numel(const std::vector<int>& shape);
std::string shape_str(const std::vector<int>& shape);

/// Dense row-major array of 64-bit floats; the carrier for all features,
/// parameters and gradients. Scalars are shape {1}.
struct Tensor {
  std::vector<int> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<int> s);
  Tensor(std::vector<int> s, std::vector<double> d);

  static Tensor scalar(double v);
  static Tensor full(std::vector<int> s, double v);

  std::size_t size() const { return data.size(); }
  int rank() const { return static_cast<int>(shape.size()); }
  int extent(int axis) const { return shape[static_cast<std::size_t>(axis)]; }

  double& operator[](std::size_t i) { return data[i]; }
  double operator[](std::size_t i) const { return data[i]; }

  // 2-D (row, col) access
  double& operator()(int i, int j) {
    return data[static_cast<std::size_t>(i) * static_cast<std::size_t>(shape[1]) +
                static_cast<std::size_t>(j)];
  }
  double operator()(int i, int j) const {
    return data[static_cast<std::size_t>(i) * static_cast<std::size_t>(shape[1]) +
                static_cast<std::size_t>(j)];
  }

  // 3-D (channel, row, col) access
  double& operator()(int c, int h, int w) {
    return data[(static_cast<std::size_t>(c) * static_cast<std::size_t>(shape[1]) +
                 static_cast<std::size_t>(h)) *
                    static_cast<std::size_t>(shape[2]) +
                static_cast<std::size_t>(w)];
  }
  double operator()(int c, int h, int w) const {
    return data[(static_cast<std::size_t>(c) * static_cast<std::size_t>(shape[1]) +
                 static_cast<std::size_t>(h)) *
                    static_cast<std::size_t>(shape[2]) +
                static_cast<std::size_t>(w)];
  }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }
  bool all_finite() const;
};

}  // namespace agmh
