#pragma once

#include <cstddef>
#include <initializer_list>
#include <vector>

#include "onebit/rng.hpp"

namespace onebit::diff {

// Dense row-major tensor of doubles. All network math runs at 64-bit
// precision; checkpoints may round-trip through 32-bit storage.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;
  bool requires_grad = false;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> s, double fill = 0.0);
  static Tensor scalar(double v);
  static Tensor from(std::vector<std::size_t> s, std::vector<double> values);

  std::size_t numel() const { return data.size(); }
  std::size_t dim(std::size_t i) const { return shape[i]; }
  std::size_t ndim() const { return shape.size(); }

  double& operator[](std::size_t i) { return data[i]; }
  double operator[](std::size_t i) const { return data[i]; }

  bool same_shape(const Tensor& other) const { return shape == other.shape; }
  bool all_finite() const;
};

std::size_t shape_numel(const std::vector<std::size_t>& shape);

// Uniform fill on [-bound, bound].
void fill_uniform(Tensor& t, double bound, RngStream& rng);

}  // namespace onebit::diff
