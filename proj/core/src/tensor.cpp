#include "onebit/tensor.hpp"

#include <cmath>
#include <stdexcept>

namespace onebit::diff {

std::size_t shape_numel(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

Tensor::Tensor(std::vector<std::size_t> s, double fill)
    : shape(std::move(s)), data(shape_numel(shape), fill) {}

Tensor Tensor::scalar(double v) {
  Tensor t({1});
  t.data[0] = v;
  return t;
}

Tensor Tensor::from(std::vector<std::size_t> s, std::vector<double> values) {
  if (shape_numel(s) != values.size())
    throw std::invalid_argument("Tensor::from: shape/data size mismatch");
  Tensor t;
  t.shape = std::move(s);
  t.data = std::move(values);
  return t;
}

bool Tensor::all_finite() const {
  for (double v : data)
    if (!std::isfinite(v)) return false;
  return true;
}

void fill_uniform(Tensor& t, double bound, RngStream& rng) {
  for (double& v : t.data) v = (2.0 * rng.uniform() - 1.0) * bound;
}

}  // namespace onebit::diff
