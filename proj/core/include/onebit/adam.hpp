#pragma once

#include <cstdint>
#include <vector>

#include "onebit/tensor.hpp"

namespace onebit::diff {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.0;
};

// Adam with bias correction and decoupled weight decay. The decay shrinks
// each parameter by lr * wd before the Adam delta is applied.
class AdamState {
 public:
  AdamState() = default;
  explicit AdamState(AdamConfig cfg) : cfg_(cfg) {}

  // params[i] and grads[i] must keep matching shapes across calls; moment
  // buffers are allocated on the first step.
  void step(const std::vector<Tensor*>& params, const std::vector<const Tensor*>& grads);

  const AdamConfig& config() const { return cfg_; }
  std::int64_t steps_taken() const { return step_; }

 private:
  AdamConfig cfg_;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
  std::int64_t step_ = 0;
};

}  // namespace onebit::diff
