#include "onebit/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace onebit::diff {

void AdamState::step(const std::vector<Tensor*>& params,
                     const std::vector<const Tensor*>& grads) {
  if (params.size() != grads.size())
    throw std::invalid_argument("AdamState::step: params/grads count mismatch");
  if (m_.empty()) {
    m_.reserve(params.size());
    v_.reserve(params.size());
    for (const Tensor* p : params) {
      m_.emplace_back(p->shape, 0.0);
      v_.emplace_back(p->shape, 0.0);
    }
  }
  if (m_.size() != params.size())
    throw std::invalid_argument("AdamState::step: parameter count changed");

  step_ += 1;
  const double b1 = cfg_.beta1, b2 = cfg_.beta2;
  const double bc1 = 1.0 - std::pow(b1, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(b2, static_cast<double>(step_));
  const double lr = cfg_.learning_rate;
  const double decay = 1.0 - lr * cfg_.weight_decay;

  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = *params[i];
    const Tensor& g = *grads[i];
    if (!p.same_shape(m_[i]) || !g.same_shape(p))
      throw std::invalid_argument("AdamState::step: shape mismatch");
    for (std::size_t j = 0; j < p.data.size(); ++j) {
      if (cfg_.weight_decay != 0.0) p.data[j] *= decay;
      const double gj = g.data[j];
      m_[i].data[j] = b1 * m_[i].data[j] + (1.0 - b1) * gj;
      v_[i].data[j] = b2 * v_[i].data[j] + (1.0 - b2) * gj * gj;
      const double mhat = m_[i].data[j] / bc1;
      const double vhat = v_[i].data[j] / bc2;
      p.data[j] -= lr * mhat / (std::sqrt(vhat) + cfg_.epsilon);
    }
  }
}

}  // namespace onebit::diff
