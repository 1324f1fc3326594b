#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "onebit/tensor.hpp"

namespace onebit::diff {

// Number of worker threads the batched matmul kernels may use. Splits work
// so that every output element is still accumulated by a single thread in a
// fixed order, keeping results bit-identical for any thread count.
void set_compute_threads(int n);
int compute_threads();

class BatchNormState;

// Reverse-mode differentiable computation record. Nodes are appended in
// execution order (which is a topological order by construction) and
// backward() walks them once in reverse, summing gradients at fan-out.
class Tape {
 public:
  using NodeId = std::int32_t;

  // Leaves. input() tracks gradients iff t.requires_grad; constant() never.
  NodeId input(Tensor t);
  NodeId constant(Tensor t);

  // x [B x I] times m [I x O] -> [B x O]; columns of m accumulate in
  // ascending row order.
  NodeId matmul(NodeId x, NodeId m);

  NodeId add(NodeId a, NodeId b);        // same shape
  NodeId sub(NodeId a, NodeId b);        // same shape
  NodeId mul(NodeId a, NodeId b);        // elementwise, same shape
  NodeId neg(NodeId x);
  NodeId add_bias(NodeId x, NodeId b);   // x [B x O] + b [O] per row
  NodeId relu(NodeId x);
  NodeId sigmoid(NodeId x);
  NodeId tanh_(NodeId x);
  NodeId scale(NodeId x, double c);
  NodeId scale_by(NodeId x, NodeId s);   // s is a 1-element tensor
  NodeId add_scalar(NodeId x, double c);
  NodeId one_minus(NodeId x);            // 1 - x

  // x [B x C x L], kernel [O x C x W] (odd W), bias [O] -> [B x O x L] with
  // zero padding of (W-1)/2 on each side.
  NodeId conv1d_same(NodeId x, NodeId kernel, NodeId bias);

  // Batch normalization. 2D input [B x F] normalizes per feature over the
  // batch; 3D input [B x C x L] per channel over batch and length. Training
  // mode uses batch statistics (and updates the running ones through
  // `state`); eval mode is the affine map of the running statistics.
  // Training mode requires batch size >= 2.
  NodeId batchnorm(NodeId x, NodeId gamma, NodeId beta, BatchNormState& state, bool training);

  // Stacks three [B x 2K] real-stacked vectors into [B x 6 x K] channels
  // ordered (a_re, a_im, b_re, b_im, c_re, c_im).
  NodeId assemble_channels(NodeId a, NodeId b, NodeId c);

  NodeId flatten(NodeId x);              // [B x ...] -> [B x prod]
  NodeId concat(NodeId a, NodeId b);     // along dim 1
  NodeId row_l2norm(NodeId x);           // [B x D] -> [B]
  NodeId row_sum(NodeId x);              // [B x D] -> [B]
  NodeId mean_all(NodeId x);             // -> scalar

  // out[b,i] = x[b,i] * (eta / norms[b]); the detectors' output scaling.
  NodeId row_scale_eta(NodeId x, NodeId norms, NodeId eta);

  // Multiplies row b of x [B x D] by s[b] (s [B]).
  NodeId row_mul(NodeId x, NodeId s);

  void backward(NodeId loss);

  const Tensor& value(NodeId id) const { return nodes_[id].value; }
  const Tensor& grad(NodeId id) const;
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool needs_grad = false;
    bool grad_alloc = false;
    std::function<void(Tape&, const Tensor&)> backprop;  // grad of this node -> parents
  };

  NodeId push(Tensor value, bool needs_grad,
              std::function<void(Tape&, const Tensor&)> backprop);
  Tensor& grad_buffer(NodeId id);
  void accumulate(NodeId id, const Tensor& g);
  bool needs(NodeId id) const { return nodes_[id].needs_grad; }

  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

// Owns batchnorm running statistics; lives in the layer parameter set and is
// mutated by train-mode forward passes.
class BatchNormState {
 public:
  Tensor running_mean;
  Tensor running_var;
  double momentum = 0.1;
  double eps = 1e-5;

  BatchNormState() = default;
  explicit BatchNormState(std::size_t channels)
      : running_mean({channels}, 0.0), running_var({channels}, 1.0) {}
};

}  // namespace onebit::diff
