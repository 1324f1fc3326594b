#pragma once

#include <cstddef>
#include <string>
#include <unordered_map>
#include <vector>

#include "onebit/tape.hpp"
#include "onebit/tensor.hpp"

namespace onebit::diff {

// Layer parameter sets. Learnable tensors are created with
// requires_grad = true; batchnorm running statistics are persisted state,
// not parameters.

struct DenseLayer {
  Tensor weight;  // [in x out]
  Tensor bias;    // [out]
};

struct Conv1dLayer {
  Tensor kernel;  // [out_ch x in_ch x width]
  Tensor bias;    // [out_ch]
};

struct BatchNormLayer {
  Tensor gamma;  // [channels]
  Tensor beta;   // [channels]
  BatchNormState state;
};

struct GruLayer {
  // reset, update and candidate gates; w_* act on the input [in x hidden],
  // u_* on the previous hidden state [hidden x hidden]
  Tensor w_reset, u_reset, b_reset;
  Tensor w_update, u_update, b_update;
  Tensor w_cand, u_cand, b_cand;
  std::size_t input_dim() const { return w_reset.dim(0); }
  std::size_t hidden_dim() const { return w_reset.dim(1); }
};

// Xavier-uniform bound sqrt(6/(fan_in+fan_out)) for dense/conv weights,
// uniform +-sqrt(1/hidden) for GRU gates; biases start at zero.
DenseLayer make_dense(std::size_t in, std::size_t out, RngStream& rng);
Conv1dLayer make_conv1d(std::size_t in_ch, std::size_t out_ch, std::size_t width, RngStream& rng);
BatchNormLayer make_batchnorm(std::size_t channels);
GruLayer make_gru(std::size_t in, std::size_t hidden, RngStream& rng);

// Named references to every tensor of a parameter set, in a fixed order.
// `learnable` distinguishes trainable weights from persistent state.
struct ParamRef {
  std::string name;
  Tensor* tensor;
  bool learnable;
};

void collect_params(DenseLayer& l, const std::string& prefix, std::vector<ParamRef>& out);
void collect_params(Conv1dLayer& l, const std::string& prefix, std::vector<ParamRef>& out);
void collect_params(BatchNormLayer& l, const std::string& prefix, std::vector<ParamRef>& out);
void collect_params(GruLayer& l, const std::string& prefix, std::vector<ParamRef>& out);

// Binds parameter tensors onto a tape (leaves when their requires_grad flag
// is set and tracking is on, constants otherwise) and remembers the node of
// each tensor so gradients can be read back after backward(). A tensor bound
// more than once (shared layers applied at several stages) maps to one node,
// so its gradient sums over every use.
class Binder {
 public:
  Binder(Tape& tape, bool track_gradients) : tape_(tape), track_(track_gradients) {}

  Tape::NodeId bind(Tensor& t);

  Tape& tape() { return tape_; }
  bool tracking() const { return track_; }

  struct BoundParam {
    Tensor* tensor;
    Tape::NodeId node;
  };
  const std::vector<BoundParam>& bound() const { return bound_; }

 private:
  Tape& tape_;
  bool track_;
  std::vector<BoundParam> bound_;
  std::unordered_map<const Tensor*, Tape::NodeId> cache_;
};

// Graph builders. Each appends the layer's computation to the tape.
Tape::NodeId apply_dense(Binder& b, DenseLayer& l, Tape::NodeId x);
Tape::NodeId apply_conv1d(Binder& b, Conv1dLayer& l, Tape::NodeId x);
Tape::NodeId apply_batchnorm(Binder& b, BatchNormLayer& l, Tape::NodeId x, bool training);

// Standard GRU cell:
//   r = sigmoid(x w_r + h u_r + b_r)
//   z = sigmoid(x w_z + h u_z + b_z)
//   c = tanh(x w_c + (r . h) u_c + b_c)
//   h' = (1 - z) . c + z . h
Tape::NodeId gru_cell(Binder& b, GruLayer& l, Tape::NodeId x, Tape::NodeId h_prev);

}  // namespace onebit::diff
