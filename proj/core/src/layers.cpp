#include "onebit/layers.hpp"

#include <cmath>

namespace onebit::diff {

namespace {

Tensor learnable(std::vector<std::size_t> shape) {
  Tensor t(std::move(shape), 0.0);
  t.requires_grad = true;
  return t;
}

}  // namespace

DenseLayer make_dense(std::size_t in, std::size_t out, RngStream& rng) {
  DenseLayer l;
  l.weight = learnable({in, out});
  l.bias = learnable({out});
  const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
  fill_uniform(l.weight, bound, rng);
  return l;
}

Conv1dLayer make_conv1d(std::size_t in_ch, std::size_t out_ch, std::size_t width,
                        RngStream& rng) {
  Conv1dLayer l;
  l.kernel = learnable({out_ch, in_ch, width});
  l.bias = learnable({out_ch});
  const double fan_in = static_cast<double>(in_ch * width);
  const double fan_out = static_cast<double>(out_ch * width);
  fill_uniform(l.kernel, std::sqrt(6.0 / (fan_in + fan_out)), rng);
  return l;
}

BatchNormLayer make_batchnorm(std::size_t channels) {
  BatchNormLayer l;
  l.gamma = learnable({channels});
  for (double& v : l.gamma.data) v = 1.0;
  l.beta = learnable({channels});
  l.state = BatchNormState(channels);
  return l;
}

GruLayer make_gru(std::size_t in, std::size_t hidden, RngStream& rng) {
  GruLayer l;
  const double bound = std::sqrt(1.0 / static_cast<double>(hidden));
  auto gate_w = [&](std::size_t rows) {
    Tensor t = learnable({rows, hidden});
    fill_uniform(t, bound, rng);
    return t;
  };
  l.w_reset = gate_w(in);
  l.u_reset = gate_w(hidden);
  l.b_reset = learnable({hidden});
  l.w_update = gate_w(in);
  l.u_update = gate_w(hidden);
  l.b_update = learnable({hidden});
  l.w_cand = gate_w(in);
  l.u_cand = gate_w(hidden);
  l.b_cand = learnable({hidden});
  return l;
}

void collect_params(DenseLayer& l, const std::string& prefix, std::vector<ParamRef>& out) {
  out.push_back({prefix + ".weight", &l.weight, true});
  out.push_back({prefix + ".bias", &l.bias, true});
}

void collect_params(Conv1dLayer& l, const std::string& prefix, std::vector<ParamRef>& out) {
  out.push_back({prefix + ".kernel", &l.kernel, true});
  out.push_back({prefix + ".bias", &l.bias, true});
}

void collect_params(BatchNormLayer& l, const std::string& prefix, std::vector<ParamRef>& out) {
  out.push_back({prefix + ".gamma", &l.gamma, true});
  out.push_back({prefix + ".beta", &l.beta, true});
  out.push_back({prefix + ".running_mean", &l.state.running_mean, false});
  out.push_back({prefix + ".running_var", &l.state.running_var, false});
}

void collect_params(GruLayer& l, const std::string& prefix, std::vector<ParamRef>& out) {
  out.push_back({prefix + ".w_reset", &l.w_reset, true});
  out.push_back({prefix + ".u_reset", &l.u_reset, true});
  out.push_back({prefix + ".b_reset", &l.b_reset, true});
  out.push_back({prefix + ".w_update", &l.w_update, true});
  out.push_back({prefix + ".u_update", &l.u_update, true});
  out.push_back({prefix + ".b_update", &l.b_update, true});
  out.push_back({prefix + ".w_cand", &l.w_cand, true});
  out.push_back({prefix + ".u_cand", &l.u_cand, true});
  out.push_back({prefix + ".b_cand", &l.b_cand, true});
}

Tape::NodeId Binder::bind(Tensor& t) {
  if (auto it = cache_.find(&t); it != cache_.end()) return it->second;
  Tape::NodeId id;
  if (track_ && t.requires_grad) {
    id = tape_.input(t);
  } else {
    Tensor copy = t;
    copy.requires_grad = false;
    id = tape_.input(std::move(copy));
  }
  cache_.emplace(&t, id);
  bound_.push_back({&t, id});
  return id;
}

Tape::NodeId apply_dense(Binder& b, DenseLayer& l, Tape::NodeId x) {
  Tape& t = b.tape();
  return t.add_bias(t.matmul(x, b.bind(l.weight)), b.bind(l.bias));
}

Tape::NodeId apply_conv1d(Binder& b, Conv1dLayer& l, Tape::NodeId x) {
  Tape& t = b.tape();
  return t.conv1d_same(x, b.bind(l.kernel), b.bind(l.bias));
}

Tape::NodeId apply_batchnorm(Binder& b, BatchNormLayer& l, Tape::NodeId x, bool training) {
  Tape& t = b.tape();
  return t.batchnorm(x, b.bind(l.gamma), b.bind(l.beta), l.state, training);
}

Tape::NodeId gru_cell(Binder& b, GruLayer& l, Tape::NodeId x, Tape::NodeId h_prev) {
  Tape& t = b.tape();
  const auto gate = [&](Tensor& w, Tensor& u, Tensor& bias, Tape::NodeId hin) {
    return t.add_bias(t.add(t.matmul(x, b.bind(w)), t.matmul(hin, b.bind(u))), b.bind(bias));
  };
  const Tape::NodeId r = t.sigmoid(gate(l.w_reset, l.u_reset, l.b_reset, h_prev));
  const Tape::NodeId z = t.sigmoid(gate(l.w_update, l.u_update, l.b_update, h_prev));
  const Tape::NodeId rh = t.mul(r, h_prev);
  const Tape::NodeId cand = t.tanh_(gate(l.w_cand, l.u_cand, l.b_cand, rh));
  return t.add(t.mul(t.one_minus(z), cand), t.mul(z, h_prev));
}

}  // namespace onebit::diff
