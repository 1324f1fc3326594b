#include "onebit/tape.hpp"

#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "onebit/mat.hpp"

namespace onebit::diff {

namespace {

std::atomic<int> g_threads{1};

// Splits [0, n) into contiguous chunks, one per worker. Each output element
// is produced by exactly one worker with unchanged inner loop order.
template <typename Fn>
void parallel_rows(std::size_t n, const Fn& fn) {
  const int workers = g_threads.load(std::memory_order_relaxed);
  if (workers <= 1 || n < 2) {
    fn(std::size_t(0), n);
    return;
  }
  const std::size_t nw = std::min<std::size_t>(workers, n);
  std::vector<std::thread> pool;
  pool.reserve(nw);
  const std::size_t chunk = (n + nw - 1) / nw;
  for (std::size_t w = 0; w < nw; ++w) {
    const std::size_t lo = w * chunk;
    const std::size_t hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&fn, lo, hi] { fn(lo, hi); });
  }
  for (auto& t : pool) t.join();
}

// out[b,o] += sum_j x[b,j] * m[j,o], j ascending.
void gemm_accum(const double* x, std::size_t batch, std::size_t in, const double* m,
                std::size_t out_dim, double* out) {
  parallel_rows(batch, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t b = lo; b < hi; ++b) {
      const double* xrow = x + b * in;
      double* orow = out + b * out_dim;
      for (std::size_t j = 0; j < in; ++j) {
        const double xv = xrow[j];
        const double* mrow = m + j * out_dim;
        for (std::size_t o = 0; o < out_dim; ++o) orow[o] += xv * mrow[o];
      }
    }
  });
}

// dx[b,j] += sum_o dout[b,o] * m[j,o] (i.e. dout times m^T).
void gemm_nt_accum(const double* dout, std::size_t batch, std::size_t out_dim,
                   const double* m, std::size_t in, double* dx) {
  parallel_rows(batch, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t b = lo; b < hi; ++b) {
      const double* drow = dout + b * out_dim;
      double* xrow = dx + b * in;
      for (std::size_t j = 0; j < in; ++j) {
        const double* mrow = m + j * out_dim;
        double acc = 0.0;
        for (std::size_t o = 0; o < out_dim; ++o) acc += drow[o] * mrow[o];
        xrow[j] += acc;
      }
    }
  });
}

// dm[j,o] += sum_b x[b,j] * dout[b,o]; parallel over j, sequential over b.
void gemm_tn_accum(const double* x, std::size_t batch, std::size_t in, const double* dout,
                   std::size_t out_dim, double* dm) {
  parallel_rows(in, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t j = lo; j < hi; ++j) {
      double* mrow = dm + j * out_dim;
      for (std::size_t b = 0; b < batch; ++b) {
        const double xv = x[b * in + j];
        const double* drow = dout + b * out_dim;
        for (std::size_t o = 0; o < out_dim; ++o) mrow[o] += xv * drow[o];
      }
    }
  });
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* who) {
  if (!a.same_shape(b)) throw std::invalid_argument(std::string(who) + ": shape mismatch");
}

}  // namespace

void set_compute_threads(int n) { g_threads.store(n < 1 ? 1 : n, std::memory_order_relaxed); }
int compute_threads() { return g_threads.load(std::memory_order_relaxed); }

Tape::NodeId Tape::push(Tensor value, bool needs_grad,
                        std::function<void(Tape&, const Tensor&)> backprop) {
  Node n;
  n.value = std::move(value);
  n.needs_grad = needs_grad;
  n.backprop = std::move(backprop);
  nodes_.push_back(std::move(n));
  return static_cast<NodeId>(nodes_.size() - 1);
}

Tape::NodeId Tape::input(Tensor t) {
  const bool rg = t.requires_grad;
  return push(std::move(t), rg, nullptr);
}

Tape::NodeId Tape::constant(Tensor t) {
  t.requires_grad = false;
  return push(std::move(t), false, nullptr);
}

Tensor& Tape::grad_buffer(NodeId id) {
  Node& n = nodes_[id];
  if (!n.grad_alloc) {
    n.grad = Tensor(n.value.shape, 0.0);
    n.grad_alloc = true;
  }
  return n.grad;
}

void Tape::accumulate(NodeId id, const Tensor& g) {
  Tensor& buf = grad_buffer(id);
  for (std::size_t i = 0; i < buf.data.size(); ++i) buf.data[i] += g.data[i];
}

const Tensor& Tape::grad(NodeId id) const {
  const Node& n = nodes_[id];
  if (!n.grad_alloc)
    throw std::logic_error("Tape::grad: no gradient recorded for node");
  return n.grad;
}

void Tape::backward(NodeId loss) {
  if (backward_done_)
    throw std::logic_error("Tape::backward: called twice without reset");
  backward_done_ = true;
  if (nodes_[loss].value.numel() != 1)
    throw std::invalid_argument("Tape::backward: loss must be scalar");
  grad_buffer(loss).data[0] = 1.0;
  for (NodeId id = loss; id >= 0; --id) {
    Node& n = nodes_[id];
    if (!n.needs_grad || !n.grad_alloc || !n.backprop) continue;
    n.backprop(*this, n.grad);
  }
  // Parameters that never participated keep an all-zero gradient.
  for (NodeId id = 0; id <= loss; ++id) {
    Node& n = nodes_[id];
    if (n.needs_grad && !n.backprop && !n.grad_alloc) grad_buffer(id);
  }
}

Tape::NodeId Tape::matmul(NodeId x, NodeId m) {
  const Tensor& xv = nodes_[x].value;
  const Tensor& mv = nodes_[m].value;
  if (xv.ndim() != 2 || mv.ndim() != 2 || xv.dim(1) != mv.dim(0))
    throw std::invalid_argument("matmul: shape mismatch");
  const std::size_t batch = xv.dim(0), in = xv.dim(1), out_dim = mv.dim(1);
  Tensor out({batch, out_dim}, 0.0);
  gemm_accum(xv.data.data(), batch, in, mv.data.data(), out_dim, out.data.data());
  const bool ng = needs(x) || needs(m);
  return push(std::move(out), ng, [x, m, batch, in, out_dim](Tape& t, const Tensor& g) {
    if (t.needs(x)) {
      Tensor& dx = t.grad_buffer(x);
      gemm_nt_accum(g.data.data(), batch, out_dim, t.nodes_[m].value.data.data(), in,
                    dx.data.data());
    }
    if (t.needs(m)) {
      Tensor& dm = t.grad_buffer(m);
      gemm_tn_accum(t.nodes_[x].value.data.data(), batch, in, g.data.data(), out_dim,
                    dm.data.data());
    }
  });
}

Tape::NodeId Tape::add(NodeId a, NodeId b) {
  const Tensor& av = nodes_[a].value;
  const Tensor& bv = nodes_[b].value;
  check_same_shape(av, bv, "add");
  Tensor out = av;
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += bv.data[i];
  const bool ng = needs(a) || needs(b);
  return push(std::move(out), ng, [a, b](Tape& t, const Tensor& g) {
    if (t.needs(a)) t.accumulate(a, g);
    if (t.needs(b)) t.accumulate(b, g);
  });
}

Tape::NodeId Tape::sub(NodeId a, NodeId b) {
  const Tensor& av = nodes_[a].value;
  const Tensor& bv = nodes_[b].value;
  check_same_shape(av, bv, "sub");
  Tensor out = av;
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] -= bv.data[i];
  const bool ng = needs(a) || needs(b);
  return push(std::move(out), ng, [a, b](Tape& t, const Tensor& g) {
    if (t.needs(a)) t.accumulate(a, g);
    if (t.needs(b)) {
      Tensor& db = t.grad_buffer(b);
      for (std::size_t i = 0; i < db.data.size(); ++i) db.data[i] -= g.data[i];
    }
  });
}

Tape::NodeId Tape::mul(NodeId a, NodeId b) {
  const Tensor& av = nodes_[a].value;
  const Tensor& bv = nodes_[b].value;
  check_same_shape(av, bv, "mul");
  Tensor out = av;
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] *= bv.data[i];
  const bool ng = needs(a) || needs(b);
  return push(std::move(out), ng, [a, b](Tape& t, const Tensor& g) {
    if (t.needs(a)) {
      Tensor& da = t.grad_buffer(a);
      const Tensor& bval = t.nodes_[b].value;
      for (std::size_t i = 0; i < da.data.size(); ++i) da.data[i] += g.data[i] * bval.data[i];
    }
    if (t.needs(b)) {
      Tensor& db = t.grad_buffer(b);
      const Tensor& aval = t.nodes_[a].value;
      for (std::size_t i = 0; i < db.data.size(); ++i) db.data[i] += g.data[i] * aval.data[i];
    }
  });
}

Tape::NodeId Tape::neg(NodeId x) { return scale(x, -1.0); }

Tape::NodeId Tape::add_bias(NodeId x, NodeId b) {
  const Tensor& xv = nodes_[x].value;
  const Tensor& bv = nodes_[b].value;
  if (xv.ndim() != 2 || bv.ndim() != 1 || xv.dim(1) != bv.dim(0))
    throw std::invalid_argument("add_bias: shape mismatch");
  Tensor out = xv;
  const std::size_t batch = xv.dim(0), dimn = xv.dim(1);
  for (std::size_t r = 0; r < batch; ++r)
    for (std::size_t c = 0; c < dimn; ++c) out.data[r * dimn + c] += bv.data[c];
  const bool ng = needs(x) || needs(b);
  return push(std::move(out), ng, [x, b, batch, dimn](Tape& t, const Tensor& g) {
    if (t.needs(x)) t.accumulate(x, g);
    if (t.needs(b)) {
      Tensor& db = t.grad_buffer(b);
      for (std::size_t r = 0; r < batch; ++r)
        for (std::size_t c = 0; c < dimn; ++c) db.data[c] += g.data[r * dimn + c];
    }
  });
}

Tape::NodeId Tape::relu(NodeId x) {
  Tensor out = nodes_[x].value;
  for (double& v : out.data) v = v > 0.0 ? v : 0.0;
  return push(std::move(out), needs(x), [x](Tape& t, const Tensor& g) {
    if (!t.needs(x)) return;
    Tensor& dx = t.grad_buffer(x);
    const Tensor& xv = t.nodes_[x].value;
    for (std::size_t i = 0; i < dx.data.size(); ++i)
      if (xv.data[i] > 0.0) dx.data[i] += g.data[i];
  });
}

Tape::NodeId Tape::sigmoid(NodeId x) {
  Tensor out = nodes_[x].value;
  for (double& v : out.data) v = sigmoid_scalar(v);
  const NodeId self_src = x;
  Tensor saved = out;
  return push(std::move(out), needs(x),
              [self_src, saved = std::move(saved)](Tape& t, const Tensor& g) {
                if (!t.needs(self_src)) return;
                Tensor& dx = t.grad_buffer(self_src);
                for (std::size_t i = 0; i < dx.data.size(); ++i) {
                  const double s = saved.data[i];
                  dx.data[i] += g.data[i] * s * (1.0 - s);
                }
              });
}

Tape::NodeId Tape::tanh_(NodeId x) {
  Tensor out = nodes_[x].value;
  for (double& v : out.data) v = std::tanh(v);
  Tensor saved = out;
  return push(std::move(out), needs(x), [x, saved = std::move(saved)](Tape& t, const Tensor& g) {
    if (!t.needs(x)) return;
    Tensor& dx = t.grad_buffer(x);
    for (std::size_t i = 0; i < dx.data.size(); ++i) {
      const double v = saved.data[i];
      dx.data[i] += g.data[i] * (1.0 - v * v);
    }
  });
}

Tape::NodeId Tape::scale(NodeId x, double c) {
  Tensor out = nodes_[x].value;
  for (double& v : out.data) v *= c;
  return push(std::move(out), needs(x), [x, c](Tape& t, const Tensor& g) {
    if (!t.needs(x)) return;
    Tensor& dx = t.grad_buffer(x);
    for (std::size_t i = 0; i < dx.data.size(); ++i) dx.data[i] += g.data[i] * c;
  });
}

Tape::NodeId Tape::scale_by(NodeId x, NodeId s) {
  const Tensor& sv = nodes_[s].value;
  if (sv.numel() != 1) throw std::invalid_argument("scale_by: scalar tensor expected");
  const double c = sv.data[0];
  Tensor out = nodes_[x].value;
  for (double& v : out.data) v *= c;
  const bool ng = needs(x) || needs(s);
  return push(std::move(out), ng, [x, s, c](Tape& t, const Tensor& g) {
    if (t.needs(x)) {
      Tensor& dx = t.grad_buffer(x);
      for (std::size_t i = 0; i < dx.data.size(); ++i) dx.data[i] += g.data[i] * c;
    }
    if (t.needs(s)) {
      Tensor& ds = t.grad_buffer(s);
      const Tensor& xv = t.nodes_[x].value;
      double acc = 0.0;
      for (std::size_t i = 0; i < xv.data.size(); ++i) acc += g.data[i] * xv.data[i];
      ds.data[0] += acc;
    }
  });
}

Tape::NodeId Tape::add_scalar(NodeId x, double c) {
  Tensor out = nodes_[x].value;
  for (double& v : out.data) v += c;
  return push(std::move(out), needs(x), [x](Tape& t, const Tensor& g) {
    if (t.needs(x)) t.accumulate(x, g);
  });
}

Tape::NodeId Tape::one_minus(NodeId x) {
  Tensor out = nodes_[x].value;
  for (double& v : out.data) v = 1.0 - v;
  return push(std::move(out), needs(x), [x](Tape& t, const Tensor& g) {
    if (!t.needs(x)) return;
    Tensor& dx = t.grad_buffer(x);
    for (std::size_t i = 0; i < dx.data.size(); ++i) dx.data[i] -= g.data[i];
  });
}

Tape::NodeId Tape::conv1d_same(NodeId x, NodeId kernel, NodeId bias) {
  const Tensor& xv = nodes_[x].value;
  const Tensor& kv = nodes_[kernel].value;
  const Tensor& bv = nodes_[bias].value;
  if (xv.ndim() != 3 || kv.ndim() != 3 || bv.ndim() != 1)
    throw std::invalid_argument("conv1d_same: rank mismatch");
  const std::size_t batch = xv.dim(0), cin = xv.dim(1), len = xv.dim(2);
  const std::size_t cout = kv.dim(0), width = kv.dim(2);
  if (kv.dim(1) != cin || bv.dim(0) != cout || width % 2 == 0)
    throw std::invalid_argument("conv1d_same: shape mismatch");
  const std::ptrdiff_t pad = static_cast<std::ptrdiff_t>(width / 2);
  const std::ptrdiff_t slen = static_cast<std::ptrdiff_t>(len);

  Tensor out({batch, cout, len}, 0.0);
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t o = 0; o < cout; ++o)
      for (std::size_t p = 0; p < len; ++p) {
        double acc = bv.data[o];
        for (std::size_t c = 0; c < cin; ++c)
          for (std::size_t w = 0; w < width; ++w) {
            const std::ptrdiff_t q = static_cast<std::ptrdiff_t>(p + w) - pad;
            if (q < 0 || q >= slen) continue;
            acc += kv.data[(o * cin + c) * width + w] *
                   xv.data[(b * cin + c) * len + static_cast<std::size_t>(q)];
          }
        out.data[(b * cout + o) * len + p] = acc;
      }

  const bool ng = needs(x) || needs(kernel) || needs(bias);
  return push(std::move(out), ng,
              [x, kernel, bias, batch, cin, cout, len, width, pad, slen](Tape& t,
                                                                         const Tensor& g) {
                const Tensor& xv = t.nodes_[x].value;
                const Tensor& kv = t.nodes_[kernel].value;
                if (t.needs(x)) {
                  Tensor& dx = t.grad_buffer(x);
                  for (std::size_t b = 0; b < batch; ++b)
                    for (std::size_t o = 0; o < cout; ++o)
                      for (std::size_t p = 0; p < len; ++p) {
                        const double gv = g.data[(b * cout + o) * len + p];
                        for (std::size_t c = 0; c < cin; ++c)
                          for (std::size_t w = 0; w < width; ++w) {
                            const std::ptrdiff_t q = static_cast<std::ptrdiff_t>(p + w) - pad;
                            if (q < 0 || q >= slen) continue;
                            dx.data[(b * cin + c) * len + static_cast<std::size_t>(q)] +=
                                gv * kv.data[(o * cin + c) * width + w];
                          }
                      }
                }
                if (t.needs(kernel)) {
                  Tensor& dk = t.grad_buffer(kernel);
                  for (std::size_t b = 0; b < batch; ++b)
                    for (std::size_t o = 0; o < cout; ++o)
                      for (std::size_t p = 0; p < len; ++p) {
                        const double gv = g.data[(b * cout + o) * len + p];
                        for (std::size_t c = 0; c < cin; ++c)
                          for (std::size_t w = 0; w < width; ++w) {
                            const std::ptrdiff_t q = static_cast<std::ptrdiff_t>(p + w) - pad;
                            if (q < 0 || q >= slen) continue;
                            dk.data[(o * cin + c) * width + w] +=
                                gv * xv.data[(b * cin + c) * len + static_cast<std::size_t>(q)];
                          }
                      }
                }
                if (t.needs(bias)) {
                  Tensor& db = t.grad_buffer(bias);
                  for (std::size_t b = 0; b < batch; ++b)
                    for (std::size_t o = 0; o < cout; ++o)
                      for (std::size_t p = 0; p < len; ++p)
                        db.data[o] += g.data[(b * cout + o) * len + p];
                }
              });
}

Tape::NodeId Tape::batchnorm(NodeId x, NodeId gamma, NodeId beta, BatchNormState& state,
                             bool training) {
  const Tensor& xv = nodes_[x].value;
  const Tensor& gv = nodes_[gamma].value;
  const Tensor& bv = nodes_[beta].value;
  if (xv.ndim() != 2 && xv.ndim() != 3)
    throw std::invalid_argument("batchnorm: rank must be 2 or 3");
  const std::size_t batch = xv.dim(0);
  const std::size_t channels = xv.dim(1);
  const std::size_t len = xv.ndim() == 3 ? xv.dim(2) : 1;
  if (gv.numel() != channels || bv.numel() != channels ||
      state.running_mean.numel() != channels)
    throw std::invalid_argument("batchnorm: channel mismatch");
  if (training && batch < 2)
    throw std::domain_error("batchnorm: training mode requires batch size >= 2");

  const std::size_t reduce = batch * len;
  Tensor mean({channels}, 0.0), inv_std({channels}, 0.0);
  if (training) {
    Tensor var({channels}, 0.0);
    for (std::size_t c = 0; c < channels; ++c) {
      double acc = 0.0;
      for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t p = 0; p < len; ++p) acc += xv.data[(b * channels + c) * len + p];
      mean.data[c] = acc / static_cast<double>(reduce);
      double vacc = 0.0;
      for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t p = 0; p < len; ++p) {
          const double d = xv.data[(b * channels + c) * len + p] - mean.data[c];
          vacc += d * d;
        }
      var.data[c] = vacc / static_cast<double>(reduce);
      inv_std.data[c] = 1.0 / std::sqrt(var.data[c] + state.eps);
    }
    // update running statistics (unbiased variance, torch convention)
    const double m = state.momentum;
    for (std::size_t c = 0; c < channels; ++c) {
      state.running_mean.data[c] = (1.0 - m) * state.running_mean.data[c] + m * mean.data[c];
      const double unbiased = reduce > 1
          ? var.data[c] * static_cast<double>(reduce) / static_cast<double>(reduce - 1)
          : var.data[c];
      state.running_var.data[c] = (1.0 - m) * state.running_var.data[c] + m * unbiased;
    }
  } else {
    for (std::size_t c = 0; c < channels; ++c) {
      mean.data[c] = state.running_mean.data[c];
      inv_std.data[c] = 1.0 / std::sqrt(state.running_var.data[c] + state.eps);
    }
  }

  Tensor xhat(xv.shape, 0.0);
  Tensor out(xv.shape, 0.0);
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t c = 0; c < channels; ++c)
      for (std::size_t p = 0; p < len; ++p) {
        const std::size_t i = (b * channels + c) * len + p;
        xhat.data[i] = (xv.data[i] - mean.data[c]) * inv_std.data[c];
        out.data[i] = gv.data[c] * xhat.data[i] + bv.data[c];
      }

  const bool ng = needs(x) || needs(gamma) || needs(beta);
  return push(
      std::move(out), ng,
      [x, gamma, beta, batch, channels, len, training, xhat = std::move(xhat),
       inv_std = std::move(inv_std)](Tape& t, const Tensor& g) {
        const std::size_t reduce = batch * len;
        const Tensor& gammav = t.nodes_[gamma].value;
        // per-channel sums used by all three gradients
        Tensor sum_g({channels}, 0.0), sum_gx({channels}, 0.0);
        for (std::size_t b = 0; b < batch; ++b)
          for (std::size_t c = 0; c < channels; ++c)
            for (std::size_t p = 0; p < len; ++p) {
              const std::size_t i = (b * channels + c) * len + p;
              sum_g.data[c] += g.data[i];
              sum_gx.data[c] += g.data[i] * xhat.data[i];
            }
        if (t.needs(gamma)) {
          Tensor& dg = t.grad_buffer(gamma);
          for (std::size_t c = 0; c < channels; ++c) dg.data[c] += sum_gx.data[c];
        }
        if (t.needs(beta)) {
          Tensor& db = t.grad_buffer(beta);
          for (std::size_t c = 0; c < channels; ++c) db.data[c] += sum_g.data[c];
        }
        if (t.needs(x)) {
          Tensor& dx = t.grad_buffer(x);
          if (training) {
            const double r = static_cast<double>(reduce);
            for (std::size_t b = 0; b < batch; ++b)
              for (std::size_t c = 0; c < channels; ++c)
                for (std::size_t p = 0; p < len; ++p) {
                  const std::size_t i = (b * channels + c) * len + p;
                  dx.data[i] += gammav.data[c] * inv_std.data[c] / r *
                                (r * g.data[i] - sum_g.data[c] - xhat.data[i] * sum_gx.data[c]);
                }
          } else {
            for (std::size_t b = 0; b < batch; ++b)
              for (std::size_t c = 0; c < channels; ++c)
                for (std::size_t p = 0; p < len; ++p) {
                  const std::size_t i = (b * channels + c) * len + p;
                  dx.data[i] += g.data[i] * gammav.data[c] * inv_std.data[c];
                }
          }
        }
      });
}

Tape::NodeId Tape::assemble_channels(NodeId a, NodeId b, NodeId c) {
  const Tensor& av = nodes_[a].value;
  check_same_shape(av, nodes_[b].value, "assemble_channels");
  check_same_shape(av, nodes_[c].value, "assemble_channels");
  if (av.ndim() != 2 || av.dim(1) % 2 != 0)
    throw std::invalid_argument("assemble_channels: expected [B x 2K] inputs");
  const std::size_t batch = av.dim(0);
  const std::size_t k = av.dim(1) / 2;
  Tensor out({batch, 6, k}, 0.0);
  const NodeId src[3] = {a, b, c};
  for (std::size_t s = 0; s < 3; ++s) {
    const Tensor& v = nodes_[src[s]].value;
    for (std::size_t bb = 0; bb < batch; ++bb)
      for (std::size_t i = 0; i < k; ++i) {
        out.data[(bb * 6 + 2 * s) * k + i] = v.data[bb * 2 * k + i];          // real half
        out.data[(bb * 6 + 2 * s + 1) * k + i] = v.data[bb * 2 * k + k + i];  // imag half
      }
  }
  const bool ng = needs(a) || needs(b) || needs(c);
  return push(std::move(out), ng, [a, b, c, batch, k](Tape& t, const Tensor& g) {
    const NodeId src[3] = {a, b, c};
    for (std::size_t s = 0; s < 3; ++s) {
      if (!t.needs(src[s])) continue;
      Tensor& d = t.grad_buffer(src[s]);
      for (std::size_t bb = 0; bb < batch; ++bb)
        for (std::size_t i = 0; i < k; ++i) {
          d.data[bb * 2 * k + i] += g.data[(bb * 6 + 2 * s) * k + i];
          d.data[bb * 2 * k + k + i] += g.data[(bb * 6 + 2 * s + 1) * k + i];
        }
    }
  });
}

Tape::NodeId Tape::flatten(NodeId x) {
  const Tensor& xv = nodes_[x].value;
  if (xv.ndim() < 2) throw std::invalid_argument("flatten: rank must be >= 2");
  Tensor out = xv;
  out.shape = {xv.dim(0), xv.numel() / xv.dim(0)};
  return push(std::move(out), needs(x), [x](Tape& t, const Tensor& g) {
    if (!t.needs(x)) return;
    Tensor& dx = t.grad_buffer(x);
    for (std::size_t i = 0; i < dx.data.size(); ++i) dx.data[i] += g.data[i];
  });
}

Tape::NodeId Tape::concat(NodeId a, NodeId b) {
  const Tensor& av = nodes_[a].value;
  const Tensor& bv = nodes_[b].value;
  if (av.ndim() != 2 || bv.ndim() != 2 || av.dim(0) != bv.dim(0))
    throw std::invalid_argument("concat: shape mismatch");
  const std::size_t batch = av.dim(0), da = av.dim(1), db = bv.dim(1);
  Tensor out({batch, da + db}, 0.0);
  for (std::size_t r = 0; r < batch; ++r) {
    for (std::size_t i = 0; i < da; ++i) out.data[r * (da + db) + i] = av.data[r * da + i];
    for (std::size_t i = 0; i < db; ++i) out.data[r * (da + db) + da + i] = bv.data[r * db + i];
  }
  const bool ng = needs(a) || needs(b);
  return push(std::move(out), ng, [a, b, batch, da, db](Tape& t, const Tensor& g) {
    if (t.needs(a)) {
      Tensor& d = t.grad_buffer(a);
      for (std::size_t r = 0; r < batch; ++r)
        for (std::size_t i = 0; i < da; ++i) d.data[r * da + i] += g.data[r * (da + db) + i];
    }
    if (t.needs(b)) {
      Tensor& d = t.grad_buffer(b);
      for (std::size_t r = 0; r < batch; ++r)
        for (std::size_t i = 0; i < db; ++i)
          d.data[r * db + i] += g.data[r * (da + db) + da + i];
    }
  });
}

Tape::NodeId Tape::row_l2norm(NodeId x) {
  const Tensor& xv = nodes_[x].value;
  if (xv.ndim() != 2) throw std::invalid_argument("row_l2norm: expected 2D input");
  const std::size_t batch = xv.dim(0), dimn = xv.dim(1);
  Tensor out({batch}, 0.0);
  for (std::size_t r = 0; r < batch; ++r) {
    double acc = 0.0;
    for (std::size_t i = 0; i < dimn; ++i) {
      const double v = xv.data[r * dimn + i];
      acc += v * v;
    }
    out.data[r] = std::sqrt(acc);
  }
  Tensor saved = out;
  return push(std::move(out), needs(x),
              [x, batch, dimn, saved = std::move(saved)](Tape& t, const Tensor& g) {
                if (!t.needs(x)) return;
                Tensor& dx = t.grad_buffer(x);
                const Tensor& xv = t.nodes_[x].value;
                for (std::size_t r = 0; r < batch; ++r) {
                  const double n = saved.data[r];
                  if (n == 0.0) continue;  // subgradient 0 at the origin
                  const double gr = g.data[r] / n;
                  for (std::size_t i = 0; i < dimn; ++i)
                    dx.data[r * dimn + i] += gr * xv.data[r * dimn + i];
                }
              });
}

Tape::NodeId Tape::row_sum(NodeId x) {
  const Tensor& xv = nodes_[x].value;
  if (xv.ndim() != 2) throw std::invalid_argument("row_sum: expected 2D input");
  const std::size_t batch = xv.dim(0), dimn = xv.dim(1);
  Tensor out({batch}, 0.0);
  for (std::size_t r = 0; r < batch; ++r) {
    double acc = 0.0;
    for (std::size_t i = 0; i < dimn; ++i) acc += xv.data[r * dimn + i];
    out.data[r] = acc;
  }
  return push(std::move(out), needs(x), [x, batch, dimn](Tape& t, const Tensor& g) {
    if (!t.needs(x)) return;
    Tensor& dx = t.grad_buffer(x);
    for (std::size_t r = 0; r < batch; ++r)
      for (std::size_t i = 0; i < dimn; ++i) dx.data[r * dimn + i] += g.data[r];
  });
}

Tape::NodeId Tape::mean_all(NodeId x) {
  const Tensor& xv = nodes_[x].value;
  const std::size_t n = xv.numel();
  if (n == 0) throw std::invalid_argument("mean_all: empty input");
  double acc = 0.0;
  for (double v : xv.data) acc += v;
  Tensor out = Tensor::scalar(acc / static_cast<double>(n));
  return push(std::move(out), needs(x), [x, n](Tape& t, const Tensor& g) {
    if (!t.needs(x)) return;
    Tensor& dx = t.grad_buffer(x);
    const double gv = g.data[0] / static_cast<double>(n);
    for (double& v : dx.data) v += gv;
  });
}

Tape::NodeId Tape::row_scale_eta(NodeId x, NodeId norms, NodeId eta) {
  const Tensor& xv = nodes_[x].value;
  const Tensor& nv = nodes_[norms].value;
  const Tensor& ev = nodes_[eta].value;
  if (xv.ndim() != 2 || nv.ndim() != 1 || xv.dim(0) != nv.dim(0) || ev.numel() != 1)
    throw std::invalid_argument("row_scale_eta: shape mismatch");
  const std::size_t batch = xv.dim(0), dimn = xv.dim(1);
  for (std::size_t r = 0; r < batch; ++r)
    if (nv.data[r] == 0.0) throw std::domain_error("row_scale_eta: zero norm");
  Tensor out(xv.shape, 0.0);
  const double e = ev.data[0];
  for (std::size_t r = 0; r < batch; ++r) {
    const double f = e / nv.data[r];
    for (std::size_t i = 0; i < dimn; ++i) out.data[r * dimn + i] = xv.data[r * dimn + i] * f;
  }
  const bool ng = needs(x) || needs(norms) || needs(eta);
  return push(std::move(out), ng, [x, norms, eta, batch, dimn, e](Tape& t, const Tensor& g) {
    const Tensor& xv = t.nodes_[x].value;
    const Tensor& nv = t.nodes_[norms].value;
    if (t.needs(x)) {
      Tensor& dx = t.grad_buffer(x);
      for (std::size_t r = 0; r < batch; ++r) {
        const double f = e / nv.data[r];
        for (std::size_t i = 0; i < dimn; ++i) dx.data[r * dimn + i] += g.data[r * dimn + i] * f;
      }
    }
    if (t.needs(norms)) {
      Tensor& dn = t.grad_buffer(norms);
      for (std::size_t r = 0; r < batch; ++r) {
        double acc = 0.0;
        for (std::size_t i = 0; i < dimn; ++i) acc += g.data[r * dimn + i] * xv.data[r * dimn + i];
        dn.data[r] += -acc * e / (nv.data[r] * nv.data[r]);
      }
    }
    if (t.needs(eta)) {
      Tensor& de = t.grad_buffer(eta);
      double acc = 0.0;
      for (std::size_t r = 0; r < batch; ++r) {
        const double inv = 1.0 / nv.data[r];
        for (std::size_t i = 0; i < dimn; ++i)
          acc += g.data[r * dimn + i] * xv.data[r * dimn + i] * inv;
      }
      de.data[0] += acc;
    }
  });
}

Tape::NodeId Tape::row_mul(NodeId x, NodeId s) {
  const Tensor& xv = nodes_[x].value;
  const Tensor& sv = nodes_[s].value;
  if (xv.ndim() != 2 || sv.ndim() != 1 || xv.dim(0) != sv.dim(0))
    throw std::invalid_argument("row_mul: shape mismatch");
  const std::size_t batch = xv.dim(0), dimn = xv.dim(1);
  Tensor out(xv.shape, 0.0);
  for (std::size_t r = 0; r < batch; ++r)
    for (std::size_t i = 0; i < dimn; ++i)
      out.data[r * dimn + i] = xv.data[r * dimn + i] * sv.data[r];
  const bool ng = needs(x) || needs(s);
  return push(std::move(out), ng, [x, s, batch, dimn](Tape& t, const Tensor& g) {
    const Tensor& xv = t.nodes_[x].value;
    const Tensor& sv = t.nodes_[s].value;
    if (t.needs(x)) {
      Tensor& dx = t.grad_buffer(x);
      for (std::size_t r = 0; r < batch; ++r)
        for (std::size_t i = 0; i < dimn; ++i)
          dx.data[r * dimn + i] += g.data[r * dimn + i] * sv.data[r];
    }
    if (t.needs(s)) {
      Tensor& ds = t.grad_buffer(s);
      for (std::size_t r = 0; r < batch; ++r) {
        double acc = 0.0;
        for (std::size_t i = 0; i < dimn; ++i) acc += g.data[r * dimn + i] * xv.data[r * dimn + i];
        ds.data[r] += acc;
      }
    }
  });
}

}  // namespace onebit::diff
