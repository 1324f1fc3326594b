#include "onebit/mimo.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace onebit {

ComplexChannel sample_rayleigh_channel(std::size_t n_rx, std::size_t k_users, RngStream& rng) {
  if (n_rx == 0 || k_users == 0)
    throw std::invalid_argument("sample_rayleigh_channel: zero dimension");
  ComplexChannel hc;
  hc.h = CMat(n_rx, k_users);
  const double s = std::sqrt(0.5);
  for (std::size_t r = 0; r < n_rx; ++r)
    for (std::size_t c = 0; c < k_users; ++c) {
      const double re = rng.normal() * s;
      const double im = rng.normal() * s;
      hc.h(r, c) = Cplx(re, im);
    }
  return hc;
}

Mat realify_channel(const ComplexChannel& hc) {
  const std::size_t n = hc.n_rx();
  const std::size_t k = hc.k_users();
  Mat h(2 * n, 2 * k);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < k; ++c) {
      const double re = hc.h(r, c).real();
      const double im = hc.h(r, c).imag();
      h(r, c) = re;
      h(r, c + k) = -im;
      h(r + n, c) = im;
      h(r + n, c + k) = re;
    }
  return h;
}

VecD realify_vector(const VecC& v) {
  VecD out(2 * v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = v[i].real();
    out[i + v.size()] = v[i].imag();
  }
  return out;
}

VecC complexify_vector(const VecD& v) {
  if (v.size() % 2 != 0)
    throw std::invalid_argument("complexify_vector: odd-length input");
  const std::size_t k = v.size() / 2;
  VecC out(k);
  for (std::size_t i = 0; i < k; ++i) out[i] = Cplx(v[i], v[i + k]);
  return out;
}

SymbolDraw sample_symbols(const Constellation& c, std::size_t k_users, RngStream& rng) {
  SymbolDraw draw;
  draw.symbols.resize(k_users);
  draw.bits.reserve(k_users * c.bits_per_symbol());
  const int bpa = c.bits_per_axis();
  const auto nlevels = static_cast<std::uint64_t>(c.levels_per_axis());
  for (std::size_t k = 0; k < k_users; ++k) {
    double axis[2];
    for (int a = 0; a < 2; ++a) {
      const int idx = static_cast<int>(rng.uniform_int(nlevels));
      axis[a] = c.levels()[idx];
      const unsigned bits = c.bits_from_level_index(idx);
      for (int b = bpa - 1; b >= 0; --b)
        draw.bits.push_back(static_cast<std::uint8_t>((bits >> b) & 1u));
    }
    draw.symbols[k] = Cplx(axis[0], axis[1]);
  }
  return draw;
}

std::vector<std::uint8_t> bits_from_lattice(const Constellation& c, const VecD& x) {
  if (x.size() % 2 != 0) throw std::invalid_argument("bits_from_lattice: odd length");
  const std::size_t k_users = x.size() / 2;
  const int bpa = c.bits_per_axis();
  std::vector<std::uint8_t> bits;
  bits.reserve(k_users * c.bits_per_symbol());
  for (std::size_t k = 0; k < k_users; ++k) {
    const double axis[2] = {x[k], x[k + k_users]};
    for (int a = 0; a < 2; ++a) {
      const int idx = c.nearest_level_index(axis[a]);
      const unsigned b = c.bits_from_level_index(idx);
      for (int i = bpa - 1; i >= 0; --i)
        bits.push_back(static_cast<std::uint8_t>((b >> i) & 1u));
    }
  }
  return bits;
}

double noise_variance(const Constellation& c, std::size_t k_users, double rho) {
  if (!(rho > 0.0)) throw std::invalid_argument("noise_variance: rho must be positive");
  return static_cast<double>(k_users) * c.avg_energy() / rho;
}

VecD transmit(const Mat& h, const VecD& x, double rho, const Constellation& c, RngStream& rng) {
  if (h.cols != x.size()) throw std::invalid_argument("transmit: dimension mismatch");
  if (h.cols % 2 != 0) throw std::invalid_argument("transmit: expected real-stacked channel");
  const double sigma_sq = noise_variance(c, h.cols / 2, rho);
  VecD r = matvec(h, x);
  if (sigma_sq > 0.0) {
    const double s = std::sqrt(sigma_sq / 2.0);
    for (double& v : r) v += rng.normal() * s;
  }
  return r;
}

VecD one_bit_quantize(const VecD& r) {
  VecD y(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) y[i] = r[i] >= 0.0 ? 1.0 : -1.0;
  return y;
}

Mat effective_matrix(const Mat& h, const VecD& y) {
  if (y.size() != h.rows) throw std::invalid_argument("effective_matrix: dimension mismatch");
  Mat g = h;
  for (std::size_t r = 0; r < h.rows; ++r) {
    double* row = &g.data[r * g.cols];
    for (std::size_t c = 0; c < h.cols; ++c) row[c] *= y[r];
  }
  return g;
}

ComplexChannel perturb_csi(const ComplexChannel& hc, double sigma_h_sq, RngStream& rng) {
  if (sigma_h_sq < 0.0) throw std::invalid_argument("perturb_csi: negative variance");
  ComplexChannel out = hc;
  if (sigma_h_sq == 0.0) return out;
  const double s = std::sqrt(sigma_h_sq / 2.0);
  for (auto& v : out.h.data) v += Cplx(rng.normal() * s, rng.normal() * s);
  return out;
}

ComplexChannel normalize_columns_channel_specific(const ComplexChannel& hc) {
  ComplexChannel out = hc;
  const double target = std::sqrt(static_cast<double>(hc.n_rx()));
  for (std::size_t c = 0; c < hc.k_users(); ++c) {
    double nsq = 0.0;
    for (std::size_t r = 0; r < hc.n_rx(); ++r) nsq += std::norm(hc.h(r, c));
    if (nsq == 0.0)
      throw std::domain_error("normalize_columns_channel_specific: zero column");
    const double f = target / std::sqrt(nsq);
    for (std::size_t r = 0; r < hc.n_rx(); ++r) out.h(r, c) *= f;
  }
  return out;
}

HardDecision nearest_symbol(const VecD& x_hat, const Constellation& c) {
  if (x_hat.size() % 2 != 0) throw std::invalid_argument("nearest_symbol: odd length");
  HardDecision d;
  d.lattice.resize(x_hat.size());
  const std::size_t k_users = x_hat.size() / 2;
  const int bpa = c.bits_per_axis();
  d.bits.reserve(k_users * c.bits_per_symbol());
  for (std::size_t k = 0; k < k_users; ++k) {
    const std::size_t pos[2] = {k, k + k_users};
    for (int a = 0; a < 2; ++a) {
      const int idx = c.nearest_level_index(x_hat[pos[a]]);
      d.lattice[pos[a]] = c.levels()[idx];
      const unsigned b = c.bits_from_level_index(idx);
      for (int i = bpa - 1; i >= 0; --i)
        d.bits.push_back(static_cast<std::uint8_t>((b >> i) & 1u));
    }
  }
  return d;
}

}  // namespace onebit
