#pragma once

#include <cstdint>
#include <vector>

#include "onebit/constellation.hpp"
#include "onebit/mat.hpp"
#include "onebit/rng.hpp"

namespace onebit {

// Complex uplink channel, N receive antennas by K users.
struct ComplexChannel {
  CMat h;
  std::size_t n_rx() const { return h.rows; }
  std::size_t k_users() const { return h.cols; }
};

// Rayleigh fading: i.i.d. CN(0,1) entries (real/imaginary parts N(0, 1/2)).
// Entries are drawn row-major, real part before imaginary part.
ComplexChannel sample_rayleigh_channel(std::size_t n_rx, std::size_t k_users, RngStream& rng);

// Real-valued stacking [[Re, -Im], [Im, Re]] of the complex channel (2N x 2K).
Mat realify_channel(const ComplexChannel& hc);

// [Re(v); Im(v)] stacking and its inverse.
VecD realify_vector(const VecC& v);
VecC complexify_vector(const VecD& v);

// Uniform lattice symbols. Per user the real axis is drawn before the
// imaginary axis; bits are the Gray labels of the drawn levels, packed per
// user as (real-axis bits, imaginary-axis bits), most significant bit first.
struct SymbolDraw {
  VecC symbols;                    // K complex lattice points
  std::vector<std::uint8_t> bits;  // K * bits_per_symbol entries in {0,1}
};
SymbolDraw sample_symbols(const Constellation& c, std::size_t k_users, RngStream& rng);

// Gray bit labels of an already-chosen lattice vector (same packing as
// sample_symbols). x is real-stacked, length 2K.
std::vector<std::uint8_t> bits_from_lattice(const Constellation& c, const VecD& x);

// Noise variance per complex entry for a target linear SNR rho:
// sigma^2 = K * avg_energy / rho.
double noise_variance(const Constellation& c, std::size_t k_users, double rho);

// r = Hx + z with z i.i.d. N(0, sigma^2/2) per real component. rho may be
// +infinity, which takes the exact noiseless path. Noise is drawn in stacked
// index order 0..2N-1.
VecD transmit(const Mat& h, const VecD& x, double rho, const Constellation& c, RngStream& rng);

// Elementwise sign with sign(0) = +1.
VecD one_bit_quantize(const VecD& r);

// G = diag(y) H.
Mat effective_matrix(const Mat& h, const VecD& y);

// Additive CN(0, sigma_h_sq) perturbation of every channel entry.
ComplexChannel perturb_csi(const ComplexChannel& hc, double sigma_h_sq, RngStream& rng);

// Rescales every column of the complex channel to norm sqrt(N).
ComplexChannel normalize_columns_channel_specific(const ComplexChannel& hc);

// Hard decision: per real axis the nearest lattice level, plus Gray bits.
struct HardDecision {
  VecD lattice;                    // 2K real-stacked lattice values
  std::vector<std::uint8_t> bits;  // K * bits_per_symbol entries
};
HardDecision nearest_symbol(const VecD& x_hat, const Constellation& c);

}  // namespace onebit
