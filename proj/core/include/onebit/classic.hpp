#pragma once

#include <cstddef>
#include <vector>

#include "onebit/constellation.hpp"
#include "onebit/mat.hpp"

namespace onebit {

enum class Likelihood { GaussianCdf, Sigmoid };

// Exhaustive maximum-likelihood search over all M^K candidate symbol vectors.
// GaussianCdf scores sum_i log Phi(sqrt(2 rho) (Gx)_i); Sigmoid scores
// -sum_i log(1 + exp(-c sqrt(2 rho) (Gx)_i)) with c = 1.702. Ties go to the
// lowest candidate index (user 0 is the fastest-varying base-M digit, axis
// levels in ascending lattice order, real axis minor).
VecD ml_exhaustive(const VecD& y, const Mat& h, double rho, const Constellation& c,
                   Likelihood likelihood);

// Candidate count M^K, guarded against enumeration blowup in ml_exhaustive.
std::size_t ml_candidate_count(const Constellation& c, std::size_t k_users);

struct NmlConfig {
  std::size_t t_max = 500;
  double alpha = 0.001;
};

struct NmlResult {
  VecD x;         // final iterate, unit norm unless diverged
  bool diverged = false;
};

// Near-ML gradient ascent on the Gaussian-cdf log-likelihood: T_max steps of
// x += alpha sqrt(2 rho) G^T [phi/Phi](sqrt(2 rho) G x), each followed by
// projection onto the unit sphere. The pdf/cdf ratio is evaluated in the log
// domain. A non-finite iterate stops the run and flags it.
NmlResult nml_detect(const VecD& y, const Mat& h, double rho, const NmlConfig& cfg);

struct ObmnetParams {
  std::vector<double> step_sizes;  // alpha^(t), t = 0..T-1
  std::size_t stages() const { return step_sizes.size(); }
  static ObmnetParams untrained(std::size_t t, double alpha = 0.01);
};

struct ObmnetResult {
  VecD x;                       // normalized output
  std::vector<VecD> iterates;   // x^(1) .. x^(T) before normalization
  bool diverged = false;
};

// Unfolded sigmoid-likelihood gradient descent from x^(0) = 0:
//   x^(t+1) = x^(t) + alpha^(t) G^T sigmoid(-G x^(t)),
// with the final iterate scaled to norm eta.
ObmnetResult obmnet_detect(const VecD& y, const Mat& h, const ObmnetParams& params, double eta);

// Gradient of the absorbed-constant sigmoid log-likelihood
// sum_i log(1 + exp(-g_i^T x)): returns -G^T sigmoid(-G x).
VecD sigmoid_ll_gradient(const VecD& x, const Mat& g);

}  // namespace onebit
