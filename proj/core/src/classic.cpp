#include "onebit/classic.hpp"

#include <cmath>
#include <stdexcept>

#include "onebit/normal.hpp"

namespace onebit {

namespace {

constexpr double kSigmoidCdfScale = 1.702;
constexpr std::size_t kMaxCandidates = std::size_t(1) << 20;

bool all_finite(const VecD& v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

}  // namespace

std::size_t ml_candidate_count(const Constellation& c, std::size_t k_users) {
  const std::size_t m = static_cast<std::size_t>(c.order());
  std::size_t count = 1;
  for (std::size_t k = 0; k < k_users; ++k) {
    if (count > kMaxCandidates / m)
      throw std::length_error("ml_exhaustive: candidate set exceeds cap");
    count *= m;
  }
  return count;
}

VecD ml_exhaustive(const VecD& y, const Mat& h, double rho, const Constellation& c,
                   Likelihood likelihood) {
  if (!(rho > 0.0)) throw std::invalid_argument("ml_exhaustive: rho must be positive");
  if (y.size() != h.rows) throw std::invalid_argument("ml_exhaustive: dimension mismatch");
  const std::size_t k_users = h.cols / 2;
  const std::size_t count = ml_candidate_count(c, k_users);

  const Mat g = effective_matrix(h, y);
  const double scale = std::sqrt(2.0 * rho);
  const std::size_t m = static_cast<std::size_t>(c.order());
  const std::size_t levels = static_cast<std::size_t>(c.levels_per_axis());

  VecD cand(2 * k_users);
  VecD best;
  double best_score = 0.0;
  for (std::size_t idx = 0; idx < count; ++idx) {
    std::size_t digits = idx;
    for (std::size_t k = 0; k < k_users; ++k) {
      const std::size_t sym = digits % m;
      digits /= m;
      cand[k] = c.levels()[sym % levels];            // real axis minor
      cand[k + k_users] = c.levels()[sym / levels];  // imaginary axis major
    }
    const VecD gx = matvec(g, cand);
    double score = 0.0;
    if (likelihood == Likelihood::GaussianCdf) {
      for (double v : gx) score += log_gaussian_cdf_stable(scale * v);
    } else {
      for (double v : gx) score -= std::log1p(std::exp(-kSigmoidCdfScale * scale * v));
    }
    if (idx == 0 || score > best_score) {
      best_score = score;
      best = cand;
    }
  }
  return best;
}

NmlResult nml_detect(const VecD& y, const Mat& h, double rho, const NmlConfig& cfg) {
  if (!(rho > 0.0)) throw std::invalid_argument("nml_detect: rho must be positive");
  if (cfg.t_max == 0 || !(cfg.alpha > 0.0))
    throw std::invalid_argument("nml_detect: bad config");
  const Mat g = effective_matrix(h, y);
  const double scale = std::sqrt(2.0 * rho);

  NmlResult res;
  res.x.assign(h.cols, 0.0);
  VecD ratio(g.rows);
  for (std::size_t t = 0; t < cfg.t_max; ++t) {
    const VecD gx = matvec(g, res.x);
    for (std::size_t i = 0; i < gx.size(); ++i)
      ratio[i] = gaussian_pdf_cdf_ratio(scale * gx[i]);
    const VecD step = matvec_t(g, ratio);
    const double f = cfg.alpha * scale;
    for (std::size_t i = 0; i < res.x.size(); ++i) res.x[i] += f * step[i];
    if (!all_finite(res.x)) {
      res.diverged = true;
      return res;
    }
    normalize_to(res.x, 1.0);
  }
  return res;
}

ObmnetParams ObmnetParams::untrained(std::size_t t, double alpha) {
  ObmnetParams p;
  p.step_sizes.assign(t, alpha);
  return p;
}

ObmnetResult obmnet_detect(const VecD& y, const Mat& h, const ObmnetParams& params, double eta) {
  if (params.stages() == 0) throw std::invalid_argument("obmnet_detect: T must be >= 1");
  if (y.size() != h.rows) throw std::invalid_argument("obmnet_detect: dimension mismatch");

  ObmnetResult res;
  res.x.assign(h.cols, 0.0);
  res.iterates.reserve(params.stages());
  for (double alpha : params.step_sizes) {
    // x += alpha * H^T (y . sigmoid(-(y . Hx))), which equals the
    // G = diag(y) H form since y is a sign vector.
    VecD u = matvec(h, res.x);
    for (std::size_t i = 0; i < u.size(); ++i) {
      const double s = sigmoid_scalar(-(y[i] * u[i]));
      u[i] = y[i] * s;
    }
    const VecD step = matvec_t(h, u);
    for (std::size_t i = 0; i < res.x.size(); ++i) res.x[i] += alpha * step[i];
    res.iterates.push_back(res.x);
    if (!all_finite(res.x)) {
      res.diverged = true;
      return res;
    }
  }
  normalize_to(res.x, eta);
  return res;
}

VecD sigmoid_ll_gradient(const VecD& x, const Mat& g) {
  if (x.size() != g.cols) throw std::invalid_argument("sigmoid_ll_gradient: dimension mismatch");
  VecD s = matvec(g, x);
  for (double& v : s) v = sigmoid_scalar(-v);
  VecD grad = matvec_t(g, s);
  for (double& v : grad) v = -v;
  return grad;
}

}  // namespace onebit
