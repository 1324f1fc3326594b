#include "onebit/normal.hpp"

#include <cfloat>
#include <cmath>

namespace onebit {

namespace {

constexpr double kLogSqrt2Pi = 0.91893853320467274178;  // log(sqrt(2*pi))
constexpr double kAsymptoticThreshold = -10.0;

// Asymptotic series 1 - 1/t^2 + 3/t^4 - 15/t^6 + ... for the tail
// Phi(t) = phi(t)/|t| * S(t), t << 0 (Abramowitz & Stegun 26.2.12). Terms are
// accumulated until they stop shrinking, as in the classic erfc tail codes.
double tail_series(double t) {
  const double zsqr = t * t;
  double sum = 1.0;
  double g = 1.0;
  double a = DBL_MAX;
  double i = 1.0;
  for (;;) {
    const double lasta = a;
    const double x = (4.0 * i - 3.0) / zsqr;
    const double y = x * ((4.0 * i - 1.0) / zsqr);
    a = g * (x - y);
    sum -= a;
    g *= y;
    i += 1.0;
    a = std::fabs(a);
    if (!(lasta > a && a >= std::fabs(sum * DBL_EPSILON))) break;
  }
  return sum;
}

}  // namespace

double log_gaussian_pdf(double t) { return -0.5 * t * t - kLogSqrt2Pi; }

double log_gaussian_cdf_stable(double t) {
  if (t >= kAsymptoticThreshold)
    return std::log(0.5 * std::erfc(-t * M_SQRT1_2));
  return log_gaussian_pdf(t) - std::log(-t) + std::log(tail_series(t));
}

double gaussian_pdf_cdf_ratio(double t) {
  return std::exp(log_gaussian_pdf(t) - log_gaussian_cdf_stable(t));
}

}  // namespace onebit
