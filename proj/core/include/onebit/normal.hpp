#pragma once

namespace onebit {

// log of the standard normal cdf, stable over the whole real line. Direct
// erfc evaluation down to t = -10, asymptotic expansion of the Mills ratio
// below that, so t = -40 evaluates without underflow.
double log_gaussian_cdf_stable(double t);

// log of the standard normal pdf.
double log_gaussian_pdf(double t);

// Mills-type ratio phi(t)/Phi(t), evaluated in the log domain.
double gaussian_pdf_cdf_ratio(double t);

}  // namespace onebit
