// SPDX-License-Identifier: Apache-2.0
#pragma once

namespace mixadc {

/// Standard normal CDF.
double normal_cdf(double x);

/// log of the standard normal CDF, stable for x down to about -1e5.
double log_normal_cdf(double x);

/// log of the standard normal PDF.
double normal_logpdf(double x);

/// B(x) = [1/Phi(x) + 1/Phi(-x)] exp(-x^2), bounded in (0, 4].
double b_weight(double x);

/// f(x) = -ln Phi(x).
double neg_log_phi(double x);

/// f'(x) = -phi(x)/Phi(x). Approaches x from below as x -> -inf.
double neg_log_phi_deriv(double x);

/// f''(x) = r(x)(x + r(x)) with r = phi/Phi; lies in (0, 1).
double neg_log_phi_deriv2(double x);

}  // namespace mixadc
