// SPDX-License-Identifier: Apache-2.0
#include "mixadc/special.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace mixadc {

namespace {
constexpr double kSqrt2 = std::numbers::sqrt2;
constexpr double kLogSqrt2Pi = 0.91893853320467274178;  // ln sqrt(2*pi)

// Mills ratio Phi(x)/phi(x) for x < 0 via the Lentz continued fraction
// 1/(-x + 1/(-x + 2/(-x + 3/(...)))). Converges to machine precision for
// x <= -8.
double mills_ratio_negative(double x) {
    const double a = -x;
    double f = a, c = a, d = 0.0;
    const double tiny = 1e-300;
    for (int k = 1; k < 200; ++k) {
        const double bk = a;
        const double ak = static_cast<double>(k);
        d = bk + ak * d;
        if (d == 0.0) d = tiny;
        c = bk + ak / c;
        if (c == 0.0) c = tiny;
        d = 1.0 / d;
        const double delta = c * d;
        f *= delta;
        if (std::abs(delta - 1.0) < 1e-17) break;
    }
    return 1.0 / f;
}
}  // namespace

double normal_cdf(double x) { return 0.5 * std::erfc(-x / kSqrt2); }

double normal_logpdf(double x) { return -0.5 * x * x - kLogSqrt2Pi; }

double log_normal_cdf(double x) {
    if (x >= -8.0) return std::log(normal_cdf(x));
    // Phi(x) = phi(x) * R(x) with R the Mills ratio.
    return normal_logpdf(x) + std::log(mills_ratio_negative(x));
}

double b_weight(double x) {
    const double t_pos = -x * x - log_normal_cdf(x);
    const double t_neg = -x * x - log_normal_cdf(-x);
    double v = std::exp(t_pos) + std::exp(t_neg);
    if (v == 0.0) v = std::numeric_limits<double>::denorm_min();
    if (v > 4.0) v = 4.0;  // round-off at x = 0
    return v;
}

double neg_log_phi(double x) { return -log_normal_cdf(x); }

double neg_log_phi_deriv(double x) {
    return -std::exp(normal_logpdf(x) - log_normal_cdf(x));
}

double neg_log_phi_deriv2(double x) {
    const double r = std::exp(normal_logpdf(x) - log_normal_cdf(x));
    return r * (x + r);
}

}  // namespace mixadc
