#pragma once

// Standard-normal helpers built on the complementary error function.
//
// Everything that touches Gaussian tails goes through log_erfc so that
// survival terms like exp(2*mu*w/sigma^2) * Phi(-z) can be assembled in
// log space without overflow * underflow artifacts.

#include <cmath>
#include <limits>
#include <stdexcept>

namespace mht {

inline constexpr double kPi = 3.141592653589793238462643383279502884;
inline constexpr double kLnSqrt2Pi = 0.91893853320467274178032973640561764;  // ln sqrt(2*pi)
inline constexpr double kInvSqrt2 = 0.70710678118654752440084436210484904;

/// ln erfc(x) for all finite x. Uses std::erfc directly until it nears the
/// underflow region, then the asymptotic expansion
///   erfc(x) = exp(-x^2) / (x sqrt(pi)) * sum_n (-1)^n (2n-1)!! / (2x^2)^n,
/// which carries ~1e-17 relative truncation error at the switch point.
inline double log_erfc(double x) {
    if (std::isnan(x)) {
        throw std::invalid_argument("log_erfc: NaN argument");
    }
    if (x < 25.0) {
        return std::log(std::erfc(x));
    }
    const double inv2x2 = 1.0 / (2.0 * x * x);
    double series = 1.0;
    double term = 1.0;
    for (int n = 1; n <= 6; ++n) {
        term *= -(2.0 * n - 1.0) * inv2x2;
        series += term;
    }
    return -x * x - std::log(x) - 0.5 * std::log(kPi) + std::log(series);
}

/// Standard normal CDF, Phi(z) = erfc(-z / sqrt 2) / 2.
inline double norm_cdf(double z) {
    return 0.5 * std::erfc(-z * kInvSqrt2);
}

/// ln Phi(z), stable arbitrarily deep into the lower tail.
inline double log_norm_cdf(double z) {
    return log_erfc(-z * kInvSqrt2) - 0.6931471805599453094172321214581766;  // - ln 2
}

/// Standard normal density.
inline double norm_pdf(double z) {
    return std::exp(-0.5 * z * z - kLnSqrt2Pi);
}

/// ln of the standard normal density.
inline double log_norm_pdf(double z) {
    return -0.5 * z * z - kLnSqrt2Pi;
}

}  // namespace mht
