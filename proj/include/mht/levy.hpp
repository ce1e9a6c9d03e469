#pragma once

// Model primitives for mixed hitting-time duration models.
//
// A latent spectrally-negative Levy process Y with Laplace exponent
//   psi(s) = mu s + sigma^2 s^2 / 2 + integral (e^{s y} - 1) Upsilon(dy)
// crosses the threshold phi(x) * V, where phi(x) = exp(x'beta) and V is
// discrete unobserved heterogeneity. Two jump families are supported:
// finitely many discrete shock sizes, and gamma-distributed shocks, both
// arriving at Poisson times. All evaluations extend to complex s with
// Re s >= 0, which the contour-deformed Laplace inversion relies on.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace mht {

using complex_t = std::complex<double>;

/// Raised when an iterative numeric routine fails to deliver its tolerance
/// (root finding, inversion overflow, clamping violations, ...).
class numerical_error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline bool finite(double x) { return std::isfinite(x); }
inline bool finite(const complex_t& z) {
    return std::isfinite(z.real()) && std::isfinite(z.imag());
}

// (1 + z)^(-p) via exp(-p * log1p(z)); stays finite for very large p
// (the near-degenerate gamma-shock limit).
inline double pow1p(double z, double p) {
    return std::exp(-p * std::log1p(z));
}
inline complex_t pow1p(const complex_t& z, double p) {
    return std::exp(-p * std::log(1.0 + z));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Jump component
// ---------------------------------------------------------------------------

struct NoJumps {};

/// Compound Poisson shocks with Q distinct sizes: rate lambda_q > 0 for a
/// shock of size nu_q < 0, with nu_1 < ... < nu_Q.
struct DiscreteShocks {
    std::vector<double> rates;
    std::vector<double> sizes;
};

/// Compound Poisson shocks with gamma-distributed magnitude: arrival rate
/// `rate`, sizes -G where G ~ Gamma(shape, scale 1/scale_inv)... the density
/// of a shock at y < 0 is scale^shape / Gamma(shape) * (-y)^(shape-1) e^{scale y}.
struct GammaShocks {
    double rate = 1.0;   // lambda > 0
    double scale = 1.0;  // omega > 0
    double shape = 1.0;  // tau > 0
};

using JumpSpec = std::variant<NoJumps, DiscreteShocks, GammaShocks>;

/// Laplace exponent parameters (mu, sigma, jump component).
struct LevyExponentSpec {
    double mu = 1.0;
    double sigma = 1.0;
    JumpSpec jumps = NoJumps{};

    bool has_jumps() const { return !std::holds_alternative<NoJumps>(jumps); }

    /// Total Poisson arrival rate of the jump component.
    double total_jump_rate() const {
        if (const auto* d = std::get_if<DiscreteShocks>(&jumps)) {
            double tot = 0.0;
            for (double r : d->rates) tot += r;
            return tot;
        }
        if (const auto* g = std::get_if<GammaShocks>(&jumps)) return g->rate;
        return 0.0;
    }

    void validate() const {
        if (!std::isfinite(mu) || !std::isfinite(sigma)) {
            throw std::invalid_argument("LevyExponentSpec: non-finite mu/sigma");
        }
        if (sigma <= 0.0) {
            throw std::invalid_argument("LevyExponentSpec: sigma must be > 0");
        }
        if (const auto* d = std::get_if<DiscreteShocks>(&jumps)) {
            if (d->rates.size() != d->sizes.size() || d->rates.empty()) {
                throw std::invalid_argument("DiscreteShocks: rates/sizes size mismatch");
            }
            for (std::size_t q = 0; q < d->rates.size(); ++q) {
                if (!(d->rates[q] > 0.0) || !std::isfinite(d->rates[q])) {
                    throw std::invalid_argument("DiscreteShocks: rates must be > 0");
                }
                if (!(d->sizes[q] < 0.0) || !std::isfinite(d->sizes[q])) {
                    throw std::invalid_argument("DiscreteShocks: sizes must be < 0");
                }
                if (q > 0 && !(d->sizes[q - 1] < d->sizes[q])) {
                    throw std::invalid_argument("DiscreteShocks: sizes must be strictly increasing");
                }
            }
        } else if (const auto* g = std::get_if<GammaShocks>(&jumps)) {
            if (!(g->rate > 0.0) || !(g->scale > 0.0) || !(g->shape > 0.0) ||
                !std::isfinite(g->rate) || !std::isfinite(g->scale) || !std::isfinite(g->shape)) {
                throw std::invalid_argument("GammaShocks: rate, scale, shape must be > 0");
            }
        }
    }
};

// ---------------------------------------------------------------------------
// psi and its derivatives, on Re s >= 0
// ---------------------------------------------------------------------------

/// psi(s) = mu s + sigma^2 s^2 / 2 + jump terms; psi(0) = 0 for every variant.
template <typename Scalar>
Scalar psi_eval(const LevyExponentSpec& spec, const Scalar& s) {
    if (!detail::finite(s)) throw std::invalid_argument("psi_eval: non-finite argument");
    Scalar r = spec.mu * s + 0.5 * spec.sigma * spec.sigma * s * s;
    if (const auto* d = std::get_if<DiscreteShocks>(&spec.jumps)) {
        for (std::size_t q = 0; q < d->rates.size(); ++q) {
            r += d->rates[q] * (std::exp(s * d->sizes[q]) - 1.0);
        }
    } else if (const auto* g = std::get_if<GammaShocks>(&spec.jumps)) {
        r += g->rate * (detail::pow1p(s / g->scale, g->shape) - 1.0);
    }
    return r;
}

/// psi'(s) = mu + sigma^2 s + jump terms.
template <typename Scalar>
Scalar psi_prime(const LevyExponentSpec& spec, const Scalar& s) {
    if (!detail::finite(s)) throw std::invalid_argument("psi_prime: non-finite argument");
    Scalar r = spec.mu + spec.sigma * spec.sigma * s;
    if (const auto* d = std::get_if<DiscreteShocks>(&spec.jumps)) {
        for (std::size_t q = 0; q < d->rates.size(); ++q) {
            r += d->rates[q] * d->sizes[q] * std::exp(s * d->sizes[q]);
        }
    } else if (const auto* g = std::get_if<GammaShocks>(&spec.jumps)) {
        r -= g->rate * g->shape / g->scale * detail::pow1p(s / g->scale, g->shape + 1.0);
    }
    return r;
}

/// psi''(s); needed by the analytic likelihood gradient.
template <typename Scalar>
Scalar psi_second(const LevyExponentSpec& spec, const Scalar& s) {
    Scalar r = Scalar(spec.sigma * spec.sigma);
    if (const auto* d = std::get_if<DiscreteShocks>(&spec.jumps)) {
        for (std::size_t q = 0; q < d->rates.size(); ++q) {
            r += d->rates[q] * d->sizes[q] * d->sizes[q] * std::exp(s * d->sizes[q]);
        }
    } else if (const auto* g = std::get_if<GammaShocks>(&spec.jumps)) {
        r += g->rate * g->shape * (g->shape + 1.0) / (g->scale * g->scale) *
             detail::pow1p(s / g->scale, g->shape + 2.0);
    }
    return r;
}

// ---------------------------------------------------------------------------
// Lambda_BM: closed-form inverse of the Brownian part
// ---------------------------------------------------------------------------

/// Lambda_BM(s; mu, sigma) = (sqrt(mu^2 + 2 sigma^2 s) - mu) / sigma^2,
/// principal square root. Satisfies psi_BM(Lambda_BM(s)) = s.
template <typename Scalar>
Scalar lambda_bm(const Scalar& s, double mu, double sigma) {
    if (sigma <= 0.0) throw std::invalid_argument("lambda_bm: sigma must be > 0");
    if (!detail::finite(s)) throw std::invalid_argument("lambda_bm: non-finite argument");
    const double s2 = sigma * sigma;
    return (std::sqrt(mu * mu + 2.0 * s2 * s) - mu) / s2;
}

/// d/ds Lambda_BM(s) = 1 / sqrt(mu^2 + 2 sigma^2 s).
template <typename Scalar>
Scalar lambda_bm_prime(const Scalar& s, double mu, double sigma) {
    if (sigma <= 0.0) throw std::invalid_argument("lambda_bm_prime: sigma must be > 0");
    const Scalar disc = mu * mu + 2.0 * sigma * sigma * s;
    if (std::abs(disc) == 0.0) {
        throw numerical_error("lambda_bm_prime: branch point mu^2 + 2 sigma^2 s = 0");
    }
    return 1.0 / std::sqrt(disc);
}

// ---------------------------------------------------------------------------
// Numerical inverse of psi on its increasing branch (test oracle)
// ---------------------------------------------------------------------------

/// Largest root of psi, Lambda(0). Zero whenever psi'(0) >= 0.
inline double lambda_zero(const LevyExponentSpec& spec) {
    if (psi_prime(spec, 0.0) >= 0.0) return 0.0;
    // psi dips below zero before rising; the largest root sits in
    // [Lambda_BM(0), Lambda_BM(total jump rate)].
    double lo = lambda_bm(0.0, spec.mu, spec.sigma);
    double hi = lambda_bm(spec.total_jump_rate(), spec.mu, spec.sigma);
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (psi_eval(spec, mid) < 0.0 ? lo : hi) = mid;
        if (hi - lo <= 1e-15 * std::max(1.0, hi)) break;
    }
    return 0.5 * (lo + hi);
}

/// Lambda(s): the value z >= Lambda(0) with psi(z) = s, found by bracketed
/// Newton with bisection fallback. Used as a test oracle; the production
/// inversion path never needs Lambda itself.
inline double lambda_numeric(const LevyExponentSpec& spec, double s) {
    if (!(s >= 0.0) || !std::isfinite(s)) {
        throw std::invalid_argument("lambda_numeric: s must be finite and >= 0");
    }
    // psi <= psi_BM pointwise (jump terms are <= 0 on the positive axis) and
    // psi >= psi_BM - total rate, so Lambda(s) lies in this bracket.
    double lo = lambda_bm(s, spec.mu, spec.sigma);
    double hi = lambda_bm(s + spec.total_jump_rate(), spec.mu, spec.sigma);
    if (!spec.has_jumps()) return lo;
    const double tol = 1e-13;
    double z = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
        const double g = psi_eval(spec, z) - s;
        if (std::abs(g) <= 1e-13 * std::max(1.0, std::abs(s))) return z;
        (g < 0.0 ? lo : hi) = z;
        const double dg = psi_prime(spec, z);
        double step = dg != 0.0 ? z - g / dg : std::numeric_limits<double>::quiet_NaN();
        z = (std::isfinite(step) && step > lo && step < hi) ? step : 0.5 * (lo + hi);
        if (hi - lo <= tol * std::max(1.0, std::abs(z))) return z;
    }
    throw numerical_error("lambda_numeric: no convergence after 200 iterations at s=" +
                          std::to_string(s));
}

// ---------------------------------------------------------------------------
// Mixing distribution and covariate link
// ---------------------------------------------------------------------------

/// Finitely discrete heterogeneity: P(V = support[l]) = masses[l].
struct MixingDistribution {
    std::vector<double> support;  // 0 < v_1 < ... < v_L
    std::vector<double> masses;   // each in (0,1), summing to 1

    std::size_t size() const { return support.size(); }

    void validate() const {
        if (support.empty() || support.size() != masses.size()) {
            throw std::invalid_argument("MixingDistribution: empty or mismatched support/masses");
        }
        double sum = 0.0;
        for (std::size_t l = 0; l < support.size(); ++l) {
            if (!(support[l] > 0.0) || !std::isfinite(support[l])) {
                throw std::invalid_argument("MixingDistribution: support must be > 0");
            }
            if (l > 0 && !(support[l - 1] < support[l])) {
                throw std::invalid_argument("MixingDistribution: support must be strictly increasing");
            }
            if (!(masses[l] > 0.0) || !(masses[l] < 1.0 + 1e-12)) {
                throw std::invalid_argument("MixingDistribution: masses must lie in (0,1)");
            }
            sum += masses[l];
        }
        if (std::abs(sum - 1.0) > 1e-12) {
            throw std::invalid_argument("MixingDistribution: masses must sum to 1, got " +
                                        std::to_string(sum));
        }
    }
};

/// L(z) = sum_l pi_l exp(-z v_l); |L(z)| <= 1 on Re z >= 0, L(0) = 1.
template <typename Scalar>
Scalar mixing_lt(const MixingDistribution& mix, const Scalar& z) {
    if (!detail::finite(z)) throw std::invalid_argument("mixing_lt: non-finite argument");
    Scalar r{};
    for (std::size_t l = 0; l < mix.support.size(); ++l) {
        r += mix.masses[l] * std::exp(-z * mix.support[l]);
    }
    return r;
}

/// Loglinear threshold effect phi(x; beta) = exp(x'beta).
struct CovariateLink {
    std::vector<double> beta;

    void validate() const {
        for (double b : beta) {
            if (!std::isfinite(b)) throw std::invalid_argument("CovariateLink: non-finite beta");
        }
    }
};

inline double threshold_eval(const CovariateLink& link, std::span<const double> x) {
    if (x.size() != link.beta.size()) {
        throw std::invalid_argument("threshold_eval: covariate length " + std::to_string(x.size()) +
                                    " does not match beta length " + std::to_string(link.beta.size()));
    }
    double acc = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) acc += x[k] * link.beta[k];
    return std::exp(acc);
}

// ---------------------------------------------------------------------------
// Full model
// ---------------------------------------------------------------------------

/// Which scale normalization pins down the model (Theorem-1 style scale
/// invariance leaves two free constants; one is fixed here, the other by the
/// loglinear threshold parameterization).
enum class Normalization { DriftOne, SigmaOne };

struct MhtModel {
    LevyExponentSpec exponent;
    CovariateLink link;
    MixingDistribution mixing;
    Normalization normalization = Normalization::DriftOne;

    void validate() const {
        exponent.validate();
        link.validate();
        mixing.validate();
        if (normalization == Normalization::DriftOne && exponent.mu != 1.0) {
            throw std::invalid_argument("MhtModel: mu must equal 1 exactly under the mu=1 normalization");
        }
        if (normalization == Normalization::SigmaOne && exponent.sigma != 1.0) {
            throw std::invalid_argument("MhtModel: sigma must equal 1 exactly under the sigma=1 normalization");
        }
    }
};

/// Laplace transform of T | X = x at real s >= 0:  L[Lambda(s) phi(x)].
/// Test-oracle companion of the inversion engine (it needs Lambda).
inline double duration_lt(const MhtModel& model, double s, std::span<const double> x) {
    const double lam = lambda_numeric(model.exponent, s);
    const double phi = threshold_eval(model.link, x);
    return mixing_lt(model.mixing, lam * phi);
}

}  // namespace mht
