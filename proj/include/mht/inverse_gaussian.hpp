#pragma once

// Exact inverse-Gaussian first-passage machinery for the Brownian-motion
// special case: density, survival function, and the mixed log likelihood.
// Serves both as the fast path in `likelihood` and as the benchmark oracle
// for the numerical inversion engine.
//
// Density of the first passage of a (mu, sigma) Brownian motion over a
// barrier w > 0:
//   f(t) = w / (sigma sqrt(2 pi t^3)) * exp(-(w - mu t)^2 / (2 sigma^2 t))
// and survival function
//   Fbar(t) = Phi((w - mu t)/(sigma sqrt t))
//           - exp(2 mu w / sigma^2) * Phi(-(w + mu t)/(sigma sqrt t)).
// For mu < 0 the distribution is defective with mass 1 - exp(2 mu w/sigma^2)
// escaping to +infinity.

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "mht/dataset.hpp"
#include "mht/levy.hpp"
#include "mht/special.hpp"

namespace mht {

/// Parameters of one inverse-Gaussian passage problem; barrier = phi(x) * v.
struct IgParams {
    double mu = 1.0;
    double sigma = 1.0;
    double barrier = 1.0;

    void validate() const {
        if (!(sigma > 0.0)) throw std::invalid_argument("IgParams: sigma must be > 0");
        if (!(barrier > 0.0)) throw std::invalid_argument("IgParams: barrier must be > 0");
        if (!std::isfinite(mu)) throw std::invalid_argument("IgParams: non-finite mu");
    }
};

namespace detail {
inline void require_positive_time(double t, const char* who) {
    if (!(t > 0.0) || !std::isfinite(t)) {
        throw std::invalid_argument(std::string(who) + ": t must be finite and > 0");
    }
}
}  // namespace detail

inline double ig_log_density(const IgParams& p, double t) {
    detail::require_positive_time(t, "ig_log_density");
    const double dev = p.barrier - p.mu * t;
    return std::log(p.barrier) - std::log(p.sigma) - kLnSqrt2Pi - 1.5 * std::log(t) -
           dev * dev / (2.0 * p.sigma * p.sigma * t);
}

inline double ig_density(const IgParams& p, double t) {
    return std::exp(ig_log_density(p, t));
}

/// ln Fbar(t). The exp(2 mu w / sigma^2) * Phi(.) product is assembled in log
/// space; the two Phi terms are combined through expm1 so nothing cancels
/// even when Fbar is many orders below Phi(z1).
inline double ig_log_survival(const IgParams& p, double t) {
    detail::require_positive_time(t, "ig_log_survival");
    const double sqt = p.sigma * std::sqrt(t);
    const double z1 = (p.barrier - p.mu * t) / sqt;
    const double z2 = -(p.barrier + p.mu * t) / sqt;
    const double a = 2.0 * p.mu * p.barrier / (p.sigma * p.sigma);
    const double log_phi1 = log_norm_cdf(z1);
    // rho < 0 algebraically; roundoff in the two huge log terms can push it
    // to +0 only in regimes where the result underflows regardless
    const double rho = std::min(a + log_norm_cdf(z2) - log_phi1,
                                -std::numeric_limits<double>::denorm_min());
    // Fbar = Phi(z1) * (1 - e^rho)
    return log_phi1 + std::log(-std::expm1(rho));
}

inline double ig_survival(const IgParams& p, double t) {
    return std::exp(ig_log_survival(p, t));
}

inline double ig_cdf(const IgParams& p, double t) {
    return -std::expm1(ig_log_survival(p, t));
}

/// Gradient of ln f with respect to (mu, sigma, barrier).
struct IgLogGrad {
    double d_mu = 0.0;
    double d_sigma = 0.0;
    double d_barrier = 0.0;
};

inline IgLogGrad ig_log_density_grad(const IgParams& p, double t) {
    detail::require_positive_time(t, "ig_log_density_grad");
    const double s2 = p.sigma * p.sigma;
    const double dev = p.barrier - p.mu * t;
    IgLogGrad g;
    g.d_mu = dev / s2;
    g.d_sigma = -1.0 / p.sigma + dev * dev / (s2 * p.sigma * t);
    g.d_barrier = 1.0 / p.barrier - dev / (s2 * t);
    return g;
}

/// Gradient of ln Fbar with respect to (mu, sigma, barrier), evaluated in
/// ratio space against Fbar itself. Uses the identity
/// exp(a) * npdf(z2) = npdf(z1), so only exp(a) * Phi(z2) needs log-space care.
inline IgLogGrad ig_log_survival_grad(const IgParams& p, double t) {
    detail::require_positive_time(t, "ig_log_survival_grad");
    const double s2 = p.sigma * p.sigma;
    const double sqt = p.sigma * std::sqrt(t);
    const double z1 = (p.barrier - p.mu * t) / sqt;
    const double z2 = -(p.barrier + p.mu * t) / sqt;
    const double a = 2.0 * p.mu * p.barrier / s2;
    const double log_fbar = ig_log_survival(p, t);
    // r2 = exp(a) * Phi(z2) / Fbar,  q1 = npdf(z1) / Fbar
    const double r2 = std::exp(a + log_norm_cdf(z2) - log_fbar);
    const double q1 = std::exp(log_norm_pdf(z1) - log_fbar);
    IgLogGrad g;
    g.d_mu = -2.0 * p.barrier / s2 * r2;
    g.d_sigma = -2.0 * p.barrier / (s2 * std::sqrt(t)) * q1 + 4.0 * p.mu * p.barrier / (s2 * p.sigma) * r2;
    g.d_barrier = 2.0 / sqt * q1 - 2.0 * p.mu / s2 * r2;
    return g;
}

// ---------------------------------------------------------------------------
// Mixed log likelihood, Brownian case
// ---------------------------------------------------------------------------

struct MixedIgLoglik {
    double value = 0.0;
    /// Rows whose mixture likelihood underflowed to zero (value is then -inf).
    std::vector<std::size_t> zero_likelihood_rows;
};

/// ell_N = sum_n ln sum_l pi_l f(t_n | w = phi(x_n) v_l)^{d_n}
///                           Fbar(t_n | .)^{1-d_n},
/// accumulated with a log-sum-exp over mixture components.
inline MixedIgLoglik mixed_ig_loglik_detailed(const MhtModel& model, const Dataset& data) {
    model.validate();
    data.validate();
    if (model.exponent.has_jumps()) {
        throw std::invalid_argument("mixed_ig_loglik: model must have no jump component");
    }
    const auto& mix = model.mixing;
    const std::size_t L = mix.size();
    MixedIgLoglik out;
    std::vector<double> lg(L);
    for (std::size_t n = 0; n < data.observations.size(); ++n) {
        const auto& obs = data.observations[n];
        const double phi = threshold_eval(model.link, obs.covariates);
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t l = 0; l < L; ++l) {
            IgParams p{model.exponent.mu, model.exponent.sigma, phi * mix.support[l]};
            const double lt = obs.complete ? ig_log_density(p, obs.duration)
                                           : ig_log_survival(p, obs.duration);
            lg[l] = std::log(mix.masses[l]) + lt;
            mx = std::max(mx, lg[l]);
        }
        if (!std::isfinite(mx)) {
            out.zero_likelihood_rows.push_back(n);
            continue;
        }
        double acc = 0.0;
        for (std::size_t l = 0; l < L; ++l) acc += std::exp(lg[l] - mx);
        out.value += mx + std::log(acc);
    }
    if (!out.zero_likelihood_rows.empty()) {
        out.value = -std::numeric_limits<double>::infinity();
    }
    return out;
}

inline double mixed_ig_loglik(const MhtModel& model, const Dataset& data) {
    return mixed_ig_loglik_detailed(model, data).value;
}

}  // namespace mht
