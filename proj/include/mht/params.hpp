#pragma once

// Flat natural-scale parameter vector for an MhtModel and the bookkeeping
// shared by the likelihood gradient and the estimation transform layer.
//
// Layout: [mu, sigma, <jump block>, beta_1..K, v_1..L, pi_1..L] with the
// jump block (lambda_1..Q, nu_1..Q) for discrete shocks, (lambda, omega,
// tau) for gamma shocks, and empty otherwise.

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "mht/levy.hpp"

namespace mht {

enum class JumpFamily { None, Discrete, Gamma };

/// Shape of a model: everything except the numeric parameter values.
struct ModelStructure {
    JumpFamily family = JumpFamily::None;
    std::size_t shock_count = 0;      // Q; meaningful for Discrete only
    std::size_t covariate_count = 0;  // K
    std::size_t support_points = 1;   // L
    Normalization normalization = Normalization::DriftOne;
};

inline ModelStructure structure_of(const MhtModel& m) {
    ModelStructure s;
    if (const auto* d = std::get_if<DiscreteShocks>(&m.exponent.jumps)) {
        s.family = JumpFamily::Discrete;
        s.shock_count = d->rates.size();
    } else if (std::holds_alternative<GammaShocks>(m.exponent.jumps)) {
        s.family = JumpFamily::Gamma;
    }
    s.covariate_count = m.link.beta.size();
    s.support_points = m.mixing.size();
    s.normalization = m.normalization;
    return s;
}

struct ParamLayout {
    ModelStructure structure;

    explicit ParamLayout(const ModelStructure& s) : structure(s) {}
    explicit ParamLayout(const MhtModel& m) : structure(structure_of(m)) {}

    std::size_t jump_params() const {
        switch (structure.family) {
            case JumpFamily::Discrete: return 2 * structure.shock_count;
            case JumpFamily::Gamma: return 3;
            default: return 0;
        }
    }
    std::size_t mu_index() const { return 0; }
    std::size_t sigma_index() const { return 1; }
    std::size_t jump_begin() const { return 2; }
    std::size_t beta_begin() const { return 2 + jump_params(); }
    std::size_t v_begin() const { return beta_begin() + structure.covariate_count; }
    std::size_t pi_begin() const { return v_begin() + structure.support_points; }
    std::size_t total() const { return pi_begin() + structure.support_points; }

    /// Index of the parameter pinned by the scale normalization.
    std::size_t normalized_index() const {
        return structure.normalization == Normalization::DriftOne ? mu_index() : sigma_index();
    }

    std::vector<std::string> names() const {
        std::vector<std::string> out;
        out.reserve(total());
        out.emplace_back("mu");
        out.emplace_back("sigma");
        if (structure.family == JumpFamily::Discrete) {
            for (std::size_t q = 1; q <= structure.shock_count; ++q)
                out.push_back("lambda" + std::to_string(q));
            for (std::size_t q = 1; q <= structure.shock_count; ++q)
                out.push_back("nu" + std::to_string(q));
        } else if (structure.family == JumpFamily::Gamma) {
            out.emplace_back("lambda");
            out.emplace_back("omega");
            out.emplace_back("tau");
        }
        for (std::size_t k = 1; k <= structure.covariate_count; ++k)
            out.push_back("beta" + std::to_string(k));
        for (std::size_t l = 1; l <= structure.support_points; ++l)
            out.push_back("v" + std::to_string(l));
        for (std::size_t l = 1; l <= structure.support_points; ++l)
            out.push_back("pi" + std::to_string(l));
        return out;
    }

    /// True for every coordinate that the optimizer may move. Excludes the
    /// normalized drift (or dispersion); the simplex and ordering constraints
    /// live in the transform layer, not here.
    std::vector<bool> free_mask() const {
        std::vector<bool> mask(total(), true);
        mask[normalized_index()] = false;
        return mask;
    }
};

inline std::vector<double> flatten(const MhtModel& m) {
    const ParamLayout lay(m);
    std::vector<double> th(lay.total());
    th[lay.mu_index()] = m.exponent.mu;
    th[lay.sigma_index()] = m.exponent.sigma;
    if (const auto* d = std::get_if<DiscreteShocks>(&m.exponent.jumps)) {
        for (std::size_t q = 0; q < d->rates.size(); ++q) {
            th[lay.jump_begin() + q] = d->rates[q];
            th[lay.jump_begin() + d->rates.size() + q] = d->sizes[q];
        }
    } else if (const auto* g = std::get_if<GammaShocks>(&m.exponent.jumps)) {
        th[lay.jump_begin() + 0] = g->rate;
        th[lay.jump_begin() + 1] = g->scale;
        th[lay.jump_begin() + 2] = g->shape;
    }
    for (std::size_t k = 0; k < m.link.beta.size(); ++k) th[lay.beta_begin() + k] = m.link.beta[k];
    for (std::size_t l = 0; l < m.mixing.size(); ++l) {
        th[lay.v_begin() + l] = m.mixing.support[l];
        th[lay.pi_begin() + l] = m.mixing.masses[l];
    }
    return th;
}

/// Rebuild a model from a flat vector. Throws (via MhtModel::validate) if the
/// vector encodes an inadmissible model.
inline MhtModel unflatten(const ModelStructure& s, const std::vector<double>& th) {
    const ParamLayout lay(s);
    if (th.size() != lay.total()) {
        throw std::invalid_argument("unflatten: expected " + std::to_string(lay.total()) +
                                    " parameters, got " + std::to_string(th.size()));
    }
    MhtModel m;
    m.normalization = s.normalization;
    m.exponent.mu = th[lay.mu_index()];
    m.exponent.sigma = th[lay.sigma_index()];
    if (s.family == JumpFamily::Discrete) {
        DiscreteShocks d;
        d.rates.assign(th.begin() + lay.jump_begin(), th.begin() + lay.jump_begin() + s.shock_count);
        d.sizes.assign(th.begin() + lay.jump_begin() + s.shock_count,
                       th.begin() + lay.jump_begin() + 2 * s.shock_count);
        m.exponent.jumps = std::move(d);
    } else if (s.family == JumpFamily::Gamma) {
        m.exponent.jumps = GammaShocks{th[lay.jump_begin()], th[lay.jump_begin() + 1],
                                       th[lay.jump_begin() + 2]};
    }
    m.link.beta.assign(th.begin() + lay.beta_begin(), th.begin() + lay.beta_begin() + s.covariate_count);
    m.mixing.support.assign(th.begin() + lay.v_begin(), th.begin() + lay.v_begin() + s.support_points);
    m.mixing.masses.assign(th.begin() + lay.pi_begin(), th.begin() + lay.pi_begin() + s.support_points);
    m.validate();
    return m;
}

}  // namespace mht
