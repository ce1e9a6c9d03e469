#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <vector>

#include "mht/inverse_gaussian.hpp"
#include "mht/inversion.hpp"
#include "mht/levy.hpp"
#include "mht/params.hpp"

using namespace mht;
using Catch::Approx;

namespace {

MhtModel gaussian_model(double mu = 1.0, double sigma = 1.0, double v = 1.0) {
    MhtModel m;
    m.exponent = {mu, sigma, NoJumps{}};
    m.mixing = {{v}, {1.0}};
    if (mu != 1.0) m.normalization = Normalization::SigmaOne;
    return m;
}

// Figure-3 style specification: standard BM minus compound Poisson with
// mean-1/2 exponential jumps at unit rate; thresholds 1 (p=.7) and 5 (p=.3).
MhtModel fig3_model() {
    MhtModel m;
    m.exponent = {1.0, 1.0, GammaShocks{1.0, 2.0, 1.0}};
    m.mixing = {{1.0, 5.0}, {0.7, 0.3}};
    return m;
}

constexpr std::span<const double> no_x{};

}  // namespace

TEST_CASE("integrands collapse to the undeformed contour when there are no jumps") {
    const auto m = gaussian_model(1.0, 1.3, 2.0);
    for (complex_t s : {complex_t(3.0, 1.0), complex_t(11.0, 17.0), complex_t(2.0, -40.0)}) {
        const complex_t lam = lambda_bm(s, 1.0, 1.3);
        const complex_t lt = mixing_lt(m.mixing, lam);  // phi(x) = 1; v enters via the mixing
        const complex_t surv_direct = std::exp(s) * (1.0 - lt) / s;           // t = 1
        const complex_t dens_direct = std::exp(s) * lt * complex_t(1.0, 0.0);  // dpsi = ds
        CHECK(std::abs(survival_integrand(m, no_x, 1.0, s) - surv_direct) <
              1e-10 * std::abs(surv_direct));
        CHECK(std::abs(density_integrand(m, no_x, 1.0, s) - dens_direct) <
              1e-10 * std::abs(dens_direct));
    }
}

TEST_CASE("integrands are conjugate symmetric") {
    for (const auto& m : {gaussian_model(), fig3_model()}) {
        for (complex_t s : {complex_t(11.0, 1.0), complex_t(5.5, -23.0)}) {
            CHECK(std::abs(survival_integrand(m, no_x, 1.0, std::conj(s)) -
                           std::conj(survival_integrand(m, no_x, 1.0, s))) < 1e-10);
            CHECK(std::abs(density_integrand(m, no_x, 1.0, std::conj(s)) -
                           std::conj(density_integrand(m, no_x, 1.0, s))) < 1e-10);
        }
    }
}

TEST_CASE("integrands match an arbitrary-precision oracle at s = 11 + i") {
    // frozen from a 30-digit evaluation of the displayed formulas
    const complex_t surv = survival_integrand(fig3_model(), no_x, 1.0, complex_t(11.0, 1.0));
    CHECK(surv.real() == Approx(1814.7777806151274).epsilon(1e-12));
    CHECK(surv.imag() == Approx(2273.6664378181649).epsilon(1e-12));
    const complex_t dens = density_integrand(fig3_model(), no_x, 1.0, complex_t(11.0, 1.0));
    CHECK(dens.real() == Approx(341.39353800208328).epsilon(1e-12));
    CHECK(dens.imag() == Approx(338.23570128125374).epsilon(1e-12));
}

TEST_CASE("euler_invert reproduces the closed-form Gaussian values at t = 1") {
    const auto m = gaussian_model();
    const InversionSettings def{};
    const auto dens = euler_invert(InversionKind::Density, m, no_x, 1.0, def);
    CHECK(dens.value == Approx(0.39894228040143268).margin(1e-9));
    CHECK(dens.evaluations == def.truncation + def.euler_order + 2);
    const auto surv = euler_invert(InversionKind::Survival, m, no_x, 1.0, def);
    CHECK(surv.value == Approx(0.33189799877682939).margin(1e-9));
    CHECK(surv.error_estimate < 1e-10);
}

TEST_CASE("oracle equivalence on a (mu, sigma, barrier, t) sweep") {
    const InversionSettings def{};
    for (double w : {0.5, 1.0, 5.0}) {
        for (double mu : {-1.0, 1.0}) {
            for (double sg : {0.5, 1.0, 2.0}) {
                const auto m = gaussian_model(mu, sg, w);
                const IgParams p{mu, sg, w};
                for (double t = 0.05; t <= 20.0; t *= 1.9) {
                    const double fr = invert_density(m, no_x, t, def).value;
                    const double f0 = ig_density(p, t);
                    CHECK(std::abs(fr - f0) <= std::max(1e-9, 1e-10 / std::max(f0, 1e-300)));
                    const double sr = invert_survival(m, no_x, t, def).value;
                    const double s0 = ig_survival(p, t);
                    CHECK(std::abs(sr - s0) <= std::max(1e-9, 1e-10 / std::max(s0, 1e-300)));
                }
            }
        }
    }
}

TEST_CASE("half-contour sum equals the full symmetric sum, imaginary parts cancel") {
    const auto m = fig3_model();
    const double t = 2.0;
    const InversionSettings s{};
    const double c = s.c_over_t / t;
    const double h = s.h_times_t * kPi / t;
    const int R = 14;
    complex_t full{};
    for (int r = -R; r <= R; ++r) {
        full += density_integrand(m, no_x, t, complex_t(c, r * h));
    }
    double half = density_integrand(m, no_x, t, complex_t(c, 0.0)).real();
    for (int r = 1; r <= R; ++r) {
        half += 2.0 * density_integrand(m, no_x, t, complex_t(c, r * h)).real();
    }
    CHECK(std::abs(full.imag()) < 1e-9 * std::abs(full.real()));
    CHECK(half == Approx(full.real()).epsilon(1e-12));
}

TEST_CASE("survival near t -> 0 is 1, and tails behave") {
    const auto m = gaussian_model();
    CHECK(invert_survival(m, no_x, 1e-3, {}).value == Approx(1.0).margin(1e-8));
    const auto fig3 = fig3_model();
    CHECK(invert_survival(fig3, no_x, 1e-3, {}).value == Approx(1.0).margin(1e-8));
}

TEST_CASE("mass conservation for a jumpy specification") {
    const auto m = fig3_model();
    // quadrature over log-spaced panels plus terminal survival
    const double tmax = 400.0;
    const int panels = 160;
    static const std::array<double, 5> xs = {0.1488743389816312, 0.4333953941292472,
                                             0.6794095682990244, 0.8650633666889845,
                                             0.9739065285171717};
    static const std::array<double, 5> ws = {0.2955242247147529, 0.2692667193099963,
                                             0.2190863625159820, 0.1494513491505806,
                                             0.0666713443086881};
    const double llo = std::log(1e-6), lhi = std::log(tmax);
    double mass = 0.0;
    const InversionSettings def{};
    for (int p = 0; p < panels; ++p) {
        const double a = std::exp(llo + (lhi - llo) * p / panels);
        const double b = std::exp(llo + (lhi - llo) * (p + 1) / panels);
        const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
        for (int i = 0; i < 5; ++i) {
            mass += ws[i] * half *
                    (invert_density(m, no_x, mid + half * xs[i], def).value +
                     invert_density(m, no_x, mid - half * xs[i], def).value);
        }
    }
    mass += invert_survival(m, no_x, tmax, def).value;
    CHECK(mass == Approx(1.0).margin(1e-6));
}

TEST_CASE("invert wrappers clamp tiny artifacts and reject gross ones") {
    // deep left tail: the true density underflows; the inversion returns
    // roundoff-size noise that must clamp to zero without throwing
    const auto m = gaussian_model();
    const auto r = invert_density(m, no_x, 0.002, {});
    CHECK(r.value >= 0.0);
    CHECK(r.value < 1e-12);
}

TEST_CASE("euler_invert input validation") {
    const auto m = gaussian_model();
    CHECK_THROWS_AS(euler_invert(InversionKind::Density, m, no_x, -1.0, {}),
                    std::invalid_argument);
    InversionSettings bad;
    bad.truncation = 0;
    CHECK_THROWS_AS(euler_invert(InversionKind::Density, m, no_x, 1.0, bad),
                    std::invalid_argument);
    bad = {};
    bad.c_over_t = -3.0;
    CHECK_THROWS_AS(euler_invert(InversionKind::Density, m, no_x, 1.0, bad),
                    std::invalid_argument);
}

TEST_CASE("settings invariance near the defaults") {
    const auto m = fig3_model();
    const InversionSettings def{};
    for (double t : {0.3, 1.0, 4.0}) {
        const auto base = invert_density(m, no_x, t, def);
        for (double c : {9.0, 13.0}) {
            for (double ht : {0.8, 1.2}) {
                InversionSettings s = def;
                s.c_over_t = c;
                s.h_times_t = ht;
                const auto alt = invert_density(m, no_x, t, s);
                // differences are bounded by the two Euler estimates plus the
                // aliasing floor exp(-2 c) that the estimate cannot see
                const double tol =
                    10.0 * (base.error_estimate + alt.error_estimate) + 3.0 * std::exp(-2.0 * c);
                CHECK(std::abs(alt.value - base.value) < tol);
            }
        }
    }
}

TEST_CASE("analytic parameter gradient of E_{R,M} matches finite differences") {
    const auto base = fig3_model();
    MhtModel with_x = base;
    with_x.link.beta = {0.4};
    const std::vector<double> x{0.7};
    const ParamLayout lay(with_x);
    const InversionSettings def{};
    const double t = 1.7;

    for (auto kind : {InversionKind::Density, InversionKind::Survival}) {
        std::vector<double> grad(lay.total());
        euler_invert_with_gradient(kind, with_x, x, t, def, grad);
        auto th = flatten(with_x);
        const auto structure = structure_of(with_x);
        for (std::size_t j = 0; j < th.size(); ++j) {
            const double h = 1e-6 * std::max(1.0, std::abs(th[j]));
            auto hi = th, lo = th;
            hi[j] += h;
            lo[j] -= h;
            // bypass validation: perturbed pi need not stay on the simplex
            const auto eval = [&](const std::vector<double>& v) {
                MhtModel mm = with_x;
                mm.exponent.mu = v[lay.mu_index()];
                mm.exponent.sigma = v[lay.sigma_index()];
                mm.exponent.jumps = GammaShocks{v[lay.jump_begin()], v[lay.jump_begin() + 1],
                                                v[lay.jump_begin() + 2]};
                mm.link.beta = {v[lay.beta_begin()]};
                mm.mixing.support = {v[lay.v_begin()], v[lay.v_begin() + 1]};
                mm.mixing.masses = {v[lay.pi_begin()], v[lay.pi_begin() + 1]};
                return euler_invert(kind, mm, x, t, def).value;
            };
            const double fd = (eval(hi) - eval(lo)) / (2 * h);
            CHECK_THAT(grad[j], Catch::Matchers::WithinRel(fd, 1e-5) ||
                                    Catch::Matchers::WithinAbs(fd, 1e-11));
        }
    }
}

TEST_CASE("discrete-shock parameter gradient matches finite differences") {
    MhtModel m;
    m.exponent = {1.0, 1.2, DiscreteShocks{{0.4, 0.2}, {-2.0, -0.5}}};
    m.mixing = {{0.8, 3.0}, {0.55, 0.45}};
    const ParamLayout lay(m);
    const InversionSettings def{};
    const double t = 2.3;
    std::vector<double> grad(lay.total());
    euler_invert_with_gradient(InversionKind::Density, m, no_x, t, def, grad);
    auto th = flatten(m);
    for (std::size_t j = 0; j < th.size(); ++j) {
        const double h = 1e-6 * std::max(1.0, std::abs(th[j]));
        auto hi = th, lo = th;
        hi[j] += h;
        lo[j] -= h;
        const auto eval = [&](const std::vector<double>& v) {
            MhtModel mm = m;
            mm.exponent.mu = v[lay.mu_index()];
            mm.exponent.sigma = v[lay.sigma_index()];
            mm.exponent.jumps = DiscreteShocks{{v[lay.jump_begin()], v[lay.jump_begin() + 1]},
                                               {v[lay.jump_begin() + 2], v[lay.jump_begin() + 3]}};
            mm.mixing.support = {v[lay.v_begin()], v[lay.v_begin() + 1]};
            mm.mixing.masses = {v[lay.pi_begin()], v[lay.pi_begin() + 1]};
            return euler_invert(InversionKind::Density, mm, no_x, t, def).value;
        };
        const double fd = (eval(hi) - eval(lo)) / (2 * h);
        CHECK_THAT(grad[j], Catch::Matchers::WithinRel(fd, 1e-5) ||
                                Catch::Matchers::WithinAbs(fd, 1e-11));
    }
}
