#pragma once

#include <array>
#include <cmath>

#include "impact_game/errors.hpp"

namespace impact_game {

/// A non-degenerate bivariate normal law for (X, Y).
struct BivariateGaussian {
    std::array<double, 2> mu{0.0, 0.0};     // (mu_X, mu_Y)
    std::array<double, 2> sigma{1.0, 1.0};  // (sigma_X, sigma_Y), both > 0
    double rho_xy = 0.0;                    // correlation, strictly inside (-1, 1)
};

/**
 * Closed form of E[exp(a X^2 + b X + c Y)] together with the pieces the
 * backward recursion consumes: pi = (Sigma*)^{-1} with
 * Sigma* = Sigma^{-1} - diag(2a, 0), and the mu-coefficients of the expanded
 * exponent
 *
 *   log E = log_norm + (pi11 b^2 + pi22 c^2 + 2 pi12 b c
 *                       + 2 mu_b b + 2 mu_c c + mu_a) / 2,
 *
 * where log_norm = -log(det Sigma* det Sigma)/2,
 *       mu_b = (pi Sigma^{-1} mu)_1, mu_c = (pi Sigma^{-1} mu)_2, and
 *       mu_a = mu' (Sigma^{-1} pi Sigma^{-1} - Sigma^{-1}) mu.
 */
struct QuadExpResult {
    double value = 0.0;
    std::array<std::array<double, 2>, 2> pi{};  // symmetric
    double mu_a = 0.0;
    double mu_b = 0.0;
    double mu_c = 0.0;
};

/// E[exp(c1 X + c2 Y)] for the bivariate normal g (moment generating function
/// of a linear combination, itself normal).
inline double mgf_linear(const BivariateGaussian& g, double c1, double c2) {
    const double var = c1 * c1 * g.sigma[0] * g.sigma[0] + c2 * c2 * g.sigma[1] * g.sigma[1] +
                       2.0 * c1 * c2 * g.rho_xy * g.sigma[0] * g.sigma[1];
    return std::exp(c1 * g.mu[0] + c2 * g.mu[1] + 0.5 * var);
}

namespace detail {

// Relative tolerance of the positive-definiteness test for Sigma*: each
// leading principal minor must exceed 1e-12 times the scale of the entries
// that enter it. Scaling per minor (rather than by the largest Sigma^{-1}
// entry) keeps nearly-degenerate but perfectly well-posed laws admissible,
// e.g. sigma_Y -> 0 where sigma22 ~ 1/sigma_Y^2 dwarfs everything else.
inline constexpr double kPdTolerance = 1e-12;

inline void require_positive_definite(double s11, double s12, double s22, double a) {
    const double q11 = s11 - 2.0 * a;
    const double det_star = q11 * s22 - s12 * s12;
    const double scale1 = std::abs(s11) + 2.0 * std::abs(a);
    const double scale2 = std::abs(q11) * std::abs(s22) + s12 * s12;
    if (!(q11 > kPdTolerance * scale1) || !(det_star > kPdTolerance * scale2))
        throw NotPositiveDefinite("Sigma* = Sigma^{-1} - diag(2a,0) is not positive definite (a=" +
                                  std::to_string(a) + ")");
}

} // namespace detail

/**
 * E[exp(a X^2 + b X + c Y)] for (X, Y) ~ g, valid whenever
 * Sigma* = Sigma^{-1} - diag(2a, 0) is positive definite.
 *
 * Throws NotPositiveDefinite when the integral diverges (or is too close to
 * the divergence boundary to be trusted); that signals an effectively
 * unbounded exponential-quadratic objective upstream.
 */
inline QuadExpResult quad_exp_expectation(const BivariateGaussian& g, double a, double b, double c) {
    const double sx = g.sigma[0], sy = g.sigma[1], r = g.rho_xy;
    if (!(sx > 0.0) || !(sy > 0.0))
        throw InvalidParameter("quad_exp_expectation requires sigma_X, sigma_Y > 0");
    if (!(r > -1.0 && r < 1.0))
        throw InvalidParameter("quad_exp_expectation requires |rho_XY| < 1");

    const double det_sigma = sx * sx * sy * sy * (1.0 - r * r);
    // Sigma^{-1}, written out for the 2x2 case.
    const double s11 = (sy * sy) / det_sigma;
    const double s12 = -(r * sx * sy) / det_sigma;
    const double s22 = (sx * sx) / det_sigma;

    // Sigma* and its PD test via leading principal minors.
    detail::require_positive_definite(s11, s12, s22, a);
    const double q11 = s11 - 2.0 * a;
    const double det_star = q11 * s22 - s12 * s12;

    QuadExpResult out;
    const double p11 = s22 / det_star;
    const double p12 = -s12 / det_star;
    const double p22 = q11 / det_star;
    out.pi = {{{p11, p12}, {p12, p22}}};

    // mu* = Sigma^{-1} mu + (b, c)
    const double im1 = s11 * g.mu[0] + s12 * g.mu[1];
    const double im2 = s12 * g.mu[0] + s22 * g.mu[1];
    const double ms1 = im1 + b;
    const double ms2 = im2 + c;

    out.mu_b = p11 * im1 + p12 * im2;
    out.mu_c = p12 * im1 + p22 * im2;
    // mu' (Sigma^{-1} pi Sigma^{-1} - Sigma^{-1}) mu collapses to
    // 2 a mu_X mu_b, which is free of the large-entry cancellation the
    // quadratic form suffers near a degenerate sigma.
    out.mu_a = 2.0 * a * g.mu[0] * out.mu_b;

    const double quad_star = ms1 * (p11 * ms1 + p12 * ms2) + ms2 * (p12 * ms1 + p22 * ms2);
    const double quad_mu = g.mu[0] * im1 + g.mu[1] * im2;
    const double log_norm = -0.5 * std::log(det_star * det_sigma);
    out.value = std::exp(log_norm + 0.5 * (quad_star - quad_mu));
    return out;
}

/**
 * The same expectation specialised to the recursion's shock pair: X has a
 * symbolic mean m (and Y mean zero), so the result is reported as the
 * coefficients of
 *
 *   log E[exp(a X^2 + b X + c Y)] = (pi11 b^2 + 2 pi12 b c + pi22 c^2) / 2
 *                                   + (big_pi1 b + big_pi2 c) m
 *                                   + pi0c m^2 / 2 + log_norm,
 *
 * valid for any (b, c, m). Degenerate sigmas are handled by dedicated
 * branches (the deterministic coordinate is substituted instead of inverting
 * a singular covariance), so a fully deterministic environment flows through
 * the recursion without special-casing upstream.
 */
struct ShockKernel {
    double pi11 = 0.0, pi12 = 0.0, pi22 = 0.0;
    double big_pi1 = 0.0;  // mu_b per unit mean of X
    double big_pi2 = 0.0;  // mu_c per unit mean of X
    double pi0c = 0.0;     // mu_a per unit mean^2 of X
    double log_norm = 0.0;
    // Sigma^{-1} entries when the covariance is invertible, zero otherwise.
    double sig11 = 0.0, sig12 = 0.0, sig22 = 0.0;
    bool nondegenerate = false;
};

inline ShockKernel make_shock_kernel(double sigma_x, double sigma_y, double rho, double a) {
    if (!(sigma_x >= 0.0) || !(sigma_y >= 0.0)) throw NonPositive("sigma");
    ShockKernel k;
    if (sigma_x > 0.0 && sigma_y > 0.0) {
        const double det_sigma = sigma_x * sigma_x * sigma_y * sigma_y * (1.0 - rho * rho);
        k.sig11 = (sigma_y * sigma_y) / det_sigma;
        k.sig12 = -(rho * sigma_x * sigma_y) / det_sigma;
        k.sig22 = (sigma_x * sigma_x) / det_sigma;
        detail::require_positive_definite(k.sig11, k.sig12, k.sig22, a);
        const double q11 = k.sig11 - 2.0 * a;
        const double det_star = q11 * k.sig22 - k.sig12 * k.sig12;
        k.pi11 = k.sig22 / det_star;
        k.pi12 = -k.sig12 / det_star;
        k.pi22 = q11 / det_star;
        k.big_pi1 = k.pi11 * k.sig11 + k.pi12 * k.sig12;
        k.big_pi2 = k.pi12 * k.sig11 + k.pi22 * k.sig12;
        // (Sigma^{-1} pi Sigma^{-1} - Sigma^{-1})_{11} collapses to
        // 2a (Sigma^{-1} pi)_{11}; the direct quadratic form cancels
        // catastrophically when a sigma is tiny.
        k.pi0c = 2.0 * a * k.big_pi1;
        k.log_norm = -0.5 * std::log(det_star * det_sigma);
        k.nondegenerate = true;
    } else if (sigma_x > 0.0) {
        // Y degenerate at 0: one-dimensional Gaussian integral in X.
        const double v = sigma_x * sigma_x;
        const double denom = 1.0 - 2.0 * a * v;
        if (!(denom > detail::kPdTolerance))
            throw NotPositiveDefinite("shock kernel: 1 - 2 a sigma_X^2 <= 0 (a=" +
                                      std::to_string(a) + ")");
        k.pi11 = v / denom;
        k.big_pi1 = 1.0 / denom;
        k.pi0c = 2.0 * a / denom;
        k.log_norm = -0.5 * std::log(denom);
    } else {
        // X degenerate at its mean; Y (if random) contributes only its own MGF.
        k.pi22 = sigma_y * sigma_y;
        k.big_pi1 = 1.0;
        k.pi0c = 2.0 * a;
    }
    return k;
}

/// Evaluates the kernel's log-expectation at concrete (b, c) and mean m.
inline double shock_kernel_log_value(const ShockKernel& k, double b, double c, double m) {
    return 0.5 * (k.pi11 * b * b + 2.0 * k.pi12 * b * c + k.pi22 * c * c) +
           (k.big_pi1 * b + k.big_pi2 * c) * m + 0.5 * k.pi0c * m * m + k.log_norm;
}

} // namespace impact_game
