#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "impact_game/errors.hpp"
#include "impact_game/gaussian.hpp"
#include "impact_game/market.hpp"
#include "impact_game/philox.hpp"
#include "impact_game/solver.hpp"

namespace impact_game {

/**
 * Gauss-Hermite rule in probabilist form: E[f(Z)] ~ sum w_k f(x_k) for
 * Z ~ N(0,1), weights summing to one. Nodes and weights come from the
 * Golub-Welsch eigendecomposition of the Hermite Jacobi matrix.
 */
struct QuadratureRule {
    int order = 0;
    std::vector<double> nodes;
    std::vector<double> weights;
};

inline QuadratureRule gauss_hermite(int order = 64) {
    if (order < 1) throw InvalidParameter("quadrature order must be >= 1");
    Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(order, order);
    for (int k = 1; k < order; ++k) {
        const double off = std::sqrt(static_cast<double>(k));
        jacobi(k, k - 1) = off;
        jacobi(k - 1, k) = off;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jacobi);
    QuadratureRule rule;
    rule.order = order;
    rule.nodes.resize(static_cast<std::size_t>(order));
    rule.weights.resize(static_cast<std::size_t>(order));
    for (int k = 0; k < order; ++k) {
        rule.nodes[static_cast<std::size_t>(k)] = es.eigenvalues()(k);
        const double v = es.eigenvectors()(0, k);
        rule.weights[static_cast<std::size_t>(k)] = v * v;  // total mass 1
    }
    return rule;
}

namespace oracle_detail {

// log(sum_k exp(e_k)) accumulated stably; returns -inf for an empty set.
class LogSumExp {
public:
    void add(double e) {
        if (e == -std::numeric_limits<double>::infinity()) return;
        if (e > max_) {
            if (max_ != -std::numeric_limits<double>::infinity()) sum_ *= std::exp(max_ - e);
            max_ = e;
        }
        sum_ += std::exp(e - max_);
    }
    double value() const {
        if (max_ == -std::numeric_limits<double>::infinity()) return max_;
        return max_ + std::log(sum_);
    }

private:
    double max_ = -std::numeric_limits<double>::infinity();
    double sum_ = 0.0;
};

} // namespace oracle_detail

/**
 * Numerically integrates E[ V_{t+1}(h_t(s_t, q1, q2, shocks)) | s_t ] for one
 * trader by 2-D Gauss-Hermite over the correlated period-t shock pair,
 * reported as the certainty equivalent of the bracket:
 *
 *     result = -log( E[ exp(-gamma * bracket_{t+1}) ] ) / gamma.
 *
 * The rule is importance-shifted to the mode of the log-integrand (located by
 * a finite-difference Newton step; the log-integrand is exactly quadratic in
 * the standardized shocks), with the Gaussian density ratio folded into the
 * log-weights. Without the shift, a volume of size Q tilts the integrand by
 * roughly gamma*Q*sigma standard deviations and any fixed rule goes blind.
 *
 * It uses only the closed functional form of V_{t+1} (its coefficient table)
 * and the exact state transition; none of the Gaussian-kernel closed forms
 * enter. Throws IntegrandOverflow when the effective objective is unbounded
 * over the shocks (non-concave log-integrand) or an exponent leaves the
 * representable range.
 */
inline double quadrature_continuation(const ValueCoefficients& value_next, int t,
                                      const MarketState& state, int trader, double q1, double q2,
                                      const GameConfig& cfg, const QuadratureRule& rule) {
    if (t < 1 || t > cfg.market.horizon || state.time != t)
        throw TimeOutOfRange(t, cfg.market.horizon);
    const std::size_t k = static_cast<std::size_t>(t - 1);
    const double gamma = cfg.traders[trader].risk_aversion;
    const double rho = cfg.env.corr_env_eps;
    const double sig_eps = cfg.env.sigma_eps[k];
    const double cross = std::sqrt(1.0 - rho * rho);

    // log of the integrand against the standard normal density, i.e.
    // log exp(-gamma * bracket(z)); z = (z1, z2) standardized shocks.
    auto log_f = [&](double z1, double z2) {
        Shocks shocks;
        shocks.omega = z1;
        shocks.eps = sig_eps * (rho * z1 + cross * z2);
        const MarketState next = step_state(state, {q1, q2}, shocks, cfg.market, cfg.env);
        return -gamma * value_bracket(value_next, next, trader);
    };

    // Newton step on g(z) = log_f(z) - |z|^2/2 from the origin. g is exactly
    // quadratic, so one step lands on the mode (a second polishes roundoff).
    double m1 = 0.0, m2 = 0.0;
    const double h = 0.125;
    for (int iter = 0; iter < 2; ++iter) {
        auto g = [&](double a, double b) {
            return log_f(m1 + a, m2 + b) - 0.5 * ((m1 + a) * (m1 + a) + (m2 + b) * (m2 + b));
        };
        const double g0 = g(0.0, 0.0);
        const double gp1 = g(h, 0.0), gm1 = g(-h, 0.0);
        const double gp2 = g(0.0, h), gm2 = g(0.0, -h);
        const double gpp = g(h, h), gpm = g(h, -h), gmp = g(-h, h), gmm = g(-h, -h);
        const double d1 = (gp1 - gm1) / (2.0 * h);
        const double d2 = (gp2 - gm2) / (2.0 * h);
        const double h11 = (gp1 - 2.0 * g0 + gm1) / (h * h);
        const double h22 = (gp2 - 2.0 * g0 + gm2) / (h * h);
        const double h12 = (gpp - gpm - gmp + gmm) / (4.0 * h * h);
        const double det = h11 * h22 - h12 * h12;
        if (!(h11 < 0.0) || !(det > 0.0))
            throw IntegrandOverflow("continuation integrand is not integrable at t=" +
                                    std::to_string(t));
        m1 += -(h22 * d1 - h12 * d2) / det;
        m2 += -(h11 * d2 - h12 * d1) / det;
    }

    oracle_detail::LogSumExp lse;
    const double shift_norm = 0.5 * (m1 * m1 + m2 * m2);
    const std::size_t order = rule.nodes.size();
    for (std::size_t i1 = 0; i1 < order; ++i1) {
        const double u1 = rule.nodes[i1];
        const double lw1 = std::log(rule.weights[i1]);
        for (std::size_t i2 = 0; i2 < order; ++i2) {
            const double u2 = rule.nodes[i2];
            const double e = lw1 + std::log(rule.weights[i2]) + log_f(m1 + u1, m2 + u2) -
                             u1 * m1 - u2 * m2 - shift_norm;
            if (!std::isfinite(e) && e != -std::numeric_limits<double>::infinity())
                throw IntegrandOverflow("continuation integrand overflowed at t=" + std::to_string(t));
            lse.add(e);
        }
    }
    const double log_expected = lse.value();
    if (!std::isfinite(log_expected))
        throw IntegrandOverflow("continuation expectation overflowed at t=" + std::to_string(t));
    return -log_expected / gamma;
}

/**
 * argmax over q_i of the quadrature objective with the opponent's action held
 * fixed, by golden-section search on a bracket centered at `center` (callers
 * pass the closed-form candidate or their current iterate). The bracket is
 * grown until the center beats both endpoints; failure to find an interior
 * maximum raises BracketFailure (a non-concave objective).
 */
inline double numeric_best_response(const ValueCoefficients& value_next, int t,
                                    const MarketState& state, int trader, double q_other,
                                    const GameConfig& cfg, const QuadratureRule& rule,
                                    double center = 0.0, double scale_hint = 0.0) {
    auto objective = [&](double q) {
        const double q1 = trader == 0 ? q : q_other;
        const double q2 = trader == 0 ? q_other : q;
        return quadrature_continuation(value_next, t, state, trader, q1, q2, cfg, rule);
    };

    double scale = scale_hint;
    if (scale <= 0.0)
        scale = std::max({std::abs(cfg.traders[0].inventory), std::abs(cfg.traders[1].inventory), 1.0});
    double width = 10.0 * (std::abs(center) + scale);

    double lo = center - width;
    double hi = center + width;
    double f_center = objective(center);
    for (int grow = 0;; ++grow) {
        if (grow > 8) throw BracketFailure("no interior maximum found at t=" + std::to_string(t));
        const double f_lo = objective(lo);
        const double f_hi = objective(hi);
        if (f_center >= f_lo && f_center >= f_hi) break;
        width *= 4.0;
        lo = center - width;
        hi = center + width;
    }

    const double inv_golden = 0.6180339887498948482;
    double a = lo, b = hi;
    double x1 = b - inv_golden * (b - a);
    double x2 = a + inv_golden * (b - a);
    double f1 = objective(x1);
    double f2 = objective(x2);
    // Value comparisons go blind once A*(b-a)^2 drops under the roundoff of
    // the certainty equivalent, so don't grind the interval all the way down.
    const double gs_tol = std::max(1e-8, 1e-9 * (std::abs(center) + scale));
    while (b - a > gs_tol) {
        if (f1 < f2) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_golden * (b - a);
            f2 = objective(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_golden * (b - a);
            f1 = objective(x1);
        }
    }
    // The certainty equivalent is an exactly quadratic function of the
    // action, so a wide-spaced three-point parabolic fit recovers the vertex
    // far below the golden-section noise floor.
    double x = 0.5 * (a + b);
    const double d = std::max(10.0, 1e-4 * (std::abs(x) + 1.0));
    for (int round = 0; round < 2; ++round) {
        const double fm = objective(x - d);
        const double f0 = objective(x);
        const double fp = objective(x + d);
        const double curve = fm - 2.0 * f0 + fp;
        if (!(curve < 0.0)) break;
        const double shift = 0.5 * d * (fm - fp) / curve;
        if (!std::isfinite(shift) || std::abs(shift) > 4.0 * d) break;
        x += shift;
    }
    return x;
}

/**
 * Fixed point of the numeric best responses, iterated from (0, 0):
 * q1 <- BR1(q2), q2 <- BR2(q1) until the sweep moves less than
 * 1e-8 * (1 + |q|). Reports NoConvergence after 10^4 sweeps (a singular or
 * oscillating best-response system).
 */
inline std::array<double, 2> fixed_point_equilibrium(const std::array<ValueCoefficients, 2>& value_next,
                                                     int t, const MarketState& state,
                                                     const GameConfig& cfg,
                                                     const QuadratureRule& rule) {
    std::array<double, 2> q{0.0, 0.0};
    for (int iter = 0; iter < 10000; ++iter) {
        const double q1 =
            numeric_best_response(value_next[0], t, state, 0, q[1], cfg, rule, q[0]);
        const double q2 =
            numeric_best_response(value_next[1], t, state, 1, q1, cfg, rule, q[1]);
        const double move = std::max(std::abs(q1 - q[0]), std::abs(q2 - q[1]));
        const double scale = 1.0 + std::max(std::abs(q1), std::abs(q2));
        q = {q1, q2};
        if (move < 1e-8 * scale) return q;
    }
    throw NoConvergence("best-response iteration did not converge at t=" + std::to_string(t));
}

/// Monte Carlo check of the closed-form E[exp(a X^2 + b X + c Y)].
struct McCheckResult {
    double closed_form = 0.0;
    double mc_estimate = 0.0;
    double std_error = 0.0;
    bool within_3se = false;
};

inline McCheckResult mc_check_quad_exp(const BivariateGaussian& g, double a, double b, double c,
                                       std::size_t n_samples, std::uint64_t seed) {
    McCheckResult r;
    r.closed_form = quad_exp_expectation(g, a, b, c).value;
    const double cross = std::sqrt(1.0 - g.rho_xy * g.rho_xy);
    double sum = 0.0, sum_sq = 0.0;
    for (std::size_t i = 0; i < n_samples; ++i) {
        const auto z = philox::normal_pair(seed, i, /*slot=*/0, /*stream=*/1);
        const double x = g.mu[0] + g.sigma[0] * z[0];
        const double y = g.mu[1] + g.sigma[1] * (g.rho_xy * z[0] + cross * z[1]);
        const double v = std::exp(a * x * x + b * x + c * y);
        sum += v;
        sum_sq += v * v;
    }
    const double n = static_cast<double>(n_samples);
    r.mc_estimate = sum / n;
    const double var = std::max(0.0, sum_sq / n - r.mc_estimate * r.mc_estimate);
    r.std_error = std::sqrt(var / n);
    r.within_3se = std::abs(r.mc_estimate - r.closed_form) <= 3.0 * r.std_error;
    return r;
}

} // namespace impact_game
