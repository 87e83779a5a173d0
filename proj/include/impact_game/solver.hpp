#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "impact_game/errors.hpp"
#include "impact_game/gaussian.hpp"
#include "impact_game/market.hpp"

namespace impact_game {

/**
 * Coefficients of one trader's value function at one time,
 *
 *   V_t(s) = -exp{ -gamma [ W - P*Qi + g1 Qi^2 + g2 Qi + h1 Qi R + h2 R^2
 *                           + h3 R + j1 Qi Qj + j2 Qj R + j3 Qj^2 + j4 Qj
 *                           + l1 Qi I + l2 R I + l3 Qj I + l4 I^2 + l5 I
 *                           + z ] },
 *
 * with Qi the trader's own remaining volume, Qj the opponent's, R the
 * residual impact, and I the environment signal observed at time t.
 */
struct ValueCoefficients {
    double g1 = 0.0, g2 = 0.0;
    double h1 = 0.0, h2 = 0.0, h3 = 0.0;
    double j1 = 0.0, j2 = 0.0, j3 = 0.0, j4 = 0.0;
    double l1 = 0.0, l2 = 0.0, l3 = 0.0, l4 = 0.0, l5 = 0.0;
    double z = 0.0;
};

/**
 * One trader's stage data at time t < T. The conditional objective, after
 * the shock expectation has been taken in closed form, is the strictly
 * concave quadratic (in own action q against opponent action p)
 *
 *   K(q) = -a_quad q^2 + (b Qi + c Qj + d R + f I + m + n p) q
 *          + x_quad p^2 + (y1 Qi + y2 R + y3 Qj + y4 I + y5) p
 *          + [state-only part, stored in `state_part` plus W - P*Qi].
 *
 * Starred entries solve the two-trader linear system; the policy row is
 * (m_star, b_star, c_star, d_star, f_star). Double-starred entries are the
 * same linear form with the opponent's equilibrium action substituted.
 */
struct StageCoefficients {
    double a_quad = 0.0;  // must be > 0
    double b = 0.0, c = 0.0, d = 0.0, f = 0.0, m = 0.0, n = 0.0;
    double theta = 0.0, delta = 0.0, phi = 0.0;
    double pi11 = 0.0, pi12 = 0.0, pi22 = 0.0;    // (Sigma^{-1} + diag(2 gamma l4, 0))^{-1}
    double sig11 = 0.0, sig12 = 0.0, sig22 = 0.0; // Sigma^{-1} entries (0 when degenerate)
    double x_quad = 0.0;
    double y1 = 0.0, y2 = 0.0, y3 = 0.0, y4 = 0.0, y5 = 0.0;
    double x_log = 0.0;  // -log(sqrt(det pi)/sqrt(det Sigma))/gamma
    double zeta = 0.0;
    double b_star = 0.0, c_star = 0.0, d_star = 0.0, f_star = 0.0, m_star = 0.0;
    double b_sstar = 0.0, c_sstar = 0.0, d_sstar = 0.0, f_sstar = 0.0, m_sstar = 0.0;
    ValueCoefficients state_part;  // value coefficients before the equilibrium actions are folded in
};

/// Affine policy row: q = a + b*Qi + c*Qj + d*R + e*I_{t-1}.
struct PolicyRow {
    double a = 0.0, b = 0.0, c = 0.0, d = 0.0, e = 0.0;
};

/**
 * The Markov perfect equilibrium of the two-trader execution game: policy and
 * value tables for t = 1..T (index t-1, then trader index), and the stage
 * tables for t = 1..T-1 kept for diagnostics and oracle comparison.
 */
struct EquilibriumSolution {
    GameConfig config;
    std::vector<std::array<PolicyRow, 2>> policy;
    std::vector<std::array<ValueCoefficients, 2>> value;
    std::vector<std::array<StageCoefficients, 2>> stage;

    int horizon() const { return config.market.horizon; }
};

/// Terminal condition: forced liquidation q_T = Q_T gives
/// V_T = -exp{-gamma [W - P Qi - lambda_T Qi^2 - lambda_T Qi Qj]}.
inline std::array<ValueCoefficients, 2> terminal_coefficients(const MarketParams& market) {
    ValueCoefficients v;
    v.g1 = -market.lambda.back();
    v.j1 = -market.lambda.back();
    return {v, v};
}

namespace detail {

// Tolerance below which the 2x2 best-response system counts as singular.
inline constexpr double kZetaTolerance = 1e-10;

// Everything in the stage objective that the shock expectation produces for
// one trader, given the trader's continuation coefficients at t+1. Uses the
// period-t conditional law of the shock pair (the pair realized in the
// t -> t+1 transition).
inline StageCoefficients stage_for_trader(int t, const ValueCoefficients& vn, double gamma,
                                          const MarketParams& market, const EnvParams& env) {
    const std::size_t k = static_cast<std::size_t>(t - 1);
    const double lam = market.lambda[k];
    const double kappa = std::exp(-market.resilience);
    const double u = market.alpha[k] * lam * kappa;              // transient kick into R_{t+1}
    const double atot = market.alpha[k] * kappa + market.beta[k]; // permanent + transient price load
    const double a_drift = env.drift[k];
    const double b_ar = env.ar[k];

    StageCoefficients s;
    s.theta = 1.0 - vn.l1 + u * vn.l2;
    s.delta = -1.0 + vn.l1;
    s.phi = u * vn.l2 - vn.l3;

    const ShockKernel ker =
        make_shock_kernel(env.sigma_env[k], env.sigma_eps[k], env.corr_env_eps, -gamma * vn.l4);
    s.pi11 = ker.pi11;
    s.pi12 = ker.pi12;
    s.pi22 = ker.pi22;
    s.sig11 = ker.sig11;
    s.sig12 = ker.sig12;
    s.sig22 = ker.sig22;
    s.x_log = -ker.log_norm / gamma;
    const double P1 = ker.big_pi1;
    const double P2 = ker.big_pi2;
    const double P0 = ker.pi0c;

    s.a_quad = (1.0 - atot) * lam - vn.g1 + u * vn.h1 - u * u * vn.h2 +
               0.5 * gamma * s.theta * s.theta * ker.pi11 + 0.5 * gamma * ker.pi22 +
               gamma * s.theta * ker.pi12;
    s.b = -atot * lam - 2.0 * vn.g1 + u * vn.h1 - gamma * s.theta * s.delta * ker.pi11 +
          gamma * ker.pi22 + gamma * (s.theta - s.delta) * ker.pi12;
    s.c = -vn.j1 + u * vn.j2 - gamma * s.theta * vn.l3 * ker.pi11 - gamma * vn.l3 * ker.pi12;
    s.d = -(1.0 - kappa) - kappa * vn.h1 + 2.0 * kappa * u * vn.h2 -
          gamma * s.theta * kappa * vn.l2 * ker.pi11 - gamma * kappa * vn.l2 * ker.pi12;
    s.f = -(P1 * s.theta + P2) * b_ar;
    s.m = -vn.g2 + u * vn.h3 - gamma * s.theta * vn.l5 * ker.pi11 - gamma * vn.l5 * ker.pi12 +
          (P1 * s.theta + P2) * a_drift;
    s.n = -(1.0 - atot) * lam - u * vn.h1 + 2.0 * u * u * vn.h2 + vn.j1 - u * vn.j2 -
          gamma * s.theta * s.phi * ker.pi11 - gamma * s.phi * ker.pi12;

    s.x_quad = u * u * vn.h2 - u * vn.j2 + vn.j3 - 0.5 * gamma * s.phi * s.phi * ker.pi11;
    s.y1 = -atot * lam + u * vn.h1 - vn.j1 - gamma * s.delta * s.phi * ker.pi11 +
           gamma * s.phi * ker.pi12;
    s.y2 = 2.0 * kappa * u * vn.h2 - kappa * vn.j2 - gamma * kappa * vn.l2 * s.phi * ker.pi11;
    s.y3 = u * vn.j2 - 2.0 * vn.j3 - gamma * vn.l3 * s.phi * ker.pi11;
    s.y4 = -P1 * b_ar * s.phi;
    s.y5 = u * vn.h3 - vn.j4 - gamma * vn.l5 * s.phi * ker.pi11 + P1 * a_drift * s.phi;

    ValueCoefficients& h = s.state_part;
    h.g1 = vn.g1 - 0.5 * gamma * s.delta * s.delta * ker.pi11 - 0.5 * gamma * ker.pi22 +
           gamma * s.delta * ker.pi12;
    h.g2 = vn.g2 - gamma * s.delta * vn.l5 * ker.pi11 + gamma * vn.l5 * ker.pi12 +
           (P1 * s.delta - P2) * a_drift;
    h.h1 = (1.0 - kappa) + kappa * vn.h1 - gamma * s.delta * kappa * vn.l2 * ker.pi11 +
           gamma * kappa * vn.l2 * ker.pi12;
    h.h2 = kappa * kappa * vn.h2 - 0.5 * gamma * kappa * kappa * vn.l2 * vn.l2 * ker.pi11;
    h.h3 = kappa * vn.h3 - gamma * kappa * vn.l2 * vn.l5 * ker.pi11 + P1 * a_drift * kappa * vn.l2;
    h.j1 = vn.j1 - gamma * s.delta * vn.l3 * ker.pi11 + gamma * vn.l3 * ker.pi12;
    h.j2 = kappa * vn.j2 - gamma * kappa * vn.l2 * vn.l3 * ker.pi11;
    h.j3 = vn.j3 - 0.5 * gamma * vn.l3 * vn.l3 * ker.pi11;
    h.j4 = vn.j4 - gamma * vn.l3 * vn.l5 * ker.pi11 + P1 * a_drift * vn.l3;
    h.l1 = (-P1 * s.delta + P2) * b_ar;
    h.l2 = -P1 * b_ar * kappa * vn.l2;
    h.l3 = -P1 * b_ar * vn.l3;
    h.l4 = -0.5 * b_ar * b_ar * P0 / gamma;
    h.l5 = -P1 * b_ar * vn.l5 + a_drift * b_ar * P0 / gamma;
    h.z = vn.z - 0.5 * gamma * vn.l5 * vn.l5 * ker.pi11 + P1 * a_drift * vn.l5 -
          0.5 * a_drift * a_drift * P0 / gamma + s.x_log;
    return s;
}

} // namespace detail

/**
 * One backward-induction step: from the two traders' value coefficients at
 * t+1 to stage data, the equilibrium policy row, and the value coefficients
 * at t (valid for t in 1..T-1).
 *
 * When `pin_second_trader` is set, trader 2's action is forced to zero and
 * trader 1 best-responds to it; trader 2's outputs are zeroed. This is the
 * single-trader reference solve used to study the optimal-vs-equilibrium gap.
 */
struct BackwardStepResult {
    std::array<StageCoefficients, 2> stage;
    std::array<PolicyRow, 2> policy;
    std::array<ValueCoefficients, 2> value;
};

inline BackwardStepResult backward_step(int t, const std::array<ValueCoefficients, 2>& value_next,
                                        const GameConfig& cfg, bool pin_second_trader = false) {
    if (t < 1 || t >= cfg.market.horizon) throw TimeOutOfRange(t, cfg.market.horizon - 1);

    BackwardStepResult out;
    for (int i = 0; i < 2; ++i)
        out.stage[i] = detail::stage_for_trader(t, value_next[i], cfg.traders[i].risk_aversion,
                                                cfg.market, cfg.env);
    for (int i = 0; i < 2; ++i)
        if (!(out.stage[i].a_quad > 0.0)) throw ConcavityLost(t, i);

    for (int i = 0; i < 2; ++i) {
        const int j = 1 - i;
        StageCoefficients& si = out.stage[i];
        const StageCoefficients& sj = out.stage[j];
        if (pin_second_trader) {
            // Opponent volume pinned to zero: plain best response, no coupling.
            si.zeta = 2.0 * si.a_quad;
        } else {
            si.zeta = 2.0 * si.a_quad - si.n * sj.n / (2.0 * sj.a_quad);
        }
        const double scale = std::max(std::abs(si.a_quad), std::abs(si.n));
        if (!(std::abs(si.zeta) > detail::kZetaTolerance * scale)) throw SingularEquilibrium(t);
    }

    for (int i = 0; i < 2; ++i) {
        const int j = 1 - i;
        StageCoefficients& si = out.stage[i];
        const StageCoefficients& sj = out.stage[j];
        if (pin_second_trader) {
            if (i == 1) {
                si.b_star = si.c_star = si.d_star = si.f_star = si.m_star = 0.0;
            } else {
                si.b_star = si.b / si.zeta;
                si.c_star = si.c / si.zeta;
                si.d_star = si.d / si.zeta;
                si.f_star = si.f / si.zeta;
                si.m_star = si.m / si.zeta;
            }
        } else {
            const double w = si.n / (2.0 * sj.a_quad);
            si.b_star = (si.b + w * sj.c) / si.zeta;
            si.c_star = (si.c + w * sj.b) / si.zeta;
            si.d_star = (si.d + w * sj.d) / si.zeta;
            si.f_star = (si.f + w * sj.f) / si.zeta;
            si.m_star = (si.m + w * sj.m) / si.zeta;
        }
    }

    for (int i = 0; i < 2; ++i) {
        const int j = 1 - i;
        StageCoefficients& si = out.stage[i];
        const StageCoefficients& sj = out.stage[j];
        si.b_sstar = si.b + si.n * sj.c_star;
        si.c_sstar = si.c + si.n * sj.b_star;
        si.d_sstar = si.d + si.n * sj.d_star;
        si.f_sstar = si.f + si.n * sj.f_star;
        si.m_sstar = si.m + si.n * sj.m_star;

        out.policy[i] = {si.m_star, si.b_star, si.c_star, si.d_star, si.f_star};

        // Fold the equilibrium actions back into the value function. The own
        // first-order condition contributes (linear form)^2 / (4A); the
        // opponent's action enters through the X and Y blocks. For trader i
        // the opponent's policy reads Qi with c_star and Qj with b_star.
        // A pinned trader plays 0 instead of its vertex, so the squared
        // linear form does not appear in its value.
        const bool at_vertex = !(pin_second_trader && i == 1);
        const double inv2a = at_vertex ? 1.0 / (2.0 * si.a_quad) : 0.0;
        const double inv4a = 0.5 * inv2a;
        const double ob = sj.c_star;  // opponent's loading on Qi
        const double oc = sj.b_star;  // opponent's loading on Qj
        const double od = sj.d_star;
        const double of = sj.f_star;
        const double om = sj.m_star;

        ValueCoefficients v = si.state_part;
        v.g1 += si.x_quad * ob * ob + si.y1 * ob + si.b_sstar * si.b_sstar * inv4a;
        v.g2 += 2.0 * si.x_quad * ob * om + si.y1 * om + si.y5 * ob + si.b_sstar * si.m_sstar * inv2a;
        v.h1 += 2.0 * si.x_quad * ob * od + si.y1 * od + si.y2 * ob + si.b_sstar * si.d_sstar * inv2a;
        v.h2 += si.x_quad * od * od + si.y2 * od + si.d_sstar * si.d_sstar * inv4a;
        v.h3 += 2.0 * si.x_quad * od * om + si.y2 * om + si.y5 * od + si.d_sstar * si.m_sstar * inv2a;
        v.j1 += 2.0 * si.x_quad * ob * oc + si.y1 * oc + si.y3 * ob + si.b_sstar * si.c_sstar * inv2a;
        v.j2 += 2.0 * si.x_quad * oc * od + si.y2 * oc + si.y3 * od + si.c_sstar * si.d_sstar * inv2a;
        v.j3 += si.x_quad * oc * oc + si.y3 * oc + si.c_sstar * si.c_sstar * inv4a;
        v.j4 += 2.0 * si.x_quad * oc * om + si.y3 * om + si.y5 * oc + si.c_sstar * si.m_sstar * inv2a;
        v.l1 += 2.0 * si.x_quad * ob * of + si.y1 * of + si.y4 * ob + si.b_sstar * si.f_sstar * inv2a;
        v.l2 += 2.0 * si.x_quad * od * of + si.y2 * of + si.y4 * od + si.d_sstar * si.f_sstar * inv2a;
        v.l3 += 2.0 * si.x_quad * oc * of + si.y3 * of + si.y4 * oc + si.c_sstar * si.f_sstar * inv2a;
        v.l4 += si.x_quad * of * of + si.y4 * of + si.f_sstar * si.f_sstar * inv4a;
        v.l5 += 2.0 * si.x_quad * of * om + si.y4 * om + si.y5 * of + si.f_sstar * si.m_sstar * inv2a;
        v.z += si.x_quad * om * om + si.y5 * om + si.m_sstar * si.m_sstar * inv4a;
        out.value[i] = v;
    }
    return out;
}

/**
 * Solves the whole game by backward induction: terminal coefficients at T,
 * then backward steps down to t = 1. Throws with the failing t annotated
 * (ConcavityLost / SingularEquilibrium / NotPositiveDefinite).
 */
inline EquilibriumSolution solve_equilibrium(const GameConfig& config, bool pin_second_trader = false) {
    const GameConfig cfg = validate(config);
    const int horizon = cfg.market.horizon;

    EquilibriumSolution sol;
    sol.config = cfg;
    sol.policy.resize(static_cast<std::size_t>(horizon));
    sol.value.resize(static_cast<std::size_t>(horizon));
    if (horizon > 1) sol.stage.resize(static_cast<std::size_t>(horizon - 1));

    sol.value.back() = terminal_coefficients(cfg.market);
    PolicyRow liquidate;
    liquidate.b = 1.0;  // q_T = Q_T exactly
    sol.policy.back() = {liquidate, liquidate};

    for (int t = horizon - 1; t >= 1; --t) {
        const std::size_t k = static_cast<std::size_t>(t - 1);
        BackwardStepResult step = backward_step(t, sol.value[k + 1], cfg, pin_second_trader);
        sol.stage[k] = step.stage;
        sol.policy[k] = step.policy;
        sol.value[k] = step.value;
    }
    return sol;
}

/// Equilibrium actions at time t in the given state; at t = T this is exactly
/// the forced liquidation (Q1, Q2).
inline std::array<double, 2> policy_action(const EquilibriumSolution& sol, int t,
                                           const MarketState& state) {
    if (t < 1 || t > sol.horizon()) throw TimeOutOfRange(t, sol.horizon());
    if (t == sol.horizon()) return state.remaining;
    std::array<double, 2> q{};
    for (int i = 0; i < 2; ++i) {
        const PolicyRow& row = sol.policy[static_cast<std::size_t>(t - 1)][i];
        q[i] = row.a + row.b * state.remaining[i] + row.c * state.remaining[1 - i] +
               row.d * state.residual + row.e * state.env_prev;
    }
    return q;
}

/// The inner bracket of V_t for trader i at a given state (so V = -exp(-gamma * bracket)).
inline double value_bracket(const ValueCoefficients& v, const MarketState& s, int i) {
    const double qi = s.remaining[i];
    const double qj = s.remaining[1 - i];
    const double r = s.residual;
    const double env = s.env_prev;
    return s.wealth[i] - s.price * qi + v.g1 * qi * qi + v.g2 * qi + v.h1 * qi * r + v.h2 * r * r +
           v.h3 * r + v.j1 * qi * qj + v.j2 * qj * r + v.j3 * qj * qj + v.j4 * qj + v.l1 * qi * env +
           v.l2 * r * env + v.l3 * qj * env + v.l4 * env * env + v.l5 * env + v.z;
}

/**
 * Trader i's conditional expected continuation utility at time t as a
 * function of his own action, with the opponent's action held fixed; reported
 * as the exponent's bracket (utility = -exp(-gamma * bracket), so larger
 * bracket means better). Used by the one-stage-deviation checks.
 *
 * At t = T the action is forced: any q_i other than the remaining volume
 * yields -infinity.
 */
inline double stage_objective(const EquilibriumSolution& sol, int t, const MarketState& state, int i,
                              double q_i, double q_j) {
    if (t < 1 || t > sol.horizon()) throw TimeOutOfRange(t, sol.horizon());
    if (t == sol.horizon()) {
        if (q_i != state.remaining[i]) return -std::numeric_limits<double>::infinity();
        const std::size_t k = static_cast<std::size_t>(t - 1);
        const double lam = sol.config.market.lambda[k];
        return state.wealth[i] - (state.price + lam * (q_i + q_j)) * q_i;
    }
    const StageCoefficients& s = sol.stage[static_cast<std::size_t>(t - 1)][i];
    const double qi_own = state.remaining[i];
    const double qj_opp = state.remaining[1 - i];
    const double linear = s.b * qi_own + s.c * qj_opp + s.d * state.residual + s.f * state.env_prev +
                          s.m + s.n * q_j;
    const double opp = s.x_quad * q_j * q_j +
                       (s.y1 * qi_own + s.y2 * state.residual + s.y3 * qj_opp +
                        s.y4 * state.env_prev + s.y5) *
                           q_j;
    return -s.a_quad * q_i * q_i + linear * q_i + value_bracket(s.state_part, state, i) + opp;
}

} // namespace impact_game
