#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "impact_game/errors.hpp"

namespace impact_game {

/**
 * Impact and resilience parameters of the market over a trading window of
 * `horizon` periods. Per-period quantities are stored as vectors of length
 * `horizon`; time-homogeneous setups simply repeat one value.
 *
 * `alpha[t]` and `beta[t]` split the instantaneous impact `lambda[t]` into a
 * transient part (decaying at speed `resilience`) and a permanent part.
 * Admissible parameters satisfy alpha*exp(-resilience) + beta < 1 each period.
 */
struct MarketParams {
    int horizon = 0;              // T, number of trading decisions
    std::vector<double> lambda;   // instantaneous impact per unit volume, > 0
    std::vector<double> alpha;    // temporary-impact fraction, in [0,1]
    std::vector<double> beta;     // permanent-impact fraction, in [0,1]
    double resilience = 0.0;      // decay speed rho >= 0 of the transient impact

    bool operator==(const MarketParams&) const = default;
};

/**
 * AR(1) law of the exogenous environment signal I and the price noise eps:
 *
 *   I_t = drift[t] - ar[t] * I_{t-1} + sigma_env[t] * w_t,   I_0 = 0,
 *
 * with w_t standard normal, eps_t ~ N(0, sigma_eps[t]^2), and corr(I_t, eps_t)
 * given I_{t-1} equal to corr_env_eps. Note the minus sign on the lag
 * coefficient: ar = -1 gives a random walk with per-period drift `drift`,
 * while ar in (-1, 1) mean-reverts towards drift/(1+ar).
 *
 * mu_eps is kept for completeness but must be identically zero; the
 * equilibrium recursion assumes centred price noise and validate() rejects
 * anything else rather than silently producing wrong coefficients.
 */
struct EnvParams {
    std::vector<double> drift;      // a^I
    std::vector<double> ar;         // b^I (enters with a minus sign)
    std::vector<double> sigma_env;  // >= 0
    std::vector<double> sigma_eps;  // >= 0
    double corr_env_eps = 0.0;      // strictly inside (-1, 1)
    std::vector<double> mu_eps;     // must be all zero

    bool operator==(const EnvParams&) const = default;
};

/// One large trader: initial inventory (negative = sell program), CARA risk
/// aversion, and initial wealth (wealth only shifts utility by a constant).
struct TraderSpec {
    double inventory = 0.0;
    double risk_aversion = 0.0;  // gamma > 0
    double wealth = 0.0;

    bool operator==(const TraderSpec&) const = default;
};

/// The 7-tuple state s_t = (W^1, W^2, P, Q1, Q2, R, I_{t-1}) plus the clock.
/// At t = 1: residual = 0, env_prev = 0, remaining = initial inventories.
struct MarketState {
    std::array<double, 2> wealth{0.0, 0.0};
    double price = 0.0;
    std::array<double, 2> remaining{0.0, 0.0};
    double residual = 0.0;   // R_t, discounted sum of past temporary impacts
    double env_prev = 0.0;   // I_{t-1}, the environment signal seen at time t
    int time = 1;            // t in {1, ..., T+1}
};

/// The shock pair realized in the t -> t+1 transition. `omega` is the
/// standard normal driving I_t; `eps` is the price noise (already scaled).
struct Shocks {
    double omega = 0.0;
    double eps = 0.0;
};

/// A validated problem instance.
struct GameConfig {
    MarketParams market;
    EnvParams env;
    std::array<TraderSpec, 2> traders;

    bool operator==(const GameConfig&) const = default;
};

/// Exponential decay kernel exp(-rho * t) of the transient impact.
inline double decay_kernel(double t, double rho) { return std::exp(-rho * t); }

namespace detail {

inline void require_length(const std::vector<double>& v, std::size_t n, const char* name) {
    if (v.size() != n) throw LengthMismatch(name, v.size(), n);
}

} // namespace detail

/**
 * Checks every invariant of a problem instance and returns it unchanged.
 *
 * Throws LengthMismatch, NonPositive, InvalidParameter, or
 * Assumption32Violated (the per-period condition alpha*exp(-rho) + beta < 1,
 * equality counts as a violation).
 */
inline GameConfig validate(const GameConfig& cfg) {
    const auto& m = cfg.market;
    const auto& e = cfg.env;
    if (m.horizon < 1) throw InvalidParameter("horizon must be a positive integer");
    const auto n = static_cast<std::size_t>(m.horizon);
    detail::require_length(m.lambda, n, "market.lambda");
    detail::require_length(m.alpha, n, "market.alpha");
    detail::require_length(m.beta, n, "market.beta");
    detail::require_length(e.drift, n, "environment.drift");
    detail::require_length(e.ar, n, "environment.ar");
    detail::require_length(e.sigma_env, n, "environment.sigma_env");
    detail::require_length(e.sigma_eps, n, "environment.sigma_eps");
    if (!e.mu_eps.empty()) detail::require_length(e.mu_eps, n, "environment.mu_eps");

    if (!(m.resilience >= 0.0)) throw NonPositive("market.resilience");
    const double decay = std::exp(-m.resilience);
    for (std::size_t k = 0; k < n; ++k) {
        const int t = static_cast<int>(k) + 1;
        if (!(m.lambda[k] > 0.0)) throw NonPositive("market.lambda");
        if (!(m.alpha[k] >= 0.0 && m.alpha[k] <= 1.0))
            throw InvalidParameter("market.alpha must lie in [0,1] (t=" + std::to_string(t) + ")");
        if (!(m.beta[k] >= 0.0 && m.beta[k] <= 1.0))
            throw InvalidParameter("market.beta must lie in [0,1] (t=" + std::to_string(t) + ")");
        if (!(m.alpha[k] * decay + m.beta[k] < 1.0)) throw Assumption32Violated(t);
        if (!(e.sigma_env[k] >= 0.0)) throw NonPositive("environment.sigma_env");
        if (!(e.sigma_eps[k] >= 0.0)) throw NonPositive("environment.sigma_eps");
        if (!e.mu_eps.empty() && e.mu_eps[k] != 0.0)
            throw InvalidParameter("environment.mu_eps must be identically zero");
    }
    if (!(e.corr_env_eps > -1.0 && e.corr_env_eps < 1.0))
        throw InvalidParameter("environment.corr_env_eps must lie strictly inside (-1,1)");
    for (int i = 0; i < 2; ++i)
        if (!(cfg.traders[i].risk_aversion > 0.0)) throw NonPositive("traders.risk_aversion");
    return cfg;
}

/// State at the first decision epoch for the given initial price and traders.
inline MarketState initial_state(const GameConfig& cfg, double initial_price) {
    MarketState s;
    s.wealth = {cfg.traders[0].wealth, cfg.traders[1].wealth};
    s.price = initial_price;
    s.remaining = {cfg.traders[0].inventory, cfg.traders[1].inventory};
    s.residual = 0.0;
    s.env_prev = 0.0;
    s.time = 1;
    return s;
}

/**
 * Applies one period of the market dynamics, jointly:
 *
 *   Q^i_{t+1} = Q^i_t - q^i
 *   R_{t+1}   = exp(-rho) * (R_t + alpha_t lambda_t (q^1 + q^2))
 *   I_t       = drift_t - ar_t * I_{t-1} + sigma_env_t * omega
 *   P_{t+1}   = P_t - (1 - exp(-rho)) R_t
 *               + (alpha_t exp(-rho) + beta_t) lambda_t (q^1 + q^2) + I_t + eps
 *   W^i_{t+1} = W^i_t - (P_t + lambda_t (q^1 + q^2)) q^i
 *
 * Deterministic: identical inputs give bit-identical outputs.
 */
inline MarketState step_state(const MarketState& state, const std::array<double, 2>& q,
                              const Shocks& shocks, const MarketParams& market,
                              const EnvParams& env) {
    const int t = state.time;
    if (t < 1 || t > market.horizon) throw TimeOutOfRange(t, market.horizon);
    const std::size_t k = static_cast<std::size_t>(t - 1);

    const double decay = std::exp(-market.resilience);
    const double total = q[0] + q[1];
    const double exec_price = state.price + market.lambda[k] * total;
    const double env_now = env.drift[k] - env.ar[k] * state.env_prev + env.sigma_env[k] * shocks.omega;

    MarketState next;
    next.wealth = {state.wealth[0] - exec_price * q[0], state.wealth[1] - exec_price * q[1]};
    next.remaining = {state.remaining[0] - q[0], state.remaining[1] - q[1]};
    next.residual = decay * (state.residual + market.alpha[k] * market.lambda[k] * total);
    next.price = state.price - (1.0 - decay) * state.residual +
                 (market.alpha[k] * decay + market.beta[k]) * market.lambda[k] * total + env_now +
                 shocks.eps;
    next.env_prev = env_now;
    next.time = t + 1;
    return next;
}

/// Broadcasts a scalar parameter to a length-T vector.
inline std::vector<double> broadcast(double value, int horizon) {
    return std::vector<double>(static_cast<std::size_t>(horizon), value);
}

} // namespace impact_game
