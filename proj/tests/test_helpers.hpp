#pragma once

#include "impact_game/market.hpp"

namespace impact_game::testing {

// Time-homogeneous baseline configuration used throughout the tests:
// sigma_eps=0.02, sigma_env=0.01, corr=0, alpha=beta=0.5, lambda=0.001,
// drift=ar=0, resilience=0.1, gamma=0.001, T=10, symmetric 1e5 inventories.
inline GameConfig benchmark_config(int horizon = 10) {
    GameConfig cfg;
    cfg.market.horizon = horizon;
    cfg.market.lambda = broadcast(0.001, horizon);
    cfg.market.alpha = broadcast(0.5, horizon);
    cfg.market.beta = broadcast(0.5, horizon);
    cfg.market.resilience = 0.1;
    cfg.env.drift = broadcast(0.0, horizon);
    cfg.env.ar = broadcast(0.0, horizon);
    cfg.env.sigma_env = broadcast(0.01, horizon);
    cfg.env.sigma_eps = broadcast(0.02, horizon);
    cfg.env.corr_env_eps = 0.0;
    cfg.env.mu_eps = broadcast(0.0, horizon);
    cfg.traders = {TraderSpec{100000.0, 0.001, 0.0}, TraderSpec{100000.0, 0.001, 0.0}};
    return cfg;
}

} // namespace impact_game::testing
