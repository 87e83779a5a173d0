// Minimal library walk-through: solve the benchmark game, print the
// equilibrium schedule, and compare it with a Monte Carlo run.

#include <cstdio>

#include "impact_game/simulate.hpp"
#include "impact_game/solver.hpp"

using namespace impact_game;

int main() {
    GameConfig cfg;
    cfg.market.horizon = 10;
    cfg.market.lambda = broadcast(0.001, 10);
    cfg.market.alpha = broadcast(0.5, 10);
    cfg.market.beta = broadcast(0.5, 10);
    cfg.market.resilience = 0.1;
    cfg.env.drift = broadcast(0.0, 10);
    cfg.env.ar = broadcast(0.0, 10);
    cfg.env.sigma_env = broadcast(1.0, 10);
    cfg.env.sigma_eps = broadcast(0.02, 10);
    cfg.env.mu_eps = broadcast(0.0, 10);
    cfg.traders = {TraderSpec{100000.0, 0.001, 0.0}, TraderSpec{100000.0, 0.001, 0.0}};

    const auto sol = solve_equilibrium(cfg);

    SimulationConfig sim;
    sim.num_paths = 10000;
    sim.seed = 20240001;
    const auto summary = simulate_paths(sol, sim);

    std::printf("t   policy b      policy c      mean volume   median volume\n");
    for (int t = 1; t <= 10; ++t) {
        const auto& row = sol.policy[static_cast<std::size_t>(t - 1)][0];
        const auto& st = summary.volume[0][static_cast<std::size_t>(t - 1)];
        std::printf("%-3d %-13.6f %-13.6f %-13.1f %-13.1f\n", t, row.b, row.c, st.mean, st.median);
    }
    std::printf("terminal wealth: mean %.2f, std %.2f\n", summary.terminal_wealth_mean[0],
                summary.terminal_wealth_std[0]);
    return 0;
}
