#pragma once

// Umbrella header for the two-trader execution game library: market dynamics,
// closed-form Markov-perfect-equilibrium solver, Monte Carlo simulation,
// brute-force verification oracles, and the scenario runner.

#include "impact_game/errors.hpp"
#include "impact_game/gaussian.hpp"
#include "impact_game/market.hpp"
#include "impact_game/oracle.hpp"
#include "impact_game/philox.hpp"
#include "impact_game/scenario.hpp"
#include "impact_game/simulate.hpp"
#include "impact_game/solver.hpp"
#include "impact_game/version.hpp"
