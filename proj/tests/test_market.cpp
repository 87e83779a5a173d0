#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "impact_game/market.hpp"
#include "test_helpers.hpp"

using namespace impact_game;
using impact_game::testing::benchmark_config;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("validate accepts the benchmark parameter set") {
    const GameConfig cfg = benchmark_config();
    REQUIRE(validate(cfg) == cfg);
    // alpha*exp(-rho)+beta = 0.5*exp(-0.1)+0.5, comfortably below one
    REQUIRE(0.5 * std::exp(-0.1) + 0.5 < 1.0);
}

TEST_CASE("validate rejects impact friction at or above one") {
    auto cfg = benchmark_config();
    cfg.market.resilience = 0.0;

    SECTION("alpha=1, beta=1 is far beyond the bound") {
        cfg.market.alpha = broadcast(1.0, 10);
        cfg.market.beta = broadcast(1.0, 10);
        REQUIRE_THROWS_AS(validate(cfg), Assumption32Violated);
    }
    SECTION("equality counts as a violation") {
        cfg.market.alpha = broadcast(1.0, 10);
        cfg.market.beta = broadcast(0.0, 10);
        REQUIRE_THROWS_AS(validate(cfg), Assumption32Violated);
    }
    SECTION("the violating period is reported") {
        auto cfg7 = benchmark_config();
        cfg7.market.alpha[6] = 1.0;
        cfg7.market.beta[6] = 1.0;
        try {
            validate(cfg7);
            FAIL("expected Assumption32Violated");
        } catch (const Assumption32Violated& e) {
            REQUIRE(e.time == 7);
        }
    }
}

TEST_CASE("validate rejects sign and range violations") {
    SECTION("lambda must be positive") {
        auto cfg = benchmark_config();
        cfg.market.lambda[3] = 0.0;
        REQUIRE_THROWS_AS(validate(cfg), NonPositive);
    }
    SECTION("risk aversion must be positive") {
        auto cfg = benchmark_config();
        cfg.traders[1].risk_aversion = 0.0;
        REQUIRE_THROWS_AS(validate(cfg), NonPositive);
    }
    SECTION("sigmas must be nonnegative") {
        auto cfg = benchmark_config();
        cfg.env.sigma_env[0] = -0.1;
        REQUIRE_THROWS_AS(validate(cfg), NonPositive);
        cfg = benchmark_config();
        cfg.env.sigma_eps[9] = -1.0;
        REQUIRE_THROWS_AS(validate(cfg), NonPositive);
    }
    SECTION("shock correlation strictly inside (-1,1)") {
        auto cfg = benchmark_config();
        cfg.env.corr_env_eps = 1.0;
        REQUIRE_THROWS_AS(validate(cfg), InvalidParameter);
    }
    SECTION("nonzero eps mean is rejected, not silently dropped") {
        auto cfg = benchmark_config();
        cfg.env.mu_eps[2] = 0.5;
        REQUIRE_THROWS_AS(validate(cfg), InvalidParameter);
    }
    SECTION("per-period vectors must have length T") {
        auto cfg = benchmark_config();
        cfg.market.alpha.pop_back();
        REQUIRE_THROWS_AS(validate(cfg), LengthMismatch);
    }
}

TEST_CASE("decay kernel") {
    REQUIRE(decay_kernel(0.0, 0.5) == 1.0);
    REQUIRE_THAT(decay_kernel(1.0, 0.1), WithinAbs(0.9048374, 1e-7));
    for (double t : {0.0, 1.0, 7.0, 1000.0}) REQUIRE(decay_kernel(t, 0.0) == 1.0);
}

TEST_CASE("step_state applies all five updates jointly") {
    const auto cfg = benchmark_config();
    MarketState s = initial_state(cfg, 100.0);

    SECTION("residual update matches the decay recursion") {
        const MarketState next = step_state(s, {100000.0, 100000.0}, {0.0, 0.0}, cfg.market, cfg.env);
        REQUIRE_THAT(next.residual, WithinAbs(90.48374, 5e-6));
        REQUIRE(next.time == 2);
    }
    SECTION("no trade, no shocks: only the residual unwinds from the price") {
        MarketState r = s;
        r.residual = 10.0;
        const MarketState next = step_state(r, {0.0, 0.0}, {0.0, 0.0}, cfg.market, cfg.env);
        REQUIRE_THAT(next.price, WithinRel(100.0 - (1.0 - std::exp(-0.1)) * 10.0, 1e-15));
        REQUIRE(next.wealth == r.wealth);
        REQUIRE(next.remaining == r.remaining);
    }
    SECTION("wealth pays the execution price") {
        const MarketState next = step_state(s, {100000.0, 100000.0}, {0.0, 0.0}, cfg.market, cfg.env);
        REQUIRE_THAT(next.wealth[0], WithinRel(-3.0e7, 1e-12));
        REQUIRE_THAT(next.wealth[1], WithinRel(-3.0e7, 1e-12));
    }
    SECTION("environment recursion uses the minus-sign AR convention") {
        auto cfg2 = benchmark_config();
        cfg2.env.drift = broadcast(0.3, 10);
        cfg2.env.ar = broadcast(0.8, 10);
        MarketState r = s;
        r.env_prev = 2.0;
        const MarketState next = step_state(r, {0.0, 0.0}, {1.5, 0.0}, cfg2.market, cfg2.env);
        REQUIRE_THAT(next.env_prev, WithinRel(0.3 - 0.8 * 2.0 + 0.01 * 1.5, 1e-14));
    }
    SECTION("stepping past T is rejected") {
        MarketState r = s;
        r.time = 11;
        REQUIRE_THROWS_AS(step_state(r, {0.0, 0.0}, {0.0, 0.0}, cfg.market, cfg.env), TimeOutOfRange);
    }
}

TEST_CASE("residual vanishes in the fast-resilience limit") {
    auto cfg = benchmark_config();
    cfg.market.resilience = 50.0;
    MarketState s = initial_state(cfg, 100.0);
    double max_res = 0.0, max_kick = 0.0;
    for (int t = 1; t <= 10; ++t) {
        const double q = 20000.0;
        max_kick = std::max(max_kick, cfg.market.alpha[0] * cfg.market.lambda[0] * 2.0 * q);
        s = step_state(s, {q, q}, {0.0, 0.0}, cfg.market, cfg.env);
        max_res = std::max(max_res, std::abs(s.residual));
    }
    REQUIRE(max_res < 1e-15 * max_kick);
}

TEST_CASE("with rho=0 the residual telescopes to the plain impact sum") {
    auto cfg = benchmark_config();
    cfg.market.resilience = 0.0;
    cfg.market.beta = broadcast(0.3, 10);  // keep Assumption 3.2 with rho = 0
    MarketState s = initial_state(cfg, 100.0);
    double plain_sum = 0.0;
    for (int t = 1; t <= 10; ++t) {
        const std::array<double, 2> q{1000.0 * t, -400.0 * t};
        plain_sum += cfg.market.alpha[0] * cfg.market.lambda[0] * (q[0] + q[1]);
        s = step_state(s, q, {0.0, 0.0}, cfg.market, cfg.env);
        REQUIRE_THAT(s.residual, WithinRel(plain_sum, 1e-12));
    }
}

TEST_CASE("inventory is conserved along any liquidating trajectory") {
    const auto cfg = benchmark_config();
    MarketState s = initial_state(cfg, 100.0);
    double executed = 0.0;
    for (int t = 1; t <= 10; ++t) {
        const double q = t < 10 ? 9000.0 : s.remaining[0];
        executed += q;
        s = step_state(s, {q, q}, {0.1, -0.2}, cfg.market, cfg.env);
    }
    REQUIRE(s.remaining[0] == 0.0);
    REQUIRE_THAT(executed, WithinRel(cfg.traders[0].inventory, 1e-12));
}

TEST_CASE("step_state is deterministic") {
    const auto cfg = benchmark_config();
    MarketState s = initial_state(cfg, 100.0);
    s.env_prev = 0.37;
    s.residual = 12.5;
    const MarketState a = step_state(s, {123.4, -56.7}, {0.31, -1.7}, cfg.market, cfg.env);
    const MarketState b = step_state(s, {123.4, -56.7}, {0.31, -1.7}, cfg.market, cfg.env);
    REQUIRE(a.price == b.price);
    REQUIRE(a.residual == b.residual);
    REQUIRE(a.env_prev == b.env_prev);
    REQUIRE(a.wealth == b.wealth);
    REQUIRE(a.remaining == b.remaining);
}
