#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <cmath>
#include <random>

#include "impact_game/solver.hpp"
#include "test_helpers.hpp"

using namespace impact_game;
using impact_game::testing::benchmark_config;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// Independent route for the t = T-1 step: the one-period-to-go coefficients
// written out longhand (the shock expectation reduces to a plain linear MGF
// with variance Sigma = var(I + eps)), solved against the terminal value
// G1 = J1 = -lambda_T. Deliberately shares no code with backward_step.
struct StepTm1 {
    std::array<PolicyRow, 2> policy;
    std::array<ValueCoefficients, 2> value;
};

StepTm1 hand_rolled_t_minus_1(const GameConfig& cfg) {
    const int T = cfg.market.horizon;
    const std::size_t k = static_cast<std::size_t>(T - 2);
    const double lam = cfg.market.lambda[k];
    const double lamT = cfg.market.lambda[k + 1];
    const double kap = std::exp(-cfg.market.resilience);
    const double atot = cfg.market.alpha[k] * kap + cfg.market.beta[k];
    const double sI = cfg.env.sigma_env[k], sE = cfg.env.sigma_eps[k];
    const double sig = sI * sI + sE * sE + 2.0 * cfg.env.corr_env_eps * sI * sE;
    const double aI = cfg.env.drift[k], bI = cfg.env.ar[k];
    const double g1T = -lamT, j1T = -lamT;

    std::array<double, 2> A, B, C, D, F, M, N;
    for (int i = 0; i < 2; ++i) {
        const double gam = cfg.traders[i].risk_aversion;
        A[i] = lam - atot * lam - g1T + 0.5 * gam * sig;
        B[i] = -atot * lam - 2.0 * g1T + gam * sig;
        C[i] = -j1T;
        D[i] = -(1.0 - kap);
        F[i] = -bI;
        M[i] = aI;
        N[i] = -lam + atot * lam + j1T;
    }
    std::array<double, 2> zeta, Bs, Cs, Ds, Fs, Ms;
    for (int i = 0; i < 2; ++i) {
        const int j = 1 - i;
        zeta[i] = 2.0 * A[i] - N[i] * N[j] / (2.0 * A[j]);
        Bs[i] = (B[i] + N[i] * C[j] / (2.0 * A[j])) / zeta[i];
        Cs[i] = (C[i] + N[i] * B[j] / (2.0 * A[j])) / zeta[i];
        Ds[i] = (D[i] + N[i] * D[j] / (2.0 * A[j])) / zeta[i];
        Fs[i] = (F[i] + N[i] * F[j] / (2.0 * A[j])) / zeta[i];
        Ms[i] = (M[i] + N[i] * M[j] / (2.0 * A[j])) / zeta[i];
    }
    StepTm1 out;
    for (int i = 0; i < 2; ++i) {
        const int j = 1 - i;
        const double gam = cfg.traders[i].risk_aversion;
        const double Bss = B[i] + N[i] * Cs[j];
        const double Css = C[i] + N[i] * Bs[j];
        const double Dss = D[i] + N[i] * Ds[j];
        const double Fss = F[i] + N[i] * Fs[j];
        const double Mss = M[i] + N[i] * Ms[j];
        out.policy[i] = {Ms[i], Bs[i], Cs[i], Ds[i], Fs[i]};
        ValueCoefficients v;
        const double couple = -atot * lam - j1T;
        v.g1 = g1T - 0.5 * gam * sig + couple * Cs[j] + Bss * Bss / (4.0 * A[i]);
        v.g2 = -aI + couple * Ms[j] + Bss * Mss / (2.0 * A[i]);
        v.h1 = (1.0 - kap) + couple * Ds[j] + Bss * Dss / (2.0 * A[i]);
        v.h2 = Dss * Dss / (4.0 * A[i]);
        v.h3 = Dss * Mss / (2.0 * A[i]);
        v.j1 = j1T + couple * Bs[j] + Bss * Css / (2.0 * A[i]);
        v.j2 = Css * Dss / (2.0 * A[i]);
        v.j3 = Css * Css / (4.0 * A[i]);
        v.j4 = Css * Mss / (2.0 * A[i]);
        v.l1 = bI + couple * Fs[j] + Bss * Fss / (2.0 * A[i]);
        v.l2 = Dss * Fss / (2.0 * A[i]);
        v.l3 = Css * Fss / (2.0 * A[i]);
        v.l4 = Fss * Fss / (4.0 * A[i]);
        v.l5 = Fss * Mss / (2.0 * A[i]);
        v.z = Mss * Mss / (4.0 * A[i]);
        out.value[i] = v;
    }
    return out;
}

void require_close(const ValueCoefficients& a, const ValueCoefficients& b, double tol) {
    const std::array<std::array<double, 2>, 15> pairs{{{a.g1, b.g1},
                                                       {a.g2, b.g2},
                                                       {a.h1, b.h1},
                                                       {a.h2, b.h2},
                                                       {a.h3, b.h3},
                                                       {a.j1, b.j1},
                                                       {a.j2, b.j2},
                                                       {a.j3, b.j3},
                                                       {a.j4, b.j4},
                                                       {a.l1, b.l1},
                                                       {a.l2, b.l2},
                                                       {a.l3, b.l3},
                                                       {a.l4, b.l4},
                                                       {a.l5, b.l5},
                                                       {a.z, b.z}}};
    for (const auto& p : pairs) REQUIRE_THAT(p[0], WithinAbs(p[1], tol * (1.0 + std::abs(p[1]))));
}

GameConfig rich_config() {
    auto cfg = benchmark_config();
    cfg.env.drift = broadcast(0.4, 10);
    cfg.env.ar = broadcast(-0.6, 10);
    cfg.env.sigma_env = broadcast(0.7, 10);
    cfg.env.sigma_eps = broadcast(0.3, 10);
    cfg.env.corr_env_eps = 0.35;
    cfg.traders[0] = {150000.0, 0.002, 0.0};
    cfg.traders[1] = {-40000.0, 0.0007, 0.0};
    return cfg;
}

} // namespace

TEST_CASE("terminal coefficients") {
    const auto cfg = benchmark_config();
    const auto vt = terminal_coefficients(cfg.market);
    for (int i = 0; i < 2; ++i) {
        REQUIRE(vt[i].g1 == -0.001);
        REQUIRE(vt[i].j1 == -0.001);
        REQUIRE(vt[i].g2 == 0.0);
        REQUIRE(vt[i].h1 == 0.0);
        REQUIRE(vt[i].h2 == 0.0);
        REQUIRE(vt[i].h3 == 0.0);
        REQUIRE(vt[i].j2 == 0.0);
        REQUIRE(vt[i].j3 == 0.0);
        REQUIRE(vt[i].j4 == 0.0);
        REQUIRE(vt[i].l1 == 0.0);
        REQUIRE(vt[i].l2 == 0.0);
        REQUIRE(vt[i].l3 == 0.0);
        REQUIRE(vt[i].l4 == 0.0);
        REQUIRE(vt[i].l5 == 0.0);
        REQUIRE(vt[i].z == 0.0);
    }
    REQUIRE(vt[0].g1 == vt[1].g1);
}

TEST_CASE("backward step at T-1 reproduces the longhand one-period solution") {
    for (const auto& cfg : {benchmark_config(), rich_config()}) {
        const auto step = backward_step(cfg.market.horizon - 1, terminal_coefficients(cfg.market), cfg);
        const auto hand = hand_rolled_t_minus_1(cfg);
        for (int i = 0; i < 2; ++i) {
            REQUIRE_THAT(step.policy[i].a,
                         WithinAbs(hand.policy[i].a, 1e-12 * (1 + std::abs(hand.policy[i].a))));
            REQUIRE_THAT(step.policy[i].b, WithinRel(hand.policy[i].b, 1e-12));
            REQUIRE_THAT(step.policy[i].c, WithinRel(hand.policy[i].c, 1e-12));
            REQUIRE_THAT(step.policy[i].d, WithinRel(hand.policy[i].d, 1e-12));
            REQUIRE_THAT(step.policy[i].e,
                         WithinAbs(hand.policy[i].e, 1e-12 * (1 + std::abs(hand.policy[i].e))));
            require_close(step.value[i], hand.value[i], 1e-12);
        }
    }
}

TEST_CASE("F vanishes at T-1 when the environment has no memory") {
    const auto cfg = benchmark_config();  // ar = 0
    const auto step = backward_step(9, terminal_coefficients(cfg.market), cfg);
    for (int i = 0; i < 2; ++i) {
        REQUIRE(step.stage[i].f == 0.0);
        REQUIRE(step.policy[i].e == 0.0);
    }
}

TEST_CASE("solution tables have the right shape and terminal row") {
    const auto sol = solve_equilibrium(benchmark_config());
    REQUIRE(sol.policy.size() == 10);
    REQUIRE(sol.value.size() == 10);
    REQUIRE(sol.stage.size() == 9);
    for (int i = 0; i < 2; ++i) {
        REQUIRE(sol.policy[9][i].a == 0.0);
        REQUIRE(sol.policy[9][i].b == 1.0);
        REQUIRE(sol.policy[9][i].c == 0.0);
        REQUIRE(sol.policy[9][i].d == 0.0);
        REQUIRE(sol.policy[9][i].e == 0.0);
    }
}

TEST_CASE("symmetric traders get identical coefficients at every t") {
    auto cfg = benchmark_config();
    cfg.env.drift = broadcast(0.2, 10);
    cfg.env.ar = broadcast(-0.5, 10);
    const auto sol = solve_equilibrium(cfg);
    for (std::size_t k = 0; k < 10; ++k) {
        REQUIRE(sol.policy[k][0].a == sol.policy[k][1].a);
        REQUIRE(sol.policy[k][0].b == sol.policy[k][1].b);
        REQUIRE(sol.policy[k][0].c == sol.policy[k][1].c);
        REQUIRE(sol.policy[k][0].d == sol.policy[k][1].d);
        REQUIRE(sol.policy[k][0].e == sol.policy[k][1].e);
    }
}

TEST_CASE("exchanging the traders swaps the coefficient tables exactly") {
    auto cfg = rich_config();
    auto swapped = cfg;
    std::swap(swapped.traders[0], swapped.traders[1]);
    const auto sol = solve_equilibrium(cfg);
    const auto sol2 = solve_equilibrium(swapped);
    for (std::size_t k = 0; k < 10; ++k) {
        for (int i = 0; i < 2; ++i) {
            REQUIRE(sol.policy[k][i].a == sol2.policy[k][1 - i].a);
            REQUIRE(sol.policy[k][i].b == sol2.policy[k][1 - i].b);
            REQUIRE(sol.policy[k][i].c == sol2.policy[k][1 - i].c);
            REQUIRE(sol.policy[k][i].d == sol2.policy[k][1 - i].d);
            REQUIRE(sol.policy[k][i].e == sol2.policy[k][1 - i].e);
            REQUIRE(sol.value[k][i].g1 == sol2.value[k][1 - i].g1);
            REQUIRE(sol.value[k][i].l4 == sol2.value[k][1 - i].l4);
            REQUIRE(sol.value[k][i].z == sol2.value[k][1 - i].z);
        }
    }
}

TEST_CASE("memoryless environment implies the policy never reads I") {
    auto cfg = benchmark_config();
    cfg.env.drift = broadcast(0.3, 10);  // drift alone must not create e != 0
    const auto sol = solve_equilibrium(cfg);
    for (std::size_t k = 0; k < 10; ++k)
        for (int i = 0; i < 2; ++i) REQUIRE(std::abs(sol.policy[k][i].e) < 1e-12);
}

TEST_CASE("starred coefficients satisfy the 2x2 system identity") {
    const auto sol = solve_equilibrium(rich_config());
    for (const auto& per_t : sol.stage) {
        for (int i = 0; i < 2; ++i) {
            const auto& s = per_t[i];
            REQUIRE_THAT(s.b_sstar / (2.0 * s.a_quad), WithinRel(s.b_star, 1e-10));
            REQUIRE_THAT(s.c_sstar / (2.0 * s.a_quad), WithinRel(s.c_star, 1e-10));
            REQUIRE_THAT(s.d_sstar / (2.0 * s.a_quad), WithinRel(s.d_star, 1e-10));
            if (s.f_star != 0.0)
                REQUIRE_THAT(s.f_sstar / (2.0 * s.a_quad), WithinRel(s.f_star, 1e-10));
            if (s.m_star != 0.0)
                REQUIRE_THAT(s.m_sstar / (2.0 * s.a_quad), WithinRel(s.m_star, 1e-10));
        }
    }
}

TEST_CASE("deterministic environment is solvable (degenerate covariance)") {
    auto cfg = benchmark_config();
    cfg.env.sigma_env = broadcast(0.0, 10);
    cfg.env.sigma_eps = broadcast(0.0, 10);
    cfg.env.drift = broadcast(0.1, 10);
    cfg.env.ar = broadcast(-0.9, 10);
    const auto sol = solve_equilibrium(cfg);
    for (const auto& per_t : sol.stage)
        for (int i = 0; i < 2; ++i) REQUIRE(per_t[i].a_quad > 0.0);
}

TEST_CASE("policy_action") {
    const auto sol = solve_equilibrium(benchmark_config());
    MarketState s = initial_state(sol.config, 100.0);

    SECTION("full liquidation at T") {
        s.time = 10;
        s.remaining = {1234.5, -22.0};
        const auto q = policy_action(sol, 10, s);
        REQUIRE(q[0] == 1234.5);
        REQUIRE(q[1] == -22.0);
    }
    SECTION("only the intercept survives at the origin state") {
        s.remaining = {0.0, 0.0};
        const auto q = policy_action(sol, 3, s);
        REQUIRE(q[0] == sol.policy[2][0].a);
        REQUIRE(q[1] == sol.policy[2][1].a);
    }
    SECTION("symmetric state gives symmetric actions") {
        const auto q = policy_action(sol, 1, s);
        REQUIRE_THAT(q[0], WithinRel(q[1], 1e-12));
    }
    SECTION("out-of-range t") {
        REQUIRE_THROWS_AS(policy_action(sol, 0, s), TimeOutOfRange);
        REQUIRE_THROWS_AS(policy_action(sol, 11, s), TimeOutOfRange);
    }
}

TEST_CASE("stage objective is maximized by the equilibrium action") {
    const auto sol = solve_equilibrium(rich_config());
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> qdist(-60000.0, 160000.0);
    std::uniform_real_distribution<double> rdist(-50.0, 50.0);
    for (int t = 1; t < 10; ++t) {
        for (int rep = 0; rep < 20; ++rep) {
            MarketState s = initial_state(sol.config, 100.0);
            s.time = t;
            s.remaining = {qdist(rng), qdist(rng)};
            s.residual = rdist(rng);
            s.env_prev = rdist(rng) / 25.0;
            const auto q = policy_action(sol, t, s);
            for (int i = 0; i < 2; ++i) {
                const double best = stage_objective(sol, t, s, i, q[i], q[1 - i]);
                const double delta = 1e-2 * (std::abs(q[i]) + 1.0);
                REQUIRE(stage_objective(sol, t, s, i, q[i] + delta, q[1 - i]) < best);
                REQUIRE(stage_objective(sol, t, s, i, q[i] - delta, q[1 - i]) < best);
            }
        }
    }
}

TEST_CASE("solve handles a one-period game") {
    auto cfg = benchmark_config(1);
    cfg.traders = {TraderSpec{5000.0, 0.01, 0.0}, TraderSpec{-3000.0, 0.02, 0.0}};
    const auto sol = solve_equilibrium(cfg);
    REQUIRE(sol.policy.size() == 1);
    REQUIRE(sol.stage.empty());
    MarketState s = initial_state(cfg, 50.0);
    const auto q = policy_action(sol, 1, s);
    REQUIRE(q[0] == 5000.0);
    REQUIRE(q[1] == -3000.0);
}
