#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "impact_game/gaussian.hpp"
#include "impact_game/oracle.hpp"

using namespace impact_game;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

BivariateGaussian standard_pair() { return BivariateGaussian{}; }

BivariateGaussian random_gaussian(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> mu(-1.0, 1.0);
    std::uniform_real_distribution<double> sigma(0.3, 2.0);
    std::uniform_real_distribution<double> corr(-0.85, 0.85);
    BivariateGaussian g;
    g.mu = {mu(rng), mu(rng)};
    g.sigma = {sigma(rng), sigma(rng)};
    g.rho_xy = corr(rng);
    return g;
}

} // namespace

TEST_CASE("mgf_linear closed form") {
    REQUIRE(mgf_linear(standard_pair(), 0.0, 0.0) == 1.0);
    REQUIRE_THAT(mgf_linear(standard_pair(), 1.0, 0.0), WithinAbs(1.6487213, 1e-7));
    BivariateGaussian g;
    g.rho_xy = 0.5;
    REQUIRE_THAT(mgf_linear(g, 1.0, 1.0), WithinAbs(4.4816891, 1e-7));
}

TEST_CASE("quad_exp_expectation basics") {
    SECTION("expectation of the constant one") {
        for (int k = 0; k < 5; ++k) {
            std::mt19937_64 rng(100 + k);
            const auto g = random_gaussian(rng);
            REQUIRE_THAT(quad_exp_expectation(g, 0.0, 0.0, 0.0).value, WithinRel(1.0, 1e-12));
        }
    }
    SECTION("one-dimensional Gaussian integral, a = 1/4") {
        const auto r = quad_exp_expectation(standard_pair(), 0.25, 0.0, 0.0);
        REQUIRE_THAT(r.value, WithinRel(std::sqrt(2.0), 1e-12));
    }
    SECTION("a beyond the divergence boundary is rejected") {
        REQUIRE_THROWS_AS(quad_exp_expectation(standard_pair(), 0.6, 0.0, 0.0), NotPositiveDefinite);
        REQUIRE_THROWS_AS(quad_exp_expectation(standard_pair(), 0.5, 0.0, 0.0), NotPositiveDefinite);
    }
    SECTION("value grows towards the boundary instead of returning garbage") {
        double prev = 0.0;
        for (double a : {0.30, 0.40, 0.45, 0.49}) {
            const double v = quad_exp_expectation(standard_pair(), a, 0.0, 0.0).value;
            REQUIRE(v > prev);
            prev = v;
        }
    }
}

TEST_CASE("a = 0 reduces the quadratic expectation to the linear MGF") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> coef(-1.5, 1.5);
    for (int k = 0; k < 50; ++k) {
        const auto g = random_gaussian(rng);
        const double b = coef(rng), c = coef(rng);
        const auto r = quad_exp_expectation(g, 0.0, b, c);
        REQUIRE_THAT(r.value, WithinRel(mgf_linear(g, b, c), 1e-12));
        // with a = 0, pi must be Sigma itself
        REQUIRE_THAT(r.pi[0][0], WithinRel(g.sigma[0] * g.sigma[0], 1e-10));
        REQUIRE_THAT(r.pi[1][1], WithinRel(g.sigma[1] * g.sigma[1], 1e-10));
        REQUIRE_THAT(r.pi[0][1], WithinAbs(g.rho_xy * g.sigma[0] * g.sigma[1], 1e-10));
        REQUIRE(r.pi[0][1] == r.pi[1][0]);
    }
}

TEST_CASE("expanded exponent form agrees with the matrix form") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> coef(-1.0, 1.0);
    std::uniform_real_distribution<double> quad(-1.0, 0.2);
    for (int k = 0; k < 50; ++k) {
        const auto g = random_gaussian(rng);
        const double a = quad(rng), b = coef(rng), c = coef(rng);
        QuadExpResult r;
        try {
            r = quad_exp_expectation(g, a, b, c);
        } catch (const NotPositiveDefinite&) {
            continue;
        }
        const double expanded =
            0.5 * (r.pi[0][0] * b * b + r.pi[1][1] * c * c + 2.0 * r.pi[0][1] * b * c +
                   2.0 * r.mu_b * b + 2.0 * r.mu_c * c + r.mu_a);
        const double det_sigma =
            g.sigma[0] * g.sigma[0] * g.sigma[1] * g.sigma[1] * (1.0 - g.rho_xy * g.rho_xy);
        const double det_pi = r.pi[0][0] * r.pi[1][1] - r.pi[0][1] * r.pi[1][0];
        const double prefactor = std::sqrt(det_pi / det_sigma);
        REQUIRE_THAT(prefactor * std::exp(expanded), WithinRel(r.value, 1e-11));
    }
}

TEST_CASE("Monte Carlo agrees with the closed form") {
    std::mt19937_64 rng(1234);
    std::uniform_real_distribution<double> coef(-0.8, 0.8);
    std::uniform_real_distribution<double> quad(-0.6, 0.15);
    int done = 0;
    std::uint64_t mc_seed = 555;
    while (done < 10) {
        const auto g = random_gaussian(rng);
        const double a = quad(rng), b = coef(rng), c = coef(rng);
        double second_moment = 0.0;
        try {
            second_moment = quad_exp_expectation(g, 2.0 * a, 2.0 * b, 2.0 * c).value;
        } catch (const NotPositiveDefinite&) {
            continue;
        }
        const double mean = quad_exp_expectation(g, a, b, c).value;
        const double rel_se = std::sqrt((second_moment / (mean * mean) - 1.0) / 200000.0);
        if (rel_se > 0.004) continue;  // keep the 2% bound meaningful at this sample size
        const auto check = mc_check_quad_exp(g, a, b, c, 200000, mc_seed++);
        REQUIRE(check.within_3se);
        REQUIRE(std::abs(check.mc_estimate - check.closed_form) / check.closed_form < 0.02);
        ++done;
    }
}

TEST_CASE("shock kernel matches the full expectation when X has mean m, Y mean 0") {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> coef(-1.0, 1.0);
    std::uniform_real_distribution<double> quad(-2.0, 0.3);
    std::uniform_real_distribution<double> mean(-2.0, 2.0);
    for (int k = 0; k < 50; ++k) {
        auto g = random_gaussian(rng);
        g.mu[1] = 0.0;
        g.mu[0] = mean(rng);
        const double a = quad(rng), b = coef(rng), c = coef(rng);
        ShockKernel ker;
        try {
            ker = make_shock_kernel(g.sigma[0], g.sigma[1], g.rho_xy, a);
        } catch (const NotPositiveDefinite&) {
            REQUIRE_THROWS_AS(quad_exp_expectation(g, a, b, c), NotPositiveDefinite);
            continue;
        }
        const auto r = quad_exp_expectation(g, a, b, c);
        REQUIRE_THAT(shock_kernel_log_value(ker, b, c, g.mu[0]), WithinRel(std::log(r.value), 1e-10));
        REQUIRE(ker.nondegenerate);
    }
}

TEST_CASE("degenerate branches evaluate the deterministic coordinate directly") {
    SECTION("deterministic X") {
        const auto ker = make_shock_kernel(0.0, 0.7, 0.3, -0.4);
        const double b = 0.9, c = -1.1, m = 1.3;
        const double expect = -0.4 * m * m + b * m + 0.5 * 0.7 * 0.7 * c * c;
        REQUIRE_THAT(shock_kernel_log_value(ker, b, c, m), WithinRel(expect, 1e-13));
        REQUIRE_FALSE(ker.nondegenerate);
    }
    SECTION("deterministic Y") {
        const double sx = 0.8, a = -0.9, b = 0.4, m = -0.6;
        const auto ker = make_shock_kernel(sx, 0.0, 0.0, a);
        const double denom = 1.0 - 2.0 * a * sx * sx;
        const double expect = (a * m * m + b * m + 0.5 * b * b * sx * sx) / denom -
                              0.5 * std::log(denom);
        REQUIRE_THAT(shock_kernel_log_value(ker, b, 5.0, m), WithinRel(expect, 1e-13));
    }
    SECTION("fully deterministic pair") {
        const auto ker = make_shock_kernel(0.0, 0.0, 0.0, 0.25);
        REQUIRE_THAT(shock_kernel_log_value(ker, 2.0, 3.0, 1.5),
                     WithinRel(0.25 * 1.5 * 1.5 + 2.0 * 1.5, 1e-14));
    }
    SECTION("divergent 1-D case is rejected") {
        REQUIRE_THROWS_AS(make_shock_kernel(1.0, 0.0, 0.0, 0.5), NotPositiveDefinite);
    }
    SECTION("the kernel is continuous at the degenerate boundary") {
        const double a = -0.3, b = 0.7, c = -0.2, m = 0.9;
        const auto tiny = make_shock_kernel(1e-7, 0.5, 0.2, a);
        const auto zero = make_shock_kernel(0.0, 0.5, 0.2, a);
        REQUIRE_THAT(shock_kernel_log_value(tiny, b, c, m),
                     WithinAbs(shock_kernel_log_value(zero, b, c, m), 1e-6));
        const auto tiny_y = make_shock_kernel(0.5, 1e-7, 0.2, a);
        const auto zero_y = make_shock_kernel(0.5, 0.0, 0.2, a);
        REQUIRE_THAT(shock_kernel_log_value(tiny_y, b, c, m),
                     WithinAbs(shock_kernel_log_value(zero_y, b, c, m), 1e-6));
    }
}
