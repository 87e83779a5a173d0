#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <mutex>
#include <thread>
#include <vector>

#include "impact_game/errors.hpp"
#include "impact_game/market.hpp"
#include "impact_game/philox.hpp"
#include "impact_game/solver.hpp"

namespace impact_game {

struct SimulationConfig {
    std::size_t num_paths = 10000;
    std::uint64_t seed = 0;
    int max_workers = 0;          // 0 = single-threaded; a hint, never affects results
    double initial_price = 100.0; // policies never read it; it only prices wealth
    bool keep_paths = false;

    bool operator==(const SimulationConfig&) const = default;
};

/// Full trajectory of one path: executed volumes and the visited states.
struct PathRecord {
    std::vector<std::array<double, 2>> volumes;  // q_t, t = 1..T
    std::vector<MarketState> states;             // s_t, t = 1..T+1
};

/// Box-plot statistics of one sample: quartiles by linear interpolation,
/// whiskers at the most extreme point within 1.5*IQR of the quartiles.
struct SampleStats {
    double mean = 0.0;
    double median = 0.0;
    double q1 = 0.0;
    double q3 = 0.0;
    double whisker_lo = 0.0;
    double whisker_hi = 0.0;
};

struct SimulationSummary {
    // volume[i][t-1]: cross-path statistics of trader i's volume at time t.
    std::array<std::vector<SampleStats>, 2> volume;
    // Sample mean over paths of |q^1_t| + |q^2_t|, per t.
    std::vector<double> total_volume;
    std::array<double, 2> terminal_wealth_mean{0.0, 0.0};
    std::array<double, 2> terminal_wealth_std{0.0, 0.0};
    std::size_t num_paths = 0;
};

/**
 * The shock pair of period t on a given path, as a pure function of
 * (seed, path, t): omega is standard normal and eps = sigma_eps * (rho*omega
 * + sqrt(1-rho^2)*omega'), which gives corr(I_t, eps_t | I_{t-1}) = rho.
 */
inline Shocks draw_shocks(std::uint64_t seed, std::uint64_t path_index, int t, const EnvParams& env) {
    const auto z = philox::normal_pair(seed, path_index, static_cast<std::uint32_t>(t), /*stream=*/0);
    const std::size_t k = static_cast<std::size_t>(t - 1);
    const double rho = env.corr_env_eps;
    Shocks s;
    s.omega = z[0];
    s.eps = env.sigma_eps[k] * (rho * z[0] + std::sqrt(1.0 - rho * rho) * z[1]);
    return s;
}

/// Sorted-sample quantile with linear interpolation between order statistics.
inline double interpolated_quantile(const std::vector<double>& sorted, double p) {
    const double h = p * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(h);
    if (lo + 1 >= sorted.size()) return sorted.back();
    const double frac = h - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

inline SampleStats summarize(std::vector<double> samples) {
    if (samples.empty()) throw EmptySample();
    SampleStats st;
    double sum = 0.0;
    for (double v : samples) sum += v;
    st.mean = sum / static_cast<double>(samples.size());
    std::sort(samples.begin(), samples.end());
    st.q1 = interpolated_quantile(samples, 0.25);
    st.median = interpolated_quantile(samples, 0.5);
    st.q3 = interpolated_quantile(samples, 0.75);
    const double iqr = st.q3 - st.q1;
    const double lo_fence = st.q1 - 1.5 * iqr;
    const double hi_fence = st.q3 + 1.5 * iqr;
    st.whisker_lo = st.q1;
    st.whisker_hi = st.q3;
    for (double v : samples) {
        if (v >= lo_fence) { st.whisker_lo = v; break; }
    }
    for (auto it = samples.rbegin(); it != samples.rend(); ++it) {
        if (*it <= hi_fence) { st.whisker_hi = *it; break; }
    }
    return st;
}

namespace detail {

inline constexpr double kInventoryTolerance = 1e-9;

} // namespace detail

/**
 * Simulates `config.num_paths` equilibrium paths and reduces them to the
 * box-plot summary. Paths are independent blocks of the counter-based RNG;
 * results are bit-identical for a given (config, solution) regardless of
 * `max_workers`, because every path writes to its own slot and the reduction
 * order is fixed.
 *
 * Throws InventoryLeak if any path fails to unwind within 1e-9 shares.
 */
inline SimulationSummary simulate_paths(const EquilibriumSolution& sol, const SimulationConfig& config,
                                        std::vector<PathRecord>* paths_out = nullptr) {
    const GameConfig& cfg = sol.config;
    const int horizon = cfg.market.horizon;
    const std::size_t n = config.num_paths;
    if (n < 1) throw InvalidParameter("num_paths must be >= 1");

    // volumes[t-1][i][path]
    std::vector<std::array<std::vector<double>, 2>> volumes(static_cast<std::size_t>(horizon));
    for (auto& per_t : volumes)
        for (auto& per_i : per_t) per_i.assign(n, 0.0);
    std::array<std::vector<double>, 2> terminal_wealth{std::vector<double>(n), std::vector<double>(n)};
    std::vector<double> total(static_cast<std::size_t>(horizon) * n, 0.0);

    const bool keep = paths_out != nullptr && config.keep_paths;
    if (keep) paths_out->assign(n, PathRecord{});

    auto run_range = [&](std::size_t begin, std::size_t end) {
        for (std::size_t p = begin; p < end; ++p) {
            MarketState state = initial_state(cfg, config.initial_price);
            PathRecord* rec = keep ? &(*paths_out)[p] : nullptr;
            if (rec) rec->states.push_back(state);
            for (int t = 1; t <= horizon; ++t) {
                const auto q = policy_action(sol, t, state);
                const Shocks shocks = draw_shocks(config.seed, p, t, cfg.env);
                state = step_state(state, q, shocks, cfg.market, cfg.env);
                const std::size_t k = static_cast<std::size_t>(t - 1);
                volumes[k][0][p] = q[0];
                volumes[k][1][p] = q[1];
                total[k * n + p] = std::abs(q[0]) + std::abs(q[1]);
                if (rec) {
                    rec->volumes.push_back(q);
                    rec->states.push_back(state);
                }
            }
            for (int i = 0; i < 2; ++i) {
                if (std::abs(state.remaining[i]) > detail::kInventoryTolerance)
                    throw InventoryLeak(p, i, std::abs(state.remaining[i]));
                terminal_wealth[i][p] = state.wealth[i];
            }
        }
    };

    int workers = config.max_workers;
    if (workers > 1 && n > 1) {
        const std::size_t w = std::min<std::size_t>(static_cast<std::size_t>(workers), n);
        std::vector<std::thread> pool;
        std::exception_ptr first_error;
        std::mutex error_mutex;
        const std::size_t chunk = (n + w - 1) / w;
        for (std::size_t b = 0; b < n; b += chunk) {
            pool.emplace_back([&, b] {
                try {
                    run_range(b, std::min(b + chunk, n));
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                }
            });
        }
        for (auto& th : pool) th.join();
        if (first_error) std::rethrow_exception(first_error);
    } else {
        run_range(0, n);
    }

    SimulationSummary out;
    out.num_paths = n;
    out.total_volume.resize(static_cast<std::size_t>(horizon));
    for (int i = 0; i < 2; ++i) out.volume[i].resize(static_cast<std::size_t>(horizon));
    for (int t = 1; t <= horizon; ++t) {
        const std::size_t k = static_cast<std::size_t>(t - 1);
        for (int i = 0; i < 2; ++i) out.volume[i][k] = summarize(volumes[k][i]);
        double s = 0.0;
        for (std::size_t p = 0; p < n; ++p) s += total[k * n + p];
        out.total_volume[k] = s / static_cast<double>(n);
    }
    for (int i = 0; i < 2; ++i) {
        double s = 0.0;
        for (double w : terminal_wealth[i]) s += w;
        const double mean = s / static_cast<double>(n);
        double ss = 0.0;
        for (double w : terminal_wealth[i]) ss += (w - mean) * (w - mean);
        out.terminal_wealth_mean[i] = mean;
        out.terminal_wealth_std[i] = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
    }
    return out;
}

} // namespace impact_game
