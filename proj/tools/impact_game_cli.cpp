// Command-line front end: solve the two-trader execution game, run Monte
// Carlo scenarios (built-in presets or JSON files), and verify the closed
// forms against the brute-force oracles.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "impact_game/impact_game.hpp"
#include "impact_game/verify.hpp"

namespace {

namespace fs = std::filesystem;
using namespace impact_game;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitNumerical = 2;
constexpr int kExitUsage = 64;

struct CommonOptions {
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> paths;
    std::optional<int> workers;
    std::string out_dir = "results";
    std::string format = "csv,json";
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
    cmd->add_option("--seed", [&opts](const CLI::results_t& r) {
        opts.seed = std::stoull(r[0]);
        return true;
    }, "Override the scenario's RNG seed");
    cmd->add_option("--paths", [&opts](const CLI::results_t& r) {
        opts.paths = static_cast<std::size_t>(std::stoull(r[0]));
        return true;
    }, "Override the number of Monte Carlo paths");
    cmd->add_option("--workers", [&opts](const CLI::results_t& r) {
        opts.workers = std::stoi(r[0]);
        return true;
    }, "Worker-thread hint (results are identical for any value)");
    cmd->add_option("--out", opts.out_dir, "Output directory")->capture_default_str();
    cmd->add_option("--format", opts.format,
                    "Comma-separated outputs: csv, json, svg")->capture_default_str();
}

RunOverrides to_overrides(const CommonOptions& opts) {
    RunOverrides o;
    o.seed = opts.seed;
    o.paths = opts.paths;
    o.workers = opts.workers;
    if (const char* env = std::getenv("IMPACT_GAME_WORKERS"); env != nullptr && *env != '\0')
        o.workers = std::atoi(env);
    return o;
}

EmitFormats to_formats(const std::string& spec) {
    EmitFormats f{false, false, false};
    std::size_t begin = 0;
    while (begin <= spec.size()) {
        const std::size_t comma = spec.find(',', begin);
        const std::string part =
            spec.substr(begin, comma == std::string::npos ? comma : comma - begin);
        if (part == "csv")
            f.csv = true;
        else if (part == "json")
            f.json = true;
        else if (part == "svg")
            f.svg = true;
        else if (!part.empty())
            throw ParseError("unknown output format '" + part + "' (expected csv, json, or svg)");
        if (comma == std::string::npos) break;
        begin = comma + 1;
    }
    if (!f.csv && !f.json && !f.svg) throw ParseError("--format selected no outputs");
    return f;
}

Scenario resolve_scenario(const std::string& name_or_path, bool prefer_preset) {
    if (prefer_preset) {
        auto cat = preset_catalog();
        const auto it = cat.find(name_or_path);
        if (it == cat.end())
            throw ParseError("unknown preset '" + name_or_path + "' (see `impact-game list`)");
        return it->second;
    }
    return load_config(name_or_path);
}

void print_solution(const GridPoint& point) {
    const auto sol = solve_equilibrium(point.config);
    std::printf("# grid point: %s\n", point.label.c_str());
    std::printf("## policy coefficients  q_i = a + b*Qi + c*Qj + d*R + e*I\n");
    std::printf("%3s %7s %14s %14s %14s %14s %14s\n", "t", "trader", "a", "b", "c", "d", "e");
    for (int t = 1; t <= sol.horizon(); ++t) {
        for (int i = 0; i < 2; ++i) {
            const PolicyRow& r = sol.policy[static_cast<std::size_t>(t - 1)][i];
            std::printf("%3d %7d %14.6g %14.6g %14.6g %14.6g %14.6g\n", t, i + 1, r.a, r.b, r.c,
                        r.d, r.e);
        }
    }
    std::printf("## value coefficients\n");
    std::printf("%3s %7s %11s %11s %11s %11s %11s %11s %11s %11s %11s %11s %11s %11s %11s %11s %11s\n",
                "t", "trader", "G1", "G2", "H1", "H2", "H3", "J1", "J2", "J3", "J4", "L1", "L2",
                "L3", "L4", "L5", "Z");
    for (int t = 1; t <= sol.horizon(); ++t) {
        for (int i = 0; i < 2; ++i) {
            const ValueCoefficients& v = sol.value[static_cast<std::size_t>(t - 1)][i];
            std::printf("%3d %7d %11.4g %11.4g %11.4g %11.4g %11.4g %11.4g %11.4g %11.4g %11.4g "
                        "%11.4g %11.4g %11.4g %11.4g %11.4g %11.4g\n",
                        t, i + 1, v.g1, v.g2, v.h1, v.h2, v.h3, v.j1, v.j2, v.j3, v.j4, v.l1, v.l2,
                        v.l3, v.l4, v.l5, v.z);
        }
    }
}

int run_and_emit(const Scenario& scenario, const CommonOptions& opts) {
    const auto results = run_scenario(scenario, to_overrides(opts));
    const auto files = emit(results, scenario, to_formats(opts.format), opts.out_dir);
    std::printf("wrote %zu files under %s\n", files.size(),
                (fs::path(opts.out_dir) / scenario.name).string().c_str());
    return kExitOk;
}

int run_verify() {
    bool all_ok = true;
    for (const auto& check : run_all_checks()) {
        std::printf("[%s] %-4s %s (%s)\n", check.pass ? "PASS" : "FAIL", check.id.c_str(),
                    check.description.c_str(), check.detail.c_str());
        std::fflush(stdout);
        all_ok = all_ok && check.pass;
    }
    return all_ok ? kExitOk : kExitNumerical;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Closed-form Markov-perfect equilibrium solver and Monte Carlo laboratory for "
                 "the two-trader execution game"};
    app.require_subcommand(1);

    CommonOptions opts;

    std::string solve_target;
    CLI::App* solve_cmd = app.add_subcommand("solve", "Print coefficient tables for a scenario");
    solve_cmd->add_option("scenario", solve_target, "Scenario file or preset name")->required();

    std::string simulate_target;
    CLI::App* simulate_cmd =
        app.add_subcommand("simulate", "Run one scenario file and emit summaries");
    simulate_cmd->add_option("scenario", simulate_target, "Scenario JSON file")->required();
    add_common(simulate_cmd, opts);

    std::string preset_name;
    CLI::App* scenario_cmd = app.add_subcommand("scenario", "Run a built-in preset");
    scenario_cmd->add_option("preset", preset_name, "Preset name (see `list`)")->required();
    add_common(scenario_cmd, opts);

    CLI::App* verify_cmd =
        app.add_subcommand("verify", "Run the oracle suite and report pass/fail per property");
    CLI::App* list_cmd = app.add_subcommand("list", "List built-in presets");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (list_cmd->parsed()) {
            for (const auto& [name, sc] : preset_catalog()) {
                const auto points = grid_points(sc);
                std::printf("%-8s %zu grid point%s\n", name.c_str(), points.size(),
                            points.size() == 1 ? "" : "s");
            }
            return kExitOk;
        }
        if (solve_cmd->parsed()) {
            const bool is_file = fs::exists(solve_target);
            const Scenario sc = resolve_scenario(solve_target, !is_file);
            for (const auto& point : grid_points(sc)) print_solution(point);
            return kExitOk;
        }
        if (simulate_cmd->parsed()) return run_and_emit(load_config(simulate_target), opts);
        if (scenario_cmd->parsed()) return run_and_emit(resolve_scenario(preset_name, true), opts);
        if (verify_cmd->parsed()) return run_verify();
    } catch (const ValidationError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitValidation;
    } catch (const NumericalError& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return kExitNumerical;
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitValidation;
    }
    return kExitUsage;
}
