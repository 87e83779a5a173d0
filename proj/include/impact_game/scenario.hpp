#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "impact_game/errors.hpp"
#include "impact_game/market.hpp"
#include "impact_game/simulate.hpp"
#include "impact_game/solver.hpp"
#include "impact_game/version.hpp"

namespace impact_game {

using json = nlohmann::json;

/// One sweep axis: a dotted path into the scenario document and the values it
/// takes, e.g. {"environment.sigma_env", [0.01, 1, 10]}.
struct SweepAxis {
    std::string path;
    json values;

    bool operator==(const SweepAxis&) const = default;
};

/// A named partial-document override, for grid axes that change several
/// fields at once (e.g. whole trader pairs, or coupled drift/ar moves).
struct Variant {
    std::string name;
    json patch;

    bool operator==(const Variant&) const = default;
};

/**
 * A scenario: a fully-populated configuration document (defaults resolved)
 * plus an optional grid given by variants x sweep axes. Every grid point must
 * pass validate().
 */
struct Scenario {
    std::string name;
    json document;  // normalized: all defaults filled in, no sweep applied
    std::vector<SweepAxis> sweep;
    std::vector<Variant> variants;

    bool operator==(const Scenario&) const = default;
};

struct GridPoint {
    std::string label;
    GameConfig config;
    SimulationConfig sim;
    json document;  // the fully-resolved config document of this point
};

struct ScenarioResult {
    GridPoint point;
    EquilibriumSolution solution;
    SimulationSummary summary;
};

/// Table-1-style defaults; every configuration key a scenario file may omit.
inline json default_document() {
    return json{
        {"market",
         {{"horizon", 10},
          {"lambda", 0.001},
          {"alpha", 0.5},
          {"beta", 0.5},
          {"resilience", 0.1}}},
        {"environment",
         {{"drift", 0.0},
          {"ar", 0.0},
          {"sigma_env", 0.01},
          {"sigma_eps", 0.02},
          {"corr_env_eps", 0.0},
          {"mu_eps", 0.0}}},
        {"traders",
         json::array({{{"inventory", 100000.0}, {"risk_aversion", 0.001}, {"wealth", 0.0}},
                      {{"inventory", 100000.0}, {"risk_aversion", 0.001}, {"wealth", 0.0}}})},
        {"simulation",
         {{"paths", 10000}, {"seed", 20240001}, {"initial_price", 100.0}, {"workers", 0}}}};
}

namespace scenario_detail {

inline void require_keys(const json& obj, std::initializer_list<const char*> allowed,
                         const std::string& where) {
    for (const auto& item : obj.items()) {
        bool ok = false;
        for (const char* k : allowed)
            if (item.key() == k) ok = true;
        if (!ok) throw ParseError("unknown key '" + item.key() + "' in " + where);
    }
}

inline double number_at(const json& obj, const char* key, const std::string& where) {
    const auto it = obj.find(key);
    if (it == obj.end() || !it->is_number())
        throw ParseError("field '" + std::string(key) + "' in " + where + " must be a number");
    return it->get<double>();
}

inline std::vector<double> per_period(const json& obj, const char* key, int horizon,
                                      const std::string& where) {
    const auto it = obj.find(key);
    if (it == obj.end()) throw ParseError("missing field '" + std::string(key) + "' in " + where);
    if (it->is_number()) return broadcast(it->get<double>(), horizon);
    if (it->is_array()) {
        if (static_cast<int>(it->size()) != horizon)
            throw ParseError("array '" + std::string(key) + "' in " + where + " must have length " +
                             std::to_string(horizon));
        std::vector<double> out;
        out.reserve(it->size());
        for (const auto& v : *it) {
            if (!v.is_number())
                throw ParseError("array '" + std::string(key) + "' in " + where +
                                 " must contain numbers only");
            out.push_back(v.get<double>());
        }
        return out;
    }
    throw ParseError("field '" + std::string(key) + "' in " + where +
                     " must be a number or an array");
}

inline json* navigate(json& doc, const std::string& dotted) {
    json* node = &doc;
    std::size_t begin = 0;
    while (true) {
        const std::size_t dot = dotted.find('.', begin);
        const std::string key = dotted.substr(begin, dot == std::string::npos ? dot : dot - begin);
        if (!node->is_object() || !node->contains(key)) return nullptr;
        node = &(*node)[key];
        if (dot == std::string::npos) return node;
        begin = dot + 1;
    }
}

inline std::string sanitize_label(std::string s) {
    for (char& c : s) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                        c == '_' || c == '-' || c == '.' || c == '=' || c == '+';
        if (!ok) c = '_';
    }
    return s.empty() ? std::string("base") : s;
}

inline std::string scalar_to_string(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    return v.dump();
}

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// Over-writes `base` with `user` recursively; objects merge, anything else
// (including arrays) replaces. Unknown keys surface later in parsing.
inline void merge_into(json& base, const json& user) {
    if (!user.is_object() || !base.is_object()) {
        base = user;
        return;
    }
    for (const auto& item : user.items()) {
        if (base.contains(item.key()) && base[item.key()].is_object() && item.value().is_object())
            merge_into(base[item.key()], item.value());
        else
            base[item.key()] = item.value();
    }
}

} // namespace scenario_detail

/// Parses a fully-resolved configuration document into the typed config pair
/// (broadcasting scalars) and validates it.
inline std::pair<GameConfig, SimulationConfig> parse_config_document(const json& doc) {
    using namespace scenario_detail;
    require_keys(doc, {"name", "market", "environment", "traders", "simulation", "sweep", "variants"},
                 "the scenario document");
    if (!doc.contains("market") || !doc["market"].is_object())
        throw ParseError("missing 'market' object");
    const json& m = doc["market"];
    require_keys(m, {"horizon", "lambda", "alpha", "beta", "resilience"}, "'market'");
    if (!m.contains("horizon") || !m["horizon"].is_number_integer())
        throw ParseError("'market.horizon' must be an integer");

    GameConfig cfg;
    cfg.market.horizon = m["horizon"].get<int>();
    const int horizon = cfg.market.horizon;
    if (horizon < 1) throw ParseError("'market.horizon' must be >= 1");
    cfg.market.lambda = per_period(m, "lambda", horizon, "'market'");
    cfg.market.alpha = per_period(m, "alpha", horizon, "'market'");
    cfg.market.beta = per_period(m, "beta", horizon, "'market'");
    cfg.market.resilience = number_at(m, "resilience", "'market'");

    if (!doc.contains("environment") || !doc["environment"].is_object())
        throw ParseError("missing 'environment' object");
    const json& e = doc["environment"];
    require_keys(e, {"drift", "ar", "sigma_env", "sigma_eps", "corr_env_eps", "mu_eps"},
                 "'environment'");
    cfg.env.drift = per_period(e, "drift", horizon, "'environment'");
    cfg.env.ar = per_period(e, "ar", horizon, "'environment'");
    cfg.env.sigma_env = per_period(e, "sigma_env", horizon, "'environment'");
    cfg.env.sigma_eps = per_period(e, "sigma_eps", horizon, "'environment'");
    cfg.env.corr_env_eps = number_at(e, "corr_env_eps", "'environment'");
    cfg.env.mu_eps = e.contains("mu_eps") ? per_period(e, "mu_eps", horizon, "'environment'")
                                          : broadcast(0.0, horizon);

    if (!doc.contains("traders") || !doc["traders"].is_array() || doc["traders"].size() != 2)
        throw ParseError("'traders' must be an array of exactly two entries");
    for (int i = 0; i < 2; ++i) {
        const json& tr = doc["traders"][static_cast<std::size_t>(i)];
        const std::string where = "'traders[" + std::to_string(i) + "]'";
        if (!tr.is_object()) throw ParseError(where + " must be an object");
        require_keys(tr, {"inventory", "risk_aversion", "wealth"}, where);
        cfg.traders[i].inventory = number_at(tr, "inventory", where);
        cfg.traders[i].risk_aversion = number_at(tr, "risk_aversion", where);
        cfg.traders[i].wealth = tr.contains("wealth") ? number_at(tr, "wealth", where) : 0.0;
    }

    SimulationConfig sim;
    if (doc.contains("simulation")) {
        const json& s = doc["simulation"];
        require_keys(s, {"paths", "seed", "initial_price", "workers"}, "'simulation'");
        if (s.contains("paths")) {
            if (!s["paths"].is_number_integer() || s["paths"].get<long long>() < 1)
                throw ParseError("'simulation.paths' must be a positive integer");
            sim.num_paths = s["paths"].get<std::size_t>();
        }
        if (s.contains("seed")) sim.seed = s["seed"].get<std::uint64_t>();
        if (s.contains("initial_price")) sim.initial_price = number_at(s, "initial_price", "'simulation'");
        if (s.contains("workers")) sim.max_workers = s["workers"].get<int>();
    }

    validate(cfg);
    return {cfg, sim};
}

/// Expands a scenario into its grid (variants x sweep values, row-major with
/// variants outermost); every point is parsed and validated.
inline std::vector<GridPoint> grid_points(const Scenario& scenario) {
    using namespace scenario_detail;
    std::vector<std::pair<std::string, json>> docs;
    if (scenario.variants.empty()) {
        docs.emplace_back("", scenario.document);
    } else {
        for (const auto& variant : scenario.variants) {
            json doc = scenario.document;
            merge_into(doc, variant.patch);
            docs.emplace_back(variant.name, doc);
        }
    }
    for (const auto& axis : scenario.sweep) {
        if (!axis.values.is_array() || axis.values.empty())
            throw ParseError("sweep axis '" + axis.path + "' needs a nonempty value array");
        std::vector<std::pair<std::string, json>> expanded;
        const std::string short_name = axis.path.substr(axis.path.rfind('.') + 1);
        for (const auto& [label, doc] : docs) {
            for (const auto& v : axis.values) {
                json next = doc;
                json* slot = navigate(next, axis.path);
                if (slot == nullptr)
                    throw ParseError("sweep path '" + axis.path + "' not found in the document");
                *slot = v;
                const std::string part = short_name + "=" + scalar_to_string(v);
                expanded.emplace_back(label.empty() ? part : label + "__" + part, next);
            }
        }
        docs = std::move(expanded);
    }

    std::vector<GridPoint> out;
    out.reserve(docs.size());
    for (auto& [label, doc] : docs) {
        GridPoint p;
        p.label = sanitize_label(label);
        for (const auto& other : out)
            if (other.label == p.label)
                throw ParseError("grid points collide on label '" + p.label +
                                 "' (duplicate sweep values or variant names?)");
        p.document = doc;
        std::tie(p.config, p.sim) = parse_config_document(doc);
        out.push_back(std::move(p));
    }
    return out;
}

/// Builds a Scenario from a raw JSON document: defaults are filled in, grid
/// declarations are pulled out, and every grid point is validated.
inline Scenario scenario_from_json(const json& user, const std::string& fallback_name) {
    using namespace scenario_detail;
    if (!user.is_object()) throw ParseError("scenario document must be a JSON object");
    Scenario sc;
    sc.name = user.contains("name") ? user["name"].get<std::string>() : fallback_name;

    json doc = default_document();
    json body = user;
    body.erase("name");
    if (body.contains("sweep")) {
        if (!body["sweep"].is_array()) throw ParseError("'sweep' must be an array");
        for (const auto& axis : body["sweep"]) {
            require_keys(axis, {"path", "values"}, "'sweep' entries");
            if (!axis.contains("path") || !axis.contains("values"))
                throw ParseError("'sweep' entries need 'path' and 'values'");
            sc.sweep.push_back({axis["path"].get<std::string>(), axis["values"]});
        }
        body.erase("sweep");
    }
    if (body.contains("variants")) {
        if (!body["variants"].is_array()) throw ParseError("'variants' must be an array");
        for (const auto& v : body["variants"]) {
            require_keys(v, {"name", "patch"}, "'variants' entries");
            if (!v.contains("name") || !v.contains("patch"))
                throw ParseError("'variants' entries need 'name' and 'patch'");
            sc.variants.push_back({v["name"].get<std::string>(), v["patch"]});
        }
        body.erase("variants");
    }
    merge_into(doc, body);
    sc.document = doc;
    grid_points(sc);  // validates every point, including Assumption 3.2
    return sc;
}

/// The scenario as a self-contained JSON document (inverse of
/// scenario_from_json up to default-filling).
inline json scenario_to_json(const Scenario& scenario) {
    json doc = scenario.document;
    doc["name"] = scenario.name;
    if (!scenario.sweep.empty()) {
        json axes = json::array();
        for (const auto& axis : scenario.sweep)
            axes.push_back({{"path", axis.path}, {"values", axis.values}});
        doc["sweep"] = axes;
    }
    if (!scenario.variants.empty()) {
        json vs = json::array();
        for (const auto& v : scenario.variants)
            vs.push_back({{"name", v.name}, {"patch", v.patch}});
        doc["variants"] = vs;
    }
    return doc;
}

inline Scenario load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open scenario file: " + path.string());
    json user;
    try {
        user = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError("invalid JSON in " + path.string() + ": " + e.what());
    }
    return scenario_from_json(user, path.stem().string());
}

/**
 * The built-in catalog reproducing the comparative-statics experiments:
 * symmetric and asymmetric inventories, single-trader proxies, random-walk
 * and mean-reverting environments. All presets inherit the Table-1 defaults
 * for whatever they do not override and use seed 20240001 with 10^4 paths.
 */
inline std::map<std::string, Scenario> preset_catalog() {
    auto make = [](const std::string& name, const json& body) {
        json user = body;
        user["name"] = name;
        return scenario_from_json(user, name);
    };
    auto traders = [](double q1, double g1, double q2, double g2) {
        return json::array({{{"inventory", q1}, {"risk_aversion", g1}, {"wealth", 0.0}},
                            {{"inventory", q2}, {"risk_aversion", g2}, {"wealth", 0.0}}});
    };
    const json sweep_sigma =
        json::array({{{"path", "environment.sigma_env"}, {"values", {0.01, 1.0, 10.0}}}});
    const json sweep_ar =
        json::array({{{"path", "environment.ar"}, {"values", {-0.5, 0.0, 1.0, 1.2}}}});
    const json sweep_drift =
        json::array({{{"path", "environment.drift"}, {"values", {-0.5, 0.0, 0.5, 1.0}}}});

    std::map<std::string, Scenario> cat;
    cat.emplace("fig2", make("fig2", {{"sweep", sweep_sigma}}));
    cat.emplace("fig3",
                make("fig3", {{"sweep", sweep_sigma},
                              {"variants",
                               json::array(
                                   {{{"name", "single"},
                                     {"patch", {{"traders", traders(200000.0, 0.001, 0.0, 1000.0)}}}},
                                    {{"name", "dual"},
                                     {"patch", {{"traders", traders(100000.0, 0.001, 100000.0, 0.001)}}}}})}}));
    cat.emplace("fig4", make("fig4", {{"traders", traders(100000.0, 0.001, 0.0, 0.001)},
                                      {"sweep", sweep_sigma}}));
    cat.emplace("fig5", make("fig5", {{"traders", traders(100000.0, 0.001, -100000.0, 0.001)},
                                      {"sweep", sweep_sigma}}));
    for (const auto& [name, drift] :
         std::initializer_list<std::pair<const char*, double>>{{"fig6", -0.5}, {"fig7", 0.0},
                                                               {"fig8", 0.5}}) {
        cat.emplace(name, make(name, {{"traders", traders(100000.0, 0.001, -100000.0, 0.001)},
                                      {"environment", {{"ar", -1.0}, {"drift", drift}}},
                                      {"sweep", sweep_sigma}}));
    }
    for (const auto& [name, drift] :
         std::initializer_list<std::pair<const char*, double>>{{"fig10", -0.5}, {"fig11", 0.0},
                                                               {"fig12", 1.0}}) {
        cat.emplace(name, make(name, {{"traders", traders(100000.0, 0.001, -100000.0, 0.001)},
                                      {"environment", {{"drift", drift}}},
                                      {"sweep", sweep_ar}}));
    }
    for (const auto& [name, ar] :
         std::initializer_list<std::pair<const char*, double>>{{"fig13", -0.5}, {"fig14", 0.0},
                                                               {"fig15", 0.5}}) {
        cat.emplace(name, make(name, {{"traders", traders(100000.0, 0.001, -100000.0, 0.001)},
                                      {"environment", {{"ar", ar}}},
                                      {"sweep", sweep_drift}}));
    }
    // Mean-reversion speed 1+ar swept with the reversion level drift/(1+ar)
    // held at one, i.e. drift = 1+ar moves together with ar.
    json speed_variants = json::array();
    for (double speed : {0.5, 1.0, 1.5, 2.0}) {
        speed_variants.push_back(
            {{"name", "speed=" + scenario_detail::scalar_to_string(json(speed))},
             {"patch", {{"environment", {{"drift", speed}, {"ar", speed - 1.0}}}}}});
    }
    cat.emplace("fig16", make("fig16", {{"traders", traders(100000.0, 0.001, -100000.0, 0.001)},
                                        {"environment", {{"sigma_env", 0.01}}},
                                        {"variants", speed_variants}}));
    return cat;
}

struct RunOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> paths;
    std::optional<int> workers;
};

/// Solves and simulates every grid point. Deterministic given the seed; grid
/// points may run concurrently (each point's work is self-contained).
inline std::vector<ScenarioResult> run_scenario(const Scenario& scenario,
                                                const RunOverrides& overrides = {}) {
    auto points = grid_points(scenario);
    std::vector<ScenarioResult> results(points.size());

    auto run_one = [&](std::size_t idx) {
        GridPoint& p = points[idx];
        if (overrides.seed) p.sim.seed = *overrides.seed;
        if (overrides.paths) p.sim.num_paths = *overrides.paths;
        if (overrides.workers) p.sim.max_workers = *overrides.workers;
        try {
            ScenarioResult r;
            r.solution = solve_equilibrium(p.config);
            r.summary = simulate_paths(r.solution, p.sim);
            r.point = std::move(p);
            results[idx] = std::move(r);
        } catch (const ValidationError& e) {
            throw ValidationError("grid point '" + p.label + "': " + e.what());
        } catch (const NumericalError& e) {
            throw NumericalError("grid point '" + p.label + "': " + e.what());
        }
    };

    const int workers = overrides.workers.value_or(0);
    if (workers > 1 && points.size() > 1) {
        std::vector<std::thread> pool;
        std::exception_ptr first_error;
        std::mutex error_mutex;
        std::atomic<std::size_t> next{0};
        const std::size_t w = std::min<std::size_t>(static_cast<std::size_t>(workers), points.size());
        for (std::size_t k = 0; k < w; ++k) {
            pool.emplace_back([&] {
                for (std::size_t idx = next.fetch_add(1); idx < points.size();
                     idx = next.fetch_add(1)) {
                    try {
                        run_one(idx);
                    } catch (...) {
                        std::lock_guard<std::mutex> lock(error_mutex);
                        if (!first_error) first_error = std::current_exception();
                    }
                }
            });
        }
        for (auto& th : pool) th.join();
        if (first_error) std::rethrow_exception(first_error);
    } else {
        for (std::size_t idx = 0; idx < points.size(); ++idx) run_one(idx);
    }
    return results;
}

/// Output formats emit() can produce. CSV and JSON are the data contract;
/// SVG adds line charts of the mean volumes with box-and-whisker glyphs.
struct EmitFormats {
    bool csv = true;
    bool json = true;
    bool svg = false;
};

namespace scenario_detail {

inline std::string summary_csv(const ScenarioResult& r) {
    const int horizon = r.solution.horizon();
    std::string out = "t,trader,mean,median,q1,q3,whisker_lo,whisker_hi,total_volume\n";
    for (int t = 1; t <= horizon; ++t) {
        const std::size_t k = static_cast<std::size_t>(t - 1);
        for (int i = 0; i < 2; ++i) {
            const SampleStats& st = r.summary.volume[i][k];
            out += std::to_string(t) + "," + std::to_string(i + 1);
            for (double v : {st.mean, st.median, st.q1, st.q3, st.whisker_lo, st.whisker_hi,
                             r.summary.total_volume[k]})
                out += "," + format_double(v);
            out += "\n";
        }
    }
    return out;
}

inline json summary_json(const ScenarioResult& r, const std::string& scenario_name) {
    json traders = json::array();
    for (int i = 0; i < 2; ++i) {
        json per_stat;
        auto collect = [&](const char* key, auto getter) {
            json arr = json::array();
            for (const auto& st : r.summary.volume[i]) arr.push_back(getter(st));
            per_stat[key] = arr;
        };
        collect("mean", [](const SampleStats& s) { return s.mean; });
        collect("median", [](const SampleStats& s) { return s.median; });
        collect("q1", [](const SampleStats& s) { return s.q1; });
        collect("q3", [](const SampleStats& s) { return s.q3; });
        collect("whisker_lo", [](const SampleStats& s) { return s.whisker_lo; });
        collect("whisker_hi", [](const SampleStats& s) { return s.whisker_hi; });
        per_stat["terminal_wealth_mean"] = r.summary.terminal_wealth_mean[i];
        per_stat["terminal_wealth_std"] = r.summary.terminal_wealth_std[i];
        traders.push_back(per_stat);
    }
    return json{{"artifact_version", kVersion},
                {"scenario", scenario_name},
                {"grid_point", r.point.label},
                {"parameters", r.point.document},
                {"num_paths", r.summary.num_paths},
                {"summary", {{"traders", traders}, {"total_volume", r.summary.total_volume}}}};
}

// A minimal self-contained chart: per-trader mean volume lines over t plus
// box-and-whisker glyphs, no external tooling required.
inline std::string summary_svg(const ScenarioResult& r) {
    const int horizon = r.solution.horizon();
    const double width = 720.0, height = 420.0;
    const double ml = 70.0, mr = 20.0, mt = 20.0, mb = 40.0;
    double lo = 0.0, hi = 0.0;
    for (int i = 0; i < 2; ++i) {
        for (const auto& st : r.summary.volume[i]) {
            lo = std::min(lo, st.whisker_lo);
            hi = std::max(hi, st.whisker_hi);
        }
    }
    if (hi == lo) hi = lo + 1.0;
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;
    auto xpos = [&](double t, double offset) {
        return ml + (t - 1.0 + 0.5) / horizon * (width - ml - mr) + offset;
    };
    auto ypos = [&](double v) { return mt + (hi - v) / (hi - lo) * (height - mt - mb); };

    std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + format_double(width) +
                      "\" height=\"" + format_double(height) + "\">\n";
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    // axes
    svg += "<line x1=\"" + format_double(ml) + "\" y1=\"" + format_double(height - mb) + "\" x2=\"" +
           format_double(width - mr) + "\" y2=\"" + format_double(height - mb) +
           "\" stroke=\"black\"/>\n";
    svg += "<line x1=\"" + format_double(ml) + "\" y1=\"" + format_double(mt) + "\" x2=\"" +
           format_double(ml) + "\" y2=\"" + format_double(height - mb) + "\" stroke=\"black\"/>\n";
    if (lo < 0.0 && hi > 0.0)
        svg += "<line x1=\"" + format_double(ml) + "\" y1=\"" + format_double(ypos(0.0)) +
               "\" x2=\"" + format_double(width - mr) + "\" y2=\"" + format_double(ypos(0.0)) +
               "\" stroke=\"#cccccc\" stroke-dasharray=\"4 3\"/>\n";
    for (double v : {lo + pad, hi - pad}) {
        svg += "<text x=\"4\" y=\"" + format_double(ypos(v) + 4.0) +
               "\" font-size=\"11\" font-family=\"monospace\">" + format_double(v) + "</text>\n";
    }
    const std::array<const char*, 2> colors{"#1f77b4", "#d62728"};
    for (int i = 0; i < 2; ++i) {
        const double off = i == 0 ? -9.0 : 9.0;
        std::string pts;
        for (int t = 1; t <= horizon; ++t) {
            const auto& st = r.summary.volume[i][static_cast<std::size_t>(t - 1)];
            pts += format_double(xpos(t, off)) + "," + format_double(ypos(st.mean)) + " ";
            // whiskers and box
            const double x = xpos(t, off);
            svg += "<line x1=\"" + format_double(x) + "\" y1=\"" + format_double(ypos(st.whisker_lo)) +
                   "\" x2=\"" + format_double(x) + "\" y2=\"" + format_double(ypos(st.whisker_hi)) +
                   "\" stroke=\"" + colors[i] + "\" stroke-width=\"1\"/>\n";
            svg += "<rect x=\"" + format_double(x - 5.0) + "\" y=\"" + format_double(ypos(st.q3)) +
                   "\" width=\"10\" height=\"" +
                   format_double(std::max(1.0, ypos(st.q1) - ypos(st.q3))) + "\" fill=\"" +
                   colors[i] + "\" fill-opacity=\"0.25\" stroke=\"" + colors[i] + "\"/>\n";
            svg += "<line x1=\"" + format_double(x - 5.0) + "\" y1=\"" + format_double(ypos(st.median)) +
                   "\" x2=\"" + format_double(x + 5.0) + "\" y2=\"" + format_double(ypos(st.median)) +
                   "\" stroke=\"" + colors[i] + "\" stroke-width=\"2\"/>\n";
        }
        svg += "<polyline points=\"" + pts + "\" fill=\"none\" stroke=\"" + colors[i] +
               "\" stroke-width=\"1.5\"/>\n";
    }
    for (int t = 1; t <= horizon; ++t)
        svg += "<text x=\"" + format_double(xpos(t, 0.0) - 4.0) + "\" y=\"" +
               format_double(height - mb + 16.0) + "\" font-size=\"11\" font-family=\"monospace\">" +
               std::to_string(t) + "</text>\n";
    svg += "<text x=\"" + format_double(width / 2.0 - 10.0) + "\" y=\"" + format_double(height - 8.0) +
           "\" font-size=\"12\" font-family=\"monospace\">t</text>\n";
    svg += "</svg>\n";
    return svg;
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << content;
    if (!out) throw IoError("failed writing " + path.string());
}

} // namespace scenario_detail

/**
 * Writes one directory per grid point under out_dir/<scenario name>/:
 * summary.csv (column contract: t,trader,mean,median,q1,q3,whisker_lo,
 * whisker_hi,total_volume; one row per (t, trader); total volume repeated on
 * both rows of a t), summary.json (full metadata mirror), and optionally
 * volumes.svg. The scenario document itself lands in scenario.json so a run
 * can be reloaded. Returns the list of files written.
 */
inline std::vector<std::filesystem::path> emit(const std::vector<ScenarioResult>& results,
                                               const Scenario& scenario, const EmitFormats& formats,
                                               const std::filesystem::path& out_dir) {
    namespace fs = std::filesystem;
    using namespace scenario_detail;
    if (results.empty()) throw InvalidParameter("emit called with no results");
    std::vector<fs::path> written;
    const fs::path root = out_dir / scenario.name;
    fs::create_directories(root);
    write_file(root / "scenario.json", scenario_to_json(scenario).dump(2) + "\n");
    written.push_back(root / "scenario.json");
    for (const auto& r : results) {
        const fs::path dir = root / r.point.label;
        fs::create_directories(dir);
        if (formats.csv) {
            write_file(dir / "summary.csv", summary_csv(r));
            written.push_back(dir / "summary.csv");
        }
        if (formats.json) {
            write_file(dir / "summary.json", summary_json(r, scenario.name).dump(2) + "\n");
            written.push_back(dir / "summary.json");
        }
        if (formats.svg) {
            write_file(dir / "volumes.svg", summary_svg(r));
            written.push_back(dir / "volumes.svg");
        }
    }
    return written;
}

} // namespace impact_game
