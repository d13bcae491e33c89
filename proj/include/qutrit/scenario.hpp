#pragma once

// Scenario configuration, bundled figure presets, engine selection and
// serialization.  A scenario is one initial state evolved under one (a, b)
// pair; requested artifacts are written as CSV or JSON with shortest
// round-trip number formatting, so re-reading a file reproduces the binary
// state exactly.  Every engine run is cross-checked against the global
// propagator on eight grid points and the worst discrepancy lands in the
// run metadata.

#include <charconv>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>

#include <json.hpp>

#include "analysis.hpp"
#include "evolution.hpp"
#include "identities.hpp"
#include "stationary.hpp"

namespace qutrit {

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};
struct CrossCheckError : std::runtime_error {
    explicit CrossCheckError(const std::string& what) : std::runtime_error(what) {}
};

// process exit codes of the command-line front end
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitNumericalError = 3;
inline constexpr int kExitCrossCheckError = 4;

enum class Engine { Auto, ClosedForm, Exact, Ode };

inline const char* to_string(Engine e) {
    switch (e) {
        case Engine::Auto: return "auto";
        case Engine::ClosedForm: return "closed_form";
        case Engine::Exact: return "exact";
        case Engine::Ode: return "ode";
    }
    return "?";
}

inline Engine engine_from_string(const std::string& s) {
    if (s == "auto") return Engine::Auto;
    if (s == "closed" || s == "closed_form") return Engine::ClosedForm;
    if (s == "exact") return Engine::Exact;
    if (s == "ode") return Engine::Ode;
    throw ConfigError("unknown engine '" + s + "'");
}

struct ScenarioConfig {
    std::string name = "scenario";
    Vec8 a = Vec8::Zero();
    Vec8 b = Vec8::Zero();
    Vec8 xi0 = Vec8::Zero();
    double t_end = 0.0;
    std::size_t samples = 2001;
    Engine engine = Engine::Auto;
    std::optional<SectionSpec> section;
    std::set<std::string> outputs = {"trajectory"};
    std::uint64_t seed = 0;

    void validate() const {
        if (!(t_end > 0.0)) throw ConfigError("t_end must be positive");
        if (samples < 2) throw ConfigError("samples must be at least 2");
        if (!a.allFinite() || !b.allFinite() || !xi0.allFinite())
            throw ConfigError("non-finite entries in a, b or xi0");
        if (classify(xi0).tag == StateTag::Invalid)
            throw ConfigError("xi0 is not a valid state");
        static const std::set<std::string> known = {"trajectory", "entropy", "poincare",
                                                    "classification", "equilibria"};
        for (const auto& o : outputs)
            if (!known.count(o)) throw ConfigError("unknown output '" + o + "'");
        if (outputs.count("poincare") && !section)
            throw ConfigError("poincare output requires a section");
        if (section && !(section->normal.norm() > 0.0))
            throw ConfigError("section normal must be nonzero");
    }
};

namespace detail {

inline Vec8 vec8_from_json(const nlohmann::json& j, const std::string& key) {
    if (!j.is_array() || j.size() != 8)
        throw ConfigError("'" + key + "' must be an array of 8 numbers");
    Vec8 v;
    for (int i = 0; i < 8; ++i) {
        if (!j[i].is_number()) throw ConfigError("'" + key + "' must contain numbers");
        v[i] = j[i].get<double>();
    }
    return v;
}

}  // namespace detail

inline ScenarioConfig scenario_from_json(const nlohmann::json& j,
                                         const std::string& name = "scenario") {
    if (!j.is_object()) throw ConfigError("configuration must be a JSON object");
    ScenarioConfig cfg;
    cfg.name = j.value("name", name);
    if (j.contains("a")) cfg.a = detail::vec8_from_json(j.at("a"), "a");
    if (j.contains("b")) cfg.b = detail::vec8_from_json(j.at("b"), "b");
    if (j.contains("xi0") && j.contains("xi0_angles"))
        throw ConfigError("give either 'xi0' or 'xi0_angles', not both");
    if (j.contains("xi0")) {
        cfg.xi0 = detail::vec8_from_json(j.at("xi0"), "xi0");
    } else if (j.contains("xi0_angles")) {
        const auto& ang = j.at("xi0_angles");
        if (!ang.is_array() || ang.size() != 4)
            throw ConfigError("'xi0_angles' must be an array of 4 angles");
        cfg.xi0 = pure_from_angles(ang[0].get<double>(), ang[1].get<double>(),
                                   ang[2].get<double>(), ang[3].get<double>());
    }
    if (!j.contains("t_end") || !j.at("t_end").is_number())
        throw ConfigError("'t_end' is required and must be a number");
    cfg.t_end = j.at("t_end").get<double>();
    if (j.contains("samples")) cfg.samples = j.at("samples").get<std::size_t>();
    if (j.contains("engine")) cfg.engine = engine_from_string(j.at("engine").get<std::string>());
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("outputs")) {
        cfg.outputs.clear();
        for (const auto& o : j.at("outputs")) cfg.outputs.insert(o.get<std::string>());
    }
    if (j.contains("section")) {
        const auto& s = j.at("section");
        SectionSpec spec;
        spec.normal = detail::vec8_from_json(s.at("normal"), "section.normal");
        if (s.contains("point")) spec.point = detail::vec8_from_json(s.at("point"), "section.point");
        const std::string dir = s.value("direction", "both");
        if (dir == "+" || dir == "positive")
            spec.direction = CrossingDirection::Positive;
        else if (dir == "-" || dir == "negative")
            spec.direction = CrossingDirection::Negative;
        else if (dir == "both")
            spec.direction = CrossingDirection::Both;
        else
            throw ConfigError("section direction must be '+', '-' or 'both'");
        cfg.section = spec;
    }
    cfg.validate();
    return cfg;
}

inline ScenarioConfig load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("cannot parse '" + path + "': " + e.what());
    }
    return scenario_from_json(j, std::filesystem::path(path).stem().string());
}

// --------------------------------------------------------------------------
// Figure presets
// --------------------------------------------------------------------------

inline std::vector<std::string> preset_names() {
    return {"fig1", "fig2", "fig3-left", "fig3-right", "fig4", "fig5", "fig6", "fig7"};
}

inline ScenarioConfig preset(const std::string& name) {
    auto vec = [](std::initializer_list<double> v) {
        Vec8 out;
        int i = 0;
        for (double x : v) out[i++] = x;
        return out;
    };
    ScenarioConfig cfg;
    cfg.name = name;
    const double s3h = kSqrt3 / 2.0;
    if (name == "fig1") {
        cfg.a = vec({0, 1, 0, -1, 0.3, 0, 1, 0});
        cfg.xi0 = vec({0, 0, 0.5, 0, 0, 0, 0, 0.5});
        cfg.t_end = 200.0;
        cfg.samples = 8001;
        SectionSpec spec;
        spec.normal = unit_vector(1);
        spec.point = Vec8::Zero();
        spec.direction = CrossingDirection::Both;
        cfg.section = spec;
        cfg.outputs = {"trajectory", "poincare", "classification"};
    } else if (name == "fig2") {
        cfg.a = vec({1, 0, 1, 1, -1, 1, 1, 0});
        cfg.xi0 = vec({0, 0, s3h, 0, 0, 0, 0, 0.5});
        cfg.t_end = 60.0;
        cfg.samples = 4001;
        cfg.outputs = {"trajectory", "classification"};
    } else if (name == "fig3-left") {
        cfg.a = vec({0, 0, 0.5, 0, 0, 0, 0, 0.5});
        cfg.xi0 = Vec8::Constant(0.1);
        cfg.t_end = 100.0;
        cfg.samples = 6001;
        cfg.outputs = {"trajectory", "classification"};
    } else if (name == "fig3-right") {
        cfg.a = vec({0, 0, kSqrt3, 0, 0, 0, 0, 0.5});
        cfg.xi0 = Vec8::Constant(0.1);
        cfg.t_end = 80.0;
        cfg.samples = 6001;
        cfg.outputs = {"trajectory", "classification"};
    } else if (name == "fig4") {
        cfg.a = vec({0, 0, 0.5, 0, 0, 0, 0, 0.5});
        cfg.xi0 = Vec8::Constant(0.1);
        cfg.t_end = 10.0;
        cfg.samples = 101;
        cfg.outputs = {"equilibria"};
    } else if (name == "fig5") {
        cfg.a = vec({1, 1, 0, 2, -2, 1, 0, 0});
        cfg.b = vec({0, 0, s3h, 0, 0, 0, 0, 0.5});
        cfg.xi0 = vec({0, 0, -s3h, 0, 0, 0, 0, 0.5});
        cfg.t_end = 120.0;
        cfg.samples = 8001;
        cfg.outputs = {"trajectory", "classification", "entropy"};
    } else if (name == "fig6") {
        cfg.a = vec({1, 0, -1, 0, 2, -1, 1, -1});
        cfg.b = Vec8::Constant(0.1);
        cfg.xi0 = vec({0, 0, s3h, 0, 0, 0, 0, 0.5});
        cfg.t_end = 400.0;
        cfg.samples = 8001;
        cfg.outputs = {"trajectory", "classification", "entropy"};
    } else if (name == "fig7") {
        cfg.a = vec({1, 1, 0, 2, -2, 1, 0, 0});
        cfg.b = vec({0, 0, s3h, 0, 0, 0, 0, 0.5});
        cfg.xi0 = Vec8::Zero();
        cfg.t_end = 150.0;
        cfg.samples = 6001;
        cfg.outputs = {"trajectory", "entropy", "classification"};
    } else {
        throw ConfigError("unknown preset '" + name + "'");
    }
    cfg.validate();
    return cfg;
}

// --------------------------------------------------------------------------
// Scenario execution
// --------------------------------------------------------------------------

struct ScenarioResult {
    ScenarioConfig config;
    CaseTag case_tag = CaseTag::General;
    Engine engine_used = Engine::Ode;
    Trajectory trajectory;
    std::optional<std::vector<double>> entropy_values;
    std::optional<std::vector<Vec8>> poincare_points;
    std::optional<TrajectoryClass> classification;
    std::optional<EquilibriumCatalog> equilibria;
    std::vector<Equilibrium> numeric_equilibria;
    double crosscheck_max = 0.0;
    bool delegated_branch = false;
};

inline ScenarioResult run_scenario(const ScenarioConfig& cfg) {
    cfg.validate();
    ScenarioResult res;
    res.config = cfg;
    const EvolutionParams p = EvolutionParams::make(cfg.a, cfg.b);
    res.case_tag = p.case_tag;

    Engine engine = cfg.engine;
    if (engine == Engine::Auto)
        engine = p.case_tag != CaseTag::General ? Engine::ClosedForm : Engine::Ode;
    if (engine == Engine::ClosedForm && p.case_tag == CaseTag::General)
        throw ConfigError("closed_form engine requested for a general-case (a, b)");
    res.engine_used = engine;

    const std::vector<double> grid = uniform_grid(cfg.t_end, cfg.samples);
    switch (engine) {
        case Engine::ClosedForm: {
            res.trajectory.times = grid;
            res.trajectory.states.reserve(grid.size());
            for (double t : grid) res.trajectory.states.push_back(closed_form(cfg.xi0, p, t));
            res.delegated_branch = closed_form_delegated(p.case_tag);
            break;
        }
        case Engine::Exact: {
            res.trajectory.times = grid;
            res.trajectory.states.reserve(grid.size());
            Vec8 xi = cfg.xi0;
            res.trajectory.states.push_back(xi);
            for (std::size_t i = 1; i < grid.size(); ++i) {
                xi = propagate_exact(xi, p, grid[i] - grid[i - 1]);
                res.trajectory.states.push_back(xi);
            }
            break;
        }
        case Engine::Ode:
        case Engine::Auto:
            res.trajectory = integrate(cfg.xi0, p, grid);
            break;
    }
    for (const Vec8& s : res.trajectory.states) {
        const StateClass sc = classify(s);
        res.trajectory.meta.max_ball_residual =
            std::max(res.trajectory.meta.max_ball_residual, sc.r_ball - 1.0);
        res.trajectory.meta.max_det_residual =
            std::max(res.trajectory.meta.max_det_residual, sc.r_det - 1.0);
    }

    // eight-point cross-check against the global propagator
    for (int k = 1; k <= 8; ++k) {
        const std::size_t idx = k * (cfg.samples - 1) / 8;
        const Vec8 ref = propagate_exact(cfg.xi0, p, grid[idx]);
        res.crosscheck_max = std::max(
            res.crosscheck_max, (res.trajectory.states[idx] - ref).cwiseAbs().maxCoeff());
    }
    if (res.crosscheck_max > 1e-5)
        throw CrossCheckError("engine disagrees with the global propagator by "
                              + std::to_string(res.crosscheck_max));

    if (cfg.outputs.count("entropy")) res.entropy_values = entropy_series(res.trajectory);
    if (cfg.outputs.count("poincare") && cfg.section)
        res.poincare_points = poincare(res.trajectory, *cfg.section, p);
    if (cfg.outputs.count("classification")) {
        try {
            res.classification = classify_trajectory(res.trajectory, p);
        } catch (const InsufficientSpan& e) {
            throw ConfigError(std::string("classification requested but ") + e.what());
        }
    }
    if (cfg.outputs.count("equilibria")) {
        if (p.case_tag != CaseTag::General)
            res.equilibria = catalog(p);
        else
            res.numeric_equilibria = find_equilibria(p, cfg.seed);
    }
    return res;
}

// --------------------------------------------------------------------------
// Serialization
// --------------------------------------------------------------------------

inline std::string format_double(double v) {
    char buf[40];
    const auto out = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, out.ptr);
}

namespace detail {

inline void atomic_write(const std::filesystem::path& path, const std::string& contents) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
        out << contents;
    }
    std::filesystem::rename(tmp, path);
}

inline nlohmann::json json_vec8(const Vec8& v) {
    nlohmann::json j = nlohmann::json::array();
    for (int i = 0; i < 8; ++i) j.push_back(v[i]);
    return j;
}

}  // namespace detail

// trajectory table; the entropy column is appended when available
inline std::string trajectory_csv(const ScenarioResult& res) {
    std::ostringstream out;
    out << "t,xi1,xi2,xi3,xi4,xi5,xi6,xi7,xi8";
    if (res.entropy_values) out << ",S";
    out << "\n";
    for (std::size_t i = 0; i < res.trajectory.times.size(); ++i) {
        out << format_double(res.trajectory.times[i]);
        for (int c = 0; c < 8; ++c) out << "," << format_double(res.trajectory.states[i][c]);
        if (res.entropy_values) out << "," << format_double((*res.entropy_values)[i]);
        out << "\n";
    }
    return out.str();
}

inline std::string entropy_csv(const ScenarioResult& res) {
    std::ostringstream out;
    out << "t,S\n";
    for (std::size_t i = 0; i < res.trajectory.times.size(); ++i)
        out << format_double(res.trajectory.times[i]) << ","
            << format_double((*res.entropy_values)[i]) << "\n";
    return out.str();
}

inline std::string poincare_csv(const ScenarioResult& res) {
    std::ostringstream out;
    out << "index,xi1,xi2,xi3,xi4,xi5,xi6,xi7,xi8\n";
    int idx = 0;
    for (const Vec8& c : *res.poincare_points) {
        out << idx++;
        for (int i = 0; i < 8; ++i) out << "," << format_double(c[i]);
        out << "\n";
    }
    return out.str();
}

inline nlohmann::json classification_json(const TrajectoryClass& c) {
    nlohmann::json j;
    j["label"] = to_string(c.label);
    if (c.period_estimate) j["period"] = *c.period_estimate;
    if (c.limit_point) j["limit_point"] = detail::json_vec8(*c.limit_point);
    j["total_variation"] = c.total_variation;
    j["tail_variation"] = c.tail_variation;
    j["section_clusters"] = c.section_clusters;
    j["frequency_count"] = c.frequency_count;
    if (std::isfinite(c.recurrence_mismatch)) j["recurrence_mismatch"] = c.recurrence_mismatch;
    return j;
}

inline nlohmann::json equilibrium_json(const Equilibrium& eq) {
    nlohmann::json j;
    j["xi"] = detail::json_vec8(eq.xi);
    j["state_class"] = to_string(eq.state_class.tag);
    j["stability"] = to_string(eq.stability);
    j["source"] = eq.source;
    j["rhs_residual"] = eq.rhs_residual;
    return j;
}

inline nlohmann::json meta_json(const ScenarioResult& res) {
    nlohmann::json j;
    j["name"] = res.config.name;
    j["case"] = to_string(res.case_tag);
    j["engine"] = to_string(res.engine_used);
    j["crosscheck_max"] = res.crosscheck_max;
    j["delegated_branch"] = res.delegated_branch;
    j["a"] = detail::json_vec8(res.config.a);
    j["b"] = detail::json_vec8(res.config.b);
    j["xi0"] = detail::json_vec8(res.config.xi0);
    j["t_end"] = res.config.t_end;
    j["samples"] = res.config.samples;
    j["accepted_steps"] = res.trajectory.meta.accepted;
    j["rejected_steps"] = res.trajectory.meta.rejected;
    j["max_ball_residual"] = res.trajectory.meta.max_ball_residual;
    j["max_det_residual"] = res.trajectory.meta.max_det_residual;
    return j;
}

// Writes the requested artifacts into out_dir and returns the file list.
inline std::vector<std::string> write_outputs(const ScenarioResult& res,
                                              const std::filesystem::path& out_dir,
                                              const std::string& format = "csv") {
    if (format != "csv" && format != "json") throw ConfigError("format must be csv or json");
    std::filesystem::create_directories(out_dir);
    std::vector<std::string> written;
    auto emit = [&](const std::string& base, const std::string& contents) {
        const auto path = out_dir / base;
        detail::atomic_write(path, contents);
        written.push_back(path.string());
    };

    if (res.config.outputs.count("trajectory")) {
        if (format == "csv") {
            emit("trajectory.csv", trajectory_csv(res));
        } else {
            nlohmann::json j;
            j["t"] = res.trajectory.times;
            auto rows = nlohmann::json::array();
            for (const Vec8& s : res.trajectory.states) rows.push_back(detail::json_vec8(s));
            j["xi"] = rows;
            if (res.entropy_values) j["S"] = *res.entropy_values;
            emit("trajectory.json", j.dump(2) + "\n");
        }
    }
    if (res.entropy_values && res.config.outputs.count("entropy")) {
        if (format == "csv") {
            emit("entropy.csv", entropy_csv(res));
        } else {
            nlohmann::json j;
            j["t"] = res.trajectory.times;
            j["S"] = *res.entropy_values;
            emit("entropy.json", j.dump(2) + "\n");
        }
    }
    if (res.poincare_points) {
        if (format == "csv") {
            emit("poincare.csv", poincare_csv(res));
        } else {
            auto rows = nlohmann::json::array();
            for (const Vec8& c : *res.poincare_points) rows.push_back(detail::json_vec8(c));
            emit("poincare.json", nlohmann::json{{"points", rows}}.dump(2) + "\n");
        }
    }
    if (res.classification)
        emit("classification.json", classification_json(*res.classification).dump(2) + "\n");
    if (res.equilibria || !res.numeric_equilibria.empty()) {
        nlohmann::json j;
        auto points = nlohmann::json::array();
        if (res.equilibria) {
            for (const auto& eq : res.equilibria->points) points.push_back(equilibrium_json(eq));
            j["families"] = res.equilibria->families;
        }
        for (const auto& eq : res.numeric_equilibria) points.push_back(equilibrium_json(eq));
        j["points"] = points;
        emit("equilibria.json", j.dump(2) + "\n");
        // diagonal generators: dump the boundary curve of the state triangle
        if (res.case_tag == CaseTag::LinearDiagonal || res.case_tag == CaseTag::NonlinDiagonal) {
            std::ostringstream curve;
            curve << "kappa,xi3,xi8\n";
            for (int k = 26; k <= 99; ++k) {
                const double kappa = k / 100.0;
                for (const auto& q : diagonal_boundary(kappa))
                    curve << format_double(kappa) << "," << format_double(q.xi3) << ","
                          << format_double(q.xi8) << "\n";
            }
            emit("boundary_curve.csv", curve.str());
        }
    }
    emit("meta.json", meta_json(res).dump(2) + "\n");
    return written;
}

// --------------------------------------------------------------------------
// Identity verification report
// --------------------------------------------------------------------------

struct VerifyReport {
    std::string text;
    bool pass = false;
};

inline VerifyReport verify_identities(std::uint64_t seed, int count) {
    if (count < 1) throw ConfigError("verify: count must be at least 1");
    const double sc_dev = structure_constant_deviation();
    const auto checks = run_identity_suite(seed, count);
    std::ostringstream out;
    char line[160];
    std::snprintf(line, sizeof(line), "%-28s %14s %11s %s\n", "identity", "max residual",
                  "tolerance", "status");
    out << line;
    bool all = true;
    std::snprintf(line, sizeof(line), "%-28s %14.3e %11.0e %s\n", "structure_constants",
                  sc_dev, 1e-14, sc_dev < 1e-14 ? "pass" : "FAIL");
    out << line;
    all = all && sc_dev < 1e-14;
    for (const auto& chk : checks) {
        std::snprintf(line, sizeof(line), "%-28s %14.3e %11.0e %s\n", chk.name.c_str(),
                      chk.max_residual, chk.tolerance, chk.pass ? "pass" : "FAIL");
        out << line;
        all = all && chk.pass;
    }
    std::snprintf(line, sizeof(line), "overall: %s (seed=%llu, draws=%d)\n",
                  all ? "PASS" : "FAIL", static_cast<unsigned long long>(seed), count);
    out << line;
    return {out.str(), all};
}

}  // namespace qutrit
