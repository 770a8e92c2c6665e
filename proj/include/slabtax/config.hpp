#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "slabtax/errors.hpp"
#include "slabtax/kinetic.hpp"
#include "slabtax/model.hpp"

namespace slabtax {

enum class StudyKind { Single, EpsilonSweep, MeshRefinement };

struct GateConfig {
    bool enabled = true;
    double first_order_lo = 0.8;
    double first_order_hi = 1.2;
    double half_order_lo = 0.35;
    double half_order_hi = 0.65;
    double r2_min = 0.97;
    double mesh_order_min = 0.8;
};

struct StudyConfig {
    ScenarioSpec scenario;

    int n_x = 128;
    int n_t = 400;
    int quadrature_n = 8;

    StudyKind kind = StudyKind::Single;
    std::vector<double> epsilons; // epsilon_sweep only
    int levels = 3;               // mesh_refinement only

    SolverOptions solver;
    double theta = 1.0; // parabolic steps inside the coupled kinetic run

    int snapshots = 32;
    bool allow_incompatible = false;
    GateConfig gates;

    nlohmann::json echo; // the parsed input document, echoed into the manifest
};

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& obj, const std::string& path,
                                std::initializer_list<const char*> known) {
    for (const auto& item : obj.items()) {
        bool ok = false;
        for (const char* k : known)
            if (item.key() == k) {
                ok = true;
                break;
            }
        if (!ok)
            throw ConfigError("unknown configuration key \"" +
                              (path.empty() ? item.key() : path + "." + item.key()) + "\"");
    }
}

inline double number_at(const nlohmann::json& obj, const char* key, double fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_number()) throw ConfigError(std::string("key \"") + key + "\" must be a number");
    return obj[key].get<double>();
}

inline int integer_at(const nlohmann::json& obj, const char* key, int fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_number_integer())
        throw ConfigError(std::string("key \"") + key + "\" must be an integer");
    return obj[key].get<int>();
}

inline Expr expr_at(const nlohmann::json& obj, const char* key, const Expr& fallback) {
    if (!obj.contains(key)) return fallback;
    const auto& v = obj[key];
    if (v.is_number()) return Expr::literal(v.get<double>());
    if (v.is_string()) {
        try {
            return Expr::parse(v.get<std::string>());
        } catch (const ConfigError& e) {
            throw ConfigError(std::string("key \"") + key + "\": " + e.what());
        }
    }
    throw ConfigError(std::string("key \"") + key + "\" must be an expression string or number");
}

} // namespace detail

/// Parses and validates a study configuration document (strict JSON: unknown
/// keys are rejected with their path).  Missing keys take the documented
/// defaults; the default scenario is the bundled compatible one.
inline StudyConfig parse_config(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("configuration parse error: ") + e.what());
    }
    if (!doc.is_object()) throw ConfigError("configuration root must be a JSON object");

    detail::reject_unknown_keys(
        doc, "", {"scenario", "grids", "study", "solver", "output", "gates", "allow_incompatible"});

    StudyConfig cfg;
    cfg.echo = doc;
    cfg.scenario = default_scenario();

    if (doc.contains("scenario")) {
        const auto& s = doc["scenario"];
        detail::reject_unknown_keys(s, "scenario",
                                    {"ell", "T", "alpha", "beta", "gamma", "D", "epsilon", "sigma",
                                     "u0", "c0", "gu_left", "gu_right", "gc_left", "gc_right"});
        ScenarioSpec& sc = cfg.scenario;
        sc.ell = detail::number_at(s, "ell", sc.ell);
        sc.horizon = detail::number_at(s, "T", sc.horizon);
        sc.alpha = detail::number_at(s, "alpha", sc.alpha);
        sc.beta = detail::number_at(s, "beta", sc.beta);
        sc.gamma = detail::number_at(s, "gamma", sc.gamma);
        sc.diffusivity = detail::number_at(s, "D", sc.diffusivity);
        sc.epsilon = detail::number_at(s, "epsilon", sc.epsilon);
        if (s.contains("sigma")) {
            const auto& sig = s["sigma"];
            if (sig.is_array()) {
                sc.sigma_values = sig.get<std::vector<double>>();
            } else if (sig.is_number()) {
                sc.sigma_expr = Expr::literal(sig.get<double>());
                sc.sigma_values.reset();
            } else if (sig.is_string()) {
                sc.sigma_expr = Expr::parse(sig.get<std::string>());
                sc.sigma_values.reset();
            } else {
                throw ConfigError("key \"scenario.sigma\" must be an expression, number or array");
            }
        }
        sc.u0 = detail::expr_at(s, "u0", sc.u0);
        sc.c0 = detail::expr_at(s, "c0", sc.c0);
        sc.gu_left = detail::expr_at(s, "gu_left", sc.gu_left);
        sc.gu_right = detail::expr_at(s, "gu_right", sc.gu_right);
        sc.gc_left = detail::expr_at(s, "gc_left", sc.gc_left);
        sc.gc_right = detail::expr_at(s, "gc_right", sc.gc_right);
    }

    if (doc.contains("grids")) {
        const auto& g = doc["grids"];
        detail::reject_unknown_keys(g, "grids", {"nx", "nt", "quadrature_n"});
        cfg.n_x = detail::integer_at(g, "nx", cfg.n_x);
        cfg.n_t = detail::integer_at(g, "nt", cfg.n_t);
        cfg.quadrature_n = detail::integer_at(g, "quadrature_n", cfg.quadrature_n);
    }
    if (cfg.n_x < 2) throw ConfigError("grids.nx must be >= 2");
    if (cfg.n_t < 1) throw ConfigError("grids.nt must be >= 1");
    if (cfg.quadrature_n < 1 || cfg.quadrature_n > 256)
        throw ConfigError("grids.quadrature_n must be in [1, 256]");

    if (doc.contains("study")) {
        const auto& st = doc["study"];
        detail::reject_unknown_keys(st, "study", {"kind", "epsilons", "levels"});
        const std::string kind = st.contains("kind") ? st["kind"].get<std::string>() : "single";
        if (kind == "single")
            cfg.kind = StudyKind::Single;
        else if (kind == "epsilon_sweep")
            cfg.kind = StudyKind::EpsilonSweep;
        else if (kind == "mesh_refinement")
            cfg.kind = StudyKind::MeshRefinement;
        else
            throw ConfigError("study.kind must be single, epsilon_sweep or mesh_refinement");
        if (st.contains("epsilons")) {
            if (!st["epsilons"].is_array()) throw ConfigError("study.epsilons must be an array");
            cfg.epsilons = st["epsilons"].get<std::vector<double>>();
        }
        cfg.levels = detail::integer_at(st, "levels", cfg.levels);
    }

    if (cfg.kind == StudyKind::EpsilonSweep) {
        if (cfg.epsilons.size() < 1) throw ConfigError("study.epsilons must be a nonempty list");
        for (std::size_t i = 0; i < cfg.epsilons.size(); ++i) {
            if (!(cfg.epsilons[i] > 0.0)) throw ValidationError("epsilon must be positive");
            if (i > 0 && !(cfg.epsilons[i] < cfg.epsilons[i - 1]))
                throw ValidationError("study.epsilons must be strictly decreasing");
        }
    }
    if (cfg.kind == StudyKind::MeshRefinement && cfg.levels < 2)
        throw ConfigError("study.levels must be >= 2 for refinement studies");

    if (doc.contains("solver")) {
        const auto& so = doc["solver"];
        detail::reject_unknown_keys(
            so, "solver", {"source_iter_tol", "source_iter_max", "picard_iters", "theta"});
        cfg.solver.source_iter_tol =
            detail::number_at(so, "source_iter_tol", cfg.solver.source_iter_tol);
        cfg.solver.source_iter_max =
            detail::integer_at(so, "source_iter_max", cfg.solver.source_iter_max);
        cfg.solver.picard_iters = detail::integer_at(so, "picard_iters", cfg.solver.picard_iters);
        cfg.theta = detail::number_at(so, "theta", cfg.theta);
    }
    cfg.solver.validate();
    if (cfg.theta < 0.0 || cfg.theta > 1.0) throw ConfigError("solver.theta must be in [0, 1]");

    if (doc.contains("output")) {
        const auto& o = doc["output"];
        detail::reject_unknown_keys(o, "output", {"snapshots"});
        cfg.snapshots = detail::integer_at(o, "snapshots", cfg.snapshots);
        if (cfg.snapshots < 2) throw ConfigError("output.snapshots must be >= 2");
    }

    if (doc.contains("gates")) {
        const auto& g = doc["gates"];
        detail::reject_unknown_keys(
            g, "gates",
            {"enabled", "first_order", "half_order", "r2_min", "mesh_order_min"});
        if (g.contains("enabled")) cfg.gates.enabled = g["enabled"].get<bool>();
        const auto band = [&](const char* key, double& lo, double& hi) {
            if (!g.contains(key)) return;
            const auto& b = g[key];
            if (!b.is_array() || b.size() != 2)
                throw ConfigError(std::string("gates.") + key + " must be [lo, hi]");
            lo = b[0].get<double>();
            hi = b[1].get<double>();
            if (!(lo < hi)) throw ConfigError(std::string("gates.") + key + ": lo must be < hi");
        };
        band("first_order", cfg.gates.first_order_lo, cfg.gates.first_order_hi);
        band("half_order", cfg.gates.half_order_lo, cfg.gates.half_order_hi);
        cfg.gates.r2_min = detail::number_at(g, "r2_min", cfg.gates.r2_min);
        cfg.gates.mesh_order_min = detail::number_at(g, "mesh_order_min", cfg.gates.mesh_order_min);
    }

    if (doc.contains("allow_incompatible")) {
        if (!doc["allow_incompatible"].is_boolean())
            throw ConfigError("allow_incompatible must be a boolean");
        cfg.allow_incompatible = doc["allow_incompatible"].get<bool>();
    }

    return cfg;
}

} // namespace slabtax
