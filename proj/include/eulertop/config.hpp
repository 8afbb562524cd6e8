#pragma once

// Run configuration: a single JSON file with nested sections (system,
// integrator, output). Inline expressions are quoted strings in the library
// grammar. A fully resolved config can be dumped back out and re-run to
// bitwise-identical results.

#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "eulertop/expr.hpp"
#include "eulertop/field.hpp"
#include "eulertop/integrate.hpp"

namespace eulertop {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct OutputConfig {
    std::string trajectory = "trajectory.csv";
    std::string report = "report.json";
    std::string effective_config = "effective_config.json";
    std::string derived = "";   // derive output file; empty = stdout only
    std::string summary = "sweep_summary.csv";
};

struct VerifyConfig {
    int points = 1000;
    double box_lo = -2.0, box_hi = 2.0;
    double guard_radius = 0.1;
    double orthogonality_tol = 1e-12;
    double divergence_tol = 1e-10;
    double drift_tol = 1e-8;
};

struct SystemConfig {
    std::optional<std::string> builtin_name;
    int dimension = 3;
    double coupling = 1.0;
    std::vector<std::string> deformations;  // inline spec, expression text
    ParameterBinding parameters;
    std::vector<std::string> field_override;  // optional closed-form components
    std::string singular_set = "none";        // none | coordinate_planes | coincidence_planes
};

struct RunConfig {
    SystemConfig system;
    std::vector<double> initial_state;
    IntegratorConfig integrator;
    std::optional<std::string> reparametrization;
    std::uint64_t seed = 0;
    VerifyConfig verify;
    OutputConfig output;
};

namespace detail {

inline const nlohmann::json* find(const nlohmann::json& j, const char* key) {
    auto it = j.find(key);
    return it == j.end() ? nullptr : &*it;
}

template <class T>
void read_into(const nlohmann::json& j, const char* key, T& out, const char* section) {
    if (const auto* v = find(j, key)) {
        try {
            out = v->get<T>();
        } catch (const nlohmann::json::exception&) {
            throw ConfigError(std::string(section) + "." + key + " has the wrong type");
        }
    }
}

}  // namespace detail

inline RunConfig parse_config(const nlohmann::json& j) {
    RunConfig cfg;

    const auto* system = detail::find(j, "system");
    if (system == nullptr || !system->is_object())
        throw ConfigError("missing required section 'system'");

    if (const auto* b = detail::find(*system, "builtin")) {
        if (!b->is_string()) throw ConfigError("system.builtin must be a string");
        cfg.system.builtin_name = b->get<std::string>();
    }
    detail::read_into(*system, "dimension", cfg.system.dimension, "system");
    detail::read_into(*system, "coupling", cfg.system.coupling, "system");
    detail::read_into(*system, "deformations", cfg.system.deformations, "system");
    detail::read_into(*system, "singular_set", cfg.system.singular_set, "system");
    detail::read_into(*system, "field", cfg.system.field_override, "system");
    if (const auto* p = detail::find(*system, "parameters")) {
        if (!p->is_object()) throw ConfigError("system.parameters must be an object");
        for (auto it = p->begin(); it != p->end(); ++it) {
            if (!it.value().is_number())
                throw ConfigError("system.parameters." + it.key() + " must be a number");
            cfg.system.parameters[it.key()] = it.value().get<double>();
        }
    }

    if (cfg.system.builtin_name.has_value() == !cfg.system.deformations.empty())
        throw ConfigError("system must specify exactly one of 'builtin' or 'deformations'");
    if (cfg.system.dimension < 3) throw ConfigError("system.dimension must be at least 3");
    if (cfg.system.singular_set != "none" && cfg.system.singular_set != "coordinate_planes" &&
        cfg.system.singular_set != "coincidence_planes")
        throw ConfigError("system.singular_set must be one of none, coordinate_planes, "
                          "coincidence_planes");

    detail::read_into(j, "initial_state", cfg.initial_state, "config");

    if (const auto* integ = detail::find(j, "integrator")) {
        if (!integ->is_object()) throw ConfigError("integrator must be an object");
        if (const auto* m = detail::find(*integ, "method")) {
            const std::string method = m->is_string() ? m->get<std::string>() : "";
            if (method == "rk4")
                cfg.integrator.method = StepMethod::FixedRk4;
            else if (method == "adaptive")
                cfg.integrator.method = StepMethod::AdaptiveEmbedded;
            else
                throw ConfigError("integrator.method must be 'rk4' or 'adaptive'");
        }
        detail::read_into(*integ, "step", cfg.integrator.step, "integrator");
        detail::read_into(*integ, "abs_tol", cfg.integrator.abs_tol, "integrator");
        detail::read_into(*integ, "rel_tol", cfg.integrator.rel_tol, "integrator");
        detail::read_into(*integ, "projection", cfg.integrator.projection, "integrator");
        detail::read_into(*integ, "max_steps", cfg.integrator.max_steps, "integrator");
        detail::read_into(*integ, "singular_radius", cfg.integrator.singular_radius, "integrator");
        detail::read_into(*integ, "max_state_norm", cfg.integrator.max_state_norm, "integrator");
        detail::read_into(*integ, "min_step", cfg.integrator.min_step, "integrator");
        if (const auto* span = detail::find(*integ, "t_span")) {
            if (!span->is_array() || span->size() != 2)
                throw ConfigError("integrator.t_span must be [t0, t1]");
            cfg.integrator.t0 = (*span)[0].get<double>();
            cfg.integrator.t1 = (*span)[1].get<double>();
        }
        try {
            cfg.integrator.validate();
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("integrator: ") + e.what());
        }
    }

    if (const auto* r = detail::find(j, "reparametrization")) {
        if (!r->is_string()) throw ConfigError("reparametrization must be a string expression");
        cfg.reparametrization = r->get<std::string>();
    }
    detail::read_into(j, "seed", cfg.seed, "config");

    if (const auto* v = detail::find(j, "verify")) {
        if (!v->is_object()) throw ConfigError("verify must be an object");
        detail::read_into(*v, "points", cfg.verify.points, "verify");
        detail::read_into(*v, "guard_radius", cfg.verify.guard_radius, "verify");
        detail::read_into(*v, "orthogonality_tol", cfg.verify.orthogonality_tol, "verify");
        detail::read_into(*v, "divergence_tol", cfg.verify.divergence_tol, "verify");
        detail::read_into(*v, "drift_tol", cfg.verify.drift_tol, "verify");
        if (const auto* box = detail::find(*v, "box")) {
            if (!box->is_array() || box->size() != 2)
                throw ConfigError("verify.box must be [lo, hi]");
            cfg.verify.box_lo = (*box)[0].get<double>();
            cfg.verify.box_hi = (*box)[1].get<double>();
        }
    }

    if (const auto* o = detail::find(j, "output")) {
        if (!o->is_object()) throw ConfigError("output must be an object");
        detail::read_into(*o, "trajectory", cfg.output.trajectory, "output");
        detail::read_into(*o, "report", cfg.output.report, "output");
        detail::read_into(*o, "effective_config", cfg.output.effective_config, "output");
        detail::read_into(*o, "derived", cfg.output.derived, "output");
        detail::read_into(*o, "summary", cfg.output.summary, "output");
    }
    return cfg;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    return parse_config(j);
}

inline nlohmann::json to_json(const RunConfig& cfg) {
    nlohmann::json j;
    auto& system = j["system"];
    if (cfg.system.builtin_name) system["builtin"] = *cfg.system.builtin_name;
    system["dimension"] = cfg.system.dimension;
    if (cfg.system.builtin_name) system["coupling"] = cfg.system.coupling;
    if (!cfg.system.deformations.empty()) system["deformations"] = cfg.system.deformations;
    if (!cfg.system.parameters.empty()) {
        auto& params = system["parameters"];
        for (const auto& [k, v] : cfg.system.parameters) params[k] = v;
    }
    if (!cfg.system.field_override.empty()) system["field"] = cfg.system.field_override;
    system["singular_set"] = cfg.system.singular_set;

    if (!cfg.initial_state.empty()) j["initial_state"] = cfg.initial_state;

    auto& integ = j["integrator"];
    integ["method"] = cfg.integrator.method == StepMethod::FixedRk4 ? "rk4" : "adaptive";
    integ["step"] = cfg.integrator.step;
    integ["abs_tol"] = cfg.integrator.abs_tol;
    integ["rel_tol"] = cfg.integrator.rel_tol;
    integ["t_span"] = {cfg.integrator.t0, cfg.integrator.t1};
    integ["projection"] = cfg.integrator.projection;
    integ["max_steps"] = cfg.integrator.max_steps;
    integ["singular_radius"] = cfg.integrator.singular_radius;
    integ["max_state_norm"] = cfg.integrator.max_state_norm;
    integ["min_step"] = cfg.integrator.min_step;

    if (cfg.reparametrization) j["reparametrization"] = *cfg.reparametrization;
    j["seed"] = cfg.seed;

    auto& verify = j["verify"];
    verify["points"] = cfg.verify.points;
    verify["box"] = {cfg.verify.box_lo, cfg.verify.box_hi};
    verify["guard_radius"] = cfg.verify.guard_radius;
    verify["orthogonality_tol"] = cfg.verify.orthogonality_tol;
    verify["divergence_tol"] = cfg.verify.divergence_tol;
    verify["drift_tol"] = cfg.verify.drift_tol;

    auto& output = j["output"];
    output["trajectory"] = cfg.output.trajectory;
    output["report"] = cfg.output.report;
    output["effective_config"] = cfg.output.effective_config;
    if (!cfg.output.derived.empty()) output["derived"] = cfg.output.derived;
    output["summary"] = cfg.output.summary;
    return j;
}

// ---------------------------------------------------------------------------
// System resolution: config -> deformation spec + integrable field.

struct ResolvedSystem {
    std::string label;
    DeformationSpec spec;
    VectorField field;                       // field used for integration
    VectorField synthesized;                 // always the constructed field
    std::optional<VectorField> closed_form;  // builtins with printed fields
};

inline SingularSet singular_set_from_string(const std::string& s) {
    if (s == "coordinate_planes") return SingularSet::CoordinatePlanes;
    if (s == "coincidence_planes") return SingularSet::CoincidencePlanes;
    return SingularSet::None;
}

inline ResolvedSystem resolve_system(const SystemConfig& sys) {
    ResolvedSystem out;
    if (sys.builtin_name) {
        BuiltinSystem b = builtin(*sys.builtin_name, sys.dimension, sys.coupling);
        out.label = *sys.builtin_name;
        out.spec = b.spec;
        out.synthesized = synthesize(b);
        out.closed_form = b.closed_form;
    } else {
        const int n = sys.dimension;
        std::set<std::string> names;
        for (const auto& [k, v] : sys.parameters) names.insert(k);
        DeformationSpec spec;
        spec.dimension = n;
        spec.bindings = sys.parameters;
        for (const auto& text : sys.deformations) {
            try {
                spec.deformations.push_back(parse(text, n, names));
            } catch (const ParseError& e) {
                throw ConfigError("system.deformations: " + std::string(e.what()) +
                                  " in \"" + text + "\"");
            }
        }
        try {
            spec.validate();
        } catch (const SpecError& e) {
            throw ConfigError(std::string("system: ") + e.what());
        }
        out.label = "inline";
        out.spec = std::move(spec);
        out.synthesized = (n == 3) ? build_deformed_3d(out.spec) : build_deformed_nd(out.spec);
        out.synthesized.set_singular_set(singular_set_from_string(sys.singular_set));
    }

    if (!sys.field_override.empty()) {
        const int n = sys.dimension;
        if (static_cast<int>(sys.field_override.size()) != n)
            throw ConfigError("system.field must have one component per coordinate");
        std::set<std::string> names;
        for (const auto& [k, v] : out.spec.bindings) names.insert(k);
        std::vector<Expression> comps;
        for (const auto& text : sys.field_override) {
            try {
                comps.push_back(parse(text, n, names));
            } catch (const ParseError& e) {
                throw ConfigError("system.field: " + std::string(e.what()) + " in \"" + text +
                                  "\"");
            }
        }
        out.field = VectorField(std::move(comps), out.spec.bindings, Provenance::ClosedForm,
                                out.synthesized.singular_set());
    } else {
        out.field = out.synthesized;
    }
    return out;
}

inline void validate_for_simulation(const RunConfig& cfg, const ResolvedSystem& sys) {
    if (cfg.initial_state.empty())
        throw ConfigError("initial_state is required for this command");
    if (static_cast<int>(cfg.initial_state.size()) != sys.spec.dimension)
        throw ConfigError("dimension mismatch: initial_state has " +
                          std::to_string(cfg.initial_state.size()) + " coordinates but the system is " +
                          std::to_string(sys.spec.dimension) + "-dimensional");
}

}  // namespace eulertop
