#pragma once

// Batch front end: simulate / verify / derive / sweep over a JSON run config.
// Exit codes: 0 clean, 1 config or usage error, 2 guarded termination or a
// failed verdict, so CI can tell a science failure from a typo.

#include <atomic>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "eulertop/config.hpp"
#include "eulertop/diagnostics.hpp"
#include "eulertop/field.hpp"
#include "eulertop/integrate.hpp"

namespace eulertop::cli {

struct Options {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir = ".";
    int workers = 1;
};

enum ExitCode : int { kOk = 0, kConfigError = 1, kGuardedOrFailed = 2 };

namespace detail {

inline std::string format17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string format_short(double v) {
    char buf[40];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

// write-then-rename so concurrent sweep workers never expose partial files
inline void write_atomic(const std::filesystem::path& path, const std::string& contents) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << contents;
    }
    std::filesystem::rename(tmp, path);
}

inline std::string trajectory_csv(const Trajectory& traj) {
    std::string out = "t,s";
    for (int i = 1; i <= traj.dimension; ++i) out += ",x" + std::to_string(i);
    for (int k = 1; k < traj.dimension; ++k) out += ",I" + std::to_string(k);
    out += "\n";
    for (const auto& sample : traj.samples) {
        out += format17(sample.t);
        out += ',';
        out += format17(sample.s);
        for (double c : sample.x) {
            out += ',';
            out += format17(c);
        }
        for (double c : sample.invariants) {
            out += ',';
            out += format17(c);
        }
        out += '\n';
    }
    return out;
}

inline nlohmann::json report_json(const std::string& label, const Trajectory& traj,
                                  const InvariantReport& report) {
    nlohmann::json j;
    j["system"] = label;
    j["dimension"] = traj.dimension;
    j["termination"] = to_string(traj.termination);
    j["termination_detail"] = traj.termination_detail;
    j["samples"] = traj.samples.size();
    j["t_start"] = traj.samples.front().t;
    j["t_end"] = traj.samples.back().t;
    auto& inv = j["invariants"];
    for (const auto& entry : report.integrals) {
        nlohmann::json e;
        e["initial"] = entry.initial_value;
        e["max_drift"] = entry.max_drift;
        inv.push_back(e);
    }
    j["min_gradient_sigma"] = report.min_gradient_sigma;
    j["skipped_samples"] = report.skipped_samples;
    j["drift_tol"] = report.drift_tol;
    j["conserved"] = report.conserved_ok;
    return j;
}

struct LoadedRun {
    RunConfig cfg;
    ResolvedSystem sys;
};

inline LoadedRun load(const Options& opts) {
    RunConfig cfg = load_config(opts.config_path);
    if (opts.seed) cfg.seed = *opts.seed;
    ResolvedSystem sys = resolve_system(cfg.system);
    return {std::move(cfg), std::move(sys)};
}

inline Trajectory run_trajectory(const RunConfig& cfg, const ResolvedSystem& sys) {
    std::optional<Expression> reparam;
    if (cfg.reparametrization) {
        std::set<std::string> names;
        for (const auto& [k, v] : sys.spec.bindings) names.insert(k);
        try {
            reparam = parse(*cfg.reparametrization, sys.spec.dimension, names);
        } catch (const ParseError& e) {
            throw ConfigError("reparametrization: " + std::string(e.what()));
        }
    }
    if (reparam)
        return integrate_reparametrized(sys.field, sys.spec, *reparam, cfg.initial_state,
                                        cfg.integrator);
    return integrate(sys.field, sys.spec, cfg.initial_state, cfg.integrator);
}

inline void dump_effective_config(const RunConfig& cfg, const std::filesystem::path& dir) {
    if (cfg.output.effective_config.empty()) return;
    write_atomic(dir / cfg.output.effective_config, to_json(cfg).dump(2) + "\n");
}

}  // namespace detail

// ---------------------------------------------------------------------------

inline int cmd_simulate(const Options& opts) {
    detail::LoadedRun run;
    try {
        run = detail::load(opts);
        validate_for_simulation(run.cfg, run.sys);
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
    }

    const std::filesystem::path dir(opts.out_dir);
    std::filesystem::create_directories(dir);

    Trajectory traj;
    try {
        traj = detail::run_trajectory(run.cfg, run.sys);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "run error: " << e.what() << "\n";
        return kConfigError;
    }

    InvariantReport report = drift_report(traj, run.sys.spec, run.cfg.verify.drift_tol);
    detail::write_atomic(dir / run.cfg.output.trajectory, detail::trajectory_csv(traj));
    detail::write_atomic(dir / run.cfg.output.report,
                         detail::report_json(run.sys.label, traj, report).dump(2) + "\n");
    detail::dump_effective_config(run.cfg, dir);

    std::cout << "system " << run.sys.label << ": " << traj.samples.size() << " samples, t_end="
              << detail::format_short(traj.samples.back().t) << ", termination="
              << to_string(traj.termination);
    if (!traj.termination_detail.empty()) std::cout << " (" << traj.termination_detail << ")";
    std::cout << "\n";
    for (std::size_t k = 0; k < report.integrals.size(); ++k)
        std::cout << "  I" << k + 1 << ": initial=" << detail::format_short(report.integrals[k].initial_value)
                  << " max_drift=" << detail::format_short(report.integrals[k].max_drift) << "\n";

    return traj.termination == Termination::Completed ? kOk : kGuardedOrFailed;
}

inline int cmd_verify(const Options& opts) {
    detail::LoadedRun run;
    try {
        run = detail::load(opts);
        validate_for_simulation(run.cfg, run.sys);
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
    }

    const std::filesystem::path dir(opts.out_dir);
    std::filesystem::create_directories(dir);
    const VerifyConfig& vc = run.cfg.verify;

    auto points = sample_points(vc.points, run.sys.spec.dimension, vc.box_lo, vc.box_hi,
                                run.sys.field.singular_set(), vc.guard_radius, run.cfg.seed);
    InvariantReport identities = field_identity_suite(run.sys.field, run.sys.spec, points,
                                                      vc.orthogonality_tol, vc.divergence_tol);

    Trajectory traj;
    InvariantReport drift;
    std::string drift_note;
    try {
        traj = detail::run_trajectory(run.cfg, run.sys);
        drift = drift_report(traj, run.sys.spec, vc.drift_tol);
        if (traj.termination != Termination::Completed)
            drift_note = to_string(traj.termination);
    } catch (const std::exception& e) {
        drift.conserved_ok = false;
        drift_note = e.what();
    }

    double max_orth = 0.0;
    for (const auto& e : identities.integrals) max_orth = std::max(max_orth, e.max_orthogonality);
    double max_drift = 0.0;
    for (const auto& e : drift.integrals) max_drift = std::max(max_drift, e.max_drift);

    nlohmann::json j;
    j["system"] = run.sys.label;
    j["seed"] = run.cfg.seed;
    j["points"] = points.size();
    j["orthogonality"] = {{"max_residual", max_orth},
                          {"tol", vc.orthogonality_tol},
                          {"pass", identities.orthogonal_ok}};
    j["divergence"] = {{"max_abs", identities.max_divergence},
                       {"tol", vc.divergence_tol},
                       {"pass", identities.divergence_ok}};
    j["independence"] = {{"min_sigma", identities.min_gradient_sigma},
                         {"tol", identities.independence_tol},
                         {"pass", identities.independent_ok}};
    j["conservation"] = {{"max_drift", max_drift},
                         {"tol", vc.drift_tol},
                         {"pass", drift.conserved_ok},
                         {"note", drift_note}};
    const bool pass = identities.orthogonal_ok && identities.divergence_ok &&
                      identities.independent_ok && drift.conserved_ok;
    j["pass"] = pass;
    detail::write_atomic(dir / run.cfg.output.report, j.dump(2) + "\n");

    auto line = [](const char* name, bool ok, double value, double tol) {
        std::printf("%-14s %s  (%.3e vs tol %.1e)\n", name, ok ? "PASS" : "FAIL", value, tol);
    };
    line("orthogonality", identities.orthogonal_ok, max_orth, vc.orthogonality_tol);
    line("divergence", identities.divergence_ok, identities.max_divergence, vc.divergence_tol);
    line("independence", identities.independent_ok, identities.min_gradient_sigma,
         identities.independence_tol);
    line("conservation", drift.conserved_ok, max_drift, vc.drift_tol);
    std::printf("verdict: %s\n", pass ? "PASS" : "FAIL");

    return pass ? kOk : kGuardedOrFailed;
}

inline int cmd_derive(const Options& opts) {
    detail::LoadedRun run;
    try {
        run = detail::load(opts);
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
    }

    std::string text;
    if (run.sys.synthesized.symbolic()) {
        const auto& comps = run.sys.synthesized.components();
        for (std::size_t i = 0; i < comps.size(); ++i)
            text += "dx" + std::to_string(i + 1) + "/dt = " + comps[i].to_string() + "\n";
    } else {
        text += "field is evaluated numerically (dimension > 5); no symbolic components\n";
    }

    if (run.sys.closed_form) {
        auto points = sample_points(200, run.sys.spec.dimension, -2.0, 2.0,
                                    run.sys.field.singular_set(),
                                    std::max(run.cfg.verify.guard_radius, 0.1), run.cfg.seed);
        double dev = 0.0;
        for (const auto& x : points) {
            auto a = run.sys.synthesized.evaluate(x);
            auto b = run.sys.closed_form->evaluate(x);
            for (std::size_t i = 0; i < a.size(); ++i)
                dev = std::max(dev, std::abs(a[i] - b[i]) /
                                        std::max(1.0, std::abs(b[i])));
        }
        text += "max sampled deviation from closed form: " + detail::format_short(dev) + "\n";
    }

    std::cout << text;
    if (!run.cfg.output.derived.empty()) {
        const std::filesystem::path dir(opts.out_dir);
        std::filesystem::create_directories(dir);
        detail::write_atomic(dir / run.cfg.output.derived, text);
    }
    return kOk;
}

// ---------------------------------------------------------------------------

inline int cmd_sweep(const Options& opts, const std::string& parameter,
                     const std::vector<double>& values) {
    if (values.empty()) {
        std::cerr << "usage error: sweep needs a non-empty value list\n";
        return kConfigError;
    }
    detail::LoadedRun base;
    try {
        base = detail::load(opts);
        validate_for_simulation(base.cfg, base.sys);
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
    }
    const bool is_builtin = base.cfg.system.builtin_name.has_value();
    if (is_builtin) {
        if (parameter != "g" && parameter != "coupling") {
            std::cerr << "config error: builtin systems sweep the coupling 'g'\n";
            return kConfigError;
        }
    } else if (!base.cfg.system.parameters.count(parameter)) {
        std::cerr << "config error: unknown sweep parameter '" << parameter << "'\n";
        return kConfigError;
    }

    const std::filesystem::path dir(opts.out_dir);
    std::filesystem::create_directories(dir);

    struct Row {
        double value = 0.0;
        std::string status;
        double max_drift = std::numeric_limits<double>::quiet_NaN();
        double deviation = std::numeric_limits<double>::quiet_NaN();
        bool flagged = true;
    };
    std::vector<Row> rows(values.size());

    // deviation reference: the undeformed system from the same start
    RunConfig euler_cfg = base.cfg;
    euler_cfg.system = SystemConfig{};
    euler_cfg.system.builtin_name = base.sys.spec.dimension == 3 ? "euler3" : "euler_nd";
    euler_cfg.system.dimension = base.sys.spec.dimension;
    ResolvedSystem euler_sys = resolve_system(euler_cfg.system);
    Trajectory euler_traj;
    bool euler_ok = false;
    try {
        euler_traj = detail::run_trajectory(euler_cfg, euler_sys);
        euler_ok = euler_traj.termination == Termination::Completed;
    } catch (const std::exception&) {
    }

    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= values.size()) return;
            Row& row = rows[i];
            row.value = values[i];
            try {
                RunConfig cfg = base.cfg;
                if (is_builtin)
                    cfg.system.coupling = values[i];
                else
                    cfg.system.parameters[parameter] = values[i];
                ResolvedSystem sys = resolve_system(cfg.system);
                Trajectory traj = detail::run_trajectory(cfg, sys);
                InvariantReport rep = drift_report(traj, sys.spec, cfg.verify.drift_tol);
                row.status = to_string(traj.termination);
                row.flagged = traj.termination != Termination::Completed;
                row.max_drift = 0.0;
                for (const auto& e : rep.integrals)
                    row.max_drift = std::max(row.max_drift, e.max_drift);
                if (!row.flagged && euler_ok &&
                    traj.samples.back().t == euler_traj.samples.back().t) {
                    double dev = 0.0;
                    const auto& a = traj.samples.back().x;
                    const auto& b = euler_traj.samples.back().x;
                    for (std::size_t c = 0; c < a.size(); ++c)
                        dev = std::max(dev, std::abs(a[c] - b[c]));
                    row.deviation = dev;
                }
                const std::string name = "sweep_" + parameter + "=" +
                                         detail::format_short(values[i]) + ".csv";
                detail::write_atomic(dir / name, detail::trajectory_csv(traj));
            } catch (const std::exception& e) {
                row.status = std::string("error: ") + e.what();
                row.flagged = true;
            }
        }
    };

    const int worker_count =
        std::max(1, std::min<int>(opts.workers, static_cast<int>(values.size())));
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(worker_count));
    for (int w = 0; w < worker_count; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();

    std::string csv = parameter + ",status,max_drift,deviation_from_euler\n";
    bool any_flagged = false;
    for (const auto& row : rows) {
        csv += detail::format17(row.value);
        csv += ',' + row.status;
        csv += ',' + detail::format17(row.max_drift);
        csv += ',' + detail::format17(row.deviation);
        csv += '\n';
        any_flagged = any_flagged || row.flagged;
        std::cout << parameter << "=" << detail::format_short(row.value) << "  status="
                  << row.status << "  max_drift=" << detail::format_short(row.max_drift)
                  << "  deviation=" << detail::format_short(row.deviation) << "\n";
    }
    detail::write_atomic(dir / base.cfg.output.summary, csv);
    detail::dump_effective_config(base.cfg, dir);
    return any_flagged ? kGuardedOrFailed : kOk;
}

}  // namespace eulertop::cli
