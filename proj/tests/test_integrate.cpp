#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "eulertop/diagnostics.hpp"
#include "eulertop/field.hpp"
#include "eulertop/integrate.hpp"
#include "support.hpp"

using namespace eulertop;

namespace {

IntegratorConfig rk4_config(double h, double t1) {
    IntegratorConfig cfg;
    cfg.method = StepMethod::FixedRk4;
    cfg.step = h;
    cfg.t0 = 0.0;
    cfg.t1 = t1;
    return cfg;
}

IntegratorConfig adaptive_config(double tol, double t1) {
    IntegratorConfig cfg;
    cfg.method = StepMethod::AdaptiveEmbedded;
    cfg.abs_tol = tol;
    cfg.rel_tol = tol;
    cfg.t0 = 0.0;
    cfg.t1 = t1;
    return cfg;
}

double max_drift(const Trajectory& traj) {
    double worst = 0.0;
    for (const auto& s : traj.samples)
        for (std::size_t k = 0; k < s.invariants.size(); ++k)
            worst = std::max(worst,
                             std::abs(s.invariants[k] - traj.samples.front().invariants[k]));
    return worst;
}

}  // namespace

TEST_CASE("equilibria stay put") {
    BuiltinSystem b = builtin("euler3");
    VectorField f = synthesize(b);
    const std::vector<double> x0{2.0, 0.0, 0.0};
    Trajectory traj = integrate(f, b.spec, x0, rk4_config(1e-2, 1.0));
    CHECK(traj.termination == Termination::Completed);
    for (const auto& s : traj.samples) {
        CHECK(s.x[0] == 2.0);
        CHECK(s.x[1] == 0.0);
        CHECK(s.x[2] == 0.0);
    }
}

TEST_CASE("fixed-step conservation on the undeformed top") {
    // The orbit from (1,2,3) escapes in finite time (t ~ 0.51); the run is
    // truncated by the state-norm guard while the samples still resolve the
    // dynamics, and the invariant drift over the recorded samples stays tiny.
    BuiltinSystem b = builtin("euler3");
    VectorField f = synthesize(b);
    IntegratorConfig cfg = rk4_config(1e-3, 1.0);
    cfg.max_state_norm = 4.0;
    const std::vector<double> x0{1.0, 2.0, 3.0};
    Trajectory traj = integrate(f, b.spec, x0, cfg);
    CHECK(traj.termination == Termination::SingularityGuard);
    REQUIRE(traj.samples.size() > 200);
    CHECK(traj.samples.front().invariants[0] == -3.0);
    CHECK(traj.samples.front().invariants[1] == -8.0);
    CHECK(max_drift(traj) <= 1e-10);
}

TEST_CASE("adaptive conservation on the deformed system") {
    BuiltinSystem b = builtin("cube_root_deform", 3, 1.0);
    VectorField f = synthesize(b);
    IntegratorConfig cfg = adaptive_config(1e-10, 0.5);
    cfg.max_state_norm = 15.0;
    const std::vector<double> x0{1.0, 2.0, 3.0};
    Trajectory traj = integrate(f, b.spec, x0, cfg);
    REQUIRE(traj.samples.size() > 10);
    CHECK(max_drift(traj) <= 1e-8);
}

TEST_CASE("fixed RK4 shows fourth-order convergence") {
    BuiltinSystem b = builtin("euler3");
    VectorField f = synthesize(b);
    const std::vector<double> x0{1.0, 2.0, 3.0};
    const std::vector<double> t_end{0.2};

    auto ref = states_at(f, b.spec, x0, t_end, adaptive_config(1e-13, 0.2));
    std::vector<double> errs;
    for (double h : {1e-2, 5e-3, 2.5e-3}) {
        Trajectory traj = integrate(f, b.spec, x0, rk4_config(h, 0.2));
        REQUIRE(traj.termination == Termination::Completed);
        double e = 0.0;
        for (int c = 0; c < 3; ++c)
            e = std::max(e, std::abs(traj.samples.back().x[static_cast<std::size_t>(c)] -
                                     ref[0][static_cast<std::size_t>(c)]));
        errs.push_back(e);
    }
    const double r1 = errs[0] / errs[1];
    const double r2 = errs[1] / errs[2];
    CAPTURE(errs[0], errs[1], errs[2], r1, r2);
    CHECK(r1 >= 14.0);
    CHECK(r1 <= 18.0);
    CHECK(r2 >= 14.0);
    CHECK(r2 <= 18.0);
}

TEST_CASE("projection onto the invariant level set") {
    BuiltinSystem b = builtin("euler3");
    InvariantGradients grads(b.spec);

    SECTION("a point already on the level set is returned unchanged") {
        const std::vector<double> x{1.0, 2.0, 3.0};
        auto targets = grads.values(x);
        auto y = project_onto_invariants(x, grads, targets);
        for (int c = 0; c < 3; ++c)
            CHECK(std::abs(y[static_cast<std::size_t>(c)] - x[static_cast<std::size_t>(c)]) <=
                  1e-15);
    }

    SECTION("a perturbed point is pulled back to the targets") {
        const std::vector<double> x{1.001, 2.0, 3.0};
        const std::vector<double> targets{-3.0, -8.0};
        auto y = project_onto_invariants(x, grads, targets);
        CHECK(std::abs((y[0] * y[0] - y[1] * y[1]) - (-3.0)) <= 1e-13);
        CHECK(std::abs((y[0] * y[0] - y[2] * y[2]) - (-8.0)) <= 1e-13);
    }

    SECTION("rank deficiency is reported") {
        const std::vector<double> x{0.0, 0.0, 0.0};
        const std::vector<double> targets{-3.0, -8.0};
        CHECK_THROWS_AS(project_onto_invariants(x, grads, targets), RankDeficiencyError);
    }
}

TEST_CASE("projection keeps long runs pinned to the level set") {
    BuiltinSystem b = builtin("euler3");
    VectorField f = synthesize(b);
    IntegratorConfig cfg = rk4_config(1e-3, 10.0);
    cfg.projection = true;
    const std::vector<double> x0{0.03, 0.06, 0.09};
    Trajectory traj = integrate(f, b.spec, x0, cfg);
    CHECK(traj.termination == Termination::Completed);
    CHECK(traj.samples.back().t == 10.0);
    CHECK(max_drift(traj) <= 1e-12);
}

TEST_CASE("identity reparametrization changes nothing") {
    BuiltinSystem b = builtin("euler3");
    VectorField f = synthesize(b);
    const std::vector<double> x0{1.0, 2.0, 3.0};
    Expression one = parse("1", 3);
    IntegratorConfig cfg = rk4_config(1e-3, 0.2);
    Trajectory plain = integrate(f, b.spec, x0, cfg);
    Trajectory repar = integrate_reparametrized(f, b.spec, one, x0, cfg);
    REQUIRE(plain.samples.size() == repar.samples.size());
    for (std::size_t i = 0; i < plain.samples.size(); ++i) {
        for (int c = 0; c < 3; ++c)
            CHECK(plain.samples[i].x[static_cast<std::size_t>(c)] ==
                  repar.samples[i].x[static_cast<std::size_t>(c)]);
        CHECK(std::abs(repar.samples[i].s - repar.samples[i].t) <= 1e-14);
    }
}

TEST_CASE("constant reparametrization rescales time") {
    BuiltinSystem b = builtin("euler3");
    VectorField f = synthesize(b);
    const std::vector<double> x0{1.0, 2.0, 3.0};
    Expression two = parse("2", 3);
    Trajectory repar = integrate_reparametrized(f, b.spec, two, x0, adaptive_config(1e-12, 0.2));
    REQUIRE(repar.termination == Termination::Completed);

    // reference states at 2t for every sample time
    std::vector<double> doubled;
    for (std::size_t i = 1; i < repar.samples.size(); ++i)
        doubled.push_back(2.0 * repar.samples[i].t);
    auto ref = states_at(f, b.spec, x0, doubled, adaptive_config(1e-13, 0.41));
    for (std::size_t i = 1; i < repar.samples.size(); ++i) {
        for (int c = 0; c < 3; ++c)
            CHECK(std::abs(repar.samples[i].x[static_cast<std::size_t>(c)] -
                           ref[i - 1][static_cast<std::size_t>(c)]) <= 1e-8);
        // the clock s(t) accumulates exactly 2t
        CHECK(std::abs(repar.samples[i].s - 2.0 * repar.samples[i].t) <= 1e-12);
    }
}

TEST_CASE("state-dependent reparametrization preserves the orbit") {
    BuiltinSystem b = builtin("euler3");
    VectorField f = synthesize(b);
    const std::vector<double> x0{1.0, 2.0, 3.0};
    Expression fexpr = parse("x1 ^ 2", 3);
    IntegratorConfig cfg = adaptive_config(1e-12, 0.3);
    cfg.max_state_norm = 10.0;
    Trajectory repar = integrate_reparametrized(f, b.spec, fexpr, x0, cfg);
    REQUIRE(repar.samples.size() > 5);

    // each sample must sit on the reference orbit at parameter s(t)
    std::vector<double> s_values;
    for (std::size_t i = 1; i < repar.samples.size(); ++i)
        s_values.push_back(repar.samples[i].s);
    IntegratorConfig ref_cfg = adaptive_config(1e-13, s_values.back() * 1.0000001);
    auto ref = states_at(f, b.spec, x0, s_values, ref_cfg);
    for (std::size_t i = 1; i < repar.samples.size(); ++i) {
        double dist = 0.0;
        for (int c = 0; c < 3; ++c)
            dist = std::max(dist, std::abs(repar.samples[i].x[static_cast<std::size_t>(c)] -
                                           ref[i - 1][static_cast<std::size_t>(c)]));
        CAPTURE(i, repar.samples[i].t, repar.samples[i].s);
        CHECK(dist <= 1e-6);
        for (std::size_t k = 0; k < 2; ++k)
            CHECK(std::abs(repar.samples[i].invariants[k] -
                           repar.samples.front().invariants[k]) <= 1e-10);
    }
}

TEST_CASE("reparametrization zero crossing terminates the run") {
    BuiltinSystem b = builtin("euler3");
    VectorField f = synthesize(b);
    // The exact flow only stalls at the zero set of f; a coarse fixed step
    // jumps across it, which is precisely what the guard must catch.
    Expression fexpr = parse("1 - x1 ^ 2", 3);
    const std::vector<double> x0{0.8, 2.0, 3.0};
    Trajectory traj = integrate_reparametrized(f, b.spec, fexpr, x0, rk4_config(0.1, 5.0));
    CHECK(traj.termination == Termination::SingularityGuard);
    CHECK(traj.termination_detail.find("reparametrization") != std::string::npos);
}

TEST_CASE("guards") {
    SECTION("pole approach trips the singularity guard") {
        BuiltinSystem b = builtin("cube_root_deform", 3, 1.0);
        VectorField f = synthesize(b);
        IntegratorConfig cfg = adaptive_config(1e-10, 5.0);
        cfg.singular_radius = 1e-3;
        const std::vector<double> x0{1.05, 1.0, 0.95};
        Trajectory traj = integrate(f, b.spec, x0, cfg);
        CHECK(traj.termination == Termination::SingularityGuard);
    }

    SECTION("max steps") {
        BuiltinSystem b = builtin("euler3");
        VectorField f = synthesize(b);
        IntegratorConfig cfg = rk4_config(1e-3, 1.0);
        cfg.max_steps = 10;
        cfg.max_state_norm = 4.0;
        Trajectory traj = integrate(f, b.spec, std::vector<double>{1.0, 2.0, 3.0}, cfg);
        CHECK(traj.termination == Termination::MaxSteps);
        CHECK(traj.samples.size() == 11);  // initial sample + 10 steps
    }

    SECTION("initial state inside the guard radius is rejected") {
        BuiltinSystem b = builtin("cube_root_deform", 3, 1.0);
        VectorField f = synthesize(b);
        IntegratorConfig cfg = adaptive_config(1e-10, 1.0);
        cfg.singular_radius = 1e-3;
        CHECK_THROWS_AS(integrate(f, b.spec, std::vector<double>{1e-6, 1.0, 1.0}, cfg),
                        std::invalid_argument);
    }
}

TEST_CASE("identical inputs give bitwise-identical trajectories") {
    BuiltinSystem b = builtin("quartic_deform", 3, 1.0);
    VectorField f = synthesize(b);
    const std::vector<double> x0{1.844, -1.673, 1.407};
    IntegratorConfig cfg = adaptive_config(1e-10, 2.0);
    Trajectory a = integrate(f, b.spec, x0, cfg);
    Trajectory c = integrate(f, b.spec, x0, cfg);
    REQUIRE(a.samples.size() == c.samples.size());
    for (std::size_t i = 0; i < a.samples.size(); ++i) {
        CHECK(a.samples[i].t == c.samples[i].t);
        for (int j = 0; j < 3; ++j)
            CHECK(a.samples[i].x[static_cast<std::size_t>(j)] ==
                  c.samples[i].x[static_cast<std::size_t>(j)]);
    }
}

TEST_CASE("extending a trajectory never decreases the max drift") {
    BuiltinSystem b = builtin("euler3");
    VectorField f = synthesize(b);
    const std::vector<double> x0{0.03, 0.06, 0.09};
    Trajectory longer = integrate(f, b.spec, x0, rk4_config(1e-2, 8.0));
    REQUIRE(longer.termination == Termination::Completed);

    double prefix_drift = 0.0;
    double running = 0.0;
    for (const auto& s : longer.samples) {
        for (std::size_t k = 0; k < s.invariants.size(); ++k)
            running = std::max(running, std::abs(s.invariants[k] -
                                                 longer.samples.front().invariants[k]));
        CHECK(running >= prefix_drift);
        prefix_drift = running;
    }
}
