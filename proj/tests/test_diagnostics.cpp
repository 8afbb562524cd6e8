#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <cmath>
#include <vector>

#include "eulertop/diagnostics.hpp"
#include "eulertop/field.hpp"
#include "eulertop/integrate.hpp"
#include "support.hpp"

using namespace eulertop;

namespace {

Trajectory guarded_euler_run() {
    BuiltinSystem b = builtin("euler3");
    VectorField f = synthesize(b);
    IntegratorConfig cfg;
    cfg.method = StepMethod::FixedRk4;
    cfg.step = 1e-3;
    cfg.t1 = 1.0;
    cfg.max_state_norm = 4.0;
    return integrate(f, b.spec, std::vector<double>{1.0, 2.0, 3.0}, cfg);
}

}  // namespace

TEST_CASE("drift report") {
    BuiltinSystem b = builtin("euler3");

    SECTION("constant trajectory has exactly zero drift") {
        VectorField f = synthesize(b);
        IntegratorConfig cfg;
        cfg.method = StepMethod::FixedRk4;
        cfg.step = 1e-2;
        cfg.t1 = 1.0;
        Trajectory traj = integrate(f, b.spec, std::vector<double>{2.0, 0.0, 0.0}, cfg);
        InvariantReport rep = drift_report(traj, b.spec);
        REQUIRE(rep.integrals.size() == 2);
        CHECK(rep.integrals[0].max_drift == 0.0);
        CHECK(rep.integrals[1].max_drift == 0.0);
        CHECK(rep.conserved_ok);
    }

    SECTION("fixed-step run keeps drift within the bound") {
        Trajectory traj = guarded_euler_run();
        InvariantReport rep = drift_report(traj, b.spec, 1e-10);
        CHECK(rep.integrals[0].initial_value == -3.0);
        CHECK(rep.integrals[1].initial_value == -8.0);
        CHECK(rep.integrals[0].max_drift <= 1e-10);
        CHECK(rep.integrals[1].max_drift <= 1e-10);
        CHECK(rep.conserved_ok);
    }

    SECTION("a corrupted sample is flagged") {
        Trajectory traj = guarded_euler_run();
        traj.samples[traj.samples.size() / 2].x[0] += 1e-3;
        InvariantReport rep = drift_report(traj, b.spec, 1e-8);
        const double drift =
            std::max(rep.integrals[0].max_drift, rep.integrals[1].max_drift);
        CHECK(drift >= 1e-4);
        CHECK_FALSE(rep.conserved_ok);
    }

    SECTION("empty trajectory is rejected") {
        Trajectory empty;
        CHECK_THROWS_AS(drift_report(empty, b.spec), std::invalid_argument);
    }
}

TEST_CASE("independence check") {
    BuiltinSystem b = builtin("euler3");

    SECTION("generic point: gradients (2,-4,0) and (2,0,-6) are independent") {
        const double sigma = independence_check(b.spec, std::vector<double>{1.0, 2.0, 3.0});
        CHECK(sigma > 1e-8);
        Eigen::MatrixXd J(2, 3);
        J << 2, -4, 0, 2, 0, -6;
        const double expected = Eigen::JacobiSVD<Eigen::MatrixXd>(J).singularValues().minCoeff();
        CHECK_THAT(sigma, Catch::Matchers::WithinAbs(expected, 1e-12));
    }

    SECTION("origin: both gradients vanish") {
        CHECK(independence_check(b.spec, std::vector<double>{0.0, 0.0, 0.0}) == 0.0);
    }

    SECTION("deformed system matches an SVD of numerically differentiated gradients") {
        BuiltinSystem cube = builtin("cube_root_deform", 3, 1.0);
        const std::vector<double> x{1.0, 2.0, 3.0};
        const double sigma = independence_check(cube.spec, x);

        // finite-difference gradient matrix, decomposed independently
        InvariantGradients grads(cube.spec);
        const double h = 1e-6;
        Eigen::MatrixXd J(2, 3);
        for (int k = 0; k < 2; ++k) {
            Expression ik = cube.spec.invariant(k + 1);
            for (int j = 0; j < 3; ++j) {
                std::vector<double> xp = x, xm = x;
                xp[static_cast<std::size_t>(j)] += h;
                xm[static_cast<std::size_t>(j)] -= h;
                J(k, j) = (ik.evaluate(xp, cube.spec.bindings) -
                           ik.evaluate(xm, cube.spec.bindings)) / (2.0 * h);
            }
        }
        const double expected = Eigen::JacobiSVD<Eigen::MatrixXd>(J).singularValues().minCoeff();
        CHECK(std::abs(sigma - expected) <= 1e-8);
    }

    SECTION("random points agree with the independent SVD") {
        BuiltinSystem quartic = builtin("quartic_deform", 3, 1.0);
        InvariantGradients grads(quartic.spec);
        auto points = sample_points(50, 3, -2.0, 2.0, SingularSet::CoincidencePlanes, 0.2, 11);
        for (const auto& x : points) {
            auto M = grads.matrix(x);
            Eigen::MatrixXd J(2, 3);
            for (int r = 0; r < 2; ++r)
                for (int c = 0; c < 3; ++c) J(r, c) = M(r, c);
            const double expected =
                Eigen::JacobiSVD<Eigen::MatrixXd>(J).singularValues().minCoeff();
            const double got = independence_check(quartic.spec, x);
            CHECK(std::abs(got - expected) <= 1e-10 * std::max(1.0, expected));
        }
    }
}

TEST_CASE("field identity suite") {
    SECTION("undeformed top passes with tiny residuals") {
        BuiltinSystem b = builtin("euler3");
        VectorField f = synthesize(b);
        auto points = sample_points(1000, 3, -2.0, 2.0, SingularSet::None, 0.0, 42);
        InvariantReport rep = field_identity_suite(f, b.spec, points);
        CHECK(rep.orthogonal_ok);
        CHECK(rep.divergence_ok);
        CHECK(rep.max_divergence <= 1e-12);
        for (const auto& e : rep.integrals) CHECK(e.max_orthogonality <= 1e-12);
    }

    SECTION("quartic residuals stay small scaled by the field magnitude") {
        BuiltinSystem b = builtin("quartic_deform", 3, 1.0);
        VectorField f = synthesize(b);
        auto points = sample_points(500, 3, -2.0, 2.0, SingularSet::CoincidencePlanes, 0.1, 43);
        InvariantReport rep = field_identity_suite(f, b.spec, points, 1e-9, 1e100);
        CHECK(rep.orthogonal_ok);  // orthogonality is reported scaled already
        double scale = 0.0;
        for (const auto& x : points) {
            auto v = f.evaluate(x);
            for (double c : v) scale = std::max(scale, std::abs(c));
        }
        CHECK(rep.max_divergence <= 1e-9 * (scale + 1.0));
    }

    SECTION("a sign-flipped term is detected loudly") {
        BuiltinSystem b = builtin("euler3");
        // V1 = -x2 x3 instead of x2 x3
        std::vector<Expression> mutated{parse("0 - x2 * x3", 3), parse("x1 * x3", 3),
                                        parse("x1 * x2", 3)};
        VectorField bad(std::move(mutated), {}, Provenance::ClosedForm);
        auto points = sample_points(200, 3, -2.0, 2.0, SingularSet::None, 0.0, 44);
        InvariantReport rep = field_identity_suite(bad, b.spec, points);
        CHECK_FALSE(rep.orthogonal_ok);
        double worst = 0.0;
        for (const auto& e : rep.integrals) worst = std::max(worst, e.max_orthogonality);
        CHECK(worst > 1e-2);
    }

    SECTION("samples on the singular set are skipped and counted") {
        BuiltinSystem b = builtin("cube_root_deform", 3, 1.0);
        VectorField f = synthesize(b);
        std::vector<std::vector<double>> points{{1.0, 2.0, 3.0}, {0.0, 1.0, 1.0}};
        InvariantReport rep = field_identity_suite(f, b.spec, points);
        CHECK(rep.skipped_samples == 1);
    }
}

TEST_CASE("symbolic divergence agrees with central differences at second order") {
    // A generic compressible field whose third derivatives do not vanish, so
    // the finite-difference truncation term is actually exercised.
    std::vector<Expression> comps{parse("exp(x1) * x2", 3), parse("sin(x2) * x3", 3),
                                  parse("x3 ^ 4 + x1", 3)};
    VectorField f(std::move(comps), {}, Provenance::ClosedForm);

    Expression div;
    for (int i = 1; i <= 3; ++i) {
        Expression d = f.components()[static_cast<std::size_t>(i - 1)].derivative(i).simplified();
        div = (i == 1) ? d : (div + d).simplified();
    }
    const std::vector<double> x{0.7, 1.3, 2.1};
    const double exact = div.evaluate(x);
    REQUIRE(std::abs(exact) > 0.1);

    const double e1 = std::abs(testutil::fd_divergence(f, x, 1e-4) - exact);
    const double e2 = std::abs(testutil::fd_divergence(f, x, 5e-5) - exact);
    const double ratio = e1 / e2;
    CAPTURE(e1, e2, ratio);
    CHECK(ratio >= 3.5);
    CHECK(ratio <= 4.5);
}
