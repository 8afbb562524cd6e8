#pragma once

// Quantitative checks of what the construction promises: conservation along
// trajectories, orthogonality of the field to every invariant gradient,
// vanishing divergence, and functional independence of the invariants.

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "eulertop/field.hpp"
#include "eulertop/integrate.hpp"
#include "eulertop/linalg.hpp"

namespace eulertop {

struct InvariantReport {
    struct PerIntegral {
        double initial_value = 0.0;          // C_k at the first sample
        double max_drift = 0.0;              // max |I_k - C_k| over samples
        double max_orthogonality = 0.0;      // max scaled |V . grad I_k|
    };
    std::vector<PerIntegral> integrals;

    double max_divergence = std::numeric_limits<double>::quiet_NaN();
    double min_gradient_sigma = std::numeric_limits<double>::quiet_NaN();
    int skipped_samples = 0;

    // thresholds the verdicts were judged against
    double drift_tol = 1e-8;
    double orthogonality_tol = 1e-12;
    double divergence_tol = 1e-10;
    double independence_tol = 1e-8;

    bool conserved_ok = true;
    bool orthogonal_ok = true;
    bool divergence_ok = true;
    bool independent_ok = true;

    bool all_ok() const {
        return conserved_ok && orthogonal_ok && divergence_ok && independent_ok;
    }
};

// Minimum singular value of the (n-1) x n invariant gradient matrix at x.
// Independence holds when it clears the threshold (default 1e-8 on the raw,
// unnormalized matrix).
inline double independence_check(const DeformationSpec& spec, std::span<const double> x) {
    return linalg::min_singular_value(InvariantGradients(spec).matrix(x));
}

// Conservation along a trajectory: drift of every deformed integral against
// its value at the first sample. Samples where evaluation fails are counted
// and skipped rather than treated as fatal.
inline InvariantReport drift_report(const Trajectory& traj, const DeformationSpec& spec,
                                    double drift_tol = 1e-8) {
    if (traj.samples.empty()) throw std::invalid_argument("drift_report: empty trajectory");
    InvariantGradients grads(spec);
    const int m = spec.dimension - 1;

    InvariantReport report;
    report.drift_tol = drift_tol;
    report.integrals.resize(static_cast<std::size_t>(m));
    report.min_gradient_sigma = std::numeric_limits<double>::infinity();

    std::vector<double> c0 = grads.values(traj.samples.front().x);
    for (int k = 0; k < m; ++k)
        report.integrals[static_cast<std::size_t>(k)].initial_value = c0[static_cast<std::size_t>(k)];

    for (const auto& sample : traj.samples) {
        std::vector<double> vals;
        try {
            vals = grads.values(sample.x);
        } catch (const EvalError&) {
            ++report.skipped_samples;
            continue;
        }
        for (int k = 0; k < m; ++k) {
            auto& entry = report.integrals[static_cast<std::size_t>(k)];
            entry.max_drift = std::max(entry.max_drift,
                                       std::abs(vals[static_cast<std::size_t>(k)] -
                                                entry.initial_value));
        }
        try {
            report.min_gradient_sigma =
                std::min(report.min_gradient_sigma,
                         linalg::min_singular_value(grads.matrix(sample.x)));
        } catch (const EvalError&) {
        }
    }
    for (const auto& entry : report.integrals)
        if (entry.max_drift > drift_tol) report.conserved_ok = false;
    report.independent_ok = report.min_gradient_sigma > report.independence_tol;
    return report;
}

namespace detail {

inline double divergence_central_difference(const VectorField& v, std::span<const double> x,
                                            double h) {
    double div = 0.0;
    std::vector<double> xp(x.begin(), x.end()), xm(x.begin(), x.end());
    for (int i = 0; i < v.dimension(); ++i) {
        const std::size_t ii = static_cast<std::size_t>(i);
        xp[ii] = x[ii] + h;
        xm[ii] = x[ii] - h;
        div += (v.evaluate(xp)[ii] - v.evaluate(xm)[ii]) / (2.0 * h);
        xp[ii] = x[ii];
        xm[ii] = x[ii];
    }
    return div;
}

}  // namespace detail

// Orthogonality and divergence residuals over a set of sample points.
// Orthogonality is reported scaled: |V . grad I_k| / (|V| |grad I_k| + 1).
// Divergence is computed symbolically when the field carries expressions.
inline InvariantReport field_identity_suite(const VectorField& v, const DeformationSpec& spec,
                                            std::span<const std::vector<double>> samples,
                                            double orthogonality_tol = 1e-12,
                                            double divergence_tol = 1e-10) {
    if (v.dimension() != spec.dimension)
        throw SpecError("field and spec dimensions differ");
    InvariantGradients grads(spec);
    const int n = spec.dimension;
    const int m = n - 1;

    InvariantReport report;
    report.orthogonality_tol = orthogonality_tol;
    report.divergence_tol = divergence_tol;
    report.integrals.resize(static_cast<std::size_t>(m));
    report.max_divergence = 0.0;
    report.min_gradient_sigma = std::numeric_limits<double>::infinity();

    Expression divergence;
    if (v.symbolic()) {
        for (int i = 1; i <= n; ++i) {
            Expression d = v.components()[static_cast<std::size_t>(i - 1)].derivative(i).simplified();
            divergence = (i == 1) ? d : (divergence + d).simplified();
        }
    }

    for (const auto& x : samples) {
        std::vector<double> field_vals;
        linalg::Matrix J(m, n);
        double div = 0.0;
        try {
            field_vals = v.evaluate(x);
            J = grads.matrix(x);
            div = v.symbolic() ? divergence.evaluate(x, v.bindings())
                               : detail::divergence_central_difference(v, x, 1e-6);
        } catch (const EvalError&) {
            ++report.skipped_samples;
            continue;
        }
        double vnorm = 0.0;
        for (double c : field_vals) vnorm = std::max(vnorm, std::abs(c));
        for (int k = 0; k < m; ++k) {
            double dot = 0.0, gnorm = 0.0;
            for (int j = 0; j < n; ++j) {
                dot += field_vals[static_cast<std::size_t>(j)] * J(k, j);
                gnorm = std::max(gnorm, std::abs(J(k, j)));
            }
            const double scaled = std::abs(dot) / (vnorm * gnorm + 1.0);
            auto& entry = report.integrals[static_cast<std::size_t>(k)];
            entry.max_orthogonality = std::max(entry.max_orthogonality, scaled);
        }
        report.max_divergence = std::max(report.max_divergence, std::abs(div));
        report.min_gradient_sigma =
            std::min(report.min_gradient_sigma, linalg::min_singular_value(J));
    }

    for (const auto& entry : report.integrals)
        if (entry.max_orthogonality > orthogonality_tol) report.orthogonal_ok = false;
    report.divergence_ok = report.max_divergence <= divergence_tol;
    report.independent_ok = report.min_gradient_sigma > report.independence_tol;
    return report;
}

// Random points in a box, rejection-sampled away from the field's singular
// set. Deterministic for a given seed.
inline std::vector<std::vector<double>> sample_points(int count, int dimension,
                                                      double lo, double hi,
                                                      SingularSet singular_set,
                                                      double guard_radius,
                                                      std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(lo, hi);
    std::vector<std::vector<double>> out;
    out.reserve(static_cast<std::size_t>(count));
    int attempts = 0;
    while (static_cast<int>(out.size()) < count) {
        if (++attempts > count * 1000)
            throw std::runtime_error("sample_points: rejection sampling starved");
        std::vector<double> x(static_cast<std::size_t>(dimension));
        for (auto& c : x) c = dist(rng);
        if (detail::singular_set_distance(x, singular_set) >= guard_radius)
            out.push_back(std::move(x));
    }
    return out;
}

}  // namespace eulertop
