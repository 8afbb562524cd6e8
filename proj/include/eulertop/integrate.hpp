#pragma once

// Time integration of synthesized fields: classical fixed-step RK4 and a
// Dormand-Prince 5(4) embedded pair with PI step-size control. Optional
// post-step Gauss-Newton projection keeps the deformed first integrals pinned
// to their initial values. Reparametrized runs integrate xdot = f(x) V(x) and
// carry the clock s(t) = int f dtau as an extra quadrature state so that s
// has the same order of accuracy as the state itself.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "eulertop/expr.hpp"
#include "eulertop/field.hpp"
#include "eulertop/linalg.hpp"

namespace eulertop {

enum class StepMethod : std::uint8_t { FixedRk4, AdaptiveEmbedded };

enum class Termination : std::uint8_t {
    Completed,
    SingularityGuard,
    StepFloor,
    MaxSteps,
};

inline const char* to_string(Termination t) {
    switch (t) {
    case Termination::Completed: return "completed";
    case Termination::SingularityGuard: return "singularity-guard";
    case Termination::StepFloor: return "step-floor";
    case Termination::MaxSteps: return "max-steps";
    }
    return "unknown";
}

struct IntegratorConfig {
    StepMethod method = StepMethod::AdaptiveEmbedded;
    double step = 1e-3;        // fixed-rk4 step size
    double abs_tol = 1e-10;    // adaptive tolerances
    double rel_tol = 1e-10;
    double t0 = 0.0;
    double t1 = 1.0;
    bool projection = false;
    long max_steps = 1'000'000;
    double singular_radius = 1e-6;   // distance to the field's singular set
    double max_state_norm = 1e6;     // escape guard on |x|_inf
    double min_step = 1e-14;
    double projection_tol = 1e-13;
    int projection_max_iter = 10;

    void validate() const {
        if (!(t1 > t0)) throw std::invalid_argument("time span must have t1 > t0");
        if (method == StepMethod::FixedRk4 && !(step > 0.0))
            throw std::invalid_argument("fixed step size must be positive");
        if (method == StepMethod::AdaptiveEmbedded && (!(abs_tol > 0.0) || !(rel_tol > 0.0)))
            throw std::invalid_argument("tolerances must be positive");
        if (!(max_state_norm > 0.0)) throw std::invalid_argument("max_state_norm must be positive");
        if (max_steps <= 0) throw std::invalid_argument("max_steps must be positive");
    }
};

struct TrajectorySample {
    double t = 0.0;
    double s = 0.0;  // reparametrization clock; equals t for plain runs
    std::vector<double> x;
    std::vector<double> invariants;  // NaN where evaluation failed
};

struct Trajectory {
    int dimension = 0;
    std::vector<TrajectorySample> samples;
    Termination termination = Termination::Completed;
    std::string termination_detail;

    const TrajectorySample& back() const { return samples.back(); }
};

struct RankDeficiencyError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ProjectionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Gauss-Newton projection onto the level set I_k(x) = targets_k. Minimal-norm
// correction per iteration; returns the corrected state.

inline std::vector<double> project_onto_invariants(std::span<const double> x,
                                                   const InvariantGradients& grads,
                                                   std::span<const double> targets,
                                                   double tol = 1e-13, int max_iter = 10) {
    std::vector<double> out(x.begin(), x.end());
    for (int it = 0; it <= max_iter; ++it) {
        std::vector<double> r = grads.values(out);
        double rmax = 0.0;
        for (std::size_t k = 0; k < r.size(); ++k) {
            r[k] -= targets[k];
            rmax = std::max(rmax, std::abs(r[k]));
        }
        if (rmax <= tol) return out;
        if (it == max_iter) break;
        linalg::Matrix J = grads.matrix(out);
        auto sigma = linalg::singular_values(J);
        if (sigma.back() <= 1e-12 * std::max(sigma.front(), 1.0))
            throw RankDeficiencyError("invariant gradients are rank deficient");
        std::vector<double> dx;
        try {
            dx = linalg::min_norm_step(J, r);
        } catch (const linalg::SingularMatrixError&) {
            throw RankDeficiencyError("invariant gradients are rank deficient");
        }
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += dx[i];
    }
    throw ProjectionError("projection did not converge");
}

inline std::vector<double> project_onto_invariants(std::span<const double> x,
                                                   const DeformationSpec& spec,
                                                   std::span<const double> targets,
                                                   double tol = 1e-13, int max_iter = 10) {
    return project_onto_invariants(x, InvariantGradients(spec), targets, tol, max_iter);
}

// ---------------------------------------------------------------------------

namespace detail {

// Right-hand side for the (possibly reparametrized) system. The state vector
// passed around is x alone; the clock derivative is returned separately.
class Rhs {
public:
    Rhs(const VectorField& v, const Expression* reparam)
        : v_(&v), reparam_(reparam) {}

    int dimension() const { return v_->dimension(); }
    bool reparametrized() const { return reparam_ != nullptr; }

    // Fills dx and returns ds/dt (1 for plain runs). Throws EvalError on
    // domain problems, including non-finite field values.
    double operator()(std::span<const double> x, std::vector<double>& dx) const {
        dx = v_->evaluate(x);
        double f = 1.0;
        if (reparam_ != nullptr) {
            f = reparam_->evaluate(x, v_->bindings());
            for (double& c : dx) c *= f;
        }
        for (double c : dx)
            if (!std::isfinite(c))
                throw EvalError(EvalError::Kind::DomainError, "non-finite field value");
        return f;
    }

private:
    const VectorField* v_;
    const Expression* reparam_;
};

inline double inf_norm(std::span<const double> x) {
    double m = 0.0;
    for (double c : x) m = std::max(m, std::abs(c));
    return m;
}

inline double singular_set_distance(std::span<const double> x, SingularSet s) {
    switch (s) {
    case SingularSet::None:
        return std::numeric_limits<double>::infinity();
    case SingularSet::CoordinatePlanes: {
        double m = std::numeric_limits<double>::infinity();
        for (double c : x) m = std::min(m, std::abs(c));
        return m;
    }
    case SingularSet::CoincidencePlanes: {
        double m = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < x.size(); ++i)
            for (std::size_t j = i + 1; j < x.size(); ++j)
                m = std::min(m, std::abs(x[i] - x[j]));
        return m;
    }
    }
    return std::numeric_limits<double>::infinity();
}

// One classical RK4 step for the augmented system (x, s).
inline void rk4_step(const Rhs& rhs, double h, std::vector<double>& x, double& s) {
    const std::size_t n = x.size();
    std::vector<double> k1, k2, k3, k4, tmp(n);
    const double f1 = rhs(x, k1);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * h * k1[i];
    const double f2 = rhs(tmp, k2);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * h * k2[i];
    const double f3 = rhs(tmp, k3);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + h * k3[i];
    const double f4 = rhs(tmp, k4);
    for (std::size_t i = 0; i < n; ++i)
        x[i] += (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    s += (h / 6.0) * (f1 + 2.0 * f2 + 2.0 * f3 + f4);
}

// Dormand-Prince 5(4) coefficients.
struct Dopri5 {
    static constexpr double a21 = 1.0 / 5.0;
    static constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
    static constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
    static constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0,
                            a53 = 64448.0 / 6561.0, a54 = -212.0 / 729.0;
    static constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0,
                            a63 = 46732.0 / 5247.0, a64 = 49.0 / 176.0,
                            a65 = -5103.0 / 18656.0;
    static constexpr double b1 = 35.0 / 384.0, b3 = 500.0 / 1113.0, b4 = 125.0 / 192.0,
                            b5 = -2187.0 / 6784.0, b6 = 11.0 / 84.0;
    // b - bhat, for the embedded error estimate
    static constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
                            e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;
};

}  // namespace detail

// ---------------------------------------------------------------------------

class Integrator {
public:
    Integrator(const VectorField& v, const DeformationSpec& spec, IntegratorConfig cfg,
               const Expression* reparam = nullptr)
        : rhs_(v, reparam), spec_(&spec), grads_(spec), cfg_(cfg), field_(&v) {
        cfg_.validate();
        if (v.dimension() != spec.dimension)
            throw SpecError("field and deformation spec dimensions differ");
        if (reparam != nullptr && reparam->dimension() != v.dimension())
            throw SpecError("reparametrization expression dimension mismatch");
    }

    Trajectory run(std::span<const double> x0) {
        if (static_cast<int>(x0.size()) != rhs_.dimension())
            throw std::invalid_argument("initial state dimension mismatch");
        for (double c : x0)
            if (!std::isfinite(c)) throw std::invalid_argument("initial state must be finite");
        if (detail::singular_set_distance(x0, field_->singular_set()) < cfg_.singular_radius)
            throw std::invalid_argument("initial state inside the singularity-guard radius");

        traj_ = Trajectory{};
        traj_.dimension = rhs_.dimension();
        x_.assign(x0.begin(), x0.end());
        t_ = cfg_.t0;
        s_ = cfg_.t0;
        targets_ = grads_.values(x_);
        record();

        if (cfg_.method == StepMethod::FixedRk4)
            run_fixed();
        else
            run_adaptive();
        return std::move(traj_);
    }

    // Integrates and returns the state at each requested time (strictly
    // increasing, within [t0, t1]). Throws if the run terminates early.
    std::vector<std::vector<double>> states_at(std::span<const double> x0,
                                               std::span<const double> times) {
        Trajectory t = run_to_times(x0, times);
        if (t.termination != Termination::Completed)
            throw std::runtime_error(std::string("integration terminated early: ") +
                                     to_string(t.termination) +
                                     (t.termination_detail.empty() ? "" : " (" + t.termination_detail + ")"));
        std::vector<std::vector<double>> out;
        out.reserve(times.size());
        // run_to_times records exactly the requested times after the initial sample
        for (std::size_t i = 1; i < t.samples.size(); ++i) out.push_back(t.samples[i].x);
        return out;
    }

    Trajectory run_to_times(std::span<const double> x0, std::span<const double> times);

private:
    detail::Rhs rhs_;
    const DeformationSpec* spec_;
    InvariantGradients grads_;
    IntegratorConfig cfg_;
    const VectorField* field_;

    Trajectory traj_;
    std::vector<double> x_;
    double t_ = 0.0, s_ = 0.0;
    std::vector<double> targets_;

    void record() {
        TrajectorySample sample;
        sample.t = t_;
        sample.s = rhs_.reparametrized() ? s_ : t_;
        sample.x = x_;
        sample.invariants.reserve(static_cast<std::size_t>(traj_.dimension - 1));
        try {
            sample.invariants = grads_.values(x_);
        } catch (const EvalError&) {
            sample.invariants.assign(static_cast<std::size_t>(traj_.dimension - 1),
                                     std::numeric_limits<double>::quiet_NaN());
        }
        traj_.samples.push_back(std::move(sample));
    }

    void finish(Termination reason, std::string detail = {}) {
        traj_.termination = reason;
        traj_.termination_detail = std::move(detail);
    }

    // Guards applied to an accepted step candidate. Returns an explanation
    // when the run must stop, in which case the candidate is discarded.
    std::optional<std::string> guard(std::span<const double> x_new, double f_old,
                                     double f_new) const {
        for (double c : x_new)
            if (!std::isfinite(c)) return "non-finite state";
        if (detail::inf_norm(x_new) > cfg_.max_state_norm)
            return "state norm exceeded max_state_norm (finite-time escape)";
        if (detail::singular_set_distance(x_new, field_->singular_set()) < cfg_.singular_radius)
            return "state within singularity-guard radius of the field's poles";
        if (rhs_.reparametrized()) {
            if (f_new == 0.0 || (f_old < 0.0) != (f_new < 0.0))
                return "reparametrization function crossed zero within a step";
        }
        return std::nullopt;
    }

    // Returns false when the run has terminated.
    bool accept(std::vector<double> x_new, double t_new, double s_new, double f_old,
                double f_new) {
        if (auto why = guard(x_new, f_old, f_new)) {
            finish(Termination::SingularityGuard, *why);
            return false;
        }
        if (cfg_.projection) {
            try {
                x_new = project_onto_invariants(x_new, grads_, targets_, cfg_.projection_tol,
                                                cfg_.projection_max_iter);
            } catch (const std::runtime_error& e) {
                finish(Termination::SingularityGuard,
                       std::string("projection failed: ") + e.what());
                return false;
            }
        }
        x_ = std::move(x_new);
        t_ = t_new;
        s_ = s_new;
        record();
        return true;
    }

    double current_f() const {
        if (!rhs_.reparametrized()) return 1.0;
        std::vector<double> scratch;
        return rhs_(x_, scratch);
    }

    void run_fixed() {
        long step_index = 0;
        double f_old;
        try {
            f_old = current_f();
        } catch (const EvalError& e) {
            finish(Termination::SingularityGuard, e.what());
            return;
        }
        while (t_ < cfg_.t1) {
            if (step_index >= cfg_.max_steps) {
                finish(Termination::MaxSteps);
                return;
            }
            // Track time by step count so t does not accumulate rounding.
            double tn = cfg_.t0 + static_cast<double>(++step_index) * cfg_.step;
            if (tn >= cfg_.t1 - 0.5 * cfg_.step) tn = cfg_.t1;
            const double h = tn - t_;
            std::vector<double> xn = x_;
            double sn = s_;
            double f_new = 0.0;
            try {
                detail::rk4_step(rhs_, h, xn, sn);
                std::vector<double> scratch;
                f_new = rhs_(xn, scratch);
            } catch (const EvalError& e) {
                finish(Termination::SingularityGuard, e.what());
                return;
            }
            if (!accept(std::move(xn), tn, sn, f_old, f_new)) return;
            f_old = f_new;
        }
        finish(Termination::Completed);
    }

    // One DOPRI5 trial step; returns the scaled error norm, or infinity when a
    // stage evaluation failed (treated as a rejected step).
    double dopri_trial(double h, std::vector<double>& xn, double& sn, double& f_end) {
        using D = detail::Dopri5;
        const std::size_t n = x_.size();
        std::vector<double> k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), tmp(n);
        double f1, f3, f4, f5, f6, f7;
        try {
            f1 = rhs_(x_, k1);
            for (std::size_t i = 0; i < n; ++i) tmp[i] = x_[i] + h * D::a21 * k1[i];
            (void)rhs_(tmp, k2);  // f at stage 2 has zero quadrature weight
            for (std::size_t i = 0; i < n; ++i)
                tmp[i] = x_[i] + h * (D::a31 * k1[i] + D::a32 * k2[i]);
            f3 = rhs_(tmp, k3);
            for (std::size_t i = 0; i < n; ++i)
                tmp[i] = x_[i] + h * (D::a41 * k1[i] + D::a42 * k2[i] + D::a43 * k3[i]);
            f4 = rhs_(tmp, k4);
            for (std::size_t i = 0; i < n; ++i)
                tmp[i] = x_[i] + h * (D::a51 * k1[i] + D::a52 * k2[i] + D::a53 * k3[i] +
                                      D::a54 * k4[i]);
            f5 = rhs_(tmp, k5);
            for (std::size_t i = 0; i < n; ++i)
                tmp[i] = x_[i] + h * (D::a61 * k1[i] + D::a62 * k2[i] + D::a63 * k3[i] +
                                      D::a64 * k4[i] + D::a65 * k5[i]);
            f6 = rhs_(tmp, k6);
            for (std::size_t i = 0; i < n; ++i)
                xn[i] = x_[i] + h * (D::b1 * k1[i] + D::b3 * k3[i] + D::b4 * k4[i] +
                                     D::b5 * k5[i] + D::b6 * k6[i]);
            f7 = rhs_(xn, k7);
        } catch (const EvalError&) {
            return std::numeric_limits<double>::infinity();
        }
        f_end = f7;
        sn = s_ + h * (D::b1 * f1 + D::b3 * f3 + D::b4 * f4 + D::b5 * f5 + D::b6 * f6);

        double err2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double e = h * (D::e1 * k1[i] + D::e3 * k3[i] + D::e4 * k4[i] +
                                  D::e5 * k5[i] + D::e6 * k6[i] + D::e7 * k7[i]);
            const double sc = cfg_.abs_tol +
                              cfg_.rel_tol * std::max(std::abs(x_[i]), std::abs(xn[i]));
            err2 += (e / sc) * (e / sc);
        }
        const double err = std::sqrt(err2 / static_cast<double>(n));
        return std::isfinite(err) ? err : std::numeric_limits<double>::infinity();
    }

    double initial_step() const {
        std::vector<double> f0;
        const double d0 = detail::inf_norm(x_);
        double d1 = 0.0;
        try {
            (void)rhs_(x_, f0);
            d1 = detail::inf_norm(f0);
        } catch (const EvalError&) {
            return cfg_.min_step * 100;
        }
        double h = (d1 > 1e-8) ? 0.01 * (d0 + cfg_.abs_tol) / d1 : 1e-6;
        return std::min(h, (cfg_.t1 - cfg_.t0) / 10.0);
    }

    void run_adaptive() {
        // PI controller, safety 0.9, growth clamped to [0.2, 5.0].
        constexpr double kSafety = 0.9, kMinFac = 0.2, kMaxFac = 5.0;
        constexpr double kAlpha = 0.7 / 5.0, kBeta = 0.4 / 5.0;

        double h = initial_step();
        double err_old = 1.0;
        long steps = 0;
        double f_old;
        try {
            f_old = current_f();
        } catch (const EvalError& e) {
            finish(Termination::SingularityGuard, e.what());
            return;
        }

        while (t_ < cfg_.t1) {
            if (++steps > cfg_.max_steps) {
                finish(Termination::MaxSteps);
                return;
            }
            if (h < cfg_.min_step) {
                finish(Termination::StepFloor, "step size underflow");
                return;
            }
            const bool last = (t_ + h >= cfg_.t1);
            const double h_try = last ? (cfg_.t1 - t_) : h;

            std::vector<double> xn(x_.size());
            double sn = 0.0, f_new = 0.0;
            const double err = dopri_trial(h_try, xn, sn, f_new);

            if (err <= 1.0) {
                const double tn = last ? cfg_.t1 : t_ + h_try;
                if (!accept(std::move(xn), tn, sn, f_old, f_new)) return;
                f_old = f_new;
                const double fac =
                    kSafety * std::pow(err > 1e-300 ? err : 1e-300, -kAlpha) *
                    std::pow(err_old, kBeta);
                h = h_try * std::clamp(fac, kMinFac, kMaxFac);
                err_old = std::max(err, 1e-4);
            } else {
                const double fac = std::isfinite(err)
                                       ? std::clamp(kSafety * std::pow(err, -0.2), kMinFac, 1.0)
                                       : kMinFac;
                h = h_try * fac;
            }
        }
        finish(Termination::Completed);
    }
};

inline Trajectory integrate(const VectorField& v, const DeformationSpec& spec,
                            std::span<const double> x0, const IntegratorConfig& cfg) {
    return Integrator(v, spec, cfg).run(x0);
}

inline Trajectory integrate_reparametrized(const VectorField& v, const DeformationSpec& spec,
                                           const Expression& f, std::span<const double> x0,
                                           const IntegratorConfig& cfg) {
    return Integrator(v, spec, cfg, &f).run(x0);
}

// States at prescribed times, integrating with the configured method and
// clamping steps so the requested times are hit exactly.
inline std::vector<std::vector<double>> states_at(const VectorField& v,
                                                  const DeformationSpec& spec,
                                                  std::span<const double> x0,
                                                  std::span<const double> times,
                                                  const IntegratorConfig& cfg) {
    return Integrator(v, spec, cfg).states_at(x0, times);
}

inline Trajectory Integrator::run_to_times(std::span<const double> x0,
                                           std::span<const double> times) {
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (times[i] < cfg_.t0 || times[i] > cfg_.t1 + 1e-12)
            throw std::invalid_argument("requested time outside the integration span");
        if (i > 0 && times[i] <= times[i - 1])
            throw std::invalid_argument("requested times must be strictly increasing");
    }

    traj_ = Trajectory{};
    traj_.dimension = rhs_.dimension();
    x_.assign(x0.begin(), x0.end());
    t_ = cfg_.t0;
    s_ = cfg_.t0;
    targets_ = grads_.values(x_);
    record();

    constexpr double kSafety = 0.9, kMinFac = 0.2, kMaxFac = 5.0;
    constexpr double kAlpha = 0.7 / 5.0, kBeta = 0.4 / 5.0;
    double h = (cfg_.method == StepMethod::FixedRk4) ? cfg_.step : initial_step();
    double err_old = 1.0;
    long steps = 0;
    double f_old;
    try {
        f_old = current_f();
    } catch (const EvalError& e) {
        finish(Termination::SingularityGuard, e.what());
        return std::move(traj_);
    }

    for (double target : times) {
        if (target == t_) {
            // duplicate of the current time; re-record
            record();
            continue;
        }
        while (t_ < target) {
            if (++steps > cfg_.max_steps) {
                finish(Termination::MaxSteps);
                return std::move(traj_);
            }
            const bool clamp = (t_ + h >= target);
            const double h_try = clamp ? (target - t_) : h;
            std::vector<double> xn(x_.size());
            double sn = 0.0, f_new = 0.0;

            if (cfg_.method == StepMethod::FixedRk4) {
                std::vector<double> xc = x_;
                double sc = s_;
                try {
                    detail::rk4_step(rhs_, h_try, xc, sc);
                    std::vector<double> scratch;
                    f_new = rhs_(xc, scratch);
                } catch (const EvalError& e) {
                    finish(Termination::SingularityGuard, e.what());
                    return std::move(traj_);
                }
                const double tn = clamp ? target : t_ + h_try;
                // only record samples at the requested times
                const bool at_target = clamp;
                if (auto why = guard(xc, f_old, f_new)) {
                    finish(Termination::SingularityGuard, *why);
                    return std::move(traj_);
                }
                if (cfg_.projection) {
                    try {
                        xc = project_onto_invariants(xc, grads_, targets_, cfg_.projection_tol,
                                                     cfg_.projection_max_iter);
                    } catch (const std::runtime_error& e) {
                        finish(Termination::SingularityGuard,
                               std::string("projection failed: ") + e.what());
                        return std::move(traj_);
                    }
                }
                x_ = std::move(xc);
                t_ = tn;
                s_ = sc;
                f_old = f_new;
                if (at_target) record();
                continue;
            }

            if (h_try < cfg_.min_step) {
                finish(Termination::StepFloor, "step size underflow");
                return std::move(traj_);
            }
            const double err = dopri_trial(h_try, xn, sn, f_new);
            if (err <= 1.0) {
                if (auto why = guard(xn, f_old, f_new)) {
                    finish(Termination::SingularityGuard, *why);
                    return std::move(traj_);
                }
                if (cfg_.projection) {
                    try {
                        xn = project_onto_invariants(xn, grads_, targets_, cfg_.projection_tol,
                                                     cfg_.projection_max_iter);
                    } catch (const std::runtime_error& e) {
                        finish(Termination::SingularityGuard,
                               std::string("projection failed: ") + e.what());
                        return std::move(traj_);
                    }
                }
                x_ = std::move(xn);
                t_ = clamp ? target : t_ + h_try;
                s_ = sn;
                f_old = f_new;
                if (clamp && t_ == target) record();
                const double fac = kSafety * std::pow(err > 1e-300 ? err : 1e-300, -kAlpha) *
                                   std::pow(err_old, kBeta);
                h = h_try * std::clamp(fac, kMinFac, kMaxFac);
                err_old = std::max(err, 1e-4);
            } else {
                const double fac = std::isfinite(err)
                                       ? std::clamp(kSafety * std::pow(err, -0.2), kMinFac, 1.0)
                                       : kMinFac;
                h = h_try * fac;
            }
        }
    }
    finish(Termination::Completed);
    return std::move(traj_);
}

}  // namespace eulertop
