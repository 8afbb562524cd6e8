#pragma once

// Vector-field synthesis. A deformation spec holds the n-1 deformation
// functions a_k attached to the first integrals
//
//     I_k = x1^2 - x_{k+1}^2 + 2 a_k ,   k = 1 .. n-1,
//
// and the synthesized field is the generalized cross product of their
// gradients, scaled so that zero deformation reproduces the undeformed top
// xdot_i = prod_{j != i} x_j. For n = 3 the expanded closed form is also
// available and the two routes cross-check each other.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "eulertop/expr.hpp"
#include "eulertop/linalg.hpp"

namespace eulertop {

struct SpecError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DeformationSpec {
    int dimension = 0;
    std::vector<Expression> deformations;  // a_1 .. a_{n-1}
    ParameterBinding bindings;

    void validate() const {
        if (dimension < 3)
            throw SpecError("deformation spec needs dimension >= 3");
        if (static_cast<int>(deformations.size()) != dimension - 1)
            throw SpecError("expected " + std::to_string(dimension - 1) +
                            " deformation functions, got " +
                            std::to_string(deformations.size()));
        for (const auto& a : deformations)
            if (a.dimension() != dimension)
                throw SpecError("deformation function dimension mismatch");
    }

    // I_k = x1^2 - x_{k+1}^2 + 2 a_k, with k 1-based.
    Expression invariant(int k) const {
        const Expression x1 = Expression::coordinate(1, dimension);
        const Expression xk = Expression::coordinate(k + 1, dimension);
        const Expression two = Expression::number(2.0, dimension);
        return pow(x1, 2) - pow(xk, 2) + two * deformations[static_cast<std::size_t>(k - 1)];
    }

    std::vector<Expression> invariants() const {
        std::vector<Expression> out;
        out.reserve(static_cast<std::size_t>(dimension - 1));
        for (int k = 1; k < dimension; ++k) out.push_back(invariant(k));
        return out;
    }

    std::vector<double> invariant_values(std::span<const double> x) const {
        std::vector<double> out;
        out.reserve(static_cast<std::size_t>(dimension - 1));
        for (int k = 1; k < dimension; ++k) out.push_back(invariant(k).evaluate(x, bindings));
        return out;
    }

    // Rows are the gradients of I_1 .. I_{n-1} evaluated at x.
    linalg::Matrix gradient_matrix(std::span<const double> x) const;
};

enum class Provenance : std::uint8_t { Synthesized, ClosedForm };
enum class SingularSet : std::uint8_t { None, CoordinatePlanes, CoincidencePlanes };

class VectorField {
public:
    VectorField() = default;

    // Symbolic field from explicit component expressions.
    VectorField(std::vector<Expression> components, ParameterBinding bindings,
                Provenance provenance, SingularSet singular_set = SingularSet::None)
        : dimension_(components.empty() ? 0 : components.front().dimension()),
          components_(std::move(components)),
          bindings_(std::move(bindings)),
          provenance_(provenance),
          singular_set_(singular_set) {
        for (const auto& c : components_)
            if (c.dimension() != dimension_)
                throw SpecError("field component dimension mismatch");
        if (static_cast<int>(components_.size()) != dimension_)
            throw SpecError("field needs one component per coordinate");
    }

    // Numeric-only field: the cross product is evaluated per point from the
    // gradient matrix instead of being expanded symbolically.
    static VectorField numeric_cross_product(DeformationSpec spec);

    int dimension() const { return dimension_; }
    bool symbolic() const { return !components_.empty(); }
    Provenance provenance() const { return provenance_; }
    SingularSet singular_set() const { return singular_set_; }
    void set_singular_set(SingularSet s) { singular_set_ = s; }
    const ParameterBinding& bindings() const { return bindings_; }

    const std::vector<Expression>& components() const {
        if (!symbolic())
            throw SpecError("field has no symbolic components (dimension > 5 spec)");
        return components_;
    }

    std::vector<double> evaluate(std::span<const double> x) const;

private:
    int dimension_ = 0;
    std::vector<Expression> components_;
    ParameterBinding bindings_;
    Provenance provenance_ = Provenance::Synthesized;
    SingularSet singular_set_ = SingularSet::None;
    std::optional<DeformationSpec> cross_spec_;  // set in numeric mode
};

namespace detail {

// Signed cofactor expansion of the (n-1) x n matrix of gradient expressions:
// G_i = (-1)^(i+1) * minor_i, the generalized cross product with
// eps_{12..n} = +1. Expansion is pruned through simplify, so zero entries
// (the common case for these sparse gradients) drop out early.
inline Expression symbolic_minor(const std::vector<std::vector<Expression>>& g,
                                 std::vector<int> cols, int row) {
    const int m = static_cast<int>(cols.size());
    if (m == 1) return g[static_cast<std::size_t>(row)][static_cast<std::size_t>(cols[0])];
    Expression acc;
    bool first = true;
    for (int j = 0; j < m; ++j) {
        std::vector<int> rest;
        rest.reserve(static_cast<std::size_t>(m - 1));
        for (int l = 0; l < m; ++l)
            if (l != j) rest.push_back(cols[static_cast<std::size_t>(l)]);
        Expression term =
            g[static_cast<std::size_t>(row)][static_cast<std::size_t>(cols[static_cast<std::size_t>(j)])] *
            symbolic_minor(g, std::move(rest), row + 1);
        if (j % 2 == 1) term = -term;
        term = term.simplified();
        if (first) {
            acc = std::move(term);
            first = false;
        } else {
            acc = acc + term;
        }
    }
    return acc.simplified();
}

inline std::vector<std::vector<Expression>> gradient_expressions(const DeformationSpec& spec) {
    std::vector<std::vector<Expression>> g;
    for (int k = 1; k < spec.dimension; ++k) {
        std::vector<Expression> row;
        Expression ik = spec.invariant(k);
        for (int j = 1; j <= spec.dimension; ++j)
            row.push_back(ik.derivative(j).simplified());
        g.push_back(std::move(row));
    }
    return g;
}

}  // namespace detail

// Caches the invariant expressions and their gradients so per-step evaluation
// (projection, rank checks) does not re-differentiate the trees.
class InvariantGradients {
public:
    explicit InvariantGradients(const DeformationSpec& spec)
        : spec_(&spec),
          invariants_(spec.invariants()),
          gradients_(detail::gradient_expressions(spec)) {}

    int dimension() const { return spec_->dimension; }

    std::vector<double> values(std::span<const double> x) const {
        std::vector<double> out;
        out.reserve(invariants_.size());
        for (const auto& ik : invariants_) out.push_back(ik.evaluate(x, spec_->bindings));
        return out;
    }

    linalg::Matrix matrix(std::span<const double> x) const {
        const int n = spec_->dimension;
        linalg::Matrix J(n - 1, n);
        for (int k = 0; k < n - 1; ++k)
            for (int j = 0; j < n; ++j)
                J(k, j) = gradients_[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)]
                              .evaluate(x, spec_->bindings);
        return J;
    }

    const std::vector<Expression>& invariants() const { return invariants_; }
    const std::vector<std::vector<Expression>>& gradients() const { return gradients_; }

private:
    const DeformationSpec* spec_;
    std::vector<Expression> invariants_;
    std::vector<std::vector<Expression>> gradients_;
};

inline linalg::Matrix DeformationSpec::gradient_matrix(std::span<const double> x) const {
    return InvariantGradients(*this).matrix(x);
}

// The n-dimensional construction: V = c_n * G with G the generalized cross
// product of the invariant gradients and c_n = (-1)^(n-1) / 2^(n-1). The
// constant is fixed by requiring that zero deformation gives exactly
// xdot_i = prod_{j != i} x_j.
inline VectorField build_deformed_nd(const DeformationSpec& spec) {
    spec.validate();
    const int n = spec.dimension;
    if (n > 5) return VectorField::numeric_cross_product(spec);

    auto g = detail::gradient_expressions(spec);
    const double cn = ((n - 1) % 2 == 0 ? 1.0 : -1.0) / std::ldexp(1.0, n - 1);
    const Expression scale = Expression::number(cn, n);

    std::vector<Expression> components;
    components.reserve(static_cast<std::size_t>(n));
    std::vector<int> all_cols(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) all_cols[static_cast<std::size_t>(j)] = j;
    for (int i = 0; i < n; ++i) {
        std::vector<int> cols;
        cols.reserve(static_cast<std::size_t>(n - 1));
        for (int j = 0; j < n; ++j)
            if (j != i) cols.push_back(j);
        Expression minor = detail::symbolic_minor(g, std::move(cols), 0);
        Expression gi = (i % 2 == 0) ? minor : (-minor).simplified();
        components.push_back((scale * gi).simplified());
    }
    return VectorField(std::move(components), spec.bindings, Provenance::Synthesized);
}

// The expanded three-dimensional closed form, with a = a_1 and b = a_2:
//
//   xdot1 = x2 x3 + d2a d3b - d3a d2b - x3 d2a - x2 d3b
//   xdot2 = x1 x3 + d3a d1b - d1a d3b + x1 d3(a - b) + x3 d1a
//   xdot3 = x1 x2 + d1a d2b - d2a d1b - x1 d2(a - b) + x2 d1b
inline VectorField build_deformed_3d(const DeformationSpec& spec) {
    spec.validate();
    if (spec.dimension != 3)
        throw SpecError("build_deformed_3d requires dimension 3");

    const Expression& alpha = spec.deformations[0];
    const Expression& beta = spec.deformations[1];
    auto d = [](const Expression& e, int i) { return e.derivative(i).simplified(); };
    const Expression da1 = d(alpha, 1), da2 = d(alpha, 2), da3 = d(alpha, 3);
    const Expression db1 = d(beta, 1), db2 = d(beta, 2), db3 = d(beta, 3);
    const Expression x1 = Expression::coordinate(1, 3);
    const Expression x2 = Expression::coordinate(2, 3);
    const Expression x3 = Expression::coordinate(3, 3);

    Expression v1 = x2 * x3 + da2 * db3 - da3 * db2 - x3 * da2 - x2 * db3;
    Expression v2 = x1 * x3 + da3 * db1 - da1 * db3 + x1 * (da3 - db3) + x3 * da1;
    Expression v3 = x1 * x2 + da1 * db2 - da2 * db1 - x1 * (da2 - db2) + x2 * db1;

    std::vector<Expression> components{v1.simplified(), v2.simplified(), v3.simplified()};
    return VectorField(std::move(components), spec.bindings, Provenance::Synthesized);
}

inline VectorField VectorField::numeric_cross_product(DeformationSpec spec) {
    spec.validate();
    VectorField f;
    f.dimension_ = spec.dimension;
    f.bindings_ = spec.bindings;
    f.provenance_ = Provenance::Synthesized;
    f.cross_spec_ = std::move(spec);
    return f;
}

inline std::vector<double> VectorField::evaluate(std::span<const double> x) const {
    if (static_cast<int>(x.size()) != dimension_)
        throw std::invalid_argument("state length does not match field dimension");
    std::vector<double> out(static_cast<std::size_t>(dimension_));
    if (symbolic()) {
        for (int i = 0; i < dimension_; ++i)
            out[static_cast<std::size_t>(i)] =
                components_[static_cast<std::size_t>(i)].evaluate(x, bindings_);
        return out;
    }
    // Numeric mode: per-point cofactor evaluation of the gradient matrix.
    const int n = dimension_;
    linalg::Matrix J = cross_spec_->gradient_matrix(x);
    const double cn = ((n - 1) % 2 == 0 ? 1.0 : -1.0) / std::ldexp(1.0, n - 1);
    for (int i = 0; i < n; ++i) {
        linalg::Matrix minor(n - 1, n - 1);
        for (int r = 0; r < n - 1; ++r) {
            int cc = 0;
            for (int c = 0; c < n; ++c)
                if (c != i) minor(r, cc++) = J(r, c);
        }
        const double sign = (i % 2 == 0) ? 1.0 : -1.0;
        out[static_cast<std::size_t>(i)] = cn * sign * linalg::determinant(std::move(minor));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Built-in systems.

struct BuiltinSystem {
    std::string name;
    DeformationSpec spec;
    // Hand-coded closed form where one is known, kept as an independent
    // oracle for the synthesized field.
    std::optional<VectorField> closed_form;
};

namespace detail {

inline Expression zero_deformation(int n) { return Expression::number(0.0, n); }

inline std::vector<Expression> euler_product_field(int n) {
    std::vector<Expression> comps;
    for (int i = 1; i <= n; ++i) {
        Expression prod = Expression::number(1.0, n);
        bool first = true;
        for (int j = 1; j <= n; ++j) {
            if (j == i) continue;
            Expression xj = Expression::coordinate(j, n);
            prod = first ? xj : prod * xj;
            first = false;
        }
        comps.push_back(prod);
    }
    return comps;
}

}  // namespace detail

// name in {euler3, euler_nd, cube_root_deform, quartic_deform}. The coupling
// is bound to the parameter g for the deformed systems and ignored otherwise.
inline BuiltinSystem builtin(const std::string& name, int dimension = 3, double coupling = 1.0) {
    BuiltinSystem out;
    out.name = name;

    if (name == "euler3" || name == "euler_nd") {
        const int n = (name == "euler3") ? 3 : dimension;
        if (name == "euler3" && dimension != 3)
            throw SpecError("euler3 is three-dimensional");
        if (n < 3) throw SpecError("euler_nd requires dimension >= 3");
        out.spec.dimension = n;
        for (int k = 1; k < n; ++k) out.spec.deformations.push_back(detail::zero_deformation(n));
        out.closed_form = VectorField(detail::euler_product_field(n), {}, Provenance::ClosedForm);
        return out;
    }

    if (name == "cube_root_deform") {
        if (dimension != 3) throw SpecError("cube_root_deform is three-dimensional");
        const std::set<std::string> params{"g"};
        out.spec.dimension = 3;
        out.spec.deformations.push_back(parse("g / x1 - g / x2", 3, params));
        out.spec.deformations.push_back(parse("g / x1 - g / x3", 3, params));
        out.spec.bindings["g"] = coupling;

        auto comp = [&](int j, int l) {
            // x_j x_l - g (x_j^3 + x_l^3) / (x_j x_l)^2 + g^2 / (x_j x_l)^2
            const std::string xj = "x" + std::to_string(j);
            const std::string xl = "x" + std::to_string(l);
            const std::string text = xj + " * " + xl +
                " - g * (" + xj + " ^ 3 + " + xl + " ^ 3) / (" + xj + " * " + xl + ") ^ 2" +
                " + g ^ 2 / (" + xj + " * " + xl + ") ^ 2";
            return parse(text, 3, params);
        };
        std::vector<Expression> cf{comp(2, 3), comp(1, 3), comp(1, 2)};
        out.closed_form = VectorField(std::move(cf), out.spec.bindings,
                                      Provenance::ClosedForm, SingularSet::CoordinatePlanes);
        return out;
    }

    if (name == "quartic_deform") {
        if (dimension != 3) throw SpecError("quartic_deform is three-dimensional");
        const std::set<std::string> params{"g"};
        out.spec.dimension = 3;
        out.spec.deformations.push_back(parse(
            "(g / 2) * (1 / ((x1 - x2) * (x1 - x3)) - 1 / ((x2 - x1) * (x2 - x3)))", 3, params));
        out.spec.deformations.push_back(parse(
            "(g / 2) * (1 / ((x1 - x2) * (x1 - x3)) - 1 / ((x3 - x1) * (x3 - x2)))", 3, params));
        out.spec.bindings["g"] = coupling;

        auto comp = [&](int i, int j, int l) {
            // x_j x_l
            //   + g [x_i (x_j + x_l) - 2 x_j x_l] / (2 x_ij x_il x_jl^2)
            //   + g [x_j^2 + x_l^2 - x_i (x_j + x_l)] / (x_ij^2 x_il^2)
            //   - 3 g^2 / (2 x_12^2 x_13^2 x_23^2)
            auto xi = "x" + std::to_string(i);
            auto xj = "x" + std::to_string(j);
            auto xl = "x" + std::to_string(l);
            auto dif = [](const std::string& a, const std::string& b) {
                return "(" + a + " - " + b + ")";
            };
            const std::string xij = dif(xi, xj), xil = dif(xi, xl), xjl = dif(xj, xl);
            const std::string text =
                xj + " * " + xl +
                " + g * (" + xi + " * (" + xj + " + " + xl + ") - 2 * " + xj + " * " + xl + ")" +
                " / (2 * " + xij + " * " + xil + " * " + xjl + " ^ 2)" +
                " + g * (" + xj + " ^ 2 + " + xl + " ^ 2 - " + xi + " * (" + xj + " + " + xl + "))" +
                " / (" + xij + " ^ 2 * " + xil + " ^ 2)" +
                " - 3 * g ^ 2 / (2 * (x1 - x2) ^ 2 * (x1 - x3) ^ 2 * (x2 - x3) ^ 2)";
            return parse(text, 3, params);
        };
        std::vector<Expression> cf{comp(1, 2, 3), comp(2, 1, 3), comp(3, 1, 2)};
        out.closed_form = VectorField(std::move(cf), out.spec.bindings,
                                      Provenance::ClosedForm, SingularSet::CoincidencePlanes);
        return out;
    }

    throw SpecError("unknown builtin system '" + name + "'");
}

// Synthesize the field for a builtin, tagging its singular set.
inline VectorField synthesize(const BuiltinSystem& sys) {
    VectorField f = (sys.spec.dimension == 3) ? build_deformed_3d(sys.spec)
                                              : build_deformed_nd(sys.spec);
    if (sys.closed_form) f.set_singular_set(sys.closed_form->singular_set());
    return f;
}

// ---------------------------------------------------------------------------
// Scaling normalization: the general quadratic system xdot_i = k_i x_j x_l
// maps onto the symmetric form by x_i -> a_i x_i with a_i = 1/sqrt(k_j k_l).

struct ScalingCoefficients {
    double a1 = 1.0, a2 = 1.0, a3 = 1.0;
};

struct NoRealScalingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline ScalingCoefficients normalize_rigid_body(double k1, double k2, double k3) {
    const double p1 = k2 * k3, p2 = k1 * k3, p3 = k1 * k2;
    if (p1 <= 0.0 || p2 <= 0.0 || p3 <= 0.0)
        throw NoRealScalingError(
            "no real scaling: a coefficient product k_j * k_l is not positive");
    return {1.0 / std::sqrt(p1), 1.0 / std::sqrt(p2), 1.0 / std::sqrt(p3)};
}

// ---------------------------------------------------------------------------
// Equilibrium scan: grid-seeded Levenberg-Marquardt refinement of |V| = 0.

struct Box {
    std::vector<std::pair<double, double>> bounds;  // per-coordinate [lo, hi]

    bool contains(std::span<const double> x, double slack = 1e-6) const {
        for (std::size_t i = 0; i < bounds.size(); ++i)
            if (x[i] < bounds[i].first - slack || x[i] > bounds[i].second + slack) return false;
        return true;
    }
};

inline std::vector<std::vector<double>> equilibria_scan(const VectorField& v, const Box& box,
                                                        int grid, double residual_tol = 1e-10) {
    const int n = v.dimension();
    if (static_cast<int>(box.bounds.size()) != n)
        throw std::invalid_argument("equilibria_scan: box dimension mismatch");
    for (auto [lo, hi] : box.bounds)
        if (!(hi > lo)) throw std::invalid_argument("equilibria_scan: degenerate box");
    if (grid < 2) throw std::invalid_argument("equilibria_scan: grid must be >= 2");

    // Jacobian of the field, symbolic when available.
    std::vector<std::vector<Expression>> jac;
    if (v.symbolic()) {
        for (const auto& comp : v.components()) {
            std::vector<Expression> row;
            for (int j = 1; j <= n; ++j) row.push_back(comp.derivative(j).simplified());
            jac.push_back(std::move(row));
        }
    }

    auto eval_jacobian = [&](std::span<const double> x) {
        linalg::Matrix J(n, n);
        if (!jac.empty()) {
            for (int r = 0; r < n; ++r)
                for (int c = 0; c < n; ++c)
                    J(r, c) = jac[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)]
                                  .evaluate(x, v.bindings());
        } else {
            const double h = 1e-6;
            std::vector<double> xp(x.begin(), x.end()), xm(x.begin(), x.end());
            for (int c = 0; c < n; ++c) {
                xp[static_cast<std::size_t>(c)] += h;
                xm[static_cast<std::size_t>(c)] -= h;
                auto fp = v.evaluate(xp), fm = v.evaluate(xm);
                for (int r = 0; r < n; ++r)
                    J(r, c) = (fp[static_cast<std::size_t>(r)] - fm[static_cast<std::size_t>(r)]) / (2 * h);
                xp[static_cast<std::size_t>(c)] = x[static_cast<std::size_t>(c)];
                xm[static_cast<std::size_t>(c)] = x[static_cast<std::size_t>(c)];
            }
        }
        return J;
    };

    auto norm2 = [](std::span<const double> f) {
        double s = 0.0;
        for (double c : f) s += c * c;
        return s;
    };

    std::vector<std::vector<double>> zeros;
    auto try_record = [&](const std::vector<double>& x) {
        for (const auto& z : zeros) {
            double d = 0.0;
            for (int i = 0; i < n; ++i)
                d = std::max(d, std::abs(z[static_cast<std::size_t>(i)] - x[static_cast<std::size_t>(i)]));
            if (d < 1e-6) return;
        }
        zeros.push_back(x);
    };

    std::vector<int> idx(static_cast<std::size_t>(n), 0);
    for (;;) {
        std::vector<double> x(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            auto [lo, hi] = box.bounds[static_cast<std::size_t>(i)];
            x[static_cast<std::size_t>(i)] =
                lo + (hi - lo) * idx[static_cast<std::size_t>(i)] / (grid - 1);
        }

        // Levenberg-Marquardt from this seed.
        try {
            double lambda = 1e-3;
            std::vector<double> f = v.evaluate(x);
            double fn = norm2(f);
            for (int it = 0; it < 80 && fn > residual_tol * residual_tol * 0.01; ++it) {
                linalg::Matrix J = eval_jacobian(x);
                // (J^T J + lambda I) dx = -J^T f
                linalg::Matrix A(n, n);
                std::vector<double> rhs(static_cast<std::size_t>(n), 0.0);
                for (int r = 0; r < n; ++r) {
                    for (int c = 0; c < n; ++c) {
                        double s = 0.0;
                        for (int k = 0; k < n; ++k) s += J(k, r) * J(k, c);
                        A(r, c) = s;
                    }
                    double s = 0.0;
                    for (int k = 0; k < n; ++k)
                        s += J(k, r) * f[static_cast<std::size_t>(k)];
                    rhs[static_cast<std::size_t>(r)] = -s;
                }
                for (int r = 0; r < n; ++r) A(r, r) += lambda * (A(r, r) + 1e-12);
                std::vector<double> dx;
                try {
                    dx = linalg::solve(std::move(A), rhs);
                } catch (const linalg::SingularMatrixError&) {
                    lambda *= 10.0;
                    continue;
                }
                std::vector<double> xn(x);
                for (int i = 0; i < n; ++i) xn[static_cast<std::size_t>(i)] += dx[static_cast<std::size_t>(i)];
                std::vector<double> fnw;
                double f2 = std::numeric_limits<double>::infinity();
                try {
                    fnw = v.evaluate(xn);
                    f2 = norm2(fnw);
                } catch (const EvalError&) {
                }
                if (f2 < fn) {
                    x = std::move(xn);
                    f = std::move(fnw);
                    fn = f2;
                    lambda = std::max(lambda * 0.3, 1e-12);
                } else {
                    lambda *= 10.0;
                    if (lambda > 1e12) break;
                }
            }
            double resid = 0.0;
            for (double c : f) resid = std::max(resid, std::abs(c));
            if (resid <= residual_tol && box.contains(x)) try_record(x);
        } catch (const EvalError&) {
            // seed sits on a singular set; skip it
        }

        int d = 0;
        while (d < n && ++idx[static_cast<std::size_t>(d)] == grid) {
            idx[static_cast<std::size_t>(d)] = 0;
            ++d;
        }
        if (d == n) break;
    }
    return zeros;
}

}  // namespace eulertop
