#pragma once

// Shared test helpers. The closed-form evaluators here are deliberately
// independent of the expression pipeline (templated scalar arithmetic, long
// double capable) so they can serve as oracles for the synthesized fields.

#include <array>
#include <cmath>
#include <random>
#include <span>
#include <vector>

#include "eulertop/expr.hpp"
#include "eulertop/field.hpp"

namespace testutil {

using eulertop::Expression;

// --- independent closed-form fields ----------------------------------------

template <class T>
std::array<T, 3> euler3_field(const std::array<T, 3>& x) {
    return {x[1] * x[2], x[0] * x[2], x[0] * x[1]};
}

template <class T>
std::array<T, 3> cube_root_field(const std::array<T, 3>& x, T g) {
    auto comp = [&](T xj, T xl) {
        const T p = xj * xl;
        return p - g * (xj * xj * xj + xl * xl * xl) / (p * p) + g * g / (p * p);
    };
    return {comp(x[1], x[2]), comp(x[0], x[2]), comp(x[0], x[1])};
}

template <class T>
std::array<T, 3> quartic_field(const std::array<T, 3>& x, T g) {
    const T x1 = x[0], x2 = x[1], x3 = x[2];
    const T x12 = x1 - x2, x13 = x1 - x3, x23 = x2 - x3;
    const T x21 = -x12, x31 = -x13, x32 = -x23;
    const T common = T(3) * g * g / (T(2) * x12 * x12 * x13 * x13 * x23 * x23);
    return {
        x2 * x3 + g * (x1 * (x2 + x3) - T(2) * x2 * x3) / (T(2) * x12 * x13 * x23 * x23) +
            g * (x2 * x2 + x3 * x3 - x1 * (x2 + x3)) / (x12 * x12 * x13 * x13) - common,
        x1 * x3 + g * (x2 * (x1 + x3) - T(2) * x1 * x3) / (T(2) * x21 * x23 * x13 * x13) +
            g * (x1 * x1 + x3 * x3 - x2 * (x1 + x3)) / (x12 * x12 * x23 * x23) - common,
        x1 * x2 + g * (x3 * (x1 + x2) - T(2) * x1 * x2) / (T(2) * x32 * x31 * x12 * x12) +
            g * (x1 * x1 + x2 * x2 - x3 * (x1 + x2)) / (x23 * x23 * x13 * x13) - common,
    };
}

template <class T, std::size_t N>
std::array<T, N> euler_product_field(const std::array<T, N>& x) {
    std::array<T, N> out{};
    for (std::size_t i = 0; i < N; ++i) {
        T p = T(1);
        for (std::size_t j = 0; j < N; ++j)
            if (j != i) p *= x[j];
        out[i] = p;
    }
    return out;
}

// --- finite differences ------------------------------------------------------

inline double central_difference(const Expression& e, std::vector<double> x, int coordinate,
                                 double h, const eulertop::ParameterBinding& bindings = {}) {
    const std::size_t i = static_cast<std::size_t>(coordinate - 1);
    const double x0 = x[i];
    x[i] = x0 + h;
    const double fp = e.evaluate(x, bindings);
    x[i] = x0 - h;
    const double fm = e.evaluate(x, bindings);
    return (fp - fm) / (2.0 * h);
}

inline double fd_divergence(const eulertop::VectorField& v, std::span<const double> x, double h) {
    double div = 0.0;
    std::vector<double> xp(x.begin(), x.end()), xm(x.begin(), x.end());
    for (int i = 0; i < v.dimension(); ++i) {
        const std::size_t ii = static_cast<std::size_t>(i);
        xp[ii] += h;
        xm[ii] -= h;
        div += (v.evaluate(xp)[ii] - v.evaluate(xm)[ii]) / (2.0 * h);
        xp[ii] = x[ii];
        xm[ii] = x[ii];
    }
    return div;
}

// --- random expression generator over a safe positive domain ----------------
//
// Leaves and denominators are built positive on [0.6, 1.6]^n so evaluation,
// sqrt and ln stay in-domain and central differences are well conditioned.

class SafeExprGen {
public:
    SafeExprGen(int dimension, std::uint64_t seed) : n_(dimension), rng_(seed) {}

    Expression tree(int depth = 3) { return gen(depth); }

    std::vector<double> point() {
        std::uniform_real_distribution<double> dist(0.7, 1.5);
        std::vector<double> x(static_cast<std::size_t>(n_));
        for (auto& c : x) c = dist(rng_);
        return x;
    }

private:
    int n_;
    std::mt19937_64 rng_;

    double uniform(double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(rng_);
    }
    int pick(int k) { return std::uniform_int_distribution<int>(0, k - 1)(rng_); }

    Expression coordinate() {
        return Expression::coordinate(1 + pick(n_), n_);
    }

    // strictly positive on the sample domain
    Expression positive(int depth) {
        switch (depth <= 0 ? pick(2) : pick(4)) {
        case 0: return Expression::number(uniform(0.6, 2.0), n_);
        case 1: return coordinate();
        case 2: return coordinate() + Expression::number(uniform(0.4, 1.2), n_);
        default: return positive(depth - 1) * positive(depth - 1);
        }
    }

    Expression gen(int depth) {
        if (depth <= 0) {
            switch (pick(3)) {
            case 0: return Expression::number(uniform(-2.0, 2.0), n_);
            default: return coordinate();
            }
        }
        switch (pick(9)) {
        case 0: return gen(depth - 1) + gen(depth - 1);
        case 1: return gen(depth - 1) - gen(depth - 1);
        case 2: return gen(depth - 1) * gen(depth - 1);
        case 3: return gen(depth - 1) / positive(depth - 1);
        case 4: return -gen(depth - 1);
        case 5: return pow(gen(depth - 1), 1 + pick(3));
        case 6: return sqrt(positive(depth - 1));
        case 7: return ln(positive(depth - 1));
        default: return pick(2) == 0 ? sin(gen(depth - 1)) : cos(gen(depth - 1));
        }
    }
};

}  // namespace testutil
