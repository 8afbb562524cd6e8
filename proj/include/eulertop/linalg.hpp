#pragma once

// Small dense helpers for the (n-1) x n gradient matrices that show up in
// projection, rank diagnostics and the equilibrium scan. Everything here is
// sized for n of a few, so plain O(n^3) routines are used throughout.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <vector>

namespace eulertop::linalg {

struct Matrix {
    int rows = 0, cols = 0;
    std::vector<double> a;  // row major

    Matrix() = default;
    Matrix(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c, 0.0) {}

    double& operator()(int r, int c) { return a[static_cast<std::size_t>(r) * cols + c]; }
    double operator()(int r, int c) const { return a[static_cast<std::size_t>(r) * cols + c]; }
};

struct SingularMatrixError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Gaussian elimination with partial pivoting; A is modified in place.
inline std::vector<double> solve(Matrix A, std::vector<double> b) {
    const int n = A.rows;
    if (A.cols != n || static_cast<int>(b.size()) != n)
        throw std::invalid_argument("solve: shape mismatch");
    for (int k = 0; k < n; ++k) {
        int piv = k;
        for (int r = k + 1; r < n; ++r)
            if (std::abs(A(r, k)) > std::abs(A(piv, k))) piv = r;
        if (A(piv, k) == 0.0) throw SingularMatrixError("singular linear system");
        if (piv != k) {
            for (int c = k; c < n; ++c) std::swap(A(piv, c), A(k, c));
            std::swap(b[piv], b[k]);
        }
        for (int r = k + 1; r < n; ++r) {
            const double f = A(r, k) / A(k, k);
            if (f == 0.0) continue;
            for (int c = k + 1; c < n; ++c) A(r, c) -= f * A(k, c);
            b[r] -= f * b[k];
        }
    }
    std::vector<double> x(static_cast<std::size_t>(n));
    for (int r = n - 1; r >= 0; --r) {
        double s = b[r];
        for (int c = r + 1; c < n; ++c) s -= A(r, c) * x[c];
        x[r] = s / A(r, r);
    }
    return x;
}

// Determinant via LU with partial pivoting (used for per-point cofactor
// evaluation of large gradient matrices).
inline double determinant(Matrix A) {
    const int n = A.rows;
    if (A.cols != n) throw std::invalid_argument("determinant: not square");
    double det = 1.0;
    for (int k = 0; k < n; ++k) {
        int piv = k;
        for (int r = k + 1; r < n; ++r)
            if (std::abs(A(r, k)) > std::abs(A(piv, k))) piv = r;
        if (A(piv, k) == 0.0) return 0.0;
        if (piv != k) {
            for (int c = k; c < n; ++c) std::swap(A(piv, c), A(k, c));
            det = -det;
        }
        det *= A(k, k);
        for (int r = k + 1; r < n; ++r) {
            const double f = A(r, k) / A(k, k);
            if (f == 0.0) continue;
            for (int c = k + 1; c < n; ++c) A(r, c) -= f * A(k, c);
        }
    }
    return det;
}

// Singular values of a rows x cols matrix with rows <= cols, via one-sided
// Jacobi (Hestenes) rotations applied to the rows. Works on the rows directly
// rather than the Gram matrix, so small singular values are not squared away.
inline std::vector<double> singular_values(Matrix A) {
    const int m = A.rows, n = A.cols;
    if (m > n) throw std::invalid_argument("singular_values: expects rows <= cols");
    auto dot_rows = [&](int r1, int r2) {
        double s = 0.0;
        for (int c = 0; c < n; ++c) s += A(r1, c) * A(r2, c);
        return s;
    };
    for (int sweep = 0; sweep < 60; ++sweep) {
        bool rotated = false;
        for (int p = 0; p < m - 1; ++p) {
            for (int q = p + 1; q < m; ++q) {
                const double app = dot_rows(p, p);
                const double aqq = dot_rows(q, q);
                const double apq = dot_rows(p, q);
                if (std::abs(apq) <= 1e-30 ||
                    std::abs(apq) <= 1e-17 * std::sqrt(app * aqq))
                    continue;
                rotated = true;
                const double tau = (aqq - app) / (2.0 * apq);
                const double t = (tau >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (int k = 0; k < n; ++k) {
                    const double vp = A(p, k), vq = A(q, k);
                    A(p, k) = c * vp - s * vq;
                    A(q, k) = s * vp + c * vq;
                }
            }
        }
        if (!rotated) break;
    }
    std::vector<double> sigma(static_cast<std::size_t>(m));
    for (int r = 0; r < m; ++r) sigma[static_cast<std::size_t>(r)] = std::sqrt(dot_rows(r, r));
    std::sort(sigma.begin(), sigma.end(), std::greater<double>());
    return sigma;
}

inline double min_singular_value(Matrix A) {
    auto s = singular_values(std::move(A));
    return s.empty() ? 0.0 : s.back();
}

// Minimum-norm correction dx with J dx = -r, i.e. dx = -J^T (J J^T)^{-1} r.
// Throws SingularMatrixError when J J^T is rank deficient.
inline std::vector<double> min_norm_step(const Matrix& J, const std::vector<double>& r) {
    const int m = J.rows, n = J.cols;
    if (static_cast<int>(r.size()) != m)
        throw std::invalid_argument("min_norm_step: shape mismatch");
    Matrix gram(m, m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            double s = 0.0;
            for (int c = 0; c < n; ++c) s += J(i, c) * J(j, c);
            gram(i, j) = s;
        }
    std::vector<double> rhs(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) rhs[i] = -r[i];
    std::vector<double> lambda = solve(std::move(gram), std::move(rhs));
    std::vector<double> dx(static_cast<std::size_t>(n), 0.0);
    for (int c = 0; c < n; ++c) {
        double s = 0.0;
        for (int i = 0; i < m; ++i) s += J(i, c) * lambda[static_cast<std::size_t>(i)];
        dx[static_cast<std::size_t>(c)] = s;
    }
    return dx;
}

}  // namespace eulertop::linalg
