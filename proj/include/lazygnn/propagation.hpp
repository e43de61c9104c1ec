#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "lazygnn/graph.hpp"
#include "lazygnn/matrix.hpp"

namespace lazygnn {

// alpha in (0,1]: residual weight of the input signal. alpha = 0 is rejected
// because the fixed point is then undefined. beta/gamma in [0,1] mix the
// forward/backward histories; layers is the per-call propagation depth.
template <class T>
struct Hyperparams {
    T alpha;
    T beta = T(0.5);
    T gamma = T(0.5);
    size_t layers = 1;

    Hyperparams(T alpha_, T beta_ = T(0.5), T gamma_ = T(0.5), size_t layers_ = 1)
        : alpha(alpha_), beta(beta_), gamma(gamma_), layers(layers_) {
        if (!(alpha > T(0)) || alpha > T(1))
            throw std::invalid_argument("Hyperparams: alpha must lie in (0, 1]");
        if (beta < T(0) || beta > T(1))
            throw std::invalid_argument("Hyperparams: beta must lie in [0, 1]");
        if (gamma < T(0) || gamma > T(1))
            throw std::invalid_argument("Hyperparams: gamma must lie in [0, 1]");
        if (layers == 0) throw std::invalid_argument("Hyperparams: layers must be >= 1");
    }
};

// ||x - x_in||_F^2 + (1/alpha - 1) * tr(x^T (I - A) x).
// The trace term is nonnegative because I - A is positive semidefinite.
template <class T>
T denoise_objective(const SparseGraph<T>& g, const Matrix<T>& x, const Matrix<T>& x_in, T alpha) {
    check_same_shape(x, x_in, "denoise_objective");
    if (x.rows() != g.num_nodes) throw std::invalid_argument("denoise_objective: row count mismatch");
    if (!(alpha > T(0)) || alpha > T(1))
        throw std::invalid_argument("denoise_objective: alpha must lie in (0, 1]");
    T fidelity = 0;
    for (size_t i = 0; i < x.data().size(); ++i) {
        T d = x.data()[i] - x_in.data()[i];
        fidelity += d * d;
    }
    Matrix<T> ax = spmm(g, x);
    T smoothness = 0;
    for (size_t i = 0; i < x.data().size(); ++i)
        smoothness += x.data()[i] * (x.data()[i] - ax.data()[i]);
    return fidelity + (T(1) / alpha - T(1)) * smoothness;
}

// L steps of x <- (1 - alpha) * A x + alpha * x_in starting from x0.
template <class T>
Matrix<T> propagate_forward(const SparseGraph<T>& g, const Matrix<T>& x0, const Matrix<T>& x_in,
                            T alpha, size_t layers) {
    check_same_shape(x0, x_in, "propagate_forward");
    if (x0.rows() != g.num_nodes)
        throw std::invalid_argument("propagate_forward: row count mismatch");
    Matrix<T> x = x0;
    for (size_t l = 0; l < layers; ++l) {
        Matrix<T> ax = spmm(g, x);
        for (size_t i = 0; i < x.data().size(); ++i)
            x.data()[i] = (T(1) - alpha) * ax.data()[i] + alpha * x_in.data()[i];
    }
    return x;
}

// Seeds the recursion from the previous iteration's output mixed with the
// fresh input, then propagates hp.layers steps. The caller persists the
// return value as the next history.
template <class T>
Matrix<T> lazy_forward(const SparseGraph<T>& g, const Matrix<T>& history, const Matrix<T>& x_in,
                       const Hyperparams<T>& hp) {
    check_same_shape(history, x_in, "lazy_forward");
    Matrix<T> x0 = linear_combination(T(1) - hp.beta, history, hp.beta, x_in);
    return propagate_forward(g, x0, x_in, hp.alpha, hp.layers);
}

namespace detail {

// In-place Cholesky (lower) of a symmetric positive definite matrix stored
// densely. Used for the N <= 512 solves; I - (1-alpha)A has eigenvalues in
// [alpha, 2 - alpha], so it is SPD whenever the spectral radius of A is <= 1.
template <class T>
void cholesky_factor(std::vector<T>& m, size_t n) {
    for (size_t j = 0; j < n; ++j) {
        T diag = m[j * n + j];
        for (size_t k = 0; k < j; ++k) diag -= m[j * n + k] * m[j * n + k];
        if (!(diag > T(0))) throw std::runtime_error("cholesky_factor: matrix not positive definite");
        diag = std::sqrt(diag);
        m[j * n + j] = diag;
        for (size_t i = j + 1; i < n; ++i) {
            T acc = m[i * n + j];
            for (size_t k = 0; k < j; ++k) acc -= m[i * n + k] * m[j * n + k];
            m[i * n + j] = acc / diag;
        }
    }
}

// Solves L L^T z = b for every column of b, overwriting b with z.
template <class T>
void cholesky_solve(const std::vector<T>& chol, size_t n, Matrix<T>& b) {
    for (size_t c = 0; c < b.cols(); ++c) {
        for (size_t i = 0; i < n; ++i) {
            T acc = b(i, c);
            for (size_t k = 0; k < i; ++k) acc -= chol[i * n + k] * b(k, c);
            b(i, c) = acc / chol[i * n + i];
        }
        for (size_t ii = n; ii > 0; --ii) {
            size_t i = ii - 1;
            T acc = b(i, c);
            for (size_t k = i + 1; k < n; ++k) acc -= chol[k * n + i] * b(k, c);
            b(i, c) = acc / chol[i * n + i];
        }
    }
}

// Densifies I - (1-alpha)A and factors it once.
template <class T>
std::vector<T> factor_system(const SparseGraph<T>& g, T alpha) {
    const size_t n = g.num_nodes;
    std::vector<T> m(n * n, T(0));
    for (size_t i = 0; i < n; ++i) m[i * n + i] = T(1);
    for (size_t i = 0; i < n; ++i)
        for (size_t k = g.row_ptr[i]; k < g.row_ptr[i + 1]; ++k)
            m[i * n + g.col_idx[k]] -= (T(1) - alpha) * g.values[k];
    cholesky_factor(m, n);
    return m;
}

}  // namespace detail

// Residual of the stationarity condition g(x, x_in) = x - x_in + (1/alpha - 1)(I - A)x.
template <class T>
T fixed_point_residual(const SparseGraph<T>& g, const Matrix<T>& x, const Matrix<T>& x_in,
                       T alpha) {
    Matrix<T> ax = spmm(g, x);
    T acc = 0;
    const T c = T(1) / alpha - T(1);
    for (size_t i = 0; i < x.data().size(); ++i) {
        T r = x.data()[i] - x_in.data()[i] + c * (x.data()[i] - ax.data()[i]);
        acc += r * r;
    }
    return std::sqrt(acc);
}

// Power iteration path of the solver, exposed for direct use and for testing
// the non-convergence report. Iterates x <- (1-alpha)Ax + alpha x_in from x_in.
template <class T>
Matrix<T> fixed_point_iterate(const SparseGraph<T>& g, const Matrix<T>& x_in, T alpha, T tol,
                              size_t max_iters) {
    Matrix<T> x = propagate_forward(g, x_in, x_in, alpha, max_iters);
    T residual = fixed_point_residual(g, x, x_in, alpha);
    T bound = tol * (T(1) + frobenius_norm(x_in));
    if (!(residual <= bound))
        throw std::runtime_error("fixed_point_iterate: no convergence within " +
                                 std::to_string(max_iters) + " iterations, residual " +
                                 std::to_string(static_cast<double>(residual)));
    return x;
}

// X* = alpha (I - (1-alpha)A)^{-1} X_in. Dense Cholesky solve for N <= 512,
// iteration to tolerance otherwise. Post: ||g(X*, x_in)||_F <= tol (1 + ||x_in||_F).
template <class T>
Matrix<T> fixed_point_solve(const SparseGraph<T>& g, const Matrix<T>& x_in, T alpha, T tol) {
    if (x_in.rows() != g.num_nodes)
        throw std::invalid_argument("fixed_point_solve: row count mismatch");
    if (!(alpha > T(0)) || alpha > T(1))
        throw std::invalid_argument("fixed_point_solve: alpha must lie in (0, 1]");
    if (alpha == T(1)) return x_in;
    if (g.num_nodes <= 512) {
        std::vector<T> chol = detail::factor_system(g, alpha);
        Matrix<T> x = x_in;
        for (T& v : x.data()) v *= alpha;
        detail::cholesky_solve(chol, g.num_nodes, x);
        return x;
    }
    double cap = std::ceil(std::log(static_cast<double>(tol)) /
                           std::log(1.0 - static_cast<double>(alpha))) + 16.0;
    size_t max_iters = cap < 1.0 ? 17 : static_cast<size_t>(cap);
    if (max_iters > 100000) max_iters = 100000;
    return fixed_point_iterate(g, x_in, alpha, tol, max_iters);
}

// dL/dX_in = alpha (I - (1-alpha)A)^{-1} G, using the symmetry of A to apply
// the transposed system as a per-column solve. Dense oracle, N <= 512 only.
template <class T>
Matrix<T> implicit_grad_reference(const SparseGraph<T>& g, const Matrix<T>& grad_at_fixed_point,
                                  T alpha) {
    if (grad_at_fixed_point.rows() != g.num_nodes)
        throw std::invalid_argument("implicit_grad_reference: row count mismatch");
    if (!(alpha > T(0)) || alpha > T(1))
        throw std::invalid_argument("implicit_grad_reference: alpha must lie in (0, 1]");
    if (g.num_nodes > 512)
        throw std::invalid_argument("implicit_grad_reference: dense oracle limited to N <= 512");
    if (alpha == T(1)) return grad_at_fixed_point;
    std::vector<T> chol = detail::factor_system(g, alpha);
    Matrix<T> z = grad_at_fixed_point;
    for (T& v : z.data()) v *= alpha;
    detail::cholesky_solve(chol, g.num_nodes, z);
    return z;
}

// L steps of G <- (1 - alpha) A G + alpha grad_top starting from grad_top.
template <class T>
Matrix<T> propagate_backward(const SparseGraph<T>& g, const Matrix<T>& grad_top, T alpha,
                             size_t layers) {
    return propagate_forward(g, grad_top, grad_top, alpha, layers);
}

// Seeds the backward recursion from the previous input-gradient mixed with
// the fresh top gradient; the fresh gradient also drives the residual term.
template <class T>
Matrix<T> lazy_backward(const SparseGraph<T>& g, const Matrix<T>& grad_history,
                        const Matrix<T>& grad_top, const Hyperparams<T>& hp) {
    check_same_shape(grad_history, grad_top, "lazy_backward");
    Matrix<T> g0 = linear_combination(T(1) - hp.gamma, grad_history, hp.gamma, grad_top);
    return propagate_forward(g, g0, grad_top, hp.alpha, hp.layers);
}

}  // namespace lazygnn
