#include "doctest.h"
#include "test_support.hpp"

using namespace lazygnn;
using support::Edges;

TEST_SUITE("propagation") {

TEST_CASE("hyperparameter validation") {
    CHECK_NOTHROW(Hyperparams<double>(1.0));
    CHECK_NOTHROW(Hyperparams<double>(0.5, 0.0, 1.0, 1));
    CHECK_THROWS_AS(Hyperparams<double>(0.0), std::invalid_argument);
    CHECK_THROWS_AS(Hyperparams<double>(1.0 + 1e-9), std::invalid_argument);
    CHECK_THROWS_AS(Hyperparams<double>(0.5, -0.1), std::invalid_argument);
    CHECK_THROWS_AS(Hyperparams<double>(0.5, 0.5, 1.1), std::invalid_argument);
    CHECK_THROWS_AS(Hyperparams<double>(0.5, 0.5, 0.5, 0), std::invalid_argument);
}

TEST_CASE("two-node example: one step, fixed point, and implicit gradient agree") {
    SparseGraph<double> g = support::normalized_graph({{0, 1}}, 2);
    Matrix<double> x_in(2, 1);
    x_in(0, 0) = 1.0;
    x_in(1, 0) = 0.0;

    Matrix<double> x1 = propagate_forward(g, x_in, x_in, 0.5, 1);
    CHECK(x1(0, 0) == doctest::Approx(0.75).epsilon(1e-14));
    CHECK(x1(1, 0) == doctest::Approx(0.25).epsilon(1e-14));

    Matrix<double> xs = fixed_point_solve(g, x_in, 0.5, 1e-12);
    CHECK(xs(0, 0) == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(xs(1, 0) == doctest::Approx(0.25).epsilon(1e-12));

    Matrix<double> z = implicit_grad_reference(g, x_in, 0.5);
    CHECK(z(0, 0) == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(z(1, 0) == doctest::Approx(0.25).epsilon(1e-12));

    CHECK(denoise_objective(g, x_in, x_in, 0.5) == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("objective matches a dense quadratic-form oracle") {
    Rng rng(101);
    for (int trial = 0; trial < 10; ++trial) {
        size_t n = 3 + rng.uniform_index(25);
        SparseGraph<double> g = support::normalized_graph(support::er_edges(n, 0.25, rng), n);
        Matrix<double> x = support::random_matrix(n, 3, rng);
        Matrix<double> x_in = support::random_matrix(n, 3, rng);
        double alpha = rng.uniform(0.1, 0.9);
        Eigen::MatrixXd a = support::dense_from_csr(g);
        Eigen::MatrixXd xd = support::to_eigen(x), xind = support::to_eigen(x_in);
        double ref = (xd - xind).squaredNorm() +
                     (1.0 / alpha - 1.0) *
                         (xd.transpose() * ((Eigen::MatrixXd::Identity(a.rows(), a.cols()) - a) * xd))
                             .trace();
        CHECK(denoise_objective(g, x, x_in, alpha) == doctest::Approx(ref).epsilon(1e-12));
    }
}

TEST_CASE("forward iterates contract geometrically toward the fixed point") {
    Rng rng(57);
    for (int trial = 0; trial < 8; ++trial) {
        size_t n = 4 + rng.uniform_index(40);
        Edges edges = support::er_edges(n, 0.2, rng);
        SparseGraph<double> g = support::normalized_graph(edges, n);
        Matrix<double> x_in = support::random_matrix(n, 4, rng);
        double alpha = rng.uniform(0.15, 0.9);
        Matrix<double> xs = support::fixed_point_dense(g, x_in, alpha);
        double base = frobenius_distance(x_in, xs);
        for (size_t layers : {1, 3, 10, 40}) {
            Matrix<double> xl = propagate_forward(g, x_in, x_in, alpha, layers);
            double bound = std::pow(1.0 - alpha, static_cast<double>(layers)) * base;
            CHECK(frobenius_distance(xl, xs) <= bound * (1.0 + 1e-10) + 1e-13);
        }
    }
}

TEST_CASE("objective descends monotonically along forward iterates") {
    Rng rng(71);
    size_t n = 30;
    SparseGraph<double> g = support::normalized_graph(support::er_edges(n, 0.2, rng), n);
    Matrix<double> x_in = support::random_matrix(n, 3, rng);
    for (double alpha : {0.2, 0.5, 0.9}) {
        Matrix<double> x = x_in;
        double prev = denoise_objective(g, x, x_in, alpha);
        for (int step = 0; step < 30; ++step) {
            x = propagate_forward(g, x, x_in, alpha, 1);
            double cur = denoise_objective(g, x, x_in, alpha);
            CHECK(cur <= prev + 1e-10);
            prev = cur;
        }
    }
}

TEST_CASE("fixed point minimizes the objective") {
    Rng rng(73);
    size_t n = 20;
    SparseGraph<double> g = support::normalized_graph(support::er_edges(n, 0.3, rng), n);
    Matrix<double> x_in = support::random_matrix(n, 2, rng);
    double alpha = 0.4;
    Matrix<double> xs = fixed_point_solve(g, x_in, alpha, 1e-12);
    double at_min = denoise_objective(g, xs, x_in, alpha);
    for (int trial = 0; trial < 10; ++trial) {
        Matrix<double> perturbed = xs;
        for (double& v : perturbed.data()) v += 0.01 * rng.normal();
        CHECK(denoise_objective(g, perturbed, x_in, alpha) >= at_min - 1e-12);
    }
}

TEST_CASE("forward and backward propagation are adjoint maps") {
    Rng rng(83);
    for (int trial = 0; trial < 8; ++trial) {
        size_t n = 3 + rng.uniform_index(30);
        SparseGraph<double> g = support::normalized_graph(support::er_edges(n, 0.25, rng), n);
        Matrix<double> x = support::random_matrix(n, 3, rng);
        Matrix<double> y = support::random_matrix(n, 3, rng);
        double alpha = rng.uniform(0.1, 0.95);
        size_t layers = 1 + rng.uniform_index(6);
        // both directions apply P^L + alpha * sum_{i<L} P^i with symmetric P
        Matrix<double> fx = propagate_forward(g, x, x, alpha, layers);
        Matrix<double> by = propagate_backward(g, y, alpha, layers);
        double lhs = 0, rhs = 0;
        for (size_t i = 0; i < fx.data().size(); ++i) {
            lhs += fx.data()[i] * y.data()[i];
            rhs += x.data()[i] * by.data()[i];
        }
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
    }
}

TEST_CASE("residual teleport term prevents collapse at depth") {
    Rng rng(91);
    size_t n = 25;
    Edges edges = support::er_edges(n, 0.15, rng);
    Edges spine = support::path_edges(n);  // guarantee connectivity
    edges.insert(edges.end(), spine.begin(), spine.end());
    SparseGraph<double> g = support::normalized_graph(edges, n);
    Matrix<double> x_in = support::random_matrix(n, 2, rng);
    double alpha = 0.2;

    Matrix<double> deep = propagate_forward(g, x_in, x_in, alpha, 500);
    Matrix<double> xs = support::fixed_point_dense(g, x_in, alpha);
    CHECK(frobenius_distance(deep, xs) < 1e-10);

    // without the residual term every column falls onto the dominant
    // eigendirection, so different inputs become indistinguishable up to scale
    Matrix<double> collapsed = x_in;
    Matrix<double> other = support::random_matrix(n, 2, rng);
    for (int i = 0; i < 500; ++i) {
        collapsed = spmm(g, collapsed);
        other = spmm(g, other);
    }
    std::vector<double> dir(n);
    double dn = 0;
    for (size_t i = 0; i < n; ++i) {
        dir[i] = collapsed(i, 0);
        dn += dir[i] * dir[i];
    }
    dn = std::sqrt(dn);
    for (double& v : dir) v /= dn;
    auto off_direction = [&](const Matrix<double>& m, size_t c) {
        double dot = 0, norm = 0;
        for (size_t i = 0; i < n; ++i) dot += m(i, c) * dir[i];
        for (size_t i = 0; i < n; ++i) {
            double r = m(i, c) - dot * dir[i];
            norm += r * r;
        }
        double total = 0;
        for (size_t i = 0; i < n; ++i) total += m(i, c) * m(i, c);
        return std::sqrt(norm) / std::sqrt(total);
    };
    CHECK(off_direction(collapsed, 1) < 1e-8);
    CHECK(off_direction(other, 0) < 1e-8);
    CHECK(off_direction(other, 1) < 1e-8);
    // the teleport residual keeps the solution off that single direction
    CHECK(off_direction(deep, 0) > 0.05);
    CHECK(off_direction(deep, 1) > 0.05);
}

TEST_CASE("backward propagation converges to the implicit reference") {
    Rng rng(97);
    for (int trial = 0; trial < 6; ++trial) {
        size_t n = 3 + rng.uniform_index(40);
        SparseGraph<double> g = support::normalized_graph(support::er_edges(n, 0.2, rng), n);
        Matrix<double> grad_top = support::random_matrix(n, 3, rng);
        double alpha = rng.uniform(0.1, 0.9);
        Matrix<double> limit = propagate_backward(g, grad_top, alpha, 500);
        Matrix<double> ref = implicit_grad_reference(g, grad_top, alpha);
        CHECK(frobenius_distance(limit, ref) < 1e-8);
    }
}

TEST_CASE("beta=1 and gamma=1 reduce laziness to plain propagation bitwise") {
    Rng rng(103);
    size_t n = 18;
    SparseGraph<double> g = support::normalized_graph(support::er_edges(n, 0.25, rng), n);
    Matrix<double> x_in = support::random_matrix(n, 4, rng);
    Matrix<double> history = support::random_matrix(n, 4, rng);
    for (size_t layers : {1, 2, 5}) {
        Hyperparams<double> hp(0.35, 1.0, 1.0, layers);
        Matrix<double> lazy = lazy_forward(g, history, x_in, hp);
        Matrix<double> plain = propagate_forward(g, x_in, x_in, 0.35, layers);
        for (size_t i = 0; i < lazy.data().size(); ++i) CHECK(lazy.data()[i] == plain.data()[i]);

        Matrix<double> lazy_b = lazy_backward(g, history, x_in, hp);
        Matrix<double> plain_b = propagate_backward(g, x_in, 0.35, layers);
        for (size_t i = 0; i < lazy_b.data().size(); ++i)
            CHECK(lazy_b.data()[i] == plain_b.data()[i]);
    }
}

TEST_CASE("self-seeded lazy refinement converges to its closed-form limit") {
    Rng rng(107);
    for (int trial = 0; trial < 6; ++trial) {
        size_t n = 4 + rng.uniform_index(30);
        SparseGraph<double> g = support::normalized_graph(support::er_edges(n, 0.25, rng), n);
        Matrix<double> x_in = support::random_matrix(n, 3, rng);
        double alpha = rng.uniform(0.15, 0.8);
        double beta = 0.5;
        size_t layers = 1 + rng.uniform_index(3);
        Hyperparams<double> hp(alpha, beta, 0.5, layers);
        Matrix<double> h = x_in;
        for (int k = 0; k < 400; ++k) h = lazy_forward(g, h, x_in, hp);
        Matrix<double> limit = support::self_seeded_limit_dense(g, x_in, alpha, beta, layers);
        CHECK(frobenius_distance(h, limit) < 1e-10);
    }
}

TEST_CASE("on clique unions the self-seeded limit is the fixed point") {
    Rng rng(109);
    SparseGraph<double> g = support::normalized_graph(support::clique_union_edges({4, 7, 3}), 14);
    Matrix<double> x_in = support::random_matrix(14, 3, rng);
    for (double alpha : {0.2, 0.5, 0.8}) {
        Hyperparams<double> hp(alpha, 0.5, 0.5, 1);
        Matrix<double> xs = fixed_point_solve(g, x_in, alpha, 1e-12);
        Matrix<double> h = x_in;
        for (int k = 0; k < 200; ++k) h = lazy_forward(g, h, x_in, hp);
        CHECK(frobenius_distance(h, xs) < 1e-10);
    }
}

TEST_CASE("fixed point solver meets its residual contract") {
    Rng rng(113);
    SUBCASE("dense path for small graphs") {
        for (int trial = 0; trial < 6; ++trial) {
            size_t n = 3 + rng.uniform_index(60);
            SparseGraph<double> g = support::normalized_graph(support::er_edges(n, 0.2, rng), n);
            Matrix<double> x_in = support::random_matrix(n, 3, rng);
            double alpha = rng.uniform(0.05, 0.95);
            Matrix<double> xs = fixed_point_solve(g, x_in, alpha, 1e-10);
            Matrix<double> px = spmm(g, xs);
            Matrix<double> next = linear_combination(1.0 - alpha, px, alpha, x_in);
            CHECK(frobenius_distance(xs, next) / (1.0 + frobenius_norm(x_in)) < 1e-10);
        }
    }
    SUBCASE("iterative path for large graphs") {
        size_t n = 600;
        SparseGraph<double> g = support::normalized_graph(support::er_edges(n, 0.01, rng), n);
        Matrix<double> x_in = support::random_matrix(n, 2, rng);
        Matrix<double> xs = fixed_point_solve(g, x_in, 0.3, 1e-10);
        Matrix<double> px = spmm(g, xs);
        Matrix<double> next = linear_combination(0.7, px, 0.3, x_in);
        CHECK(frobenius_distance(xs, next) / (1.0 + frobenius_norm(x_in)) < 1e-8);
    }
    SUBCASE("alpha=1 returns the input unchanged") {
        SparseGraph<double> g = support::normalized_graph(support::path_edges(5), 5);
        Matrix<double> x_in = support::random_matrix(5, 2, rng);
        Matrix<double> xs = fixed_point_solve(g, x_in, 1.0, 1e-10);
        for (size_t i = 0; i < xs.data().size(); ++i) CHECK(xs.data()[i] == x_in.data()[i]);
    }
}

TEST_CASE("iteration budget exhaustion reports the residual") {
    SparseGraph<double> g = support::normalized_graph(support::path_edges(6), 6);
    Rng rng(127);
    Matrix<double> x_in = support::random_matrix(6, 2, rng);
    CHECK_THROWS_AS(fixed_point_iterate(g, x_in, 0.05, 1e-14, 2), std::runtime_error);
}

TEST_CASE("implicit reference rejects graphs beyond the dense-solve bound") {
    Rng rng(131);
    SparseGraph<double> g = support::normalized_graph(support::path_edges(513), 513);
    Matrix<double> grad_top(513, 1, 1.0);
    CHECK_THROWS_AS(implicit_grad_reference(g, grad_top, 0.5), std::invalid_argument);
}

TEST_CASE("single precision instantiation works end to end") {
    SparseGraph<float> g = normalize(build_graph<float>({{0, 1}, {1, 2}}, 3), true);
    Matrix<float> x_in(3, 2, 1.0f);
    Matrix<float> xl = propagate_forward(g, x_in, x_in, 0.5f, 3);
    Matrix<float> xs = fixed_point_solve(g, x_in, 0.5f, 1e-5f);
    CHECK(frobenius_distance(xl, xs) < 1e-3f);
}

}  // TEST_SUITE
