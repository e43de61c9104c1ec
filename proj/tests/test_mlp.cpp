#include "doctest.h"
#include "test_support.hpp"

using namespace lazygnn;

namespace {

Matrix<double> eigen_mlp_eval(const MlpParams<double>& p, const Matrix<double>& x) {
    Eigen::MatrixXd h = support::to_eigen(x);
    for (size_t l = 0; l < p.num_layers(); ++l) {
        h = h * support::to_eigen(p.weights[l]);
        for (Eigen::Index i = 0; i < h.rows(); ++i)
            for (Eigen::Index j = 0; j < h.cols(); ++j) h(i, j) += p.biases[l][static_cast<size_t>(j)];
        if (l + 1 < p.num_layers()) h = h.cwiseMax(0.0);
    }
    return support::from_eigen(h);
}

}  // namespace

TEST_SUITE("mlp") {

TEST_CASE("initialization respects the fan-based bound with zero biases") {
    Rng rng(5);
    MlpParams<double> p = init_mlp<double>({7, 11, 4}, 0.3, rng);
    REQUIRE(p.num_layers() == 2);
    CHECK(p.weights[0].rows() == 7);
    CHECK(p.weights[0].cols() == 11);
    CHECK(p.weights[1].rows() == 11);
    CHECK(p.weights[1].cols() == 4);
    double bound0 = std::sqrt(6.0 / (7 + 11));
    double bound1 = std::sqrt(6.0 / (11 + 4));
    for (double v : p.weights[0].data()) CHECK(std::abs(v) <= bound0);
    for (double v : p.weights[1].data()) CHECK(std::abs(v) <= bound1);
    for (const auto& b : p.biases)
        for (double v : b) CHECK(v == 0.0);
    CHECK_THROWS_AS(init_mlp<double>({7}, 0.0, rng), std::invalid_argument);

    Rng r1(42), r2(42);
    MlpParams<double> a = init_mlp<double>({3, 5, 2}, 0.0, r1);
    MlpParams<double> b = init_mlp<double>({3, 5, 2}, 0.0, r2);
    for (size_t l = 0; l < 2; ++l)
        for (size_t i = 0; i < a.weights[l].data().size(); ++i)
            CHECK(a.weights[l].data()[i] == b.weights[l].data()[i]);
}

TEST_CASE("eval forward matches a dense reference") {
    Rng rng(9);
    MlpParams<double> p = init_mlp<double>({6, 13, 3}, 0.0, rng);
    Matrix<double> x = support::random_matrix(10, 6, rng);
    Rng dummy(0);
    Matrix<double> got = mlp_forward(p, x, MlpMode::eval, dummy);
    Matrix<double> ref = eigen_mlp_eval(p, x);
    CHECK(support::max_abs_diff(got, ref) < 1e-13);
}

TEST_CASE("train mode requires a cache and eval mode never consumes randomness") {
    Rng rng(13);
    MlpParams<double> p = init_mlp<double>({4, 6, 2}, 0.5, rng);
    Matrix<double> x = support::random_matrix(5, 4, rng);
    Rng dropout_rng(77);
    CHECK_THROWS_AS(mlp_forward(p, x, MlpMode::train, dropout_rng), std::invalid_argument);
    Rng e1(3), e2(3);
    Matrix<double> a = mlp_forward(p, x, MlpMode::eval, e1);
    e1.normal();  // would desynchronize if eval had consumed draws
    Matrix<double> b = mlp_forward(p, x, MlpMode::eval, e2);
    for (size_t i = 0; i < a.data().size(); ++i) CHECK(a.data()[i] == b.data()[i]);
}

TEST_CASE("inverted dropout masks average to one") {
    Rng rng(17);
    MlpParams<double> p = init_mlp<double>({3, 64, 2}, 0.5, rng);
    Matrix<double> x = support::random_matrix(5, 3, rng);
    Rng dropout_rng(19);
    double sum = 0;
    size_t count = 0;
    for (int rep = 0; rep < 300; ++rep) {
        ForwardCache<double> cache;
        mlp_forward(p, x, MlpMode::train, dropout_rng, &cache);
        REQUIRE(cache.dropout_masks.size() == p.num_layers() - 1);  // hidden layers only
        const Matrix<double>& mask = cache.dropout_masks[0];
        REQUIRE(mask.rows() == 5);
        REQUIRE(mask.cols() == 64);
        for (double v : mask.data()) {
            CHECK((v == 0.0 || v == 2.0));
            sum += v;
            ++count;
        }
    }
    CHECK(sum / static_cast<double>(count) == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("zero dropout trains identically to eval mode") {
    Rng rng(21);
    MlpParams<double> p = init_mlp<double>({5, 8, 3}, 0.0, rng);
    Matrix<double> x = support::random_matrix(7, 5, rng);
    Rng r1(1), r2(2);
    ForwardCache<double> cache;
    Matrix<double> train_out = mlp_forward(p, x, MlpMode::train, r1, &cache);
    Matrix<double> eval_out = mlp_forward(p, x, MlpMode::eval, r2);
    for (size_t i = 0; i < train_out.data().size(); ++i)
        CHECK(train_out.data()[i] == eval_out.data()[i]);
}

TEST_CASE("softmax cross entropy: frozen values and masking") {
    Matrix<double> logits(3, 4, 0.0);
    std::vector<uint32_t> labels = {0, 1, 2};
    std::vector<uint8_t> mask = {1, 1, 0};
    auto [loss, grad] = softmax_cross_entropy(logits, labels, mask);
    CHECK(loss == doctest::Approx(std::log(4.0)).epsilon(1e-14));
    for (size_t c = 0; c < 4; ++c) CHECK(grad(2, c) == 0.0);
    for (size_t i = 0; i < 2; ++i) {
        double row_sum = 0;
        for (size_t c = 0; c < 4; ++c) row_sum += grad(i, c);
        CHECK(row_sum == doctest::Approx(0.0).epsilon(1e-15));
    }
    CHECK_THROWS_AS(softmax_cross_entropy(logits, labels, std::vector<uint8_t>{0, 0, 0}),
                    std::invalid_argument);
    CHECK_THROWS_AS(softmax_cross_entropy(logits, std::vector<uint32_t>{0, 9, 2}, mask),
                    std::invalid_argument);

    Matrix<double> huge(2, 2, 0.0);
    huge(0, 0) = 1e4;
    huge(1, 1) = -1e4;
    auto [hloss, hgrad] = softmax_cross_entropy(huge, {0, 0}, {1, 1});
    CHECK(std::isfinite(hloss));
    for (double v : hgrad.data()) CHECK(std::isfinite(v));
}

TEST_CASE("analytic gradients match central finite differences") {
    Rng rng(29);
    MlpParams<double> p = init_mlp<double>({4, 9, 3}, 0.0, rng);
    Matrix<double> x = support::random_matrix(6, 4, rng);
    std::vector<uint32_t> labels = {0, 1, 2, 0, 1, 2};
    std::vector<uint8_t> mask = {1, 1, 1, 1, 0, 1};

    ForwardCache<double> cache;
    Rng train_rng(0);
    Matrix<double> logits = mlp_forward(p, x, MlpMode::train, train_rng, &cache);
    auto [loss, grad_top] = softmax_cross_entropy(logits, labels, mask);
    MlpGrads<double> an = mlp_backward(p, cache, grad_top);

    auto loss_fn = [&](const MlpParams<double>& q) {
        Rng r(0);
        Matrix<double> out = mlp_forward(q, x, MlpMode::eval, r);
        return softmax_cross_entropy(out, labels, mask).first;
    };
    MlpGrads<double> fd = finite_difference<double>(loss_fn, p, 1e-5);
    for (size_t l = 0; l < p.num_layers(); ++l) {
        for (size_t i = 0; i < an.weights[l].data().size(); ++i) {
            double a = an.weights[l].data()[i], f = fd.weights[l].data()[i];
            CHECK(std::abs(a - f) / (1.0 + std::abs(a)) < 1e-6);
        }
        for (size_t i = 0; i < an.biases[l].size(); ++i) {
            double a = an.biases[l][i], f = fd.biases[l][i];
            CHECK(std::abs(a - f) / (1.0 + std::abs(a)) < 1e-6);
        }
    }
}

TEST_CASE("gradients flow through frozen dropout masks") {
    Rng rng(31);
    MlpParams<double> p = init_mlp<double>({3, 16, 2}, 0.5, rng);
    Matrix<double> x = support::random_matrix(4, 3, rng);
    std::vector<uint32_t> labels = {0, 1, 0, 1};
    std::vector<uint8_t> mask = {1, 1, 1, 1};

    ForwardCache<double> cache;
    Rng train_rng(55);
    Matrix<double> logits = mlp_forward(p, x, MlpMode::train, train_rng, &cache);
    auto [loss, grad_top] = softmax_cross_entropy(logits, labels, mask);
    MlpGrads<double> an = mlp_backward(p, cache, grad_top);

    // finite differences with the SAME mask: replay through a copied cache by
    // scaling the hidden activations manually
    auto masked_loss = [&](const MlpParams<double>& q) {
        Eigen::MatrixXd h = support::to_eigen(x) * support::to_eigen(q.weights[0]);
        for (Eigen::Index i = 0; i < h.rows(); ++i)
            for (Eigen::Index j = 0; j < h.cols(); ++j) h(i, j) += q.biases[0][static_cast<size_t>(j)];
        h = h.cwiseMax(0.0);
        Eigen::MatrixXd m = support::to_eigen(cache.dropout_masks[0]);
        h = h.cwiseProduct(m);
        Eigen::MatrixXd out = h * support::to_eigen(q.weights[1]);
        for (Eigen::Index i = 0; i < out.rows(); ++i)
            for (Eigen::Index j = 0; j < out.cols(); ++j) out(i, j) += q.biases[1][static_cast<size_t>(j)];
        return softmax_cross_entropy(support::from_eigen(out), labels, mask).first;
    };
    MlpGrads<double> fd = finite_difference<double>(masked_loss, p, 1e-5);
    for (size_t l = 0; l < 2; ++l)
        for (size_t i = 0; i < an.weights[l].data().size(); ++i) {
            double a = an.weights[l].data()[i], f = fd.weights[l].data()[i];
            CHECK(std::abs(a - f) / (1.0 + std::abs(a)) < 1e-6);
        }
}

TEST_CASE("first optimizer step matches the closed form") {
    MlpParams<double> p;
    p.weights.push_back(Matrix<double>(1, 2, 0.0));
    p.weights[0](0, 0) = 1.0;
    p.weights[0](0, 1) = -2.0;
    p.biases.push_back({0.5, 0.0});
    p.dropout_rate = 0.0;

    MlpGrads<double> g;
    g.weights.push_back(Matrix<double>(1, 2, 0.0));
    g.weights[0](0, 0) = 0.3;
    g.weights[0](0, 1) = -0.7;
    g.biases.push_back({0.0, 0.2});

    const double lr = 0.01, wd = 0.1;
    AdamState<double> adam(p, lr, wd);
    MlpParams<double> before = p;
    adam_step(adam, p, g);
    // t=1: m_hat = g, v_hat = g^2, update = lr * g/(|g|+eps) + lr * wd * theta
    for (size_t i = 0; i < 2; ++i) {
        double th = before.weights[0].data()[i], gr = g.weights[0].data()[i];
        double expect = th - lr * gr / (std::abs(gr) + 1e-8) - lr * wd * th;
        CHECK(p.weights[0].data()[i] == doctest::Approx(expect).epsilon(1e-12));
    }
    // zero-gradient bias still decays: weight decay is uniform across parameters
    CHECK(p.biases[0][0] == doctest::Approx(0.5 * (1.0 - lr * wd)).epsilon(1e-12));
    double b1 = before.biases[0][1], gb = g.biases[0][1];
    CHECK(p.biases[0][1] ==
          doctest::Approx(b1 - lr * gb / (std::abs(gb) + 1e-8) - lr * wd * b1).epsilon(1e-12));
}

}  // TEST_SUITE
