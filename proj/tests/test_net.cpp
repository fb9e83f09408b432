#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "conservnet/net.hpp"
#include "conservnet/rng.hpp"

using namespace conservnet;

TEST_CASE("mish at reference points") {
    CHECK(mish(0.0) == 0.0);
    CHECK(mish(50.0) == doctest::Approx(50.0).epsilon(1e-12));
    // naive extended-precision formulation as the oracle
    const long double x = 1.0L;
    const long double oracle = x * std::tanh(std::log(1.0L + std::exp(x)));
    CHECK(mish(1.0) == doctest::Approx(static_cast<double>(oracle)).epsilon(1e-14));
    // saturation regions stay finite and asymptotically correct
    CHECK(std::isfinite(mish(800.0)));
    CHECK(mish(800.0) == doctest::Approx(800.0));
    CHECK(std::isfinite(mish(-800.0)));
    CHECK(mish(-800.0) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("mish monotone on x >= 0 and bounded by identity") {
    double prev = mish(0.0);
    for (int i = 1; i <= 2000; ++i) {
        const double x = 0.01 * i;
        const double m = mish(x);
        CHECK(m >= prev);
        CHECK(m <= x);
        prev = m;
    }
}

TEST_CASE("zero parameters give the zero function") {
    MlpParams p = init_params({3, 8, 8, 1}, 7);
    for (auto& w : p.weights) w.setZero();
    Eigen::MatrixXd batch = Eigen::MatrixXd::Random(10, 3);
    auto [out, tape] = forward(p, batch);
    CHECK(out.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("forward matches a scalar chain oracle for d=1") {
    // 1 -> 1 -> 1 network evaluated by hand
    MlpParams p = init_params({1, 1, 1}, 3);
    p.weights[0](0, 0) = 0.7;
    p.biases[0][0] = -0.2;
    p.weights[1](0, 0) = 1.3;
    p.biases[1][0] = 0.05;
    Eigen::MatrixXd batch(1, 1);
    batch << 0.9;
    const double h = mish(0.9 * 0.7 - 0.2);
    const double expected = h * 1.3 + 0.05;
    auto [out, tape] = forward(p, batch);
    CHECK(out[0] == doctest::Approx(expected).epsilon(1e-15));
}

TEST_CASE("forward determinism and batch-row independence") {
    MlpParams p = init_params({4, 6, 6, 1}, 11);
    Eigen::MatrixXd batch(5, 4);
    Rng rng(1);
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 4; ++j) batch(i, j) = rng.uniform(-2, 2);
    const Eigen::VectorXd a = forward_only(p, batch);
    const Eigen::VectorXd b = forward_only(p, batch);
    CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);

    Eigen::MatrixXd same_rows = batch.row(2).replicate(5, 1);
    const Eigen::VectorXd c = forward_only(p, same_rows);
    CHECK((c.array() == c[0]).all());
}

TEST_CASE("forward rejects shape mismatch") {
    MlpParams p = init_params({4, 6, 1}, 11);
    Eigen::MatrixXd batch = Eigen::MatrixXd::Zero(3, 5);
    CHECK_THROWS_AS(forward(p, batch), std::invalid_argument);
}

TEST_CASE("backward: zero output grad, duplicated-row linearity") {
    MlpParams p = init_params({2, 5, 1}, 23);
    Eigen::MatrixXd batch(1, 2);
    batch << 0.3, -1.1;
    auto [out1, tape1] = forward(p, batch);
    MlpGradients g1 = backward(p, tape1, Eigen::VectorXd::Ones(1));

    Eigen::MatrixXd doubled(2, 2);
    doubled << 0.3, -1.1, 0.3, -1.1;
    auto [out2, tape2] = forward(p, doubled);
    MlpGradients g2 = backward(p, tape2, Eigen::VectorXd::Ones(2));
    for (int l = 0; l < p.layer_count(); ++l) {
        CHECK((g2.weights[l] - 2.0 * g1.weights[l]).cwiseAbs().maxCoeff() <= 1e-14);
        CHECK((g2.biases[l] - 2.0 * g1.biases[l]).cwiseAbs().maxCoeff() <= 1e-14);
    }

    MlpGradients gz = backward(p, tape2, Eigen::VectorXd::Zero(2));
    for (int l = 0; l < p.layer_count(); ++l) {
        CHECK(gz.weights[l].cwiseAbs().maxCoeff() == 0.0);
        CHECK(gz.biases[l].cwiseAbs().maxCoeff() == 0.0);
    }
}

namespace {

// L(theta) = sum_j w_j F(x_j), differentiated by central differences
double weighted_sum(const MlpParams& p, const Eigen::MatrixXd& batch,
                    const Eigen::VectorXd& w) {
    return w.dot(forward_only(p, batch));
}

void check_gradients_fd(MlpParams& p, const Eigen::MatrixXd& batch,
                        const Eigen::VectorXd& w) {
    auto [out, tape] = forward(p, batch);
    const MlpGradients g = backward(p, tape, w);
    const double h = 1e-5;
    for (int l = 0; l < p.layer_count(); ++l) {
        for (Eigen::Index i = 0; i < p.weights[l].rows(); ++i)
            for (Eigen::Index j = 0; j < p.weights[l].cols(); ++j) {
                const double saved = p.weights[l](i, j);
                p.weights[l](i, j) = saved + h;
                const double up = weighted_sum(p, batch, w);
                p.weights[l](i, j) = saved - h;
                const double dn = weighted_sum(p, batch, w);
                p.weights[l](i, j) = saved;
                const double fd = (up - dn) / (2 * h);
                const double an = g.weights[l](i, j);
                CHECK(std::abs(fd - an) <= 1e-4 * std::max(1.0, std::abs(fd)));
            }
        for (Eigen::Index j = 0; j < p.biases[l].size(); ++j) {
            const double saved = p.biases[l][j];
            p.biases[l][j] = saved + h;
            const double up = weighted_sum(p, batch, w);
            p.biases[l][j] = saved - h;
            const double dn = weighted_sum(p, batch, w);
            p.biases[l][j] = saved;
            const double fd = (up - dn) / (2 * h);
            CHECK(std::abs(fd - g.biases[l][j]) <= 1e-4 * std::max(1.0, std::abs(fd)));
        }
    }
}

}  // namespace

TEST_CASE("backward matches central finite differences") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        Rng rng(seed + 100);
        const int d = 1 + static_cast<int>(rng.uniform_int(0, 3));
        const int w = 2 + static_cast<int>(rng.uniform_int(0, 6));
        MlpParams p = init_params({d, w, w, 1}, seed);
        const int m = 3;
        Eigen::MatrixXd batch(m, d);
        Eigen::VectorXd weights(m);
        for (int i = 0; i < m; ++i) {
            weights[i] = rng.uniform(-1, 1);
            for (int j = 0; j < d; ++j) batch(i, j) = rng.uniform(-2, 2);
        }
        check_gradients_fd(p, batch, weights);
    }
}

TEST_CASE("adam: zero gradient leaves parameters unchanged") {
    MlpParams p = init_params({2, 3, 1}, 5);
    const MlpParams before = p;
    MlpGradients g;
    for (int l = 0; l < p.layer_count(); ++l) {
        g.weights.push_back(Eigen::MatrixXd::Zero(p.weights[l].rows(), p.weights[l].cols()));
        g.biases.push_back(Eigen::VectorXd::Zero(p.biases[l].size()));
    }
    adam_step(p, g, 1e-3);
    for (int l = 0; l < p.layer_count(); ++l)
        CHECK((p.weights[l] - before.weights[l]).cwiseAbs().maxCoeff() == 0.0);
    CHECK(p.step_count == 1);
}

TEST_CASE("adam first step is approximately lr * sign(g)") {
    MlpParams p = init_params({1, 1}, 5);
    const double w0 = p.weights[0](0, 0);
    MlpGradients g;
    g.weights.push_back(Eigen::MatrixXd::Constant(1, 1, 0.37));
    g.biases.push_back(Eigen::VectorXd::Constant(1, -2.0));
    adam_step(p, g, 1e-3);
    CHECK(p.weights[0](0, 0) == doctest::Approx(w0 - 1e-3).epsilon(1e-4));
    CHECK(p.biases[0][0] == doctest::Approx(1e-3).epsilon(1e-4));
}

TEST_CASE("adam matches a hand-stepped scalar oracle over two steps") {
    const double g = 0.25, lr = 0.01, b1 = 0.9, b2 = 0.999, eps = 1e-8;
    double w = 1.0, m = 0.0, v = 0.0;
    for (int t = 1; t <= 2; ++t) {
        m = b1 * m + (1 - b1) * g;
        v = b2 * v + (1 - b2) * g * g;
        const double mh = m / (1 - std::pow(b1, t));
        const double vh = v / (1 - std::pow(b2, t));
        w -= lr * mh / (std::sqrt(vh) + eps);
    }

    MlpParams p = init_params({1, 1}, 5);
    p.weights[0](0, 0) = 1.0;
    MlpGradients grads;
    grads.weights.push_back(Eigen::MatrixXd::Constant(1, 1, g));
    grads.biases.push_back(Eigen::VectorXd::Zero(1));
    adam_step(p, grads, lr, b1, b2, eps);
    adam_step(p, grads, lr, b1, b2, eps);
    CHECK(p.weights[0](0, 0) == doctest::Approx(w).epsilon(1e-12));
}

TEST_CASE("adam rejects non-finite gradients") {
    MlpParams p = init_params({1, 1}, 5);
    MlpGradients g;
    g.weights.push_back(Eigen::MatrixXd::Constant(1, 1, std::nan("")));
    g.biases.push_back(Eigen::VectorXd::Zero(1));
    CHECK_THROWS_AS(adam_step(p, g, 1e-3), std::runtime_error);
}

TEST_CASE("init_params: shapes, determinism, sample statistics") {
    CHECK_THROWS_AS(init_params({}, 0), std::invalid_argument);

    MlpParams p = init_params({4, 320, 320, 320, 320, 1}, 42);
    REQUIRE(p.layer_count() == 5);
    CHECK(p.weights[0].rows() == 4);
    CHECK(p.weights[0].cols() == 320);
    for (int l = 1; l < 4; ++l) {
        CHECK(p.weights[l].rows() == 320);
        CHECK(p.weights[l].cols() == 320);
    }
    CHECK(p.weights[4].rows() == 320);
    CHECK(p.weights[4].cols() == 1);
    for (int l = 0; l < 5; ++l) {
        CHECK(p.biases[l].cwiseAbs().maxCoeff() == 0.0);
        CHECK(p.adam_m_w[l].rows() == p.weights[l].rows());
        CHECK(p.adam_v_w[l].cols() == p.weights[l].cols());
    }

    MlpParams q = init_params({4, 320, 320, 320, 320, 1}, 42);
    for (int l = 0; l < 5; ++l)
        CHECK((p.weights[l] - q.weights[l]).cwiseAbs().maxCoeff() == 0.0);

    // mean of U(-b, b) samples within 3 standard errors of zero
    const auto& w = p.weights[1];
    const double b = std::sqrt(6.0 / 320.0);
    const double se = (b / std::sqrt(3.0)) / std::sqrt(static_cast<double>(w.size()));
    CHECK(std::abs(w.mean()) <= 3.0 * se);
}

TEST_CASE("checkpoint round-trips bit-exactly") {
    MlpParams p = init_params({3, 7, 1}, 99);
    p.step_count = 1234;
    p.adam_m_w[0].setConstant(0.125);
    const auto path = std::filesystem::temp_directory_path() / "cn_ckpt_test.txt";
    save_checkpoint(p, path.string());
    MlpParams q = load_checkpoint(path.string());
    CHECK(q.step_count == p.step_count);
    CHECK(q.seed == p.seed);
    for (int l = 0; l < p.layer_count(); ++l) {
        CHECK((p.weights[l] - q.weights[l]).cwiseAbs().maxCoeff() == 0.0);
        CHECK((p.biases[l] - q.biases[l]).cwiseAbs().maxCoeff() == 0.0);
        CHECK((p.adam_m_w[l] - q.adam_m_w[l]).cwiseAbs().maxCoeff() == 0.0);
        CHECK((p.adam_v_w[l] - q.adam_v_w[l]).cwiseAbs().maxCoeff() == 0.0);
    }
    std::filesystem::remove(path);
}
