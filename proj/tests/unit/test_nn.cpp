#include <cmath>
#include <sstream>

#include "doctest.h"
#include "gradcheck.hpp"

#include "bermex/nn.hpp"

using namespace bermex;

TEST_CASE("backprop matches finite differences") {
    for (Activation hidden : {Activation::Relu, Activation::Tanh, Activation::Sigmoid}) {
        for (Activation out : {Activation::Sigmoid, Activation::Identity}) {
            NetSpec spec;
            spec.input_dim = 3;
            spec.hidden = {7, 5};
            spec.hidden_activation = hidden;
            spec.output_activation = out;
            spec.init_seed = 4;
            CHECK(oracle::gradient_relative_error(spec, 16, 9) < 1e-5);
        }
    }
}

TEST_CASE("forward variants agree") {
    NetSpec spec;
    spec.input_dim = 2;
    spec.hidden = {9, 9};
    const auto params = init_params(spec);
    RowMatrix x = RowMatrix::Random(3000, 2);
    const auto a = forward(spec, params, x);
    const auto b = forward_chunked(spec, params, x, 512);
    const auto c = forward_cols(spec, params, x.transpose());
    CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a - c).cwiseAbs().maxCoeff() < 1e-15);
    CHECK(a.minCoeff() > 0.0);
    CHECK(a.maxCoeff() < 1.0);
}

TEST_CASE("adam step with a fixed gradient") {
    NetParams p;
    p.weights = {Eigen::MatrixXd::Constant(1, 1, 0.5)};
    p.biases = {Eigen::VectorXd::Constant(1, -0.25)};
    NetParams g = p.zeros_like();
    g.weights[0](0, 0) = 0.3;
    g.biases[0](0) = -2.0;
    AdamConfig cfg;
    cfg.learning_rate = 0.01;
    auto state = AdamState::for_params(p, cfg);
    double w = 0.5, b = -0.25, mw = 0, vw = 0, mb = 0, vb = 0;
    for (int t = 1; t <= 5; ++t) {
        adam_step(p, g, state);
        mw = 0.9 * mw + 0.1 * 0.3;
        vw = 0.999 * vw + 0.001 * 0.09;
        mb = 0.9 * mb + 0.1 * -2.0;
        vb = 0.999 * vb + 0.001 * 4.0;
        const double c1 = 1 - std::pow(0.9, t), c2 = 1 - std::pow(0.999, t);
        w -= 0.01 * (mw / c1) / (std::sqrt(vw / c2) + 1e-8);
        b -= 0.01 * (mb / c1) / (std::sqrt(vb / c2) + 1e-8);
        CHECK(p.weights[0](0, 0) == doctest::Approx(w).epsilon(1e-14));
        CHECK(p.biases[0](0) == doctest::Approx(b).epsilon(1e-14));
    }
}

TEST_CASE("minibatch training fits a linear target") {
    NetSpec spec;
    spec.input_dim = 1;
    spec.hidden = {16};
    spec.output_activation = Activation::Identity;
    NetParams params = init_params(spec);
    RowMatrix x(512, 1);
    for (int i = 0; i < 512; ++i) x(i, 0) = -1.0 + 2.0 * i / 511.0;
    const Eigen::VectorXd y = 2.0 * x.col(0).array() + 0.5;
    BatchLoss mse = [&](std::span<const Eigen::Index> rows, const Eigen::VectorXd& out, Eigen::VectorXd& grad) {
        double loss = 0.0;
        for (std::size_t k = 0; k < rows.size(); ++k) {
            const double e = out[static_cast<Eigen::Index>(k)] - y[rows[k]];
            loss += e * e;
            grad[static_cast<Eigen::Index>(k)] = 2.0 * e / rows.size();
        }
        return loss / rows.size();
    };
    MinibatchConfig cfg;
    cfg.steps = 2000;
    cfg.batch_size = 64;
    cfg.adam.learning_rate = 1e-2;
    const double loss = train_minibatch(spec, params, x, mse, cfg);
    CHECK(loss < 1e-3);
}

TEST_CASE("learning-rate decay") {
    NetSpec spec;
    spec.input_dim = 1;
    spec.hidden = {8};
    spec.output_activation = Activation::Identity;
    RowMatrix x(256, 1);
    for (int i = 0; i < 256; ++i) x(i, 0) = -1.0 + 2.0 * i / 255.0;
    const Eigen::VectorXd y = x.col(0).array().square();
    BatchLoss mse = [&](std::span<const Eigen::Index> rows, const Eigen::VectorXd& out, Eigen::VectorXd& grad) {
        double loss = 0.0;
        for (std::size_t k = 0; k < rows.size(); ++k) {
            const double e = out[static_cast<Eigen::Index>(k)] - y[rows[k]];
            loss += e * e;
            grad[static_cast<Eigen::Index>(k)] = 2.0 * e / rows.size();
        }
        return loss / rows.size();
    };
    MinibatchConfig cfg;
    cfg.steps = 300;
    cfg.batch_size = 32;
    cfg.adam.learning_rate = 5e-3;
    NetParams constant = init_params(spec), same = constant, decayed = constant;
    train_minibatch(spec, constant, x, mse, cfg);
    cfg.final_learning_rate = 5e-3;
    train_minibatch(spec, same, x, mse, cfg);
    CHECK(same == constant);
    cfg.final_learning_rate = 1e-5;
    train_minibatch(spec, decayed, x, mse, cfg);
    CHECK_FALSE(decayed == constant);
    CHECK(decayed.all_finite());
}

TEST_CASE("parameter file round trip") {
    NetSpec spec;
    spec.input_dim = 4;
    spec.hidden = {6, 3};
    spec.hidden_activation = Activation::Tanh;
    spec.output_activation = Activation::Identity;
    const auto params = init_params(spec);
    std::stringstream buf;
    write_params(buf, spec, params);
    CHECK(buf.str().substr(0, 4) == "XNNP");
    NetSpec back;
    const auto loaded = read_params(buf, back);
    CHECK(loaded == params);
    CHECK(back.layer_sizes() == spec.layer_sizes());
    CHECK(back.hidden_activation == Activation::Tanh);
    CHECK(back.output_activation == Activation::Identity);
    CHECK(params.size() == 4 * 6 + 6 + 6 * 3 + 3 + 3 + 1);
}
