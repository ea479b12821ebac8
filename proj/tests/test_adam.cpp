#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include <embodied/adam.hpp>
#include <embodied/rng.hpp>

using namespace embodied;

TEST_CASE("optimizer config validation", "[adam][errors]") {
    OptimizerConfig ok;
    REQUIRE_NOTHROW(ok.validate());
    OptimizerConfig bad = ok;
    bad.eta = 0.0;
    REQUIRE_THROWS_AS(bad.validate(), ConfigInvalid);
    bad = ok;
    bad.beta1 = 1.0;
    REQUIRE_THROWS_AS(bad.validate(), ConfigInvalid);
    bad = ok;
    bad.beta2 = -0.1;
    REQUIRE_THROWS_AS(bad.validate(), ConfigInvalid);
    bad = ok;
    bad.epsilon_hat = 0.0;
    REQUIRE_THROWS_AS(bad.validate(), ConfigInvalid);
}

TEST_CASE("zero gradients leave parameters untouched", "[adam]") {
    Tensor<double> theta({3}, {1.0, -2.0, 0.5});
    std::vector<Tensor<double>*> params = {&theta};
    AdamState<double> state;
    state.init_like(params);
    std::vector<Tensor<double>> grads = {Tensor<double>({3})};
    OptimizerConfig cfg;
    for (int i = 0; i < 5; ++i) adam_step(params, grads, state, cfg);
    REQUIRE(theta[0] == 1.0);
    REQUIRE(theta[1] == -2.0);
    REQUIRE(theta[2] == 0.5);
    REQUIRE(state.t == 5);
}

TEST_CASE("the first step moves by almost exactly eta against the gradient sign", "[adam]") {
    Tensor<double> theta({2}, {0.0, 0.0});
    std::vector<Tensor<double>*> params = {&theta};
    AdamState<double> state;
    state.init_like(params);
    std::vector<Tensor<double>> grads = {Tensor<double>({2}, {0.3, -7.0})};
    OptimizerConfig cfg;
    adam_step(params, grads, state, cfg);
    // after bias correction the first step is eta * g/(|g| + eps)
    REQUIRE(theta[0] == Catch::Approx(-cfg.eta).epsilon(1e-6));
    REQUIRE(theta[1] == Catch::Approx(cfg.eta).epsilon(1e-6));
}

TEST_CASE("three Adam steps reproduce the reference trace", "[adam][oracle]") {
    // scalar parameter 0.5 with gradient sequence 0.3, -0.1, 0.2 at defaults;
    // expected positions computed independently at high precision
    Tensor<double> theta({1}, {0.5});
    std::vector<Tensor<double>*> params = {&theta};
    AdamState<double> state;
    state.init_like(params);
    OptimizerConfig cfg;

    std::vector<Tensor<double>> g1 = {Tensor<double>({1}, {0.3})};
    adam_step(params, g1, state, cfg);
    REQUIRE(theta[0] == Catch::Approx(0.4990000000333333322).margin(1e-15));

    std::vector<Tensor<double>> g2 = {Tensor<double>({1}, {-0.1})};
    adam_step(params, g2, state, cfg);
    REQUIRE(theta[0] == Catch::Approx(0.4985997814792808052).margin(1e-14));

    std::vector<Tensor<double>> g3 = {Tensor<double>({1}, {0.2})};
    adam_step(params, g3, state, cfg);
    REQUIRE(theta[0] == Catch::Approx(0.4979966950157613884).margin(1e-14));
}

TEST_CASE("updates stay within a small multiple of eta", "[adam]") {
    RngStream rng(55, "test/adam-bound");
    Tensor<double> theta({16});
    for (std::size_t i = 0; i < theta.size(); ++i) theta[i] = rng.uniform(1.0);
    std::vector<Tensor<double>*> params = {&theta};
    AdamState<double> state;
    state.init_like(params);
    OptimizerConfig cfg;
    Tensor<double> prev = theta;
    for (int step = 0; step < 200; ++step) {
        std::vector<Tensor<double>> grads = {Tensor<double>({16})};
        for (std::size_t i = 0; i < 16; ++i) grads[0][i] = rng.uniform(50.0); // wild magnitudes
        adam_step(params, grads, state, cfg);
        for (std::size_t i = 0; i < 16; ++i) {
            REQUIRE(std::abs(theta[i] - prev[i]) <= 4.0 * cfg.eta);
            prev[i] = theta[i];
        }
    }
}

TEST_CASE("per-tensor state follows each parameter independently", "[adam]") {
    Tensor<double> a({2}, {1.0, 1.0});
    Tensor<double> b({3}, {2.0, 2.0, 2.0});
    std::vector<Tensor<double>*> params = {&a, &b};
    AdamState<double> state;
    state.init_like(params);
    REQUIRE(state.m.size() == 2);
    REQUIRE(state.m[1].shape() == b.shape());
    std::vector<Tensor<double>> grads = {Tensor<double>({2}, {1.0, 0.0}),
                                         Tensor<double>({3}, {0.0, 0.0, -1.0})};
    OptimizerConfig cfg;
    adam_step(params, grads, state, cfg);
    REQUIRE(a[0] < 1.0);
    REQUIRE(a[1] == 1.0);
    REQUIRE(b[0] == 2.0);
    REQUIRE(b[2] > 2.0);
}

TEST_CASE("adam rejects mismatched shapes and counts", "[adam][errors]") {
    Tensor<double> theta({2});
    std::vector<Tensor<double>*> params = {&theta};
    AdamState<double> state;
    state.init_like(params);
    OptimizerConfig cfg;
    std::vector<Tensor<double>> wrong_count;
    REQUIRE_THROWS_AS(adam_step(params, wrong_count, state, cfg), ShapeMismatch);
    std::vector<Tensor<double>> wrong_shape = {Tensor<double>({3})};
    REQUIRE_THROWS_AS(adam_step(params, wrong_shape, state, cfg), ShapeMismatch);
}
