#include <catch2/catch_amalgamated.hpp>

#include <embodied/fingers.hpp>
#include <embodied/pretrain.hpp>

using namespace embodied;

TEST_CASE("stage one converges on the default code table", "[pretrain]") {
    const auto table = default_finger_codes();
    for (std::uint64_t seed : {1ULL, 7ULL, 42ULL, 100ULL}) {
        PretrainConfig cfg;
        cfg.seed = seed;
        const auto link = pretrain_stage1(table, cfg);
        INFO("seed " << seed << " steps " << link.steps_used << " loss " << link.final_loss);
        REQUIRE(link.final_accuracy == 1.0);
        REQUIRE(link.final_loss <= cfg.loss_margin);
        REQUIRE(link.steps_used <= cfg.step_cap);
        REQUIRE(link.steps_used > 10); // not trivially converged at init
    }
}

TEST_CASE("the trained link classifies every code correctly", "[pretrain]") {
    const auto table = default_finger_codes();
    const auto link = pretrain_stage1(table);

    DenseParams<double> layer;
    layer.weights = link.weights;
    layer.bias = link.bias;
    Tensor<double> x({10, 16});
    for (std::size_t d = 0; d < 10; ++d)
        for (std::size_t k = 0; k < 16; ++k) x.at2(d, k) = table.codes[d][k];
    const auto p = dense_forward(x, layer, Activation::Softmax);
    for (std::size_t d = 0; d < 10; ++d) REQUIRE(argmax_row(p, d) == d);
}

TEST_CASE("the link layer has one hundred seventy parameters", "[pretrain]") {
    const auto link = pretrain_stage1(default_finger_codes());
    REQUIRE(link.weights.size() + link.bias.size() == 170);
    REQUIRE(link.weights.shape() == std::vector<std::size_t>{16, 10});
    REQUIRE(link.bias.shape() == std::vector<std::size_t>{10});
}

TEST_CASE("stage one is deterministic per seed", "[pretrain]") {
    const auto table = default_finger_codes();
    const auto a = pretrain_stage1(table);
    const auto b = pretrain_stage1(table);
    REQUIRE(a.steps_used == b.steps_used);
    REQUIRE(a.final_loss == b.final_loss);
    for (std::size_t i = 0; i < a.weights.size(); ++i) REQUIRE(a.weights[i] == b.weights[i]);

    PretrainConfig other;
    other.seed = 43;
    const auto c = pretrain_stage1(table, other);
    bool differs = false;
    for (std::size_t i = 0; i < a.weights.size(); ++i)
        if (a.weights[i] != c.weights[i]) differs = true;
    REQUIRE(differs);
}

TEST_CASE("a duplicate-code table cannot converge", "[pretrain][errors]") {
    auto table = default_finger_codes();
    table.codes[3] = table.codes[7]; // two digits share one code
    PretrainConfig cfg;
    cfg.step_cap = 400; // duplicate rows can never reach 10/10
    REQUIRE_THROWS_AS(pretrain_stage1(table, cfg), DidNotConverge);
}

TEST_CASE("an unreachable step cap raises instead of returning a bad link", "[pretrain][errors]") {
    PretrainConfig cfg;
    cfg.step_cap = 3;
    REQUIRE_THROWS_AS(pretrain_stage1(default_finger_codes(), cfg), DidNotConverge);
}
