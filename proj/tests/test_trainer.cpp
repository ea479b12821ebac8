#include <catch2/catch_amalgamated.hpp>

#include <embodied/fingers.hpp>
#include <embodied/model.hpp>
#include <embodied/pretrain.hpp>
#include <embodied/trainer.hpp>

using namespace embodied;

namespace {

Dataset<double> synthetic_dataset(std::size_t n, std::uint64_t seed) {
    Dataset<double> ds;
    ds.images = Tensor<double>({n, 28, 28});
    ds.labels.resize(n);
    RngStream rng(seed, "test/trainer-data");
    for (std::size_t i = 0; i < ds.images.size(); ++i) ds.images[i] = rng.canonical();
    for (std::size_t i = 0; i < n; ++i) ds.labels[i] = std::uint8_t(rng.below(10));
    ds.role = DatasetRole::TrainSubset;
    return ds;
}

ModelSpec baseline_spec() {
    ModelSpec s;
    s.variant = Variant::Baseline;
    return s;
}

EpochMetrics run_epoch(Network<double>& net, const Dataset<double>& ds, std::size_t batch,
                       AdamState<double>& state, std::uint64_t seed = 9) {
    RngStream shuffle(seed, "shuffle");
    RngStream dropout(seed, "dropout");
    LossWeights w;
    OptimizerConfig opt;
    return train_epoch(net, ds, batch, shuffle, dropout, w, default_finger_codes(), state, opt);
}

} // namespace

TEST_CASE("an epoch visits every example in whole batches", "[trainer]") {
    auto ds = synthetic_dataset(64, 1);
    auto net = build_model<double>(baseline_spec(), 42);
    AdamState<double> state;
    auto metrics = run_epoch(net, ds, 32, state);
    REQUIRE(metrics.steps == 2);

    auto ds2 = synthetic_dataset(32, 2);
    auto net2 = build_model<double>(baseline_spec(), 42);
    AdamState<double> state2;
    REQUIRE(run_epoch(net2, ds2, 32, state2).steps == 1);
}

TEST_CASE("a short final batch is still trained on", "[trainer]") {
    auto ds = synthetic_dataset(70, 3);
    auto net = build_model<double>(baseline_spec(), 42);
    AdamState<double> state;
    auto metrics = run_epoch(net, ds, 32, state);
    REQUIRE(metrics.steps == 3); // 32 + 32 + 6
    // Adam stepped once per batch
    REQUIRE(state.t == 3);
}

TEST_CASE("whole-database accuracy is the size-weighted mean", "[trainer]") {
    const double w = whole_db_accuracy(1024, 0.75, 10000, 0.9);
    REQUIRE(w == Catch::Approx((1024 * 0.75 + 10000 * 0.9) / 11024.0).margin(1e-12));
    REQUIRE(whole_db_accuracy(100, 1.0, 0, 0.0) == Catch::Approx(1.0).margin(1e-15));
}

TEST_CASE("training is bitwise deterministic given equal seeds", "[trainer]") {
    auto ds = synthetic_dataset(96, 4);
    auto net_a = build_model<double>(baseline_spec(), 42);
    auto net_b = build_model<double>(baseline_spec(), 42);
    AdamState<double> sa, sb;
    auto ma = run_epoch(net_a, ds, 32, sa, 11);
    auto mb = run_epoch(net_b, ds, 32, sb, 11);
    REQUIRE(ma.mean_loss == mb.mean_loss);
    REQUIRE(ma.train_accuracy == mb.train_accuracy);
    auto pa = net_a.parameters();
    auto pb = net_b.parameters();
    for (std::size_t k = 0; k < pa.size(); ++k)
        for (std::size_t i = 0; i < pa[k]->size(); ++i)
            REQUIRE((*pa[k])[i] == (*pb[k])[i]);

    // a different shuffle seed must give a different trajectory
    auto net_c = build_model<double>(baseline_spec(), 42);
    AdamState<double> sc;
    auto mc = run_epoch(net_c, ds, 32, sc, 12);
    REQUIRE(mc.mean_loss != ma.mean_loss);
}

TEST_CASE("an untrained model scores at chance on random labels", "[trainer]") {
    auto ds = synthetic_dataset(500, 5);
    auto net = build_model<double>(baseline_spec(), 42);
    const double acc = evaluate(net, ds);
    // labels are independent of predictions: accuracy ~ Binomial(500, 0.1)
    REQUIRE(acc >= 0.1 - 3.0 * std::sqrt(0.1 * 0.9 / 500.0));
    REQUIRE(acc <= 0.1 + 3.0 * std::sqrt(0.1 * 0.9 / 500.0));
}

TEST_CASE("training reduces the loss on a learnable toy set", "[trainer]") {
    // digits labeled by a visible pattern: left-bright vs right-bright images
    Dataset<double> ds;
    const std::size_t n = 64;
    ds.images = Tensor<double>({n, 28, 28});
    ds.labels.resize(n);
    RngStream rng(6, "test/trainer-toy");
    for (std::size_t i = 0; i < n; ++i) {
        const bool left = i % 2 == 0;
        ds.labels[i] = left ? 0 : 1;
        for (std::size_t r = 0; r < 28; ++r)
            for (std::size_t c = 0; c < 28; ++c)
                ds.images[(i * 28 + r) * 28 + c] =
                    (left ? (c < 14) : (c >= 14)) ? 0.8 + 0.2 * rng.canonical()
                                                  : 0.2 * rng.canonical();
    }
    auto net = build_model<double>(baseline_spec(), 42);
    AdamState<double> state;
    const auto first = run_epoch(net, ds, 32, state, 21);
    EpochMetrics last{};
    for (int e = 0; e < 4; ++e) last = run_epoch(net, ds, 32, state, 22 + std::uint64_t(e));
    REQUIRE(last.mean_loss < first.mean_loss);
    REQUIRE(evaluate(net, ds) >= 0.9); // separable pattern is learned quickly
}

TEST_CASE("embodied and inception variants train with their auxiliary targets", "[trainer]") {
    auto ds = synthetic_dataset(64, 7);
    const auto link = pretrain_stage1(default_finger_codes());
    for (auto v : {Variant::InceptionLike, Variant::Embodied}) {
        ModelSpec s;
        s.variant = v;
        if (v == Variant::Embodied) s.pretrained_link = link;
        s.loss_weights.embodied_weight = 0.35;
        auto net = build_model<double>(s, 42);
        AdamState<double> state;
        RngStream shuffle(9, "shuffle");
        RngStream dropout(9, "dropout");
        OptimizerConfig opt;
        const auto m =
            train_epoch(net, ds, 32, shuffle, dropout, s.loss_weights, default_finger_codes(), state, opt);
        REQUIRE(m.steps == 2);
        REQUIRE(std::isfinite(m.mean_loss));
        REQUIRE(m.mean_loss > 0.0);
    }
}

TEST_CASE("empty datasets and zero batch sizes are rejected", "[trainer][errors]") {
    Dataset<double> empty;
    empty.images = Tensor<double>({0, 28, 28});
    auto net = build_model<double>(baseline_spec(), 42);
    AdamState<double> state;
    REQUIRE_THROWS_AS(run_epoch(net, empty, 32, state), EmptyDataset);
    REQUIRE_THROWS_AS(evaluate(net, empty), EmptyDataset);

    auto ds = synthetic_dataset(8, 8);
    REQUIRE_THROWS_AS(run_epoch(net, ds, 0, state), ConfigInvalid);
}
