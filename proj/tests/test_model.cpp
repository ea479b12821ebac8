#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>

#include <embodied/checkpoint.hpp>
#include <embodied/gradcheck.hpp>
#include <embodied/model.hpp>
#include <embodied/rng.hpp>

using namespace embodied;

namespace {

PretrainedLink demo_link(std::uint64_t seed = 7) {
    PretrainedLink link;
    link.weights = Tensor<double>({16, 10});
    link.bias = Tensor<double>({10});
    RngStream rng(seed, "test/link");
    for (std::size_t i = 0; i < link.weights.size(); ++i) link.weights[i] = rng.uniform(1.0);
    for (std::size_t i = 0; i < link.bias.size(); ++i) link.bias[i] = rng.uniform(0.3);
    link.steps_used = 123;
    link.final_loss = 0.042;
    link.final_accuracy = 1.0;
    return link;
}

ModelSpec spec_for(Variant v) {
    ModelSpec s;
    s.variant = v;
    if (v == Variant::Embodied) s.pretrained_link = demo_link();
    return s;
}

Tensor<double> random_images(std::size_t b, std::uint64_t seed) {
    Tensor<double> x({b, 28, 28, 1});
    RngStream rng(seed, "test/model-x");
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = rng.canonical();
    return x;
}

std::size_t named_count(const Network<double>& net, const std::string& name) {
    for (const auto& [n, c] : net.param_count())
        if (n == name) return c;
    FAIL("no layer named " << name);
    return 0;
}

std::filesystem::path temp_file(const std::string& stem) {
    return std::filesystem::temp_directory_path() / stem;
}

} // namespace

TEST_CASE("per-layer parameter counts match the architecture table", "[model]") {
    for (auto v : {Variant::Baseline, Variant::InceptionLike, Variant::Embodied}) {
        auto net = build_model<double>(spec_for(v), 42);
        CHECK(named_count(net, "conv1") == 60);
        CHECK(named_count(net, "bn1") == 24);
        CHECK(named_count(net, "conv2") == 880);
        CHECK(named_count(net, "bn2") == 64);
        CHECK(named_count(net, "dense120") == 94200);
        CHECK(named_count(net, "bn3") == 480);
        CHECK(named_count(net, "dense84") == 10164);
        CHECK(named_count(net, "bn4") == 336);
        if (v == Variant::Embodied) {
            CHECK(named_count(net, "aux") == 12560);
            CHECK(named_count(net, "classifier") == 1010);
        } else if (v == Variant::InceptionLike) {
            CHECK(named_count(net, "aux") == 7850);
            CHECK(named_count(net, "classifier") == 850);
        } else {
            CHECK(named_count(net, "classifier") == 850);
        }
    }
}

TEST_CASE("model totals follow from the per-layer counts", "[model]") {
    auto total = [](Network<double>& net) {
        std::size_t t = 0;
        for (const auto& [n, c] : net.param_count()) t += c;
        return t;
    };
    auto base = build_model<double>(spec_for(Variant::Baseline), 42);
    auto inc = build_model<double>(spec_for(Variant::InceptionLike), 42);
    auto emb = build_model<double>(spec_for(Variant::Embodied), 42);
    REQUIRE(total(base) == 107058);
    REQUIRE(total(inc) == 114908);
    REQUIRE(total(emb) == 119778);
}

TEST_CASE("common layers share identical draws across variants at one seed", "[model]") {
    auto base = build_model<double>(spec_for(Variant::Baseline), 42);
    auto inc = build_model<double>(spec_for(Variant::InceptionLike), 42);
    auto emb = build_model<double>(spec_for(Variant::Embodied), 42);
    auto same = [](const Tensor<double>& a, const Tensor<double>& b) {
        REQUIRE(a.shape() == b.shape());
        for (std::size_t i = 0; i < a.size(); ++i)
            if (a[i] != b[i]) return false;
        return true;
    };
    REQUIRE(same(base.conv1.kernels, inc.conv1.kernels));
    REQUIRE(same(base.conv1.kernels, emb.conv1.kernels));
    REQUIRE(same(base.conv2.kernels, emb.conv2.kernels));
    REQUIRE(same(base.dense120.weights, emb.dense120.weights));
    REQUIRE(same(base.dense84.weights, inc.dense84.weights));
    REQUIRE(same(base.dense84.weights, emb.dense84.weights));
}

TEST_CASE("model construction is deterministic in the seed", "[model]") {
    auto a = build_model<double>(spec_for(Variant::Baseline), 42);
    auto b = build_model<double>(spec_for(Variant::Baseline), 42);
    auto c = build_model<double>(spec_for(Variant::Baseline), 43);
    for (std::size_t i = 0; i < a.conv1.kernels.size(); ++i)
        REQUIRE(a.conv1.kernels[i] == b.conv1.kernels[i]);
    bool differs = false;
    for (std::size_t i = 0; i < a.conv1.kernels.size(); ++i)
        if (a.conv1.kernels[i] != c.conv1.kernels[i]) differs = true;
    REQUIRE(differs);
}

TEST_CASE("the embodied classifier embeds the pre-trained link", "[model]") {
    const auto link = demo_link();
    ModelSpec s;
    s.variant = Variant::Embodied;
    s.pretrained_link = link;
    auto net = build_model<double>(s, 42);
    REQUIRE(net.classifier.weights.dim(0) == 100);
    for (std::size_t i = 0; i < 16; ++i)
        for (std::size_t j = 0; j < 10; ++j)
            REQUIRE(net.classifier.weights.at2(i, j) == link.weights.at2(i, j));
    for (std::size_t j = 0; j < 10; ++j) REQUIRE(net.classifier.bias[j] == link.bias[j]);
}

TEST_CASE("an embodied model cannot be built without a link", "[model][errors]") {
    ModelSpec s;
    s.variant = Variant::Embodied;
    REQUIRE_THROWS_AS(build_model<double>(s, 42), MissingPretrainedLink);
}

TEST_CASE("forward output is a probability distribution", "[model]") {
    const auto x = random_images(5, 3);
    for (auto v : {Variant::Baseline, Variant::InceptionLike, Variant::Embodied}) {
        auto net = build_model<double>(spec_for(v), 42);
        for (auto mode : {Mode::Eval, Mode::Train}) {
            RngStream rng(9, "test/model-dropout");
            const auto out = net.forward(x, mode, &rng);
            REQUIRE(out.out1.shape() == std::vector<std::size_t>{5, 10});
            for (std::size_t r = 0; r < 5; ++r) {
                double s = 0;
                for (std::size_t j = 0; j < 10; ++j) {
                    REQUIRE(out.out1.at2(r, j) >= 0.0);
                    s += out.out1.at2(r, j);
                }
                REQUIRE(s == Catch::Approx(1.0).margin(1e-12));
            }
            if (v == Variant::Baseline) {
                REQUIRE(!out.out2.has_value());
            } else if (v == Variant::InceptionLike) {
                REQUIRE(out.out2->shape() == std::vector<std::size_t>{5, 10});
                for (std::size_t r = 0; r < 5; ++r) {
                    double s = 0;
                    for (std::size_t j = 0; j < 10; ++j) s += out.out2->at2(r, j);
                    REQUIRE(s == Catch::Approx(1.0).margin(1e-12));
                }
            } else {
                REQUIRE(out.out2->shape() == std::vector<std::size_t>{5, 16});
                for (std::size_t i = 0; i < out.out2->size(); ++i) {
                    REQUIRE((*out.out2)[i] > 0.0);
                    REQUIRE((*out.out2)[i] < 1.0);
                }
            }
        }
    }
}

TEST_CASE("forward validates input shape and train-mode requirements", "[model][errors]") {
    auto net = build_model<double>(spec_for(Variant::Baseline), 42);
    Tensor<double> wrong({2, 27, 28, 1});
    RngStream rng(1, "x");
    REQUIRE_THROWS_AS(net.forward(wrong, Mode::Eval), ShapeMismatch);
    const auto x = random_images(2, 5);
    REQUIRE_THROWS_AS(net.forward(x, Mode::Train), MissingForwardState);
    REQUIRE_NOTHROW(net.forward(x, Mode::Eval)); // eval needs no rng
}

TEST_CASE("model checkpoints round-trip losslessly", "[model][checkpoint]") {
    for (auto v : {Variant::Baseline, Variant::InceptionLike, Variant::Embodied}) {
        auto net = build_model<double>(spec_for(v), 42);
        // give the running stats non-trivial values
        RngStream rng(17, "test/ckpt-stats");
        for (auto& [name, t] : net.running_stats())
            for (std::size_t i = 0; i < t->size(); ++i) (*t)[i] = rng.uniform(2.0);

        const auto path = temp_file("embodied_test_model.ckpt").string();
        save_model(path, net, 0xfeedULL);
        auto back = load_model<double>(path);
        REQUIRE(back.variant == v);

        auto want = net.parameters();
        auto got = back.parameters();
        REQUIRE(want.size() == got.size());
        for (std::size_t k = 0; k < want.size(); ++k) {
            REQUIRE(want[k]->shape() == got[k]->shape());
            for (std::size_t i = 0; i < want[k]->size(); ++i)
                REQUIRE((*want[k])[i] == (*got[k])[i]);
        }
        auto ws = net.running_stats();
        auto gs = back.running_stats();
        for (std::size_t k = 0; k < ws.size(); ++k)
            for (std::size_t i = 0; i < ws[k].second->size(); ++i)
                REQUIRE((*ws[k].second)[i] == (*gs[k].second)[i]);
        std::filesystem::remove(path);
    }
}

TEST_CASE("link checkpoints round-trip losslessly", "[model][checkpoint]") {
    const auto link = demo_link();
    const auto path = temp_file("embodied_test_link.ckpt").string();
    save_link(path, link, 0xabcdULL);
    std::uint64_t hash = 0;
    const auto back = load_link(path, &hash);
    REQUIRE(hash == 0xabcdULL);
    REQUIRE(back.steps_used == link.steps_used);
    REQUIRE(back.final_loss == link.final_loss);
    for (std::size_t i = 0; i < link.weights.size(); ++i)
        REQUIRE(back.weights[i] == link.weights[i]);
    for (std::size_t i = 0; i < link.bias.size(); ++i) REQUIRE(back.bias[i] == link.bias[i]);
    std::filesystem::remove(path);
}

TEST_CASE("corrupted checkpoints are rejected", "[model][checkpoint][errors]") {
    const auto link = demo_link();
    const auto path = temp_file("embodied_test_bad.ckpt").string();
    save_link(path, link, 1);

    auto bytes = [&] {
        std::ifstream f(path, std::ios::binary);
        return std::string(std::istreambuf_iterator<char>(f), {});
    }();

    auto write_bytes = [&](const std::string& s) {
        std::ofstream f(path, std::ios::binary | std::ios::trunc);
        f.write(s.data(), std::streamsize(s.size()));
    };

    std::string magic = bytes;
    magic[0] = 'X';
    write_bytes(magic);
    REQUIRE_THROWS_AS(load_checkpoint(path), BadMagic);

    write_bytes(bytes.substr(0, bytes.size() - 3));
    REQUIRE_THROWS_AS(load_checkpoint(path), Truncated);

    write_bytes(bytes + "xx");
    REQUIRE_THROWS_AS(load_checkpoint(path), TrailingBytes);

    std::filesystem::remove(path);
}

TEST_CASE("end-to-end analytic gradients agree with finite differences", "[model][grad]") {
    for (auto v : {Variant::Baseline, Variant::InceptionLike, Variant::Embodied}) {
        const auto report = gradcheck_model(v, 2, 42, 1e-6, 3);
        INFO(variant_name(v) << " worst relative error " << report.worst);
        REQUIRE(report.passes(1e-4));
    }
}
