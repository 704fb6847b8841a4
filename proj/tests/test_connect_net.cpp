#include <cmath>
#include <cstdio>
#include <filesystem>

#include <doctest.h>

#include "oracles.hpp"
#include "roadnet/connect_net.hpp"
#include "roadnet/error.hpp"
#include "roadnet/node_codec.hpp"

using namespace roadnet;

namespace {

ConnectConfig small_config() {
    ConnectConfig cfg;
    cfg.descriptor_bins = 4;  // feature 6, concat input 12
    cfg.n_pt = 4;
    cfg.hidden1 = 6;
    cfg.hidden2 = 8;
    cfg.heads = 2;
    cfg.layers = 2;
    return cfg;
}

ConnectBatch random_batch(const ConnectConfig& cfg, Rng& rng, int n_valid) {
    std::vector<double> center(cfg.feature_dim());
    for (auto& v : center) v = rng.uniform(0.0, 1.0);
    std::vector<std::vector<double>> cands;
    for (int i = 0; i < n_valid; ++i) {
        std::vector<double> c(cfg.feature_dim());
        for (auto& v : c) v = rng.uniform(0.0, 1.0);
        cands.push_back(std::move(c));
    }
    return make_batch(cfg, center, cands);
}

std::vector<int> random_labels(Rng& rng, int n) {
    std::vector<int> out(n);
    for (auto& v : out) v = static_cast<int>(rng.uniform_index(2));
    return out;
}

}  // namespace

TEST_SUITE("connect_net") {

TEST_CASE("forward output shape and range") {
    ConnectConfig cfg;  // paper defaults: 76 -> 38 -> 64, 3 layers, (8,2) out
    Rng rng(11);
    const ConnectNet net = init_connect_net(cfg, rng);
    const auto batch = random_batch(cfg, rng, 8);
    const Mat probs = forward(net, batch);
    CHECK(probs.rows == 8);
    CHECK(probs.cols == 2);
    for (const double v : probs.d) {
        CHECK(v > 0.0);
        CHECK(v < 1.0);
    }
}

TEST_CASE("zero-weight net outputs one half everywhere") {
    ConnectConfig cfg = small_config();
    Rng rng(5);
    ConnectNet net = init_connect_net(cfg, rng);
    for (auto& p : parameters(net)) {
        std::fill(p.mat->d.begin(), p.mat->d.end(), 0.0);
    }
    const auto batch = random_batch(cfg, rng, 3);
    const Mat probs = forward(net, batch);
    for (int i = 0; i < probs.rows; ++i) {
        for (int c = 0; c < 2; ++c) {
            CHECK(probs.at(i, c) == doctest::Approx(0.5).epsilon(1e-12));
        }
    }
}

TEST_CASE("candidate row permutation permutes outputs identically") {
    ConnectConfig cfg;
    Rng rng(23);
    const ConnectNet net = init_connect_net(cfg, rng);

    std::vector<double> center(cfg.feature_dim());
    for (auto& v : center) v = rng.uniform(0.0, 1.0);
    std::vector<std::vector<double>> cands;
    for (int i = 0; i < 8; ++i) {
        std::vector<double> c(cfg.feature_dim());
        for (auto& v : c) v = rng.uniform(0.0, 1.0);
        cands.push_back(std::move(c));
    }
    const Mat base = forward(net, make_batch(cfg, center, cands));

    std::vector<std::vector<double>> rotated(cands.begin() + 3, cands.end());
    rotated.insert(rotated.end(), cands.begin(), cands.begin() + 3);
    const Mat rot = forward(net, make_batch(cfg, center, rotated));

    for (int i = 0; i < 8; ++i) {
        const int j = (i + 3) % 8;
        for (int c = 0; c < 2; ++c) {
            CHECK(rot.at(i, c) == doctest::Approx(base.at(j, c)).epsilon(1e-12));
        }
    }
}

TEST_CASE("bce limits: saturated logits and zero logits") {
    ConnectConfig cfg = small_config();
    Rng rng(7);
    ConnectNet net = init_connect_net(cfg, rng);

    // All parameters zero except a huge head bias driving (channel0, channel1)
    // toward (0, 1): targets for label 1, so the loss vanishes.
    for (auto& p : parameters(net)) std::fill(p.mat->d.begin(), p.mat->d.end(), 0.0);
    net.head.bias.at(0, 0) = -50.0;
    net.head.bias.at(0, 1) = 50.0;
    auto batch = random_batch(cfg, rng, 3);
    const auto perfect = backward(net, batch, {1, 1, 1, 0});
    CHECK(perfect.loss < 1e-12);

    // Zero logits: BCE(0.5) = ln 2 per row (mean over the two channels).
    net.head.bias.at(0, 0) = 0.0;
    net.head.bias.at(0, 1) = 0.0;
    const auto flat = backward(net, batch, {1, 0, 1, 0});
    CHECK(flat.loss == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("gradient check: every parameter of a small net") {
    ConnectConfig cfg = small_config();
    Rng rng(31);
    ConnectNet net = init_connect_net(cfg, rng);
    auto batch = random_batch(cfg, rng, 3);  // one masked row
    const auto labels = random_labels(rng, cfg.n_pt);
    // samples_per_tensor large enough to cover every entry of the biggest
    // tensor many times over.
    const double max_rel = oracle::gradient_check(net, batch, labels, 96, 99);
    CHECK(max_rel <= 1e-4);
}

TEST_CASE("gradient check: full-size nets, sampled parameters") {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        ConnectConfig cfg;
        Rng rng(seed * 1000 + 17);
        ConnectNet net = init_connect_net(cfg, rng);
        auto batch = random_batch(cfg, rng, 6);
        const auto labels = random_labels(rng, cfg.n_pt);
        const double max_rel = oracle::gradient_check(net, batch, labels, 4, seed);
        CHECK(max_rel <= 1e-4);
    }
}

TEST_CASE("training: separable toy data reaches 99% within 200 epochs") {
    // Label decided by the first candidate feature entry.
    ConnectConfig cfg = small_config();
    Rng rng(43);
    std::vector<TrainSample> data;
    for (int s = 0; s < 40; ++s) {
        std::vector<double> center(cfg.feature_dim(), 0.5);
        std::vector<std::vector<double>> cands;
        std::vector<int> labels;
        for (int i = 0; i < cfg.n_pt; ++i) {
            std::vector<double> c(cfg.feature_dim());
            for (auto& v : c) v = rng.uniform(0.0, 1.0);
            const int label = c[0] > 0.5 ? 1 : 0;
            cands.push_back(std::move(c));
            labels.push_back(label);
        }
        TrainSample sample;
        sample.batch = make_batch(cfg, center, cands);
        sample.labels = std::move(labels);
        data.push_back(std::move(sample));
    }
    Rng init_rng(7);
    ConnectNet net = init_connect_net(cfg, init_rng);
    const auto result = train(net, data, 200, 0.05);
    CHECK(result.loss_curve.back() <= result.loss_curve.front());

    std::size_t correct = 0, total = 0;
    for (const auto& s : data) {
        const Mat probs = forward(net, s.batch);
        for (int i = 0; i < probs.rows; ++i) {
            if (!s.batch.valid[i]) continue;
            correct += (probs.at(i, 1) >= 0.5 ? 1 : 0) == s.labels[i];
            ++total;
        }
    }
    CHECK(static_cast<double>(correct) / total >= 0.99);
}

TEST_CASE("training: zero learning rate leaves parameters unchanged") {
    ConnectConfig cfg = small_config();
    Rng rng(3);
    ConnectNet net = init_connect_net(cfg, rng);
    const auto before = net;
    std::vector<TrainSample> data;
    TrainSample s;
    s.batch = random_batch(cfg, rng, 2);
    s.labels = {1, 0, 0, 0};
    data.push_back(std::move(s));
    train(net, data, 5, 0.0);
    auto pa = parameters(net);
    auto pb = parameters(const_cast<ConnectNet&>(before));
    for (std::size_t i = 0; i < pa.size(); ++i) {
        CHECK(pa[i].mat->d == pb[i].mat->d);
    }
}

TEST_CASE("training determinism: same seed gives bit-identical loss curves") {
    auto run = []() {
        ConnectConfig cfg = small_config();
        Rng rng(77);
        std::vector<TrainSample> data;
        for (int s = 0; s < 10; ++s) {
            TrainSample sample;
            sample.batch = random_batch(cfg, rng, 3);
            sample.labels = random_labels(rng, cfg.n_pt);
            data.push_back(std::move(sample));
        }
        Rng init_rng(5);
        ConnectNet net = init_connect_net(cfg, init_rng);
        return train(net, data, 20, 0.05).loss_curve;
    };
    const auto a = run();
    const auto b = run();
    CHECK(a == b);
}

TEST_CASE("error paths: masked-out batch, shape mismatch, bad labels") {
    ConnectConfig cfg = small_config();
    Rng rng(9);
    const ConnectNet net = init_connect_net(cfg, rng);

    ConnectBatch empty;
    empty.rows = Mat(cfg.n_pt, cfg.input_dim());
    empty.valid.assign(cfg.n_pt, 0);
    CHECK_THROWS_WITH_AS(forward(net, empty), "empty batch", Error);

    ConnectBatch wrong;
    wrong.rows = Mat(cfg.n_pt, cfg.input_dim() + 1);
    wrong.valid.assign(cfg.n_pt, 1);
    CHECK_THROWS_AS(forward(net, wrong), Error);

    auto batch = random_batch(cfg, rng, 2);
    CHECK_THROWS_AS(backward(net, batch, {1, 2, 0, 0}), Error);
}

TEST_CASE("weights round-trip preserves the forward map") {
    ConnectConfig cfg;
    cfg.pair_mode = PairMode::sum;
    Rng rng(13);
    const ConnectNet net = init_connect_net(cfg, rng);
    const auto batch = random_batch(cfg, rng, 5);
    const Mat before = forward(net, batch);

    const auto tmp = std::filesystem::temp_directory_path() / "roadnet_weights_test.json";
    save_weights(net, tmp.string());
    const ConnectNet loaded = load_weights(tmp.string());
    CHECK(loaded.cfg.pair_mode == PairMode::sum);
    const Mat after = forward(loaded, batch);
    CHECK(before.d == after.d);
    std::filesystem::remove(tmp);
}

TEST_CASE("predict_edges basics") {
    ConnectConfig cfg;
    Rng rng(21);
    ConnectNet net = init_connect_net(cfg, rng);

    SUBCASE("no nodes gives an empty graph") {
        const RoadGraph g = predict_edges(net, {}, 100.0, 100.0, 50.0, 8, 0.5);
        CHECK(g.node_count() == 0);
        CHECK(g.edge_count() == 0);
    }
    SUBCASE("flat 0.5 net with near-one threshold adds no edges") {
        for (auto& p : parameters(net)) std::fill(p.mat->d.begin(), p.mat->d.end(), 0.0);
        std::vector<NodeDescriptor> nodes;
        for (int i = 0; i < 5; ++i) {
            NodeDescriptor d;
            d.coord = {10.0 + i * 5.0, 20.0};
            d.bins.assign(36, 0.0);
            nodes.push_back(std::move(d));
        }
        const RoadGraph g = predict_edges(net, nodes, 100.0, 100.0, 50.0, 8, 0.999);
        CHECK(g.node_count() == 5);
        CHECK(g.edge_count() == 0);
    }
}

}  // TEST_SUITE
