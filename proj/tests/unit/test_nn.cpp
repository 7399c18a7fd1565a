#include <cmath>

#include <gtest/gtest.h>

#include "helpers.hpp"
#include "shapeshot/errors.hpp"
#include "shapeshot/nn.hpp"

using namespace shapeshot;
using shapeshot::testing::expect_gradients_match;
using shapeshot::testing::random_tensor;

namespace {

BackboneConfig small_config() { return {.filters = 4, .in_channels = 3, .resolution = 16}; }

}  // namespace

TEST(Backbone, LayoutAndParameterCount) {
    const ConvBackbone net(small_config(), 1);
    ASSERT_EQ(net.parameters().size(), 8u);
    EXPECT_EQ(net.parameters()[0].name, "block0.weight");
    EXPECT_EQ(net.parameters()[0].tensor.shape(), (Shape{4, 3, 3, 3}));
    EXPECT_EQ(net.parameters()[7].tensor.shape(), (Shape{4}));
    EXPECT_EQ(net.parameter_count(), 4u * 3 * 9 + 3 * (4u * 4 * 9) + 4 * 4);
}

TEST(Backbone, EmbeddingShape) {
    const ConvBackbone net(small_config(), 1);
    Rng rng(5);
    const auto e = net.embed(random_tensor({3, 3, 16, 16}, rng, 0, 1, false));
    EXPECT_EQ(e.shape(), (Shape{3, 4}));
}

TEST(Backbone, IdenticalImagesGiveIdenticalRows) {
    const ConvBackbone net(small_config(), 2);
    Rng rng(6);
    const auto one = random_tensor({1, 3, 16, 16}, rng, 0, 1, false);
    std::vector<double> v(one.values().begin(), one.values().end());
    v.insert(v.end(), one.values().begin(), one.values().end());
    const auto e = net.embed(Tensor::from({2, 3, 16, 16}, v));
    for (std::size_t j = 0; j < 4; ++j) EXPECT_EQ(e.values()[j], e.values()[4 + j]);
}

TEST(Backbone, ZeroImageThroughZeroFinalConvIsZero) {
    ConvBackbone net(small_config(), 3);
    for (auto& p : net.parameters())
        if (p.name.starts_with("block3.")) std::fill(p.tensor.mutable_values().begin(), p.tensor.mutable_values().end(), 0.0);
    const auto e = net.embed(Tensor::zeros({1, 3, 16, 16}));
    for (double v : e.values()) EXPECT_EQ(v, 0.0);
}

TEST(Backbone, EmbeddingIsIndependentOfBatchComposition) {
    const ConvBackbone net(small_config(), 4);
    Rng rng(7);
    const auto batch = random_tensor({4, 3, 16, 16}, rng, 0, 1, false);
    const auto all = net.embed(batch);
    const std::size_t per = 3 * 16 * 16;
    for (std::size_t i = 0; i < 4; ++i) {
        std::vector<double> v(batch.values().begin() + i * per, batch.values().begin() + (i + 1) * per);
        const auto single = net.embed(Tensor::from({1, 3, 16, 16}, v));
        for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(single.values()[j], all.values()[i * 4 + j], 1e-12);
    }
}

TEST(Backbone, WrongResolutionThrows) {
    const ConvBackbone net(small_config(), 1);
    EXPECT_THROW(net.embed(Tensor::zeros({1, 3, 20, 20})), DimensionError);
    EXPECT_THROW(net.embed(Tensor::zeros({1, 1, 16, 16})), DimensionError);
}

TEST(Backbone, RejectsTooSmallResolution) {
    EXPECT_THROW(ConvBackbone({.filters = 4, .in_channels = 3, .resolution = 8}, 1), ConfigError);
}

TEST(Backbone, SameSeedSameWeights) {
    const ConvBackbone a(small_config(), 9), b(small_config(), 9), c(small_config(), 10);
    EXPECT_EQ(a.parameters()[0].tensor.values()[0], b.parameters()[0].tensor.values()[0]);
    EXPECT_NE(a.parameters()[0].tensor.values()[0], c.parameters()[0].tensor.values()[0]);
}

TEST(Backbone, SnapshotIsIndependent) {
    ConvBackbone net(small_config(), 1);
    const auto snap = net.snapshot();
    net.parameters()[0].tensor.mutable_values()[0] += 1.0;
    EXPECT_NE(snap.parameters()[0].tensor.values()[0], net.parameters()[0].tensor.values()[0]);
}

TEST(Backbone, RestoreRejectsWrongLayout) {
    auto params = ConvBackbone(small_config(), 1).parameters();
    params.pop_back();
    EXPECT_THROW(ConvBackbone(small_config(), params), DimensionError);
}

TEST(Backbone, FullNetworkGradientMatchesFiniteDifferences) {
    const BackboneConfig cfg{.filters = 3, .in_channels = 3, .resolution = 16};
    ConvBackbone net(cfg, 12);
    Rng rng(13);
    const auto x = random_tensor({2, 3, 16, 16}, rng, 0, 1, false);
    std::vector<Tensor> inputs;
    for (auto& p : net.parameters()) inputs.push_back(p.tensor);
    expect_gradients_match(
        [&](const std::vector<Tensor>& params) {
            std::vector<NamedParameter> named;
            for (std::size_t i = 0; i < params.size(); ++i) named.push_back({net.parameters()[i].name, params[i]});
            return ConvBackbone(cfg, named).embed(x);
        },
        inputs, 1e-6, 1e-4, 1e-7);
}

TEST(Adam, ZeroGradientLeavesParametersUnchanged) {
    std::vector<NamedParameter> params{{"w", Tensor::from({3}, {1.0, -2.0, 3.0}, true)}};
    params[0].tensor.zero_grad();
    Adam opt;
    opt.step(params);
    EXPECT_EQ(params[0].tensor.values()[0], 1.0);
    EXPECT_EQ(params[0].tensor.values()[1], -2.0);
    EXPECT_EQ(params[0].tensor.values()[2], 3.0);
}

TEST(Adam, FirstStepMovesByLearningRateAgainstTheGradientSign) {
    auto w = Tensor::from({3}, {0.5, 0.5, 0.5}, true);
    sum(mul(w, Tensor::from({3}, {2.0, -0.3, 7.0}))).backward();
    std::vector<NamedParameter> params{{"w", w}};
    Adam opt({.lr = 1e-3});
    opt.step(params);
    EXPECT_NEAR(w.values()[0], 0.5 - 1e-3, 1e-10);
    EXPECT_NEAR(w.values()[1], 0.5 + 1e-3, 1e-10);
    EXPECT_NEAR(w.values()[2], 0.5 - 1e-3, 1e-10);
}

TEST(Adam, MomentsFollowTheRecurrence) {
    auto w = Tensor::from({1}, {0.0}, true);
    std::vector<NamedParameter> params{{"w", w}};
    Adam opt;
    double m = 0, v = 0;
    for (double g : {1.0, -2.0, 0.5}) {
        w.zero_grad();
        scale(w, g).backward();
        opt.step(params);
        m = 0.9 * m + 0.1 * g;
        v = 0.99 * v + 0.01 * g * g;
        EXPECT_NEAR(opt.first_moment()[0][0], m, 1e-15);
        EXPECT_NEAR(opt.second_moment()[0][0], v, 1e-15);
    }
    EXPECT_EQ(opt.step_count(), 3u);
}

TEST(Adam, DescendsOnQuadraticBowl) {
    auto w = Tensor::from({2}, {1.0, -1.5}, true);
    const auto scales = Tensor::from({2}, {1.0, 4.0});
    auto loss_of = [&] { return sum(mul(scales, mul(w, w))); };
    const double start = loss_of().item();
    std::vector<NamedParameter> params{{"w", w}};
    Adam opt({.lr = 1e-2});
    for (int i = 0; i < 100; ++i) {
        w.zero_grad();
        loss_of().backward();
        opt.step(params);
    }
    EXPECT_LT(loss_of().item(), start);
}

TEST(Adam, NonFiniteGradientNamesParameterAndModifiesNothing) {
    auto a = Tensor::from({1}, {1.0}, true);
    auto b = Tensor::from({1}, {2.0}, true);
    scale(a, 1.0).backward();
    b.zero_grad();
    b.mutable_grad()[0] = NAN;
    std::vector<NamedParameter> params{{"alpha", a}, {"beta", b}};
    Adam opt;
    try {
        opt.step(params);
        FAIL() << "expected TrainingError";
    } catch (const TrainingError& e) {
        EXPECT_NE(std::string(e.what()).find("beta"), std::string::npos);
    }
    EXPECT_EQ(a.values()[0], 1.0);
    EXPECT_EQ(b.values()[0], 2.0);
}

TEST(LrSchedule, HalvesEveryPeriod) {
    const LrSchedule s;
    EXPECT_DOUBLE_EQ(s.lr_at(0), 1e-4);
    EXPECT_DOUBLE_EQ(s.lr_at(14999), 1e-4);
    EXPECT_DOUBLE_EQ(s.lr_at(15000), 5e-5);
    EXPECT_DOUBLE_EQ(s.lr_at(31000), 2.5e-5);
    EXPECT_THROW(LrSchedule({.initial_lr = 1e-3, .halving_period = 0}).lr_at(1), ConfigError);
}
