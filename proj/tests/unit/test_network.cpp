#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "gandetect/checkpoint.hpp"
#include "gandetect/errors.hpp"
#include "gandetect/network.hpp"

using namespace gandetect;

namespace {

ModelConfig tiny(int channels = 2) { return ModelConfig::reduced(channels, 8, 2, 4); }

template <typename T>
Batch<T> random_batch(const ModelConfig& config, int count, std::uint64_t seed) {
    Batch<T> batch(count, config.in_channels, config.input_size);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    for (auto& v : batch.data) v = static_cast<T>(dist(rng));
    return batch;
}

std::size_t slot_index(const ModelParams<double>& p, const std::string& name) {
    for (std::size_t i = 0; i < p.slots().size(); ++i)
        if (p.slots()[i].name == name) return i;
    throw std::out_of_range(name);
}

}  // namespace

TEST(Shapes, StandardModelParameterCount) {
    const auto config = ModelConfig::standard(6);
    EXPECT_EQ(config.parameter_count(), 34186881u);
    EXPECT_EQ(config.flatten_width(), 131072);
    const auto report = walk_shapes(config);
    EXPECT_EQ(report.parameter_count, 34186881u);
    ASSERT_EQ(report.slots.size(), 16u);
    EXPECT_EQ(report.slots[0].name, "conv1.weight");
    EXPECT_EQ(report.slots[0].size + report.slots[1].size, 1760u);
    EXPECT_EQ(report.slots[12].name, "dense.weight");
    EXPECT_EQ(report.slots[12].size, 256u * 131072u);
}

TEST(Shapes, StageShapesHalveAfterEvenLayers) {
    const auto report = walk_shapes(ModelConfig::standard(6));
    const std::vector<std::array<int, 3>> expected = {
        {32, 256, 256}, {32, 128, 128}, {64, 128, 128}, {64, 64, 64}, {128, 64, 64}, {128, 32, 32}};
    EXPECT_EQ(report.stage_shapes, expected);
}

TEST(Shapes, ConetModelHasThreeInputs) {
    const auto six = ModelConfig::standard(6).parameter_count();
    const auto three = ModelConfig::standard(3).parameter_count();
    EXPECT_EQ(six - three, 3u * 32u * 9u);
}

TEST(Shapes, InvalidConfigRejected) {
    auto c = tiny();
    c.input_size = 12;
    EXPECT_THROW(c.validate(), ConfigError);
    c = tiny();
    c.dense_width = 0;
    EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Init, FanInBoundsAndZeroBiases) {
    ModelParams<float> p(ModelConfig::reduced(6, 16, 4, 8));
    p.initialize(7);
    for (std::size_t s = 0; s < p.slots().size(); ++s) {
        const auto& slot = p.slots()[s];
        const auto values = p.tensor(s);
        if (slot.shape.size() == 1) {
            for (float v : values) EXPECT_EQ(v, 0.0f) << slot.name;
            continue;
        }
        std::size_t fan_in = 1;
        for (std::size_t d = 1; d < slot.shape.size(); ++d) fan_in *= slot.shape[d];
        const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
        for (float v : values) EXPECT_LE(std::abs(v), bound + 1e-6) << slot.name;
    }
    for (float v : p.velocity()) EXPECT_EQ(v, 0.0f);

    ModelParams<float> q(p.config());
    q.initialize(7);
    EXPECT_EQ(p, q);
    q.initialize(8);
    EXPECT_NE(p, q);
}

TEST(Forward, ZeroWeightsGiveOneHalfAndLn2) {
    ModelParams<double> p(tiny());
    const auto batch = random_batch<double>(p.config(), 3, 1);
    for (double s : forward(p, batch)) EXPECT_DOUBLE_EQ(s, 0.5);
    const std::vector<int> labels = {0, 1, 1};
    EXPECT_NEAR(loss_and_grad(p, batch, labels).loss, std::log(2.0), 1e-12);
}

TEST(Forward, ScoresInOpenUnitInterval) {
    ModelParams<float> p(tiny(3));
    p.initialize(3);
    for (float s : forward(p, random_batch<float>(p.config(), 8, 2))) {
        EXPECT_GT(s, 0.0f);
        EXPECT_LT(s, 1.0f);
    }
}

TEST(Forward, IndependentOfWorkerCount) {
    ModelParams<float> p(tiny());
    p.initialize(5);
    const auto batch = random_batch<float>(p.config(), 7, 4);
    EXPECT_EQ(forward(p, batch, 1), forward(p, batch, 3));
}

TEST(Forward, ChannelMismatchIsShapeError) {
    ModelParams<float> p(tiny(6));
    p.initialize(1);
    Batch<float> batch(1, 3, 8);
    EXPECT_THROW(forward(p, batch), ShapeError);
    Batch<float> wrong_side(1, 6, 16);
    EXPECT_THROW(forward(p, wrong_side), ShapeError);
}

TEST(Forward, NonFiniteInputIsNumericalError) {
    ModelParams<float> p(tiny());
    p.initialize(1);
    auto batch = random_batch<float>(p.config(), 1, 1);
    batch.data[5] = std::nanf("");
    EXPECT_THROW(forward(p, batch), NumericalError);
}

TEST(Loss, DuplicatedBatchHasSameLossAndGradient) {
    ModelParams<double> p(tiny());
    p.initialize(9);
    const auto one = random_batch<double>(p.config(), 1, 6);
    Batch<double> two(2, one.channels, one.size);
    std::copy(one.data.begin(), one.data.end(), two.data.begin());
    std::copy(one.data.begin(), one.data.end(), two.data.begin() + static_cast<std::ptrdiff_t>(one.data.size()));
    const std::vector<int> l1 = {1};
    const std::vector<int> l2 = {1, 1};
    const auto a = loss_and_grad(p, one, l1);
    const auto b = loss_and_grad(p, two, l2);
    EXPECT_NEAR(a.loss, b.loss, 1e-12);
    for (std::size_t k = 0; k < a.grads.size(); ++k) ASSERT_NEAR(a.grads[k], b.grads[k], 1e-12);
}

TEST(Loss, OutputLayerGradientMatchesFiniteDifference) {
    // The loss is smooth in the output layer's parameters, so central
    // differences apply without kink handling.
    ModelParams<double> p(tiny());
    p.initialize(11);
    const auto batch = random_batch<double>(p.config(), 4, 12);
    const std::vector<int> labels = {0, 1, 0, 1};
    const auto analytic = loss_and_grad(p, batch, labels).grads;
    const std::size_t out_w = slot_index(p, "output.weight");
    const std::size_t out_b = slot_index(p, "output.bias");
    for (std::size_t s : {out_w, out_b}) {
        const auto& slot = p.slots()[s];
        for (std::size_t k = 0; k < slot.size; ++k) {
            const std::size_t idx = slot.offset + k;
            const double w = p.values()[idx];
            const double h = 1e-5;
            p.values()[idx] = w + h;
            const double up = loss_and_grad(p, batch, labels).loss;
            p.values()[idx] = w - h;
            const double down = loss_and_grad(p, batch, labels).loss;
            p.values()[idx] = w;
            const double numeric = (up - down) / (2 * h);
            EXPECT_NEAR(analytic[idx], numeric, 1e-7 + 1e-5 * std::abs(numeric)) << slot.name << "[" << k << "]";
        }
    }
}

TEST(Loss, LabelsValidated) {
    ModelParams<double> p(tiny());
    const auto batch = random_batch<double>(p.config(), 2, 1);
    const std::vector<int> wrong_count = {1};
    const std::vector<int> bad_value = {0, 2};
    EXPECT_THROW(loss_and_grad(p, batch, wrong_count), ShapeError);
    EXPECT_THROW(loss_and_grad(p, batch, bad_value), ConfigError);
}

TEST(Optimizer, MomentumUnrollsClassically) {
    ModelParams<double> p(tiny());
    const std::vector<double> ones(p.size(), 1.0);
    sgd_momentum_step<double>(p, ones, 1.0, 0.9);
    EXPECT_DOUBLE_EQ(p.values()[0], -1.0);
    sgd_momentum_step<double>(p, ones, 1.0, 0.9);
    EXPECT_DOUBLE_EQ(p.values()[0], -2.9);
    EXPECT_DOUBLE_EQ(p.velocity()[0], -1.9);

    const std::vector<double> zeros(p.size(), 0.0);
    sgd_momentum_step<double>(p, zeros, 1.0, 0.9);
    EXPECT_NEAR(p.velocity()[0], -1.71, 1e-12);
    EXPECT_NEAR(p.values()[0], -4.61, 1e-12);
}

TEST(Optimizer, ZeroMomentumIsPlainSgd) {
    ModelParams<double> p(tiny());
    p.initialize(2);
    const double w0 = p.values()[10];
    std::vector<double> g(p.size(), 0.0);
    g[10] = 0.5;
    sgd_momentum_step<double>(p, g, 0.1, 0.0);
    EXPECT_DOUBLE_EQ(p.values()[10], w0 - 0.05);
}

TEST(Params, PrecisionConversionRoundTrips) {
    ModelParams<float> p(tiny());
    p.initialize(4);
    const auto d = convert_params<double>(p);
    EXPECT_EQ(convert_params<float>(d), p);
}

TEST(Checkpoint, RoundTripPreservesEverything) {
    auto config = tiny(6);
    config.input_gain = 65536.0;
    ModelParams<float> p(config);
    p.initialize(21);
    p.velocity()[3] = 0.25f;
    std::stringstream ss;
    write_checkpoint(ss, p, "abc123");
    const auto back = read_checkpoint(ss, config);
    EXPECT_EQ(back.params, p);
    EXPECT_EQ(back.params.config().input_gain, 65536.0);
    EXPECT_EQ(back.train_fingerprint, "abc123");
}

TEST(Checkpoint, ChannelMismatchIsShapeError) {
    ModelParams<float> p(tiny(3));
    p.initialize(1);
    std::stringstream ss;
    write_checkpoint(ss, p, "");
    EXPECT_THROW(read_checkpoint(ss, tiny(6)), ShapeError);
}

TEST(Checkpoint, CorruptContainersRejected) {
    ModelParams<float> p(tiny());
    p.initialize(1);
    std::stringstream ss;
    write_checkpoint(ss, p, "fp");
    const auto bytes = ss.str();

    auto bad_magic = bytes;
    bad_magic[1] = 'Z';
    std::istringstream a(bad_magic);
    EXPECT_THROW(read_checkpoint(a), CheckpointError);

    std::istringstream b(bytes.substr(0, bytes.size() - 9));
    EXPECT_THROW(read_checkpoint(b), CheckpointError);
}

TEST(Checkpoint, ReloadedModelReproducesScores) {
    ModelParams<float> p(tiny());
    p.initialize(33);
    const auto batch = random_batch<float>(p.config(), 5, 34);
    std::stringstream ss;
    write_checkpoint(ss, p, "");
    const auto back = read_checkpoint(ss);
    EXPECT_EQ(forward(back.params, batch), forward(p, batch));
}
