#include "scorefold/training.hpp"

#include "scorefold/noise.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>

using namespace scorefold;
using namespace scorefold::testing;

namespace {

const NetConfig kSmall{4, 2, 2, 4};

std::vector<TrainingExample> small_examples(std::size_t count, std::size_t length, Rng& rng) {
    std::vector<TrainingExample> out;
    for (std::size_t k = 0; k < count; ++k) {
        TrainingExample ex;
        ex.structure = protein_like(length, rng);
        ex.bundle = assemble(ex.structure.sequence, toy_predictions(ex.structure), {4, PredictionMask::None});
        out.push_back(std::move(ex));
    }
    return out;
}

}  // namespace

TEST_CASE("oracle stub gives exactly zero loss") {
    Rng data_rng = make_rng(1);
    const auto batch = small_examples(3, 12, data_rng);
    const auto schedule = NoiseSchedule::standard();
    const SampleScore oracle = [&](const TrainingExample& ex, const Coords& xt, std::size_t level) {
        return true_score(ex.structure.coords, xt, schedule.sigma(level));
    };
    Rng rng = make_rng(2);
    for (int draw = 0; draw < 20; ++draw) CHECK(dsm_loss(oracle, batch, schedule, rng) == 0.0);
    CHECK(dsm_loss(oracle, batch, schedule, rng, 8) == 0.0);
}

TEST_CASE("zero model loss matches 3L/2 in expectation") {
    Rng data_rng = make_rng(3);
    const std::size_t n = 10;
    const auto batch = small_examples(4, n, data_rng);
    const auto schedule = NoiseSchedule::standard();
    const SampleScore zero = [](const TrainingExample& ex, const Coords&, std::size_t) {
        return Coords::Zero(static_cast<Eigen::Index>(ex.structure.length()), 3).eval();
    };
    Rng rng = make_rng(4);
    double sum = 0.0;
    const int draws = 4000;
    for (int k = 0; k < draws; ++k) {
        const double loss = dsm_loss(zero, batch, schedule, rng);
        CHECK(loss >= 0.0);
        sum += loss;
    }
    CHECK(sum / draws == doctest::Approx(1.5 * n).epsilon(0.05));
}

TEST_CASE("loss gradient matches finite differences of the loss") {
    Rng data_rng = make_rng(5);
    const auto batch = small_examples(2, 7, data_rng);
    auto net = PairwiseScoreNet::initialized(kSmall, NoiseSchedule::geometric(4.0, 0.5, 4), 6);
    for (auto& p : net.parameters()) p += 0.05 * uniform(data_rng, -1.0, 1.0);

    Rng rng = make_rng(7);
    const auto result = dsm_loss_and_gradient(net, batch, rng, 5);
    Rng replay = make_rng(7);
    CHECK(dsm_loss(net, batch, replay, 5) == doctest::Approx(result.loss).epsilon(1e-12));

    double worst = 0.0;
    for (std::size_t p = 0; p < net.parameter_count(); ++p) {
        PairwiseScoreNet probe = net;
        const double base = probe.parameters()[p];
        const double step = 1e-5 * std::max(1.0, std::abs(base));
        probe.parameters()[p] = base + step;
        Rng r1 = make_rng(7);
        const double up = dsm_loss(probe, batch, r1, 5);
        probe.parameters()[p] = base - step;
        Rng r2 = make_rng(7);
        const double down = dsm_loss(probe, batch, r2, 5);
        const double fd = (up - down) / (2.0 * step);
        const double scale = std::max({std::abs(fd), std::abs(result.gradient[p]), 1e-6});
        worst = std::max(worst, std::abs(fd - result.gradient[p]) / scale);
    }
    CHECK(worst < 1e-4);
}

TEST_CASE("training is deterministic, lr 0 is flat, and errors are typed") {
    Rng data_rng = make_rng(8);
    const auto data = small_examples(3, 10, data_rng);
    const auto net = PairwiseScoreNet::initialized(kSmall, NoiseSchedule::geometric(4.0, 0.5, 4), 9);
    TrainConfig config;
    config.epochs = 5;
    config.batch = 2;
    config.crop = 8;
    config.learning_rate = 1e-3;
    config.seed = 10;
    const auto a = train(net, data, {}, config);
    const auto b = train(net, data, {}, config);
    REQUIRE(a.history.size() == 5);
    for (std::size_t e = 0; e < 5; ++e) CHECK(a.history[e].train_loss == b.history[e].train_loss);
    CHECK(a.final_net == b.final_net);
    CHECK_FALSE(a.final_net == net);

    config.learning_rate = 0.0;
    const auto flat = train(net, data, data, config);
    CHECK(flat.final_net == net);
    for (const auto& r : flat.history) {
        REQUIRE(r.valid_loss);
        CHECK(*r.valid_loss == *flat.history.front().valid_loss);
    }

    config.crop = 11;
    CHECK_THROWS_AS(train(net, data, {}, config), Error);
    config.crop = 0;
    CHECK_THROWS_AS(train(net, {}, {}, config), Error);

    auto broken = net;
    broken.parameters().back() = std::nan("");  // head bias: reaches every level
    try {
        train(broken, data, {}, config);
        FAIL("expected error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::TrainingFailure);
        CHECK(e.message().find("epoch 0") != std::string::npos);
    }
}

TEST_CASE("toy training halves the loss on a single structure") {
    auto examples = toy_examples();
    examples.resize(1);
    const auto net = PairwiseScoreNet::initialized(NetConfig{}, NoiseSchedule::standard(), 11);
    TrainConfig config;
    config.epochs = 200;
    config.batch = 1;
    config.crop = 0;
    config.learning_rate = 3e-3;
    config.seed = 12;
    const auto result = train(net, examples, {}, config);
    // Per-epoch losses are single draws; score both nets on the same 400 draws.
    auto mean_loss = [&](const PairwiseScoreNet& n) {
        Rng rng = make_rng(13);
        double sum = 0.0;
        for (int r = 0; r < 400; ++r) sum += dsm_loss(n, examples, rng);
        return sum / 400.0;
    };
    const double initial = mean_loss(net);
    const double final = mean_loss(result.final_net);
    MESSAGE("initial " << initial << ", final " << final);
    CHECK(final < 0.5 * initial);
}
