#include "scorefold/sampler.hpp"

#include "scorefold/metrics.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>

using namespace scorefold;
using namespace scorefold::testing;

namespace {

/// Returns NaN from the given level on, the oracle score before it.
class PoisonedScore : public CoordinateScore {
public:
    PoisonedScore(std::shared_ptr<const CoordinateScore> inner, std::size_t from_level)
        : inner_(std::move(inner)), from_level_(from_level) {}
    const NoiseSchedule& schedule() const override { return inner_->schedule(); }
    Coords evaluate(const Coords& x, const DistanceMatrix& d, const ConditioningBundle& b,
                    std::size_t level) const override {
        if (level >= from_level_) return Coords::Constant(x.rows(), 3, std::numeric_limits<double>::quiet_NaN());
        return inner_->evaluate(x, d, b, level);
    }

private:
    std::shared_ptr<const CoordinateScore> inner_;
    std::size_t from_level_;
};

struct Target {
    Structure native;
    ConditioningBundle bundle;
};

Target helix_target(std::size_t length) {
    Structure s = ideal_helix(length);
    s.coords = center(s.coords);
    auto bundle = assemble(s.sequence);
    return {std::move(s), std::move(bundle)};
}

SamplerConfig short_config(std::size_t levels, std::size_t iterations) {
    SamplerConfig c;
    c.schedule = NoiseSchedule::geometric(10.0, 0.01, levels);
    c.iterations_per_stage = iterations;
    c.decoys = 3;
    c.seed = 42;
    return c;
}

}  // namespace

TEST_CASE("initialization is standard normal and seeded") {
    Rng rng = make_rng(1);
    const Coords x = init_structure(33334, rng);  // ~10⁵ entries
    const double n = static_cast<double>(x.size());
    const double mean = x.sum() / n;
    const double sd = std::sqrt((x.array() - mean).square().sum() / (n - 1.0));
    CHECK(std::abs(mean) < 0.02);
    CHECK(sd == doctest::Approx(1.0).epsilon(0.01));
    Rng a = make_rng(2), b = make_rng(2);
    CHECK(init_structure(10, a) == init_structure(10, b));
    CHECK_THROWS_AS(init_structure(3, a), Error);
    // Pairwise distances of the prior are small compared with a folded chain.
    Rng c = make_rng(3);
    const Coords small = init_structure(64, c);
    CHECK(radius_of_gyration(small) < 2.5);
}

TEST_CASE("step sizes follow lambda0 sigma squared") {
    const auto schedule = NoiseSchedule::standard();
    CHECK(step_size(schedule, 0, 0.1) == doctest::Approx(10.0).epsilon(1e-12));
    CHECK(step_size(schedule, 31, 0.1) == doctest::Approx(1e-5).epsilon(1e-12));
    for (std::size_t k = 0; k < 32; ++k) {
        const double s = schedule.sigma(k);
        CHECK(step_size(schedule, k, 0.3) == doctest::Approx(0.3 * s * s).epsilon(1e-14));
    }
    CHECK_THROWS_AS(step_size(schedule, 32, 0.1), Error);
    SamplerConfig c;
    c.reference_step = 0.0;
    CHECK_THROWS_AS(c.validate(), Error);
    c = SamplerConfig{};
    c.decoys = 0;
    CHECK_THROWS_AS(c.validate(), Error);
    c = SamplerConfig{};
    c.hirm_enabled = true;
    CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("langevin update algebra") {
    Rng rng = make_rng(4);
    const Coords x = random_cloud(8, rng), g = random_cloud(8, rng), v = random_cloud(8, rng);
    CHECK(langevin_update(x, Coords::Zero(8, 3), 0.0, v) == x);
    const Coords y = langevin_update(x, g, 0.25, v);
    CHECK((y - (x + 0.125 * g + 0.5 * v)).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("noiseless oracle steps contract by 1 - lambda0/2") {
    const auto target = helix_target(12);
    const auto schedule = NoiseSchedule::standard();
    const auto oracle = oracle_score(target.native, schedule);
    Rng rng = make_rng(5);
    for (std::size_t k : {0u, 10u, 31u}) {
        const Coords x = random_cloud(12, rng, 3.0);
        const double lambda = step_size(schedule, k, 0.1);
        const Coords g = oracle->evaluate(x, target.bundle, k);
        const Coords next = langevin_update(x, g, lambda, Coords::Zero(12, 3));
        const Coords expected = target.native.coords + (1.0 - 0.05) * (x - target.native.coords);
        CHECK((next - expected).cwiseAbs().maxCoeff() < 1e-9 * (1.0 + x.cwiseAbs().maxCoeff()));
    }
}

TEST_CASE("trajectory shape and snapshots") {
    const auto target = helix_target(10);
    auto config = short_config(6, 8);
    config.snapshot_stride = 3;
    const auto oracle = oracle_score(target.native, config.schedule);
    Rng rng = make_rng(6);
    std::size_t steps = 0;
    const auto result = anneal_sample(*oracle, target.bundle, config, rng, [&](const StepStats& s) {
        CHECK(s.iteration < 8);
        CHECK(s.stage < 6);
        ++steps;
    });
    CHECK(steps == 48);
    REQUIRE(result.trajectory.stage_ends.size() == 6);
    CHECK(result.trajectory.stage_seconds.size() == 6);
    CHECK(result.trajectory.stage_mirrored.size() == 6);
    // Iterations 3 and 6 of each stage; 8 is a stage end, not a snapshot.
    CHECK(result.trajectory.snapshots.size() == 12);
    for (const auto& s : result.trajectory.snapshots) {
        CHECK(s.coords.rows() == 10);
        CHECK((s.iteration == 3 || s.iteration == 6));
    }
    CHECK(result.structure.coords == result.trajectory.stage_ends.back());
    CHECK(result.structure.sequence == target.native.sequence);
    for (const auto& c : result.trajectory.stage_ends) {
        CHECK(c.colwise().mean().norm() < 1e-12);  // re-centred after every stage
    }
}

TEST_CASE("zero iterations leave the initialization") {
    const auto target = helix_target(10);
    const auto config = short_config(4, 0);
    const auto oracle = oracle_score(target.native, config.schedule);
    Rng a = make_rng(7), b = make_rng(7);
    const auto result = anneal_sample(*oracle, target.bundle, config, a);
    const Coords init = init_structure(10, b);
    CHECK(result.structure.coords == init);
    CHECK(result.trajectory.stage_ends.size() == 4);
}

TEST_CASE("decoys are reproducible and independent of thread count") {
    const auto target = helix_target(12);
    auto config = short_config(5, 6);
    config.decoys = 4;
    const auto oracle = oracle_score(target.native, config.schedule);
    const auto a = sample_decoys(*oracle, target.bundle, config, 1);
    const auto b = sample_decoys(*oracle, target.bundle, config, 3);
    REQUIRE(a.size() == 4);
    for (std::size_t d = 0; d < 4; ++d) {
        CHECK(a[d].structure.coords == b[d].structure.coords);
        Rng rng = make_rng(config.seed, d);
        CHECK(anneal_sample(*oracle, target.bundle, config, rng).structure.coords == a[d].structure.coords);
    }
    CHECK_FALSE(a[0].structure.coords == a[1].structure.coords);
}

TEST_CASE("oracle sampling recovers a small native") {
    const auto target = helix_target(16);
    auto config = SamplerConfig{};
    config.decoys = 2;
    config.seed = 8;
    const auto oracle = oracle_score(target.native, config.schedule);
    for (const auto& r : sample_decoys(*oracle, target.bundle, config, 1)) {
        CHECK(rmsd(r.structure.coords, target.native.coords) < 0.5);
        CHECK(lddt_ca(r.structure.coords, target.native.coords) > 0.95);
    }
}

TEST_CASE("signal to noise ratio is level independent under the oracle") {
    // Noiseless drift versus injected noise: ‖(λ/2)G‖ / ‖√λ V‖ with X at the
    // level's own noise scale is √λ₀/2 · ‖ε‖/‖V‖ for every level.
    const auto target = helix_target(20);
    const auto schedule = NoiseSchedule::standard();
    const auto oracle = oracle_score(target.native, schedule);
    std::vector<double> ratios;
    for (std::size_t k = 0; k < schedule.size(); k += 5) {
        Rng rng = make_rng(9, k);
        double sum = 0.0;
        for (int t = 0; t < 200; ++t) {
            const Coords x = perturb(target.native.coords, schedule.sigma(k), rng);
            StepStats stats;
            langevin_step(x, *oracle, target.bundle, k, step_size(schedule, k, 0.1), rng, &stats);
            sum += stats.drift_norm / stats.noise_norm;
        }
        ratios.push_back(sum / 200.0);
    }
    const auto [lo, hi] = std::minmax_element(ratios.begin(), ratios.end());
    CHECK(*hi / *lo < 1.2);
    CHECK(median(ratios) == doctest::Approx(std::sqrt(0.1) / 2.0).epsilon(0.1));
}

TEST_CASE("non-finite gradients report stage and iteration") {
    const auto target = helix_target(10);
    const auto config = short_config(6, 4);
    const PoisonedScore model(oracle_score(target.native, config.schedule), 3);
    Rng rng = make_rng(10);
    try {
        anneal_sample(model, target.bundle, config, rng);
        FAIL("expected failure");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::SamplingFailure);
        const std::string msg = e.message();
        CHECK(msg.find("stage 3") != std::string::npos);
        CHECK(msg.find("iteration 0") != std::string::npos);
    }
    try {
        sample_decoys(model, target.bundle, config, 1);
        FAIL("expected failure");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::SamplingFailure);
        CHECK(e.message().find("decoy 0") != std::string::npos);
    }
}

TEST_CASE("handedness resolution at stage ends") {
    // Start from the mirror image with a reference built from right-handed helices:
    // the first stage end must come back un-mirrored.
    const auto target = helix_target(16);
    auto config = short_config(3, 1);
    config.reference_step = 1e-9;  // keep the chain essentially where it starts
    config.hirm_enabled = true;
    std::vector<Structure> refs{ideal_helix(30)};
    config.hirm_reference = std::make_shared<const DihedralHistogram>(build_reference_histogram(refs));
    const auto oracle = oracle_score(target.native, config.schedule);
    Rng rng = make_rng(11);
    const auto result = anneal_from(mirror(target.native.coords), *oracle, target.bundle, config, rng);
    CHECK(result.trajectory.stage_mirrored[0]);
    CHECK_FALSE(result.trajectory.stage_mirrored[1]);
    CHECK(rmsd(result.structure.coords, target.native.coords) < 1e-3);
}
