#include "scorefold/conditioning.hpp"

#include "support.hpp"

#include <doctest.h>

#include <cmath>

using namespace scorefold;
using namespace scorefold::testing;

TEST_CASE("one-hot pairwise map") {
    const auto aa = one_hot_pairwise("AA");
    CHECK(aa.length == 2);
    CHECK(aa.channels == 40);
    const auto a = static_cast<std::size_t>(residue_index('A'));
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j) {
            float total = 0;
            for (float v : aa.cell(i, j)) total += v;
            CHECK(total == 2.0f);
            CHECK(aa.at(i, j, a) == 1.0f);
            CHECK(aa.at(i, j, 20 + a) == 1.0f);
        }
    CHECK_THROWS_AS(one_hot_pairwise(""), Error);

    Rng rng = make_rng(1);
    const std::string seq = random_sequence(30, rng);
    const auto map = one_hot_pairwise(seq);
    for (std::size_t i = 0; i < 30; ++i) {
        for (std::size_t j = 0; j < 30; ++j) {
            float total = 0;
            for (float v : map.cell(i, j)) total += v;
            CHECK(total == 2.0f);
            for (std::size_t c = 0; c < 20; ++c) {
                CHECK(map.at(i, j, c) == map.at(i, 0, c));
                CHECK(map.at(i, j, c) == map.at(j, i, 20 + c));
            }
        }
    }
}

TEST_CASE("positional encoding values") {
    const auto pe = positional_encoding(5, 48);
    CHECK(pe.channels == 48);
    for (std::size_t r = 0; r < 12; ++r) {
        CHECK(pe.at(0, 3, 2 * r) == 0.0f);
        CHECK(pe.at(0, 3, 2 * r + 1) == 1.0f);
    }
    CHECK(pe.at(1, 0, 0) == doctest::Approx(0.841471).epsilon(1e-6));
    CHECK(pe.at(1, 0, 1) == doctest::Approx(0.540302).epsilon(1e-6));
    // r = 1: argument i / 1000^(4/48).
    CHECK(pe.at(2, 0, 2) == doctest::Approx(std::sin(2.0 / std::pow(1000.0, 4.0 / 48.0))).epsilon(1e-6));
    for (float v : pe.data) {
        CHECK(v >= -1.0f);
        CHECK(v <= 1.0f);
    }
    CHECK(positional_encoding(5, 48) == pe);
    CHECK_THROWS_AS(positional_encoding(5, 46), Error);
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 5; ++j)
            for (std::size_t c = 0; c < 24; ++c) CHECK(pe.at(i, j, c) == pe.at(j, i, 24 + c));
}

namespace {

PairMap uniform_predictions(std::size_t n) {
    PairMap map(n, kPredictionChannels);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            for (const auto& g : kPredictionGroups)
                for (std::size_t b = 0; b < g.width; ++b)
                    map.at(i, j, g.offset + b) = 1.0f / static_cast<float>(g.width);
    return map;
}

}  // namespace

TEST_CASE("prediction validation") {
    CHECK(validate_predictions(uniform_predictions(4)).normalized);
    auto skewed = uniform_predictions(4);
    skewed.at(1, 2, 0) += 0.5f;
    CHECK_FALSE(validate_predictions(skewed).normalized);
    auto nan = uniform_predictions(4);
    nan.at(0, 0, 5) = std::nanf("");
    try {
        validate_predictions(nan);
        FAIL("expected error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Data);
    }
    try {
        validate_predictions(PairMap(4, 99));
        FAIL("expected error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Format);
    }
}

TEST_CASE("prediction files round-trip bit-exactly") {
    const auto dir = scratch_dir("conditioning");
    Rng rng = make_rng(2);
    PairMap map(6, kPredictionChannels);
    for (auto& v : map.data) v = static_cast<float>(uniform(rng, 0.0, 1.0));
    save_predictions(map, dir / "p.sft");
    const auto loaded = load_predictions(dir / "p.sft");
    CHECK(loaded.map == map);
    io::write_tensor(io::Tensor::from_f32({6, 6}, std::vector<float>(36, 0.0f)), dir / "bad.sft");
    CHECK_THROWS_AS(load_predictions(dir / "bad.sft"), Error);
}

TEST_CASE("assemble builds a fixed channel layout") {
    Rng rng = make_rng(3);
    const std::string seq = random_sequence(64, rng);
    const auto full = assemble(seq, validate_predictions(uniform_predictions(64)));
    CHECK(full.channels() == 188);
    CHECK(full.has_predictions());
    CHECK(full.predictions_normalized());
    const auto bare = assemble(seq);
    CHECK(bare.channels() == 188);
    CHECK_FALSE(bare.has_predictions());
    for (float v : bare.predictions().data) CHECK(v == 0.0f);
    CHECK(bare.manifest() == full.manifest());
    CHECK(bare.manifest() == channel_layout());
    CHECK(bare.id() != full.id());

    const auto masked = assemble(seq, validate_predictions(uniform_predictions(64)),
                                 {kDefaultPeWidth, PredictionMask::Orientation});
    for (std::size_t i = 0; i < 64; i += 7)
        for (std::size_t j = 0; j < 64; j += 5) {
            for (std::size_t c = 0; c < 37; ++c) CHECK(masked.predictions().at(i, j, c) == full.predictions().at(i, j, c));
            for (std::size_t c = 37; c < 100; ++c) CHECK(masked.predictions().at(i, j, c) == 0.0f);
        }
    CHECK_THROWS_AS(assemble(seq.substr(0, 10), validate_predictions(uniform_predictions(64))), Error);
}

TEST_CASE("stacked cells and windows") {
    Rng rng = make_rng(4);
    const std::string seq = random_sequence(12, rng);
    PairMap preds(12, kPredictionChannels);
    for (auto& v : preds.data) v = static_cast<float>(uniform(rng, 0.0, 1.0));
    const auto bundle = assemble(seq, validate_predictions(preds));
    std::vector<float> cell(bundle.channels());
    bundle.stacked_cell(3, 7, cell);
    CHECK(cell[static_cast<std::size_t>(residue_index(seq[3]))] == 1.0f);
    CHECK(cell[40 + 0] == bundle.posenc().at(3, 7, 0));
    CHECK(cell[88 + 5] == preds.at(3, 7, 5));

    const auto win = bundle.window(4, 6);
    CHECK(win.length() == 6);
    CHECK(win.sequence() == seq.substr(4, 6));
    CHECK(win.predictions().at(0, 1, 9) == preds.at(4, 5, 9));
    CHECK(win.onehot() == one_hot_pairwise(seq.substr(4, 6)));
    // Windows keep absolute positions.
    CHECK(win.posenc().at(0, 0, 0) == bundle.posenc().at(4, 4, 0));
    CHECK(win.id() != bundle.id());
    CHECK_THROWS_AS(bundle.window(10, 6), Error);
}
