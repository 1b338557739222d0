#include "scorefold/common.hpp"

#include <doctest.h>

#include <set>

using namespace scorefold;

TEST_CASE("derive_seed separates streams and is deterministic") {
    std::set<std::uint64_t> seen;
    for (std::uint64_t stream = 0; stream < 1000; ++stream) seen.insert(derive_seed(7, stream));
    CHECK(seen.size() == 1000);
    CHECK(derive_seed(7, 3) == derive_seed(7, 3));
    CHECK(derive_seed(7, 3) != derive_seed(8, 3));
}

TEST_CASE("standard_normal has unit moments") {
    Rng rng = make_rng(11);
    const Coords x = standard_normal(40000, rng);
    const double mean = x.mean();
    const double var = (x.array() - mean).square().mean();
    CHECK(std::abs(mean) < 0.01);
    CHECK(std::abs(std::sqrt(var) - 1.0) < 0.01);
}

TEST_CASE("errors carry their kind and numerical flag") {
    try {
        fail(ErrorKind::SamplingFailure, "boom");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::SamplingFailure);
        CHECK(e.numerical());
        CHECK(e.message() == "boom");
        CHECK(std::string(e.what()).find("boom") != std::string::npos);
    }
    CHECK_FALSE(Error(ErrorKind::Parse, "x").numerical());
    CHECK(Error(ErrorKind::TrainingFailure, "x").numerical());
}
