#include "scorefold/noise.hpp"

#include "support.hpp"

#include <doctest.h>

#include <cmath>

using namespace scorefold;
using namespace scorefold::testing;

TEST_CASE("standard schedule endpoints and length") {
    const auto s = NoiseSchedule::standard();
    CHECK(s.size() == 32);
    CHECK(s.sigma(0) == 10.0);
    CHECK(s.sigma(31) == 0.01);
}

TEST_CASE("geometric schedule has a constant ratio") {
    const auto s = NoiseSchedule::standard();
    const double ratio = std::pow(0.001, 1.0 / 31.0);
    for (std::size_t k = 1; k < s.size(); ++k) {
        CHECK(s.sigma(k) / s.sigma(k - 1) == doctest::Approx(ratio).epsilon(1e-12));
    }
    const auto three = NoiseSchedule::geometric(4.0, 1.0, 3);
    CHECK(three.sigma(1) == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("schedule validation") {
    CHECK_THROWS_AS(NoiseSchedule::geometric(10, 0.01, 1), Error);
    CHECK_THROWS_AS(NoiseSchedule::geometric(0.01, 10, 8), Error);
    CHECK_THROWS_AS(NoiseSchedule::geometric(10, 0.0, 8), Error);
    CHECK_THROWS_AS(NoiseSchedule::geometric(10, 10, 8), Error);
    CHECK_THROWS_AS(NoiseSchedule(std::vector<double>{1.0, 2.0}), Error);
    CHECK_THROWS_AS(NoiseSchedule::standard().sigma(32), Error);
}

TEST_CASE("perturb draws N(0, sigma^2) per coordinate") {
    Rng rng = make_rng(5);
    const Coords x = Coords::Zero(20000, 3);
    const Coords y = perturb(x, 2.0, rng);
    const double var = y.array().square().mean();
    CHECK(std::sqrt(var) == doctest::Approx(2.0).epsilon(0.01));
    Rng a = make_rng(9), b = make_rng(9);
    CHECK(perturb(x.topRows(10), 1.0, a) == perturb(x.topRows(10), 1.0, b));
}

TEST_CASE("true score is the Gaussian log-density gradient") {
    Rng rng = make_rng(6);
    const Coords x = random_cloud(5, rng);
    const Coords xt = perturb(x, 0.5, rng);
    const Coords s = true_score(x, xt, 0.5);
    // log q = -|xt - x|^2 / (2 sigma^2); differentiate numerically.
    const auto logq = [&](const Coords& p) { return -(p - x).squaredNorm() / (2.0 * 0.25); };
    Coords probe = xt;
    for (Eigen::Index i = 0; i < 5; ++i) {
        for (int a = 0; a < 3; ++a) {
            probe(i, a) += 1e-5;
            const double up = logq(probe);
            probe(i, a) -= 2e-5;
            const double down = logq(probe);
            probe(i, a) += 1e-5;
            CHECK(s(i, a) == doctest::Approx((up - down) / 2e-5).epsilon(1e-6));
        }
    }
}
