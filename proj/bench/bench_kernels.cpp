// Serial reference kernels against their OpenMP versions.

#include "scorefold/kernels.hpp"

#include <benchmark/benchmark.h>

#include <random>

namespace {

using namespace scorefold;

Coords random_coords(std::size_t n) {
    std::mt19937_64 rng(n);
    std::normal_distribution<double> normal(0.0, 10.0);
    Coords x(static_cast<Eigen::Index>(n), 3);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = normal(rng);
    return x;
}

Matrix random_matrix(std::size_t n) {
    std::mt19937_64 rng(n + 1);
    std::uniform_real_distribution<double> uniform(-1.0, 1.0);
    Matrix h(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < h.size(); ++i) h.data()[i] = uniform(rng);
    return h;
}

template <void (*Kernel)(const Coords&, Matrix&)>
void distances(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const Coords x = random_coords(n);
    Matrix out(x.rows(), x.rows());
    for (auto _ : state) {
        Kernel(x, out);
        benchmark::DoNotOptimize(out.data());
    }
    state.SetComplexityN(state.range(0));
}

template <void (*Kernel)(const Matrix&, const Coords&, Coords&)>
void chain_rule(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const Coords x = random_coords(n);
    const Matrix h = random_matrix(n);
    Coords g(x.rows(), 3);
    for (auto _ : state) {
        Kernel(h, x, g);
        benchmark::DoNotOptimize(g.data());
    }
    state.SetComplexityN(state.range(0));
}

}  // namespace

BENCHMARK(distances<kernels::serial::squared_distances>)->RangeMultiplier(2)->Range(32, 2048)->Complexity();
BENCHMARK(distances<kernels::parallel::squared_distances>)->RangeMultiplier(2)->Range(32, 2048)->Complexity();
BENCHMARK(chain_rule<kernels::serial::chain_rule>)->RangeMultiplier(2)->Range(32, 2048)->Complexity();
BENCHMARK(chain_rule<kernels::parallel::chain_rule>)->RangeMultiplier(2)->Range(32, 2048)->Complexity();

BENCHMARK_MAIN();
