#include "scorefold/sampler.hpp"

#include <chrono>
#include <cmath>
#include <exception>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace scorefold {

void SamplerConfig::validate() const {
    if (!(reference_step > 0.0) || !std::isfinite(reference_step)) {
        fail(ErrorKind::InvalidConfig, "reference step size must be positive");
    }
    if (decoys == 0) fail(ErrorKind::InvalidConfig, "decoy count must be positive");
    if (hirm_enabled && !hirm_reference) {
        fail(ErrorKind::InvalidConfig, "handedness resolution needs a reference histogram");
    }
}

Coords init_structure(std::size_t length, Rng& rng) {
    if (length < 4) {
        fail(ErrorKind::InvalidInput, "chain length " + std::to_string(length) + " is below 4");
    }
    return standard_normal(length, rng);
}

double step_size(const NoiseSchedule& schedule, std::size_t level, double reference_step) {
    const double sigma = schedule.sigma(level);
    return reference_step * sigma * sigma;
}

Coords langevin_update(const Coords& x, const Coords& g, double lambda, const Coords& v) {
    return x + (0.5 * lambda) * g + std::sqrt(lambda) * v;
}

Coords langevin_step(const Coords& x, const CoordinateScore& model, const ConditioningBundle& bundle,
                     std::size_t level, double lambda, Rng& rng, StepStats* stats) {
    const Coords g = model.evaluate(x, distance_matrix(x), bundle, level);
    if (!g.allFinite()) {
        fail(ErrorKind::SamplingFailure, "model returned a non-finite gradient at level " +
                                             std::to_string(level));
    }
    const Coords v = standard_normal(static_cast<std::size_t>(x.rows()), rng);
    if (stats) {
        stats->drift_norm = 0.5 * lambda * g.norm();
        stats->noise_norm = std::sqrt(lambda) * v.norm();
    }
    return langevin_update(x, g, lambda, v);
}

namespace {

void check_lengths(const CoordinateScore& model, const ConditioningBundle& bundle, std::size_t length) {
    if (bundle.length() != length) {
        fail(ErrorKind::InvalidInput, "bundle has " + std::to_string(bundle.length()) +
                                          " residues, coordinates have " + std::to_string(length));
    }
    if (model.length() != 0 && model.length() != length) {
        fail(ErrorKind::InvalidInput, "model expects " + std::to_string(model.length()) +
                                          " residues, bundle has " + std::to_string(length));
    }
}

}  // namespace

SampleResult anneal_sample(const CoordinateScore& model, const ConditioningBundle& bundle,
                           const SamplerConfig& config, Rng& rng, const StepObserver& observer) {
    config.validate();
    check_lengths(model, bundle, bundle.length());
    const Coords init = init_structure(bundle.length(), rng);
    return anneal_from(init, model, bundle, config, rng, observer);
}

SampleResult anneal_from(const Coords& init, const CoordinateScore& model,
                         const ConditioningBundle& bundle, const SamplerConfig& config, Rng& rng,
                         const StepObserver& observer) {
    config.validate();
    check_lengths(model, bundle, static_cast<std::size_t>(init.rows()));
    require_finite(init, "initial coordinates");

    using Clock = std::chrono::steady_clock;
    const std::size_t stages = config.schedule.size();
    const std::size_t iterations = config.iterations_per_stage;

    SampleResult result;
    Trajectory& traj = result.trajectory;
    traj.stage_ends.reserve(stages);
    traj.stage_seconds.reserve(stages);
    traj.stage_mirrored.reserve(stages);

    Coords x = init;
    for (std::size_t k = 0; k < stages; ++k) {
        const auto start = Clock::now();
        const double lambda = step_size(config.schedule, k, config.reference_step);
        for (std::size_t t = 0; t < iterations; ++t) {
            StepStats stats;
            stats.stage = k;
            stats.iteration = t;
            try {
                x = langevin_step(x, model, bundle, k, lambda, rng, observer ? &stats : nullptr);
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::SamplingFailure) throw;
                fail(ErrorKind::SamplingFailure, e.message() + " (stage " +
                                                     std::to_string(k) + ", iteration " +
                                                     std::to_string(t) + ")");
            }
            if (!x.allFinite()) {
                fail(ErrorKind::SamplingFailure, "non-finite coordinates at stage " + std::to_string(k) +
                                                     ", iteration " + std::to_string(t));
            }
            if (observer) observer(stats);
            if (config.snapshot_stride > 0 && (t + 1) % config.snapshot_stride == 0 && t + 1 < iterations) {
                traj.snapshots.push_back({k, t + 1, x});
            }
        }

        bool mirrored = false;
        if (iterations > 0) {
            if (config.hirm_enabled) {
                try {
                    auto decision = resolve_handedness(x, *config.hirm_reference);
                    mirrored = decision.mirrored;
                    x = std::move(decision.coords);
                } catch (const Error& e) {
                    // A fully collinear chain has no handedness to fix.
                    if (e.kind() != ErrorKind::HandednessUndecidable) throw;
                }
            }
            x = center(x);
        }
        traj.stage_seconds.push_back(std::chrono::duration<double>(Clock::now() - start).count());
        traj.stage_mirrored.push_back(mirrored);
        traj.stage_ends.push_back(x);
    }

    result.structure.sequence = bundle.sequence();
    result.structure.coords = std::move(x);
    return result;
}

std::vector<SampleResult> sample_decoys(const CoordinateScore& model, const ConditioningBundle& bundle,
                                        const SamplerConfig& config, std::size_t jobs,
                                        const DecoyObserver& observer) {
    config.validate();
    check_lengths(model, bundle, bundle.length());
    const auto count = static_cast<std::ptrdiff_t>(config.decoys);
    std::vector<SampleResult> results(config.decoys);
    std::vector<std::exception_ptr> errors(config.decoys);

#ifdef _OPENMP
    const int threads = jobs > 0 ? static_cast<int>(jobs) : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
#else
    (void)jobs;
#endif
    for (std::ptrdiff_t d = 0; d < count; ++d) {
        const auto index = static_cast<std::size_t>(d);
        try {
            Rng rng = make_rng(config.seed, index);
            StepObserver per_decoy;
            if (observer) per_decoy = [&observer, index](const StepStats& s) { observer(index, s); };
            results[index] = anneal_sample(model, bundle, config, rng, per_decoy);
        } catch (...) {
            errors[index] = std::current_exception();
        }
    }
    for (std::size_t d = 0; d < errors.size(); ++d) {
        if (!errors[d]) continue;
        try {
            std::rethrow_exception(errors[d]);
        } catch (const Error& e) {
            fail(e.kind(), "decoy " + std::to_string(d) + ": " + e.message());
        }
    }
    return results;
}

}  // namespace scorefold
