#pragma once

#include "scorefold/conditioning.hpp"
#include "scorefold/geometry.hpp"
#include "scorefold/handedness.hpp"
#include "scorefold/noise.hpp"
#include "scorefold/score.hpp"

#include <functional>
#include <memory>
#include <vector>

namespace scorefold {

struct SamplerConfig {
    NoiseSchedule schedule = NoiseSchedule::standard();
    /// Langevin iterations per noise level (T). Zero leaves every decoy at its initialization.
    std::size_t iterations_per_stage = 64;
    /// λ₀; stage k uses λ_k = λ₀ σ_k².
    double reference_step = 0.1;
    std::size_t decoys = 128;
    std::uint64_t seed = 0;
    bool hirm_enabled = false;
    /// Required when hirm_enabled is set.
    std::shared_ptr<const DihedralHistogram> hirm_reference;
    /// Keep every n-th intra-stage iterate; 0 keeps stage ends only.
    std::size_t snapshot_stride = 0;

    void validate() const;
};

struct Snapshot {
    std::size_t stage = 0;
    /// Iterations completed within the stage when the snapshot was taken.
    std::size_t iteration = 0;
    Coords coords;
};

struct Trajectory {
    /// Working coordinates after each stage (after handedness resolution and re-centering).
    std::vector<Coords> stage_ends;
    std::vector<Snapshot> snapshots;
    std::vector<double> stage_seconds;
    std::vector<bool> stage_mirrored;
};

struct StepStats {
    std::size_t stage = 0;
    std::size_t iteration = 0;
    /// ‖(λ_k/2) G‖_F and ‖√λ_k V‖_F.
    double drift_norm = 0.0;
    double noise_norm = 0.0;
};

using StepObserver = std::function<void(const StepStats&)>;

struct SampleResult {
    Structure structure;
    Trajectory trajectory;
};

/// i.i.d. N(0, 1) coordinates. Throws InvalidInput for L < 4.
Coords init_structure(std::size_t length, Rng& rng);

/// λ₀ σ_level² (0-based level).
double step_size(const NoiseSchedule& schedule, std::size_t level, double reference_step);

/// X + (λ/2) G + √λ V.
Coords langevin_update(const Coords& x, const Coords& g, double lambda, const Coords& v);

/// One Langevin iteration with a fresh standard-normal V drawn from `rng`. Throws
/// SamplingFailure if the model returns a non-finite gradient.
Coords langevin_step(const Coords& x, const CoordinateScore& model, const ConditioningBundle& bundle,
                     std::size_t level, double lambda, Rng& rng, StepStats* stats = nullptr);

/// Annealed Langevin dynamics from a N(0, I) start drawn from `rng`.
SampleResult anneal_sample(const CoordinateScore& model, const ConditioningBundle& bundle,
                           const SamplerConfig& config, Rng& rng,
                           const StepObserver& observer = {});

/// Same, starting from the given coordinates.
SampleResult anneal_from(const Coords& init, const CoordinateScore& model,
                         const ConditioningBundle& bundle, const SamplerConfig& config, Rng& rng,
                         const StepObserver& observer = {});

/// Called from worker threads; calls for one decoy never overlap.
using DecoyObserver = std::function<void(std::size_t decoy, const StepStats&)>;

/// Decoy d runs anneal_sample with rng stream derive_seed(config.seed, d). Results are
/// indexed by decoy regardless of scheduling; `jobs` = 0 uses the OpenMP default.
std::vector<SampleResult> sample_decoys(const CoordinateScore& model, const ConditioningBundle& bundle,
                                        const SamplerConfig& config, std::size_t jobs = 0,
                                        const DecoyObserver& observer = {});

}  // namespace scorefold
