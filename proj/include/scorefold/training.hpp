#pragma once

#include "scorefold/conditioning.hpp"
#include "scorefold/geometry.hpp"
#include "scorefold/pairwise_net.hpp"

#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace scorefold {

struct TrainingExample {
    Structure structure;
    ConditioningBundle bundle;
};

/// Model output at a perturbed sample: ∇ log p evaluated at x_tilde for `example`
/// (already cropped) at noise level `level`.
using SampleScore =
    std::function<Coords(const TrainingExample& example, const Coords& x_tilde, std::size_t level)>;

/// Denoising score-matching loss on one batch:
///   (1/2B) Σ_s σ_k² ‖model(X̃_s) − (X_s − X̃_s)/σ_k²‖²_F
/// with k uniform over the schedule and X̃_s = X_s + N(0, σ_k²) per sample.
/// With crop > 0, each sample first takes a random contiguous window of that size.
double dsm_loss(const SampleScore& model, std::span<const TrainingExample> batch,
                const NoiseSchedule& schedule, Rng& rng, std::size_t crop = 0);

double dsm_loss(const PairwiseScoreNet& net, std::span<const TrainingExample> batch, Rng& rng,
                std::size_t crop = 0);

struct LossAndGradient {
    double loss = 0.0;
    std::vector<double> gradient;
};

/// Same draws as dsm_loss for a given rng state, plus ∂loss/∂θ by reverse-mode
/// accumulation through the chain rule and the network.
LossAndGradient dsm_loss_and_gradient(const PairwiseScoreNet& net,
                                      std::span<const TrainingExample> batch, Rng& rng,
                                      std::size_t crop = 0);

struct TrainConfig {
    std::size_t epochs = 200;
    std::size_t batch = 8;
    double learning_rate = 1e-4;
    /// Contiguous crop window; 0 disables cropping.
    std::size_t crop = 32;
    std::uint64_t seed = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct EpochRecord {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    std::optional<double> valid_loss;
};

struct TrainResult {
    PairwiseScoreNet final_net;
    /// Lowest validation loss (training loss when no validation set is given).
    PairwiseScoreNet best_net;
    std::size_t best_epoch = 0;
    std::vector<EpochRecord> history;
};

/// Adam with a constant learning rate. Each epoch visits every training example
/// once in a seeded shuffled order. Throws TrainingFailure on a non-finite loss.
TrainResult train(PairwiseScoreNet net, std::span<const TrainingExample> train_set,
                  std::span<const TrainingExample> valid_set, const TrainConfig& config,
                  const std::function<void(const EpochRecord&)>& on_epoch = {});

}  // namespace scorefold
