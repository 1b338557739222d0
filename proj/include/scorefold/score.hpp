#pragma once

#include "scorefold/conditioning.hpp"
#include "scorefold/geometry.hpp"
#include "scorefold/noise.hpp"

#include <memory>

namespace scorefold {

/// L×L estimate of log-density gradients with respect to the squared distance matrix.
/// No symmetry is required; the chain rule folds h_ij and h_ji together.
using ScoreField = Matrix;

/// g_i = Σ_j 2 (h_ij + h_ji)(x_i − x_j), the exact gradient of Σ_ij h_ij d_ij(X)
/// with H held fixed.
Coords chain_rule_gradients(const ScoreField& h, const Coords& x);

/// A model of ∇_X log p(X | bundle, σ_level). Implementations are immutable after
/// construction and safe to evaluate concurrently.
class CoordinateScore {
public:
    virtual ~CoordinateScore() = default;

    virtual const NoiseSchedule& schedule() const = 0;

    /// Required chain length, or 0 if the model accepts any length.
    virtual std::size_t length() const { return 0; }

    /// `distances` must be distance_matrix(x); the sampler computes it once per
    /// iteration and hands it over.
    virtual Coords evaluate(const Coords& x, const DistanceMatrix& distances,
                            const ConditioningBundle& bundle, std::size_t level) const = 0;

    Coords evaluate(const Coords& x, const ConditioningBundle& bundle, std::size_t level) const {
        return evaluate(x, distance_matrix(x), bundle, level);
    }
};

/// The perfect denoising score (X_native − X̂)/σ_level². Ignores the bundle.
std::shared_ptr<const CoordinateScore> oracle_score(Structure native, NoiseSchedule schedule);

class PairwiseScoreNet;

/// D̂ → H = net(D̂, bundle, level) → chain rule.
std::shared_ptr<const CoordinateScore> net_score(std::shared_ptr<const PairwiseScoreNet> net);

}  // namespace scorefold
