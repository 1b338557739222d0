#pragma once

#include "scorefold/common.hpp"

#include <vector>

namespace scorefold {

/// Strictly descending noise standard deviations (Å). Levels are 0-based:
/// level 0 is the largest σ.
class NoiseSchedule {
public:
    explicit NoiseSchedule(std::vector<double> sigmas);

    /// σ_k = σ_max · (σ_min/σ_max)^{k/(K−1)}; both endpoints are stored exactly.
    static NoiseSchedule geometric(double sigma_max, double sigma_min, std::size_t levels);

    /// 10 Å down to 0.01 Å over 32 levels.
    static NoiseSchedule standard() { return geometric(10.0, 0.01, 32); }

    std::size_t size() const noexcept { return sigmas_.size(); }
    double sigma(std::size_t level) const;
    const std::vector<double>& sigmas() const noexcept { return sigmas_; }

    bool operator==(const NoiseSchedule&) const = default;

private:
    std::vector<double> sigmas_;
};

/// X + N(0, σ²) independently per coordinate.
Coords perturb(const Coords& x, double sigma, Rng& rng);

/// (X − X̃)/σ²: the gradient of log q_σ(X̃ | X) with respect to X̃.
Coords true_score(const Coords& x, const Coords& x_tilde, double sigma);

}  // namespace scorefold
