#include "scorefold/noise.hpp"

#include <cmath>

namespace scorefold {

NoiseSchedule::NoiseSchedule(std::vector<double> sigmas) : sigmas_(std::move(sigmas)) {
    if (sigmas_.empty()) fail(ErrorKind::InvalidConfig, "noise schedule is empty");
    for (std::size_t k = 0; k < sigmas_.size(); ++k) {
        if (!std::isfinite(sigmas_[k]) || sigmas_[k] <= 0.0) {
            fail(ErrorKind::InvalidConfig, "sigma at level " + std::to_string(k) + " is not positive");
        }
        if (k > 0 && !(sigmas_[k] < sigmas_[k - 1])) {
            fail(ErrorKind::InvalidConfig, "noise schedule is not strictly descending at level " +
                                               std::to_string(k));
        }
    }
}

NoiseSchedule NoiseSchedule::geometric(double sigma_max, double sigma_min, std::size_t levels) {
    if (!(sigma_min > 0.0) || !(sigma_max > sigma_min) || !std::isfinite(sigma_max)) {
        fail(ErrorKind::InvalidConfig, "need sigma_max > sigma_min > 0");
    }
    if (levels < 2) fail(ErrorKind::InvalidConfig, "need at least 2 noise levels");

    std::vector<double> sigmas(levels);
    const double log_ratio = std::log(sigma_min / sigma_max);
    const double last = static_cast<double>(levels - 1);
    for (std::size_t k = 0; k < levels; ++k) {
        sigmas[k] = sigma_max * std::exp(log_ratio * static_cast<double>(k) / last);
    }
    sigmas.front() = sigma_max;
    sigmas.back() = sigma_min;
    return NoiseSchedule(std::move(sigmas));
}

double NoiseSchedule::sigma(std::size_t level) const {
    if (level >= sigmas_.size()) {
        fail(ErrorKind::InvalidInput, "noise level " + std::to_string(level) + " out of range [0, " +
                                          std::to_string(sigmas_.size()) + ")");
    }
    return sigmas_[level];
}

Coords perturb(const Coords& x, double sigma, Rng& rng) {
    if (!(sigma > 0.0)) fail(ErrorKind::InvalidInput, "perturbation sigma must be positive");
    return x + sigma * standard_normal(static_cast<std::size_t>(x.rows()), rng);
}

Coords true_score(const Coords& x, const Coords& x_tilde, double sigma) {
    if (x.rows() != x_tilde.rows()) {
        fail(ErrorKind::InvalidInput, "true_score shape mismatch: " + std::to_string(x.rows()) +
                                          " vs " + std::to_string(x_tilde.rows()) + " rows");
    }
    if (!(sigma > 0.0)) fail(ErrorKind::InvalidInput, "sigma must be positive");
    return (x - x_tilde) / (sigma * sigma);
}

}  // namespace scorefold
