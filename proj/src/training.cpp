#include "scorefold/training.hpp"

#include "scorefold/noise.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace scorefold {

namespace {

/// One sample's random choices, drawn serially so the batch is reproducible
/// regardless of how the per-sample work is scheduled.
struct Draw {
    TrainingExample example;
    std::size_t level = 0;
    Coords x_tilde;
};

std::vector<Draw> draw_batch(std::span<const TrainingExample> batch, const NoiseSchedule& schedule,
                             Rng& rng, std::size_t crop) {
    if (batch.empty()) fail(ErrorKind::InvalidInput, "empty batch");
    std::vector<Draw> draws;
    draws.reserve(batch.size());
    std::uniform_int_distribution<std::size_t> level_dist(0, schedule.size() - 1);
    for (const auto& example : batch) {
        const std::size_t n = example.structure.length();
        if (example.bundle.length() != n) {
            fail(ErrorKind::InvalidInput, "training example bundle length does not match structure");
        }
        Draw d;
        if (crop > 0 && crop < n) {
            std::uniform_int_distribution<std::size_t> start_dist(0, n - crop);
            const std::size_t start = start_dist(rng);
            d.example.structure.sequence = example.structure.sequence.substr(start, crop);
            d.example.structure.coords =
                example.structure.coords.middleRows(static_cast<Eigen::Index>(start),
                                                    static_cast<Eigen::Index>(crop));
            d.example.bundle = example.bundle.window(start, crop);
        } else if (crop > n) {
            fail(ErrorKind::InvalidConfig, "crop size " + std::to_string(crop) +
                                               " exceeds structure length " + std::to_string(n));
        } else {
            d.example = example;
        }
        d.level = level_dist(rng);
        d.x_tilde = perturb(d.example.structure.coords, schedule.sigma(d.level), rng);
        draws.push_back(std::move(d));
    }
    return draws;
}

double sample_term(const Coords& model, const Draw& d, double sigma) {
    const Coords target = true_score(d.example.structure.coords, d.x_tilde, sigma);
    return sigma * sigma * (model - target).squaredNorm();
}

}  // namespace

double dsm_loss(const SampleScore& model, std::span<const TrainingExample> batch,
                const NoiseSchedule& schedule, Rng& rng, std::size_t crop) {
    const auto draws = draw_batch(batch, schedule, rng, crop);
    double sum = 0.0;
    for (const auto& d : draws) {
        sum += sample_term(model(d.example, d.x_tilde, d.level), d, schedule.sigma(d.level));
    }
    return sum / (2.0 * static_cast<double>(draws.size()));
}

double dsm_loss(const PairwiseScoreNet& net, std::span<const TrainingExample> batch, Rng& rng,
                std::size_t crop) {
    const SampleScore model = [&net](const TrainingExample& ex, const Coords& x_tilde, std::size_t level) {
        const auto h = net.forward(distance_matrix(x_tilde), ex.bundle, level);
        return chain_rule_gradients(h, x_tilde);
    };
    return dsm_loss(model, batch, net.schedule(), rng, crop);
}

LossAndGradient dsm_loss_and_gradient(const PairwiseScoreNet& net,
                                      std::span<const TrainingExample> batch, Rng& rng,
                                      std::size_t crop) {
    const auto draws = draw_batch(batch, net.schedule(), rng, crop);
    const auto count = static_cast<std::ptrdiff_t>(draws.size());
    const double scale = 1.0 / (2.0 * static_cast<double>(draws.size()));

    std::vector<double> terms(draws.size(), 0.0);
    std::vector<std::vector<double>> grads(draws.size());

#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t s = 0; s < count; ++s) {
        const Draw& d = draws[static_cast<std::size_t>(s)];
        const double sigma = net.schedule().sigma(d.level);
        const Coords& x = d.x_tilde;
        PairwiseScoreNet::Tape tape;
        const ScoreField h = net.forward(distance_matrix(x), d.example.bundle, d.level, tape);
        const Coords g = chain_rule_gradients(h, x);
        const Coords residual = g - true_score(d.example.structure.coords, x, sigma);
        terms[static_cast<std::size_t>(s)] = sigma * sigma * residual.squaredNorm();

        // ∂loss/∂G, then pulled back through g_i = Σ_j 2(h_ij + h_ji)(x_i − x_j):
        // ∂loss/∂h_ij = 2 (x_i − x_j) · (∂G_i − ∂G_j).
        const Coords grad_g = (2.0 * scale * sigma * sigma) * residual;
        const Eigen::Index n = x.rows();
        ScoreField grad_h(n, n);
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = 0; j < n; ++j) {
                grad_h(i, j) = 2.0 * (x.row(i) - x.row(j)).dot(grad_g.row(i) - grad_g.row(j));
            }
        }
        auto& grad = grads[static_cast<std::size_t>(s)];
        grad.assign(net.parameter_count(), 0.0);
        net.backward(tape, grad_h, grad);
    }

    LossAndGradient out;
    out.gradient.assign(net.parameter_count(), 0.0);
    for (std::size_t s = 0; s < draws.size(); ++s) {
        out.loss += terms[s];
        for (std::size_t p = 0; p < out.gradient.size(); ++p) out.gradient[p] += grads[s][p];
    }
    out.loss *= scale;
    return out;
}

namespace {

class Adam {
public:
    Adam(std::size_t size, const TrainConfig& config)
        : config_(config), first_(size, 0.0), second_(size, 0.0) {}

    void step(std::span<double> params, std::span<const double> grad) {
        ++t_;
        const double correction1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
        const double correction2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
        for (std::size_t p = 0; p < params.size(); ++p) {
            first_[p] = config_.beta1 * first_[p] + (1.0 - config_.beta1) * grad[p];
            second_[p] = config_.beta2 * second_[p] + (1.0 - config_.beta2) * grad[p] * grad[p];
            const double m_hat = first_[p] / correction1;
            const double v_hat = second_[p] / correction2;
            params[p] -= config_.learning_rate * m_hat / (std::sqrt(v_hat) + config_.epsilon);
        }
    }

private:
    TrainConfig config_;
    std::vector<double> first_;
    std::vector<double> second_;
    std::size_t t_ = 0;
};

double evaluate_set(const PairwiseScoreNet& net, std::span<const TrainingExample> set,
                    std::size_t batch, std::size_t crop, std::uint64_t seed) {
    // Same draws every epoch so validation losses are comparable across epochs.
    Rng rng = make_rng(seed, 0x76616c6964);
    double sum = 0.0;
    for (std::size_t start = 0; start < set.size(); start += batch) {
        const std::size_t size = std::min(batch, set.size() - start);
        sum += dsm_loss(net, set.subspan(start, size), rng, crop) * static_cast<double>(size);
    }
    return sum / static_cast<double>(set.size());
}

std::size_t effective_crop(std::size_t crop, std::span<const TrainingExample> set) {
    if (crop == 0) return 0;
    for (const auto& ex : set) {
        if (ex.structure.length() < crop) {
            fail(ErrorKind::InvalidConfig, "crop size " + std::to_string(crop) +
                                               " exceeds structure length " +
                                               std::to_string(ex.structure.length()));
        }
    }
    return crop;
}

}  // namespace

TrainResult train(PairwiseScoreNet net, std::span<const TrainingExample> train_set,
                  std::span<const TrainingExample> valid_set, const TrainConfig& config,
                  const std::function<void(const EpochRecord&)>& on_epoch) {
    if (train_set.empty()) fail(ErrorKind::InvalidInput, "empty training set");
    if (config.batch == 0) fail(ErrorKind::InvalidConfig, "batch size must be positive");
    if (!(config.learning_rate >= 0.0)) fail(ErrorKind::InvalidConfig, "learning rate must be non-negative");
    const std::size_t crop = effective_crop(config.crop, train_set);
    effective_crop(config.crop, valid_set);

    Rng rng = make_rng(config.seed, 0x747261696e);
    Adam adam(net.parameter_count(), config);
    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), 0);

    TrainResult result{net, net, 0, {}};
    double best = std::numeric_limits<double>::infinity();
    std::vector<TrainingExample> batch;

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double epoch_sum = 0.0;
        for (std::size_t start = 0; start < order.size(); start += config.batch) {
            const std::size_t size = std::min(config.batch, order.size() - start);
            batch.clear();
            for (std::size_t k = 0; k < size; ++k) batch.push_back(train_set[order[start + k]]);
            const auto step = dsm_loss_and_gradient(net, batch, rng, crop);
            if (!std::isfinite(step.loss)) {
                fail(ErrorKind::TrainingFailure, "non-finite loss at epoch " + std::to_string(epoch));
            }
            epoch_sum += step.loss * static_cast<double>(size);
            adam.step(net.parameters(), step.gradient);
        }

        EpochRecord record;
        record.epoch = epoch;
        record.train_loss = epoch_sum / static_cast<double>(order.size());
        if (!valid_set.empty()) {
            record.valid_loss = evaluate_set(net, valid_set, config.batch, crop, config.seed);
            if (!std::isfinite(*record.valid_loss)) {
                fail(ErrorKind::TrainingFailure,
                     "non-finite validation loss at epoch " + std::to_string(epoch));
            }
        }
        const double criterion = record.valid_loss.value_or(record.train_loss);
        if (criterion < best) {
            best = criterion;
            result.best_net = net;
            result.best_epoch = epoch;
        }
        result.history.push_back(record);
        if (on_epoch) on_epoch(record);
    }
    result.final_net = std::move(net);
    return result;
}

}  // namespace scorefold
