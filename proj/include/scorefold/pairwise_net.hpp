#pragma once

#include "scorefold/conditioning.hpp"
#include "scorefold/geometry.hpp"
#include "scorefold/io.hpp"
#include "scorefold/noise.hpp"
#include "scorefold/score.hpp"

#include <filesystem>
#include <span>
#include <vector>

namespace scorefold {

struct NetConfig {
    std::size_t width = 32;
    std::size_t blocks = 2;
    std::size_t level_embedding = 16;
    std::size_t pe_width = kDefaultPeWidth;

    /// Conditioning channels the input projection expects (one-hot + positional + predictions).
    std::size_t conditioning_channels() const { return channel_layout(pe_width).total(); }

    bool operator==(const NetConfig&) const = default;
};

/// Per-pair activations, one row per pair p = i·L + j.
using PairActivations = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Squared distances enter the network as d / kDistanceScale.
inline constexpr double kDistanceScale = 100.0;

/// Floor on √d̂ in the output scaling (Å); only coincident points reach it.
inline constexpr double kMinScaleDistance = 1e-3;

/// Axial-aggregation pairwise score network.
///
/// Per pair (i, j):
///   a⁰ = W_in · [d̂_ij / 100, u_ij, cond_ij, e_level] + b_in,   h⁰ = elu(a⁰)
///   u_ij = asinh(c_ij · (d̂_ij − μ_ij) / (2√2 · σ · (√μ_ij + σ)))
/// where μ_ij is the squared distance expected under the distance-bin
/// predictions (bins 1–36) and c_ij their total mass. u is the noisy distance's
/// deviation from the prediction in units of the noise it would carry.
/// Per block b:
///   r_i = mean_j hᵇ_ij,  c_j = mean_i hᵇ_ij
///   zᵇ = A_b · [hᵇ_ij, r_i, c_j] + a_b,                    hᵇ⁺¹ = hᵇ + elu(zᵇ)
/// Head:
///   h_ij = (w_out · hᴮ_ij + b_out) / (σ_level · L · √d̂_ij)
///
/// e_level is a learned per-level embedding. Each pair contributes a force of
/// magnitude |h_ij|·√d̂_ij to the chain rule, so this scaling bounds it by the
/// head output over σL and keeps the head's target O(1) across levels, chain
/// sizes and pair distances.
///
/// Parameters live in one flat double vector; the layout is a pure function of
/// (config, number of levels).
class PairwiseScoreNet {
public:
    PairwiseScoreNet(NetConfig config, NoiseSchedule schedule);

    /// Scaled-normal initialization. With `zero_head` the output head starts at
    /// zero, so the initial score is identically zero.
    static PairwiseScoreNet initialized(NetConfig config, NoiseSchedule schedule,
                                        std::uint64_t seed, bool zero_head = false);

    static std::size_t parameter_count(const NetConfig& config, std::size_t levels);

    /// 1 / (σ · L · √d̂_ij), with √d̂ floored at kMinScaleDistance.
    static ScoreField output_scale(const DistanceMatrix& distances, double sigma);

    const NetConfig& config() const noexcept { return config_; }
    const NoiseSchedule& schedule() const noexcept { return schedule_; }
    std::size_t parameter_count() const noexcept { return params_.size(); }
    std::span<double> parameters() noexcept { return params_; }
    std::span<const double> parameters() const noexcept { return params_; }

    /// Everything in the input layer that depends only on the bundle. Row p = i·L + j.
    struct StaticInputs {
        PairActivations projection;    // cond (P×C) · W_condᵀ
        Eigen::VectorXd expected_sq;   // μ, P
        Eigen::VectorXd confidence;    // c, P
    };
    StaticInputs prepare(const ConditioningBundle& bundle) const;

    /// Saved activations for backward().
    struct Tape {
        std::size_t length = 0;
        std::size_t level = 0;
        Eigen::VectorXd scaled_distances;  // P
        Eigen::VectorXd residuals;         // u, P
        PairActivations conditioning;               // P×C
        PairActivations pre_input;                  // P×W
        std::vector<PairActivations> block_inputs;  // B × (P×W)
        std::vector<PairActivations> block_pre;     // B × (P×W)
        std::vector<PairActivations> row_means;     // B × (L×W)
        std::vector<PairActivations> col_means;     // B × (L×W)
        PairActivations final_hidden;               // P×W
        ScoreField output_scale;                    // L×L
    };

    ScoreField forward(const DistanceMatrix& distances, const ConditioningBundle& bundle,
                       std::size_t level) const;
    ScoreField forward(const DistanceMatrix& distances, const StaticInputs& inputs,
                       std::size_t level) const;
    /// Records everything backward() needs.
    ScoreField forward(const DistanceMatrix& distances, const ConditioningBundle& bundle,
                       std::size_t level, Tape& tape) const;

    /// Accumulates ∂loss/∂θ into `grad` given ∂loss/∂H.
    void backward(const Tape& tape, const ScoreField& grad_h, std::span<double> grad) const;

    io::Tensor to_tensor() const;
    static PairwiseScoreNet from_tensor(const io::Tensor& tensor);
    void save(const std::filesystem::path& path) const;
    static PairwiseScoreNet load(const std::filesystem::path& path);

    bool operator==(const PairwiseScoreNet& other) const {
        return config_ == other.config_ && schedule_ == other.schedule_ && params_ == other.params_;
    }

private:
    struct Layout {
        std::size_t embedding = 0;
        std::size_t input_weight = 0;
        std::size_t input_bias = 0;
        std::vector<std::size_t> block_weight;
        std::vector<std::size_t> block_bias;
        std::size_t head_weight = 0;
        std::size_t head_bias = 0;
        std::size_t total = 0;
    };
    static Layout make_layout(const NetConfig& config, std::size_t levels);

    std::size_t input_width() const;
    PairActivations conditioning_matrix(const ConditioningBundle& bundle) const;
    ScoreField run(const DistanceMatrix& distances, const StaticInputs& inputs,
                   std::size_t level, Tape* tape) const;

    NetConfig config_;
    NoiseSchedule schedule_;
    Layout layout_;
    std::vector<double> params_;
};

}  // namespace scorefold
