#include "scorefold/pairwise_net.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <cstdio>
#include <sstream>

namespace scorefold {

namespace {

using ConstMap = Eigen::Map<const Matrix>;
using MutMap = Eigen::Map<Matrix>;
using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;
using MutVecMap = Eigen::Map<Eigen::VectorXd>;

inline double elu(double x) { return x > 0.0 ? x : std::expm1(x); }
inline double elu_grad(double x) { return x > 0.0 ? 1.0 : std::exp(x); }

PairActivations apply_elu(const PairActivations& a) { return a.unaryExpr(&elu); }

PairActivations elu_derivative(const PairActivations& a) { return a.unaryExpr(&elu_grad); }

/// Row means over j (for each i) and column means over i (for each j).
void axial_means(const PairActivations& h, std::size_t length, PairActivations& rows,
                 PairActivations& cols) {
    const auto n = static_cast<Eigen::Index>(length);
    rows = PairActivations::Zero(n, h.cols());
    cols = PairActivations::Zero(n, h.cols());
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            const auto hrow = h.row(i * n + j);
            rows.row(i) += hrow;
            cols.row(j) += hrow;
        }
    }
    rows /= static_cast<double>(length);
    cols /= static_cast<double>(length);
}

std::string join_sigmas(const std::vector<double>& sigmas) {
    std::string out;
    char buffer[40];
    for (std::size_t k = 0; k < sigmas.size(); ++k) {
        std::snprintf(buffer, sizeof(buffer), "%.17g", sigmas[k]);
        if (k) out += ',';
        out += buffer;
    }
    return out;
}

std::vector<double> split_sigmas(const std::string& text) {
    std::vector<double> out;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        try {
            out.push_back(std::stod(item));
        } catch (const std::exception&) {
            fail(ErrorKind::Format, "bad sigma value '" + item + "' in checkpoint");
        }
    }
    return out;
}

std::size_t meta_size(const io::Tensor& t, const std::string& key) {
    const auto value = t.meta(key);
    if (!value) fail(ErrorKind::Format, "checkpoint is missing '" + key + "'");
    try {
        return static_cast<std::size_t>(std::stoull(*value));
    } catch (const std::exception&) {
        fail(ErrorKind::Format, "checkpoint field '" + key + "' is not an integer");
    }
}

constexpr const char* kCheckpointFormat = "scorefold-pairwise-net";
constexpr const char* kCheckpointVersion = "2";

}  // namespace

PairwiseScoreNet::Layout PairwiseScoreNet::make_layout(const NetConfig& config, std::size_t levels) {
    if (config.width == 0) fail(ErrorKind::InvalidConfig, "network width must be positive");
    if (config.level_embedding == 0) fail(ErrorKind::InvalidConfig, "level embedding width must be positive");
    const std::size_t w = config.width;
    const std::size_t in = 2 + config.conditioning_channels() + config.level_embedding;
    Layout layout;
    std::size_t offset = 0;
    layout.embedding = offset;
    offset += levels * config.level_embedding;
    layout.input_weight = offset;
    offset += w * in;
    layout.input_bias = offset;
    offset += w;
    for (std::size_t b = 0; b < config.blocks; ++b) {
        layout.block_weight.push_back(offset);
        offset += w * 3 * w;
        layout.block_bias.push_back(offset);
        offset += w;
    }
    layout.head_weight = offset;
    offset += w;
    layout.head_bias = offset;
    offset += 1;
    layout.total = offset;
    return layout;
}

std::size_t PairwiseScoreNet::parameter_count(const NetConfig& config, std::size_t levels) {
    return make_layout(config, levels).total;
}

PairwiseScoreNet::PairwiseScoreNet(NetConfig config, NoiseSchedule schedule)
    : config_(config),
      schedule_(std::move(schedule)),
      layout_(make_layout(config_, schedule_.size())),
      params_(layout_.total, 0.0) {}

PairwiseScoreNet PairwiseScoreNet::initialized(NetConfig config, NoiseSchedule schedule,
                                               std::uint64_t seed, bool zero_head) {
    PairwiseScoreNet net(config, std::move(schedule));
    Rng rng = make_rng(seed, 0x6e6574);
    std::normal_distribution<double> normal(0.0, 1.0);
    auto fill = [&](std::size_t offset, std::size_t count, double scale) {
        for (std::size_t k = 0; k < count; ++k) net.params_[offset + k] = scale * normal(rng);
    };
    const std::size_t w = config.width;
    const std::size_t in = net.input_width();
    fill(net.layout_.embedding, net.schedule_.size() * config.level_embedding, 1.0);
    fill(net.layout_.input_weight, w * in, 1.0 / std::sqrt(static_cast<double>(in)));
    for (std::size_t b = 0; b < config.blocks; ++b) {
        fill(net.layout_.block_weight[b], 3 * w * w, 0.5 / std::sqrt(3.0 * static_cast<double>(w)));
    }
    if (!zero_head) fill(net.layout_.head_weight, w, 1e-2 / std::sqrt(static_cast<double>(w)));
    return net;
}

std::size_t PairwiseScoreNet::input_width() const {
    return 2 + config_.conditioning_channels() + config_.level_embedding;
}

PairActivations PairwiseScoreNet::conditioning_matrix(const ConditioningBundle& bundle) const {
    const std::size_t channels = config_.conditioning_channels();
    if (bundle.channels() != channels) {
        fail(ErrorKind::InvalidInput, "bundle has " + std::to_string(bundle.channels()) +
                                          " channels, network expects " + std::to_string(channels));
    }
    const std::size_t n = bundle.length();
    PairActivations cond(static_cast<Eigen::Index>(n * n), static_cast<Eigen::Index>(channels));
    std::vector<float> cell(channels);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            bundle.stacked_cell(i, j, cell);
            auto row = cond.row(static_cast<Eigen::Index>(i * n + j));
            for (std::size_t c = 0; c < channels; ++c) row(static_cast<Eigen::Index>(c)) = cell[c];
        }
    }
    return cond;
}

namespace {

void expected_distances(const ConditioningBundle& bundle, Eigen::VectorXd& expected_sq,
                        Eigen::VectorXd& confidence) {
    const std::size_t n = bundle.length();
    expected_sq = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n * n));
    confidence = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n * n));
    if (!bundle.has_predictions()) return;
    const PairMap& map = bundle.predictions();
    const auto& group = kPredictionGroups[0];
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double mass = 0.0, moment = 0.0;
            for (std::size_t b = 1; b < group.width; ++b) {
                const double p = map.at(i, j, group.offset + b);
                const double c = distance_bin_centre(b);
                mass += p;
                moment += p * c * c;
            }
            const auto k = static_cast<Eigen::Index>(i * n + j);
            if (mass > 1e-6) {
                expected_sq(k) = moment / mass;
                confidence(k) = std::min(mass, 1.0);
            }
        }
    }
}

}  // namespace

PairwiseScoreNet::StaticInputs PairwiseScoreNet::prepare(const ConditioningBundle& bundle) const {
    const auto w = static_cast<Eigen::Index>(config_.width);
    const ConstMap weights(params_.data() + layout_.input_weight, w, static_cast<Eigen::Index>(input_width()));
    const auto channels = static_cast<Eigen::Index>(config_.conditioning_channels());
    StaticInputs out;
    out.projection = conditioning_matrix(bundle) * weights.middleCols(2, channels).transpose();
    expected_distances(bundle, out.expected_sq, out.confidence);
    return out;
}

ScoreField PairwiseScoreNet::forward(const DistanceMatrix& distances, const ConditioningBundle& bundle,
                                     std::size_t level) const {
    if (bundle.length() != distances.size()) {
        fail(ErrorKind::InvalidInput, "bundle length " + std::to_string(bundle.length()) +
                                          " does not match distance matrix size " +
                                          std::to_string(distances.size()));
    }
    return run(distances, prepare(bundle), level, nullptr);
}

ScoreField PairwiseScoreNet::forward(const DistanceMatrix& distances, const StaticInputs& inputs,
                                     std::size_t level) const {
    return run(distances, inputs, level, nullptr);
}

ScoreField PairwiseScoreNet::forward(const DistanceMatrix& distances, const ConditioningBundle& bundle,
                                     std::size_t level, Tape& tape) const {
    if (bundle.length() != distances.size()) {
        fail(ErrorKind::InvalidInput, "bundle length does not match distance matrix size");
    }
    const auto w = static_cast<Eigen::Index>(config_.width);
    const ConstMap weights(params_.data() + layout_.input_weight, w, static_cast<Eigen::Index>(input_width()));
    const auto channels = static_cast<Eigen::Index>(config_.conditioning_channels());
    tape.conditioning = conditioning_matrix(bundle);
    StaticInputs inputs;
    inputs.projection = tape.conditioning * weights.middleCols(2, channels).transpose();
    expected_distances(bundle, inputs.expected_sq, inputs.confidence);
    return run(distances, inputs, level, &tape);
}

ScoreField PairwiseScoreNet::output_scale(const DistanceMatrix& distances, double sigma) {
    const auto n = static_cast<Eigen::Index>(distances.size());
    const double base = 1.0 / (sigma * static_cast<double>(std::max<Eigen::Index>(n, 1)));
    ScoreField scale(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            scale(i, j) = base / std::max(std::sqrt(distances(i, j)), kMinScaleDistance);
        }
    }
    return scale;
}

ScoreField PairwiseScoreNet::run(const DistanceMatrix& distances, const StaticInputs& inputs,
                                 std::size_t level, Tape* tape) const {
    const PairActivations& projection = inputs.projection;
    const std::size_t n = distances.size();
    const auto ln = static_cast<Eigen::Index>(n);
    const Eigen::Index pairs = ln * ln;
    const auto w = static_cast<Eigen::Index>(config_.width);
    const auto e = static_cast<Eigen::Index>(config_.level_embedding);
    if (projection.rows() != pairs || projection.cols() != w || inputs.expected_sq.size() != pairs ||
        inputs.confidence.size() != pairs) {
        fail(ErrorKind::InvalidInput, "static projection shape does not match the distance matrix");
    }
    const double sigma = schedule_.sigma(level);

    const ConstMap input_weight(params_.data() + layout_.input_weight, w, static_cast<Eigen::Index>(input_width()));
    const ConstVecMap input_bias(params_.data() + layout_.input_bias, w);
    const ConstVecMap embedding(params_.data() + layout_.embedding + level * config_.level_embedding, e);

    Eigen::VectorXd scaled(pairs), residual(pairs);
    const double noise_unit = 2.0 * std::numbers::sqrt2 * sigma;
    for (Eigen::Index i = 0; i < ln; ++i) {
        for (Eigen::Index j = 0; j < ln; ++j) {
            const Eigen::Index p = i * ln + j;
            const double mu = inputs.expected_sq(p);
            scaled(p) = distances(i, j) / kDistanceScale;
            residual(p) = std::asinh(inputs.confidence(p) * (distances(i, j) - mu) /
                                     (noise_unit * (std::sqrt(mu) + sigma)));
        }
    }
    const Eigen::VectorXd level_term = input_weight.rightCols(e) * embedding + input_bias;

    PairActivations pre = projection;
    pre.noalias() += scaled * input_weight.col(0).transpose();
    pre.noalias() += residual * input_weight.col(1).transpose();
    pre.rowwise() += level_term.transpose();
    PairActivations hidden = apply_elu(pre);

    if (tape) {
        tape->length = n;
        tape->level = level;
        tape->scaled_distances = scaled;
        tape->residuals = residual;
        tape->pre_input = pre;
        tape->block_inputs.clear();
        tape->block_pre.clear();
        tape->row_means.clear();
        tape->col_means.clear();
    }

    PairActivations rows, cols;
    for (std::size_t b = 0; b < config_.blocks; ++b) {
        const ConstMap a(params_.data() + layout_.block_weight[b], w, 3 * w);
        const ConstVecMap bias(params_.data() + layout_.block_bias[b], w);
        axial_means(hidden, n, rows, cols);
        const PairActivations row_term = rows * a.middleCols(w, w).transpose();
        const PairActivations col_term = cols * a.rightCols(w).transpose();
        PairActivations z = hidden * a.leftCols(w).transpose();
        for (Eigen::Index i = 0; i < ln; ++i) {
            for (Eigen::Index j = 0; j < ln; ++j) {
                z.row(i * ln + j) += row_term.row(i) + col_term.row(j) + bias.transpose();
            }
        }
        if (tape) {
            tape->block_inputs.push_back(hidden);
            tape->block_pre.push_back(z);
            tape->row_means.push_back(rows);
            tape->col_means.push_back(cols);
        }
        hidden += apply_elu(z);
    }

    const ConstVecMap head(params_.data() + layout_.head_weight, w);
    const double head_bias = params_[layout_.head_bias];
    const Eigen::VectorXd out = hidden * head;

    ScoreField scale = output_scale(distances, sigma);
    ScoreField h(ln, ln);
    for (Eigen::Index i = 0; i < ln; ++i) {
        for (Eigen::Index j = 0; j < ln; ++j) h(i, j) = (out(i * ln + j) + head_bias) * scale(i, j);
    }
    if (tape) {
        tape->final_hidden = std::move(hidden);
        tape->output_scale = std::move(scale);
    }
    return h;
}

void PairwiseScoreNet::backward(const Tape& tape, const ScoreField& grad_h, std::span<double> grad) const {
    if (grad.size() != params_.size()) fail(ErrorKind::InvalidInput, "gradient buffer size mismatch");
    const auto ln = static_cast<Eigen::Index>(tape.length);
    const Eigen::Index pairs = ln * ln;
    const auto w = static_cast<Eigen::Index>(config_.width);
    const auto e = static_cast<Eigen::Index>(config_.level_embedding);
    const auto channels = static_cast<Eigen::Index>(config_.conditioning_channels());
    const double inv_length = 1.0 / static_cast<double>(tape.length);

    Eigen::VectorXd grad_out(pairs);
    for (Eigen::Index i = 0; i < ln; ++i) {
        for (Eigen::Index j = 0; j < ln; ++j) grad_out(i * ln + j) = grad_h(i, j) * tape.output_scale(i, j);
    }

    // Head.
    const ConstVecMap head(params_.data() + layout_.head_weight, w);
    MutVecMap(grad.data() + layout_.head_weight, w) += tape.final_hidden.transpose() * grad_out;
    grad[layout_.head_bias] += grad_out.sum();
    PairActivations grad_hidden = grad_out * head.transpose();

    // Blocks, last to first.
    for (std::size_t bb = config_.blocks; bb-- > 0;) {
        const ConstMap a(params_.data() + layout_.block_weight[bb], w, 3 * w);
        MutMap grad_a(grad.data() + layout_.block_weight[bb], w, 3 * w);
        MutVecMap grad_bias(grad.data() + layout_.block_bias[bb], w);

        const PairActivations grad_z =
            grad_hidden.cwiseProduct(elu_derivative(tape.block_pre[bb]));
        PairActivations grad_z_rows = PairActivations::Zero(ln, w);
        PairActivations grad_z_cols = PairActivations::Zero(ln, w);
        for (Eigen::Index i = 0; i < ln; ++i) {
            for (Eigen::Index j = 0; j < ln; ++j) {
                const auto gz = grad_z.row(i * ln + j);
                grad_z_rows.row(i) += gz;
                grad_z_cols.row(j) += gz;
            }
        }
        grad_a.leftCols(w).noalias() += grad_z.transpose() * tape.block_inputs[bb];
        grad_a.middleCols(w, w).noalias() += grad_z_rows.transpose() * tape.row_means[bb];
        grad_a.rightCols(w).noalias() += grad_z_cols.transpose() * tape.col_means[bb];
        grad_bias += grad_z_rows.colwise().sum().transpose();

        // h_out = h_in + elu(z): identity path plus the three inputs to z.
        grad_hidden.noalias() += grad_z * a.leftCols(w);
        const PairActivations via_rows = (grad_z_rows * a.middleCols(w, w)) * inv_length;
        const PairActivations via_cols = (grad_z_cols * a.rightCols(w)) * inv_length;
        for (Eigen::Index i = 0; i < ln; ++i) {
            for (Eigen::Index j = 0; j < ln; ++j) {
                grad_hidden.row(i * ln + j) += via_rows.row(i) + via_cols.row(j);
            }
        }
    }

    // Input projection.
    const PairActivations grad_pre = grad_hidden.cwiseProduct(elu_derivative(tape.pre_input));
    const ConstMap input_weight(params_.data() + layout_.input_weight, w, static_cast<Eigen::Index>(input_width()));
    MutMap grad_input(grad.data() + layout_.input_weight, w, static_cast<Eigen::Index>(input_width()));
    const Eigen::VectorXd grad_level_term = grad_pre.colwise().sum().transpose();
    const ConstVecMap embedding(params_.data() + layout_.embedding + tape.level * config_.level_embedding, e);

    grad_input.col(0).noalias() += grad_pre.transpose() * tape.scaled_distances;
    grad_input.col(1).noalias() += grad_pre.transpose() * tape.residuals;
    grad_input.middleCols(2, channels).noalias() += grad_pre.transpose() * tape.conditioning;
    grad_input.rightCols(e).noalias() += grad_level_term * embedding.transpose();
    MutVecMap(grad.data() + layout_.input_bias, w) += grad_level_term;
    MutVecMap(grad.data() + layout_.embedding + tape.level * config_.level_embedding, e) +=
        input_weight.rightCols(e).transpose() * grad_level_term;
}

io::Tensor PairwiseScoreNet::to_tensor() const {
    io::Tensor t = io::Tensor::from_f64({static_cast<std::uint32_t>(params_.size())}, params_);
    t.set_meta("format", kCheckpointFormat);
    t.set_meta("version", kCheckpointVersion);
    t.set_meta("width", std::to_string(config_.width));
    t.set_meta("blocks", std::to_string(config_.blocks));
    t.set_meta("level_embedding", std::to_string(config_.level_embedding));
    t.set_meta("pe_width", std::to_string(config_.pe_width));
    t.set_meta("conditioning_channels", std::to_string(config_.conditioning_channels()));
    t.set_meta("distance_scale", "100");
    t.set_meta("residual_feature", "asinh_expected_distance_deviation");
    t.set_meta("output_scaling", "inverse_sigma_length_pair_distance");
    t.set_meta("sigmas", join_sigmas(schedule_.sigmas()));
    return t;
}

PairwiseScoreNet PairwiseScoreNet::from_tensor(const io::Tensor& t) {
    if (t.meta("format") != std::optional<std::string>(kCheckpointFormat)) {
        fail(ErrorKind::Format, "not a pairwise score network checkpoint");
    }
    if (t.meta("version") != std::optional<std::string>(kCheckpointVersion)) {
        fail(ErrorKind::Format, "unsupported checkpoint version");
    }
    NetConfig config;
    config.width = meta_size(t, "width");
    config.blocks = meta_size(t, "blocks");
    config.level_embedding = meta_size(t, "level_embedding");
    config.pe_width = meta_size(t, "pe_width");
    const auto sigmas = t.meta("sigmas");
    if (!sigmas) fail(ErrorKind::Format, "checkpoint is missing 'sigmas'");
    PairwiseScoreNet net(config, NoiseSchedule(split_sigmas(*sigmas)));
    if (t.rank() != 1 || t.element_count() != net.params_.size()) {
        fail(ErrorKind::Format, "checkpoint parameter count does not match its hyperparameters");
    }
    net.params_ = t.to_f64();
    return net;
}

void PairwiseScoreNet::save(const std::filesystem::path& path) const { io::write_tensor(to_tensor(), path); }

PairwiseScoreNet PairwiseScoreNet::load(const std::filesystem::path& path) {
    return from_tensor(io::read_tensor(path));
}

}  // namespace scorefold
