#pragma once

#include "scorefold/common.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace scorefold {

inline constexpr std::string_view kAlphabet = "ACDEFGHIKLMNPQRSTVWY";
inline constexpr std::size_t kAlphabetSize = 20;

/// Index into kAlphabet, or -1 for anything else (unknown residues encode as zeros).
int residue_index(char code);

/// Dense L×L×C float map, channels fastest.
struct PairMap {
    std::size_t length = 0;
    std::size_t channels = 0;
    std::vector<float> data;

    PairMap() = default;
    PairMap(std::size_t length, std::size_t channels)
        : length(length), channels(channels), data(length * length * channels, 0.0f) {}

    float& at(std::size_t i, std::size_t j, std::size_t c) {
        return data[(i * length + j) * channels + c];
    }
    float at(std::size_t i, std::size_t j, std::size_t c) const {
        return data[(i * length + j) * channels + c];
    }
    std::span<const float> cell(std::size_t i, std::size_t j) const {
        return {data.data() + (i * length + j) * channels, channels};
    }

    /// Rows/columns [start, start + size).
    PairMap window(std::size_t start, std::size_t size) const;

    bool operator==(const PairMap&) const = default;
};

/// cell(i, j) = concat(onehot(s_i), onehot(s_j)), 40 channels.
PairMap one_hot_pairwise(std::string_view sequence);

inline constexpr double kMaxSequenceLength = 1000.0;
inline constexpr std::size_t kDefaultPeWidth = 48;

/// Per-residue code of width D_PE/2, Z[i][2r] = sin(i / L_max^{4r/D_PE}) and
/// Z[i][2r+1] = cos(...), for r < D_PE/4; cell(i, j) = concat(code_i, code_j).
PairMap positional_encoding(std::size_t length, std::size_t pe_width = kDefaultPeWidth);

/// Inter-residue prediction channel groups: distance, ω, γ (θ in trRosetta), φ.
struct PredictionGroup {
    std::string_view name;
    std::size_t offset;
    std::size_t width;
    bool symmetric;
};

inline constexpr PredictionGroup kPredictionGroups[] = {
    {"distance", 0, 37, true},
    {"omega", 37, 25, true},
    {"gamma", 62, 25, false},
    {"phi", 87, 13, false},
};
inline constexpr std::size_t kPredictionChannels = 100;

/// Distance bins: bin 0 is "beyond 20 Å", bins 1–36 split 2–20 Å into 0.5 Å steps.
inline constexpr double kDistanceBinStart = 2.0;
inline constexpr double kDistanceBinWidth = 0.5;
inline constexpr double distance_bin_centre(std::size_t bin) {
    return kDistanceBinStart + kDistanceBinWidth * (static_cast<double>(bin) - 0.5);
}

struct Predictions {
    PairMap map;
    /// Every per-group bin vector sums to 1 within 1e-3.
    bool normalized = false;
};

/// Validates shape and values; NaN → Data error, wrong shape → Format error.
Predictions validate_predictions(PairMap map);
Predictions load_predictions(const std::filesystem::path& path);
void save_predictions(const PairMap& map, const std::filesystem::path& path);

enum class PredictionMask {
    None,
    /// Zero ω/γ/φ, keep distance ("distance only" ablation).
    Orientation,
};

struct ChannelGroup {
    std::string name;
    std::size_t offset;
    std::size_t width;

    bool operator==(const ChannelGroup&) const = default;
};

struct ChannelManifest {
    std::vector<ChannelGroup> groups;

    std::size_t total() const;
    bool operator==(const ChannelManifest&) const = default;
};

struct AssembleOptions {
    std::size_t pe_width = kDefaultPeWidth;
    PredictionMask mask = PredictionMask::None;
};

/// Immutable per-protein conditioning maps. Stacked channel order is
/// one-hot (40) | positional (D_PE) | predictions (100).
class ConditioningBundle {
public:
    std::size_t length() const noexcept { return sequence_.size(); }
    const std::string& sequence() const noexcept { return sequence_; }
    const PairMap& onehot() const noexcept { return onehot_; }
    const PairMap& posenc() const noexcept { return posenc_; }
    const PairMap& predictions() const noexcept { return predictions_; }
    bool has_predictions() const noexcept { return has_predictions_; }
    bool predictions_normalized() const noexcept { return predictions_normalized_; }
    const ChannelManifest& manifest() const noexcept { return manifest_; }
    std::size_t channels() const { return manifest_.total(); }

    /// Process-unique identity, used to memoize bundle-dependent projections.
    std::uint64_t id() const noexcept { return id_; }

    /// Stacked channel vector for cell (i, j).
    void stacked_cell(std::size_t i, std::size_t j, std::span<float> out) const;

    /// Contiguous residue window [start, start + size) of every map.
    ConditioningBundle window(std::size_t start, std::size_t size) const;

    friend ConditioningBundle assemble(std::string_view, const std::optional<Predictions>&,
                                       const AssembleOptions&);

private:
    std::string sequence_;
    PairMap onehot_;
    PairMap posenc_;
    PairMap predictions_;
    bool has_predictions_ = false;
    bool predictions_normalized_ = false;
    ChannelManifest manifest_;
    std::uint64_t id_ = 0;
};

ConditioningBundle assemble(std::string_view sequence,
                            const std::optional<Predictions>& predictions = std::nullopt,
                            const AssembleOptions& options = {});

/// Channel layout assemble() produces for a given positional width.
ChannelManifest channel_layout(std::size_t pe_width = kDefaultPeWidth);

}  // namespace scorefold
