#include "scorefold/conditioning.hpp"

#include "scorefold/io.hpp"

#include <atomic>
#include <cmath>

namespace scorefold {

namespace {

std::atomic<std::uint64_t> next_bundle_id{1};

void require_sequence(std::string_view sequence) {
    if (sequence.empty()) fail(ErrorKind::InvalidInput, "empty sequence");
}

}  // namespace

int residue_index(char code) {
    const auto pos = kAlphabet.find(code);
    return pos == std::string_view::npos ? -1 : static_cast<int>(pos);
}

PairMap PairMap::window(std::size_t start, std::size_t size) const {
    if (start + size > length) fail(ErrorKind::InvalidInput, "window exceeds map length");
    PairMap out(size, channels);
    for (std::size_t i = 0; i < size; ++i) {
        for (std::size_t j = 0; j < size; ++j) {
            const auto src = cell(start + i, start + j);
            std::copy(src.begin(), src.end(), out.data.begin() + static_cast<std::ptrdiff_t>((i * size + j) * channels));
        }
    }
    return out;
}

PairMap one_hot_pairwise(std::string_view sequence) {
    require_sequence(sequence);
    const std::size_t n = sequence.size();
    PairMap map(n, 2 * kAlphabetSize);
    for (std::size_t i = 0; i < n; ++i) {
        const int row = residue_index(sequence[i]);
        for (std::size_t j = 0; j < n; ++j) {
            const int col = residue_index(sequence[j]);
            if (row >= 0) map.at(i, j, static_cast<std::size_t>(row)) = 1.0f;
            if (col >= 0) map.at(i, j, kAlphabetSize + static_cast<std::size_t>(col)) = 1.0f;
        }
    }
    return map;
}

PairMap positional_encoding(std::size_t length, std::size_t pe_width) {
    if (pe_width == 0 || pe_width % 4 != 0) {
        fail(ErrorKind::InvalidConfig, "positional encoding width must be a positive multiple of 4");
    }
    const std::size_t half = pe_width / 2;
    std::vector<float> code(length * half);
    for (std::size_t i = 0; i < length; ++i) {
        for (std::size_t r = 0; r < pe_width / 4; ++r) {
            const double exponent = 4.0 * static_cast<double>(r) / static_cast<double>(pe_width);
            const double arg = static_cast<double>(i) / std::pow(kMaxSequenceLength, exponent);
            code[i * half + 2 * r] = static_cast<float>(std::sin(arg));
            code[i * half + 2 * r + 1] = static_cast<float>(std::cos(arg));
        }
    }
    PairMap map(length, pe_width);
    for (std::size_t i = 0; i < length; ++i) {
        for (std::size_t j = 0; j < length; ++j) {
            for (std::size_t c = 0; c < half; ++c) {
                map.at(i, j, c) = code[i * half + c];
                map.at(i, j, half + c) = code[j * half + c];
            }
        }
    }
    return map;
}

Predictions validate_predictions(PairMap map) {
    if (map.channels != kPredictionChannels) {
        fail(ErrorKind::Format, "prediction map has " + std::to_string(map.channels) +
                                    " channels, expected " + std::to_string(kPredictionChannels));
    }
    if (map.data.size() != map.length * map.length * map.channels) {
        fail(ErrorKind::Format, "prediction map payload does not match its shape");
    }
    bool normalized = true;
    for (std::size_t i = 0; i < map.length; ++i) {
        for (std::size_t j = 0; j < map.length; ++j) {
            const auto cell = map.cell(i, j);
            for (float v : cell) {
                if (std::isnan(v)) {
                    fail(ErrorKind::Data, "NaN in prediction cell (" + std::to_string(i) + ", " +
                                              std::to_string(j) + ")");
                }
            }
            if (!normalized) continue;
            for (const auto& group : kPredictionGroups) {
                double sum = 0.0;
                for (std::size_t c = 0; c < group.width; ++c) sum += cell[group.offset + c];
                if (std::abs(sum - 1.0) > 1e-3) {
                    normalized = false;
                    break;
                }
            }
        }
    }
    return Predictions{std::move(map), normalized};
}

Predictions load_predictions(const std::filesystem::path& path) {
    const io::Tensor tensor = io::read_tensor(path);
    const auto& dims = tensor.dims();
    if (dims.size() != 3 || dims[0] != dims[1] || dims[2] != kPredictionChannels) {
        fail(ErrorKind::Format, "prediction tensor must have shape L×L×100");
    }
    PairMap map;
    map.length = dims[0];
    map.channels = dims[2];
    map.data = tensor.to_f32();
    return validate_predictions(std::move(map));
}

void save_predictions(const PairMap& map, const std::filesystem::path& path) {
    io::Tensor tensor = io::Tensor::from_f32(
        {static_cast<std::uint32_t>(map.length), static_cast<std::uint32_t>(map.length),
         static_cast<std::uint32_t>(map.channels)},
        map.data);
    tensor.set_meta("kind", "inter_residue_predictions");
    tensor.set_meta("groups", "distance:37,omega:25,gamma:25,phi:13");
    io::write_tensor(tensor, path);
}

std::size_t ChannelManifest::total() const {
    std::size_t sum = 0;
    for (const auto& g : groups) sum += g.width;
    return sum;
}

ChannelManifest channel_layout(std::size_t pe_width) {
    ChannelManifest manifest;
    std::size_t offset = 0;
    auto add = [&](std::string name, std::size_t width) {
        manifest.groups.push_back({std::move(name), offset, width});
        offset += width;
    };
    add("onehot_row", kAlphabetSize);
    add("onehot_col", kAlphabetSize);
    add("posenc_row", pe_width / 2);
    add("posenc_col", pe_width / 2);
    for (const auto& group : kPredictionGroups) add(std::string("pred_") + std::string(group.name), group.width);
    return manifest;
}

void ConditioningBundle::stacked_cell(std::size_t i, std::size_t j, std::span<float> out) const {
    const auto a = onehot_.cell(i, j);
    const auto b = posenc_.cell(i, j);
    const auto c = predictions_.cell(i, j);
    auto it = std::copy(a.begin(), a.end(), out.begin());
    it = std::copy(b.begin(), b.end(), it);
    std::copy(c.begin(), c.end(), it);
}

ConditioningBundle ConditioningBundle::window(std::size_t start, std::size_t size) const {
    if (size == 0 || start + size > length()) {
        fail(ErrorKind::InvalidInput, "bundle window out of range");
    }
    ConditioningBundle out;
    out.has_predictions_ = has_predictions_;
    out.predictions_normalized_ = predictions_normalized_;
    out.manifest_ = manifest_;
    out.sequence_ = sequence_.substr(start, size);
    out.onehot_ = onehot_.window(start, size);
    out.posenc_ = posenc_.window(start, size);
    out.predictions_ = predictions_.window(start, size);
    out.id_ = next_bundle_id.fetch_add(1);
    return out;
}

ConditioningBundle assemble(std::string_view sequence, const std::optional<Predictions>& predictions,
                            const AssembleOptions& options) {
    require_sequence(sequence);
    const std::size_t n = sequence.size();
    if (predictions && predictions->map.length != n) {
        fail(ErrorKind::InvalidInput, "prediction map length " +
                                          std::to_string(predictions->map.length) +
                                          " does not match sequence length " + std::to_string(n));
    }

    ConditioningBundle bundle;
    bundle.sequence_ = std::string(sequence);
    bundle.onehot_ = one_hot_pairwise(sequence);
    bundle.posenc_ = positional_encoding(n, options.pe_width);
    if (predictions) {
        bundle.predictions_ = predictions->map;
        bundle.has_predictions_ = true;
        bundle.predictions_normalized_ = predictions->normalized;
        if (options.mask == PredictionMask::Orientation) {
            const std::size_t keep = kPredictionGroups[0].width;
            for (std::size_t cell = 0; cell < n * n; ++cell) {
                for (std::size_t c = keep; c < kPredictionChannels; ++c) {
                    bundle.predictions_.data[cell * kPredictionChannels + c] = 0.0f;
                }
            }
            bundle.predictions_normalized_ = false;
        }
    } else {
        bundle.predictions_ = PairMap(n, kPredictionChannels);
    }
    bundle.manifest_ = channel_layout(options.pe_width);
    bundle.id_ = next_bundle_id.fetch_add(1);
    return bundle;
}

}  // namespace scorefold
