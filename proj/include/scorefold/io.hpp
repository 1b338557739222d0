#pragma once

#include "scorefold/geometry.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace scorefold::io {

// ---------------------------------------------------------------------------
// Tensor container
//
//   "SFT1" | dtype u8 | rank u8 | dims: rank × u32 LE | payload (row-major LE)
//   | metadata: u32 LE byte count, then UTF-8 "key=value\n" lines
// ---------------------------------------------------------------------------

enum class DType : std::uint8_t { Float32 = 0, Float64 = 1 };

std::size_t dtype_size(DType dtype);

using Metadata = std::vector<std::pair<std::string, std::string>>;

class Tensor {
public:
    Tensor() = default;

    static Tensor from_f32(std::vector<std::uint32_t> dims, std::span<const float> values);
    static Tensor from_f64(std::vector<std::uint32_t> dims, std::span<const double> values);

    DType dtype() const noexcept { return dtype_; }
    const std::vector<std::uint32_t>& dims() const noexcept { return dims_; }
    std::size_t rank() const noexcept { return dims_.size(); }
    std::size_t element_count() const;
    const std::vector<std::byte>& payload() const noexcept { return payload_; }

    /// Converts to the requested precision (float64 → float32 rounds).
    std::vector<float> to_f32() const;
    std::vector<double> to_f64() const;

    Metadata& metadata() noexcept { return metadata_; }
    const Metadata& metadata() const noexcept { return metadata_; }
    std::optional<std::string> meta(const std::string& key) const;
    void set_meta(const std::string& key, const std::string& value);

    std::vector<std::byte> serialize() const;
    static Tensor parse(std::span<const std::byte> bytes);

    bool operator==(const Tensor&) const = default;

private:
    DType dtype_ = DType::Float32;
    std::vector<std::uint32_t> dims_;
    std::vector<std::byte> payload_;
    Metadata metadata_;
};

Tensor read_tensor(const std::filesystem::path& path);
void write_tensor(const Tensor& tensor, const std::filesystem::path& path);

std::vector<std::byte> read_bytes(const std::filesystem::path& path);
void write_bytes(std::span<const std::byte> bytes, const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// PDB (Cα only)
// ---------------------------------------------------------------------------

struct PdbChain {
    Structure structure;
    std::vector<int> residue_numbers;
    /// Residues that had ATOM records but no Cα.
    std::size_t residues_without_ca = 0;
};

/// Reads the Cα trace of one chain from the first model. An empty chain id (or
/// "*") selects the first chain present.
PdbChain parse_pdb_ca(const std::filesystem::path& path, const std::string& chain = "A");
PdbChain parse_pdb_ca_text(const std::string& text, const std::string& chain = "A");

std::string format_ca_pdb(const Structure& structure, char chain = 'A');
void write_ca_pdb(const Structure& structure, const std::filesystem::path& path, char chain = 'A');

char residue_code(std::string_view three_letter);
std::string residue_name(char code);

// ---------------------------------------------------------------------------
// Dataset manifest (JSON)
// ---------------------------------------------------------------------------

enum class Split { Train, Valid, Test };

std::string to_string(Split split);

struct ManifestEntry {
    std::string id;
    std::filesystem::path pdb;
    std::string chain = "A";
    std::optional<std::filesystem::path> predictions;
    Split split = Split::Train;
};

struct DatasetManifest {
    std::vector<ManifestEntry> entries;

    std::vector<ManifestEntry> split(Split which) const;
};

/// Relative paths resolve against the manifest's directory. Ids must be unique and
/// every referenced file must exist.
DatasetManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// CSV (RFC 4180)
// ---------------------------------------------------------------------------

using CsvField = std::variant<std::string, double, std::int64_t>;

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<CsvField>> rows;
};

/// Floats are written with 6 significant digits.
std::string format_csv(const CsvTable& table);
void emit_csv(const CsvTable& table, const std::filesystem::path& path);

std::vector<std::vector<std::string>> parse_csv(const std::string& text);
std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path);

/// key=value lines, in insertion order.
void write_config_echo(const Metadata& entries, const std::filesystem::path& path);
Metadata read_config_echo(const std::filesystem::path& path);

}  // namespace scorefold::io
