#include "scorefold/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace scorefold::io {

static_assert(std::endian::native == std::endian::little,
              "tensor payloads are memcpy'd as little-endian");

namespace {

constexpr std::array<char, 4> kMagic = {'S', 'F', 'T', '1'};

void put_u32(std::vector<std::byte>& out, std::uint32_t v) {
    for (int b = 0; b < 4; ++b) out.push_back(static_cast<std::byte>((v >> (8 * b)) & 0xffU));
}

std::uint32_t get_u32(std::span<const std::byte> bytes, std::size_t offset) {
    std::uint32_t v = 0;
    for (int b = 0; b < 4; ++b) {
        v |= static_cast<std::uint32_t>(std::to_integer<std::uint8_t>(bytes[offset + b])) << (8 * b);
    }
    return v;
}

std::size_t checked_product(const std::vector<std::uint32_t>& dims) {
    std::size_t total = 1;
    for (std::uint32_t d : dims) {
        if (d != 0 && total > std::numeric_limits<std::size_t>::max() / d) {
            fail(ErrorKind::Format, "tensor dimension product overflows");
        }
        total *= d;
    }
    return total;
}

}  // namespace

std::size_t dtype_size(DType dtype) {
    switch (dtype) {
        case DType::Float32: return 4;
        case DType::Float64: return 8;
    }
    fail(ErrorKind::Format, "unknown dtype");
}

Tensor Tensor::from_f32(std::vector<std::uint32_t> dims, std::span<const float> values) {
    Tensor t;
    t.dtype_ = DType::Float32;
    t.dims_ = std::move(dims);
    if (checked_product(t.dims_) != values.size()) {
        fail(ErrorKind::InvalidInput, "tensor value count does not match dims");
    }
    t.payload_.resize(values.size_bytes());
    std::memcpy(t.payload_.data(), values.data(), values.size_bytes());
    return t;
}

Tensor Tensor::from_f64(std::vector<std::uint32_t> dims, std::span<const double> values) {
    Tensor t;
    t.dtype_ = DType::Float64;
    t.dims_ = std::move(dims);
    if (checked_product(t.dims_) != values.size()) {
        fail(ErrorKind::InvalidInput, "tensor value count does not match dims");
    }
    t.payload_.resize(values.size_bytes());
    std::memcpy(t.payload_.data(), values.data(), values.size_bytes());
    return t;
}

std::size_t Tensor::element_count() const { return checked_product(dims_); }

std::vector<float> Tensor::to_f32() const {
    std::vector<float> out(element_count());
    if (dtype_ == DType::Float32) {
        std::memcpy(out.data(), payload_.data(), payload_.size());
    } else {
        const auto wide = to_f64();
        std::transform(wide.begin(), wide.end(), out.begin(),
                       [](double v) { return static_cast<float>(v); });
    }
    return out;
}

std::vector<double> Tensor::to_f64() const {
    std::vector<double> out(element_count());
    if (dtype_ == DType::Float64) {
        std::memcpy(out.data(), payload_.data(), payload_.size());
    } else {
        std::vector<float> narrow(out.size());
        std::memcpy(narrow.data(), payload_.data(), payload_.size());
        std::copy(narrow.begin(), narrow.end(), out.begin());
    }
    return out;
}

std::optional<std::string> Tensor::meta(const std::string& key) const {
    for (const auto& [k, v] : metadata_) {
        if (k == key) return v;
    }
    return std::nullopt;
}

void Tensor::set_meta(const std::string& key, const std::string& value) {
    if (key.empty() || key.find_first_of("=\n") != std::string::npos) {
        fail(ErrorKind::InvalidInput, "metadata key must be non-empty without '=' or newline");
    }
    if (value.find('\n') != std::string::npos) {
        fail(ErrorKind::InvalidInput, "metadata value may not contain a newline");
    }
    for (auto& [k, v] : metadata_) {
        if (k == key) {
            v = value;
            return;
        }
    }
    metadata_.emplace_back(key, value);
}

std::vector<std::byte> Tensor::serialize() const {
    if (dims_.size() > 255) fail(ErrorKind::Format, "tensor rank exceeds 255");
    std::vector<std::byte> out;
    out.reserve(6 + 4 * dims_.size() + payload_.size() + 64);
    for (char c : kMagic) out.push_back(static_cast<std::byte>(c));
    out.push_back(static_cast<std::byte>(dtype_));
    out.push_back(static_cast<std::byte>(dims_.size()));
    for (std::uint32_t d : dims_) put_u32(out, d);
    out.insert(out.end(), payload_.begin(), payload_.end());

    std::string text;
    for (const auto& [k, v] : metadata_) text += k + "=" + v + "\n";
    put_u32(out, static_cast<std::uint32_t>(text.size()));
    for (char c : text) out.push_back(static_cast<std::byte>(c));
    return out;
}

Tensor Tensor::parse(std::span<const std::byte> bytes) {
    if (bytes.size() < 6) fail(ErrorKind::Format, "tensor file truncated in header");
    for (std::size_t i = 0; i < kMagic.size(); ++i) {
        if (static_cast<char>(bytes[i]) != kMagic[i]) fail(ErrorKind::Format, "bad magic");
    }
    Tensor t;
    const auto dtype_code = std::to_integer<std::uint8_t>(bytes[4]);
    if (dtype_code > 1) {
        fail(ErrorKind::Format, "unknown dtype code " + std::to_string(dtype_code));
    }
    t.dtype_ = static_cast<DType>(dtype_code);
    const std::size_t rank = std::to_integer<std::uint8_t>(bytes[5]);
    std::size_t offset = 6;
    if (bytes.size() < offset + 4 * rank) fail(ErrorKind::Format, "tensor file truncated in dims");
    for (std::size_t r = 0; r < rank; ++r) {
        t.dims_.push_back(get_u32(bytes, offset));
        offset += 4;
    }
    const std::size_t count = checked_product(t.dims_);
    const std::size_t width = dtype_size(t.dtype_);
    if (count > (bytes.size() - offset) / width) {
        fail(ErrorKind::Format, "tensor payload truncated: need " + std::to_string(count) +
                                    " elements");
    }
    const std::size_t payload_bytes = count * width;
    t.payload_.assign(bytes.begin() + static_cast<std::ptrdiff_t>(offset),
                      bytes.begin() + static_cast<std::ptrdiff_t>(offset + payload_bytes));
    offset += payload_bytes;

    if (bytes.size() < offset + 4) fail(ErrorKind::Format, "tensor file truncated before metadata");
    const std::size_t meta_len = get_u32(bytes, offset);
    offset += 4;
    if (bytes.size() - offset != meta_len) {
        fail(ErrorKind::Format, "metadata length " + std::to_string(meta_len) +
                                    " does not match remaining " +
                                    std::to_string(bytes.size() - offset) + " bytes");
    }
    std::string text(meta_len, '\0');
    std::memcpy(text.data(), bytes.data() + offset, meta_len);
    std::size_t line_start = 0;
    while (line_start < text.size()) {
        const std::size_t line_end = text.find('\n', line_start);
        if (line_end == std::string::npos) fail(ErrorKind::Format, "unterminated metadata line");
        const std::string line = text.substr(line_start, line_end - line_start);
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos || eq == 0) {
            fail(ErrorKind::Format, "malformed metadata line '" + line + "'");
        }
        t.metadata_.emplace_back(line.substr(0, eq), line.substr(eq + 1));
        line_start = line_end + 1;
    }
    return t;
}

std::vector<std::byte> read_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::Io, "cannot open " + path.string());
    std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::vector<std::byte> bytes(raw.size());
    std::memcpy(bytes.data(), raw.data(), raw.size());
    return bytes;
}

void write_bytes(std::span<const std::byte> bytes, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) fail(ErrorKind::Io, "write failed for " + path.string());
}

Tensor read_tensor(const std::filesystem::path& path) { return Tensor::parse(read_bytes(path)); }

void write_tensor(const Tensor& tensor, const std::filesystem::path& path) {
    write_bytes(tensor.serialize(), path);
}

// ---------------------------------------------------------------------------
// PDB
// ---------------------------------------------------------------------------

namespace {

constexpr std::array<std::pair<std::string_view, char>, 20> kResidueNames = {{
    {"ALA", 'A'}, {"CYS", 'C'}, {"ASP", 'D'}, {"GLU", 'E'}, {"PHE", 'F'},
    {"GLY", 'G'}, {"HIS", 'H'}, {"ILE", 'I'}, {"LYS", 'K'}, {"LEU", 'L'},
    {"MET", 'M'}, {"ASN", 'N'}, {"PRO", 'P'}, {"GLN", 'Q'}, {"ARG", 'R'},
    {"SER", 'S'}, {"THR", 'T'}, {"VAL", 'V'}, {"TRP", 'W'}, {"TYR", 'Y'},
}};

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

double parse_column_double(const std::string& line, std::size_t start, std::size_t width,
                           std::size_t line_no, const char* what) {
    const std::string field = trim(std::string_view(line).substr(start, width));
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (field.empty() || ec != std::errc() || ptr != field.data() + field.size() ||
        !std::isfinite(value)) {
        fail(ErrorKind::Parse, "line " + std::to_string(line_no) + ": bad " + what + " '" +
                                   field + "'");
    }
    return value;
}

struct ResidueKey {
    int number;
    char insertion;
    auto operator<=>(const ResidueKey&) const = default;
};

struct ResidueSlot {
    char code = 'X';
    bool has_ca = false;
    Vec3 ca = Vec3::Zero();
    double occupancy = -1.0;
};

}  // namespace

char residue_code(std::string_view three_letter) {
    for (const auto& [name, code] : kResidueNames) {
        if (name == three_letter) return code;
    }
    return 'X';
}

std::string residue_name(char code) {
    for (const auto& [name, c] : kResidueNames) {
        if (c == code) return std::string(name);
    }
    return "UNK";
}

PdbChain parse_pdb_ca_text(const std::string& text, const std::string& chain) {
    const bool any_chain = chain.empty() || chain == "*";
    std::optional<char> selected;
    if (!any_chain) selected = chain.front();

    std::map<ResidueKey, ResidueSlot> residues;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.rfind("ENDMDL", 0) == 0) break;  // first model only
        if (line.rfind("ATOM  ", 0) != 0) continue;
        if (line.size() < 54) {
            fail(ErrorKind::Parse, "line " + std::to_string(line_no) + ": ATOM record too short");
        }
        const char chain_id = line[21];
        if (!selected) selected = chain_id;
        if (chain_id != *selected) continue;

        const std::string number_field = trim(std::string_view(line).substr(22, 4));
        int number = 0;
        const auto [ptr, ec] =
            std::from_chars(number_field.data(), number_field.data() + number_field.size(), number);
        if (number_field.empty() || ec != std::errc() ||
            ptr != number_field.data() + number_field.size()) {
            fail(ErrorKind::Parse, "line " + std::to_string(line_no) + ": bad residue number '" +
                                       number_field + "'");
        }
        const ResidueKey key{number, line[26]};
        ResidueSlot& slot = residues[key];
        slot.code = residue_code(trim(std::string_view(line).substr(17, 3)));

        const std::string atom = trim(std::string_view(line).substr(12, 4));
        if (atom != "CA") continue;
        const double x = parse_column_double(line, 30, 8, line_no, "x coordinate");
        const double y = parse_column_double(line, 38, 8, line_no, "y coordinate");
        const double z = parse_column_double(line, 46, 8, line_no, "z coordinate");
        double occupancy = 1.0;
        if (line.size() >= 60 && !trim(std::string_view(line).substr(54, 6)).empty()) {
            occupancy = parse_column_double(line, 54, 6, line_no, "occupancy");
        }
        // Alternate locations: highest occupancy wins, first seen on ties.
        if (!slot.has_ca || occupancy > slot.occupancy) {
            slot.has_ca = true;
            slot.ca = Vec3(x, y, z);
            slot.occupancy = occupancy;
        }
    }

    PdbChain result;
    std::vector<Vec3> points;
    for (const auto& [key, slot] : residues) {
        if (!slot.has_ca) {
            ++result.residues_without_ca;
            continue;
        }
        result.structure.sequence.push_back(slot.code);
        result.residue_numbers.push_back(key.number);
        points.push_back(slot.ca);
    }
    if (points.empty()) {
        fail(ErrorKind::EmptyStructure,
             "no CA atoms for chain " + (selected ? std::string(1, *selected) : chain));
    }
    result.structure.coords.resize(static_cast<Eigen::Index>(points.size()), 3);
    for (std::size_t i = 0; i < points.size(); ++i) {
        result.structure.coords.row(static_cast<Eigen::Index>(i)) = points[i].transpose();
    }
    return result;
}

PdbChain parse_pdb_ca(const std::filesystem::path& path, const std::string& chain) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::Io, "cannot open " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_pdb_ca_text(buffer.str(), chain);
}

std::string format_ca_pdb(const Structure& structure, char chain) {
    if (structure.sequence.size() != structure.length()) {
        fail(ErrorKind::InvalidInput, "sequence length does not match coordinates");
    }
    require_finite(structure.coords);
    std::string out;
    char buffer[96];
    for (std::size_t i = 0; i < structure.length(); ++i) {
        const auto row = structure.coords.row(static_cast<Eigen::Index>(i));
        for (Eigen::Index a = 0; a < 3; ++a) {
            if (row(a) > 9999.999 || row(a) < -999.999) {
                fail(ErrorKind::Range, "coordinate " + std::to_string(row(a)) + " at residue " +
                                           std::to_string(i) + " overflows the PDB 8.3 column");
            }
        }
        std::snprintf(buffer, sizeof(buffer),
                      "ATOM  %5zu  CA  %3s %c%4zu    %8.3f%8.3f%8.3f%6.2f%6.2f           C  \n",
                      (i + 1) % 100000, residue_name(structure.sequence[i]).c_str(), chain,
                      (i + 1) % 10000, row(0), row(1), row(2), 1.0, 0.0);
        out += buffer;
    }
    std::snprintf(buffer, sizeof(buffer), "TER   %5zu      %3s %c%4zu\n",
                  (structure.length() + 1) % 100000,
                  structure.length() ? residue_name(structure.sequence.back()).c_str() : "UNK",
                  chain, structure.length() % 10000);
    out += buffer;
    out += "END\n";
    return out;
}

void write_ca_pdb(const Structure& structure, const std::filesystem::path& path, char chain) {
    const std::string text = format_ca_pdb(structure, chain);
    std::ofstream out(path, std::ios::trunc);
    if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
    out << text;
    if (!out) fail(ErrorKind::Io, "write failed for " + path.string());
}

// ---------------------------------------------------------------------------
// Manifest
// ---------------------------------------------------------------------------

std::string to_string(Split split) {
    switch (split) {
        case Split::Train: return "train";
        case Split::Valid: return "valid";
        case Split::Test: return "test";
    }
    return "train";
}

namespace {

Split parse_split(const std::string& s) {
    if (s == "train") return Split::Train;
    if (s == "valid") return Split::Valid;
    if (s == "test") return Split::Test;
    fail(ErrorKind::Format, "unknown split tag '" + s + "'");
}

}  // namespace

std::vector<ManifestEntry> DatasetManifest::split(Split which) const {
    std::vector<ManifestEntry> out;
    for (const auto& e : entries) {
        if (e.split == which) out.push_back(e);
    }
    return out;
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::Io, "cannot open manifest " + path.string());
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::Format, "manifest " + path.string() + ": " + e.what());
    }
    const auto base = path.parent_path();
    auto resolve = [&](const std::string& p) {
        const std::filesystem::path candidate(p);
        return candidate.is_absolute() ? candidate : base / candidate;
    };

    DatasetManifest manifest;
    if (!doc.contains("entries") || !doc["entries"].is_array()) {
        fail(ErrorKind::Format, "manifest needs an 'entries' array");
    }
    std::vector<std::string> seen;
    std::size_t index = 0;
    for (const auto& item : doc["entries"]) {
        try {
            ManifestEntry e;
            e.id = item.at("id").get<std::string>();
            e.pdb = resolve(item.at("pdb").get<std::string>());
            e.chain = item.value("chain", std::string("A"));
            e.split = parse_split(item.value("split", std::string("train")));
            if (item.contains("predictions") && !item["predictions"].is_null()) {
                e.predictions = resolve(item["predictions"].get<std::string>());
            }
            if (std::find(seen.begin(), seen.end(), e.id) != seen.end()) {
                fail(ErrorKind::Format, "duplicate manifest id '" + e.id + "'");
            }
            seen.push_back(e.id);
            if (!std::filesystem::exists(e.pdb)) {
                fail(ErrorKind::Io, "manifest entry '" + e.id + "': missing " + e.pdb.string());
            }
            if (e.predictions && !std::filesystem::exists(*e.predictions)) {
                fail(ErrorKind::Io, "manifest entry '" + e.id + "': missing " +
                                        e.predictions->string());
            }
            manifest.entries.push_back(std::move(e));
        } catch (const nlohmann::json::exception& ex) {
            fail(ErrorKind::Format, "manifest entry " + std::to_string(index) + ": " + ex.what());
        }
        ++index;
    }
    return manifest;
}

void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
    nlohmann::json doc;
    doc["entries"] = nlohmann::json::array();
    for (const auto& e : manifest.entries) {
        nlohmann::json item{{"id", e.id},
                            {"pdb", e.pdb.string()},
                            {"chain", e.chain},
                            {"split", to_string(e.split)}};
        if (e.predictions) item["predictions"] = e.predictions->string();
        doc["entries"].push_back(std::move(item));
    }
    std::ofstream out(path, std::ios::trunc);
    if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
    out << doc.dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

namespace {

std::string quote_if_needed(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

std::string format_field(const CsvField& field) {
    if (const auto* s = std::get_if<std::string>(&field)) return quote_if_needed(*s);
    if (const auto* i = std::get_if<std::int64_t>(&field)) return std::to_string(*i);
    char buffer[32];
    std::snprintf(buffer, sizeof(buffer), "%.6g", std::get<double>(field));
    return buffer;
}

}  // namespace

std::string format_csv(const CsvTable& table) {
    std::string out;
    auto append_row = [&](const auto& cells, auto&& fmt) {
        for (std::size_t c = 0; c < cells.size(); ++c) {
            if (c) out += ',';
            out += fmt(cells[c]);
        }
        out += "\r\n";
    };
    append_row(table.header, [](const std::string& s) { return quote_if_needed(s); });
    for (const auto& row : table.rows) {
        if (row.size() != table.header.size()) {
            fail(ErrorKind::InvalidInput, "CSV row width does not match header");
        }
        append_row(row, [](const CsvField& f) { return format_field(f); });
    }
    return out;
}

void emit_csv(const CsvTable& table, const std::filesystem::path& path) {
    const std::string text = format_csv(table);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
    out << text;
    if (!out) fail(ErrorKind::Io, "write failed for " + path.string());
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false;
    bool field_started = false;
    std::size_t line = 1;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                if (c == '\n') ++line;
                field += c;
            }
            continue;
        }
        if (c == '"' && !field_started) {
            quoted = true;
            field_started = true;
        } else if (c == ',') {
            row.push_back(std::move(field));
            field.clear();
            field_started = false;
        } else if (c == '\r' || c == '\n') {
            if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
            row.push_back(std::move(field));
            rows.push_back(std::move(row));
            field.clear();
            row.clear();
            field_started = false;
            ++line;
        } else {
            field += c;
            field_started = true;
        }
    }
    if (quoted) fail(ErrorKind::Parse, "unterminated quoted CSV field near line " + std::to_string(line));
    if (field_started || !row.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::Io, "cannot open " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_csv(buffer.str());
}

void write_config_echo(const Metadata& entries, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
    for (const auto& [k, v] : entries) out << k << '=' << v << '\n';
}

Metadata read_config_echo(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::Io, "cannot open " + path.string());
    Metadata entries;
    std::string line;
    while (std::getline(in, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        entries.emplace_back(line.substr(0, eq), line.substr(eq + 1));
    }
    return entries;
}

}  // namespace scorefold::io
