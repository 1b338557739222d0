#include "scorefold/handedness.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace scorefold {

std::size_t dihedral_bin(double angle, std::size_t bins) {
    const double width = 2.0 * std::numbers::pi / static_cast<double>(bins);
    const double position = (angle + std::numbers::pi) / width;
    const double index = std::ceil(position) - 1.0;
    if (index < 0.0) return 0;
    return std::min(bins - 1, static_cast<std::size_t>(index));
}

std::vector<double> chain_dihedrals(const Coords& x) {
    std::vector<double> angles;
    for (Eigen::Index i = 0; i + 3 < x.rows(); ++i) {
        try {
            angles.push_back(dihedral(x.row(i).transpose(), x.row(i + 1).transpose(),
                                      x.row(i + 2).transpose(), x.row(i + 3).transpose()));
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::DegenerateGeometry) throw;
        }
    }
    return angles;
}

DihedralHistogram histogram_from_angles(std::span<const double> angles, std::size_t bins,
                                        double smoothing) {
    if (bins == 0) fail(ErrorKind::InvalidConfig, "histogram needs at least one bin");
    if (angles.empty()) fail(ErrorKind::InvalidInput, "empty dihedral pool");
    DihedralHistogram h;
    h.counts.assign(bins, 0.0);
    for (double a : angles) h.counts[dihedral_bin(a, bins)] += 1.0;
    const double total = static_cast<double>(angles.size());
    const double norm = 1.0 + static_cast<double>(bins) * smoothing;
    h.frequencies.resize(bins);
    for (std::size_t b = 0; b < bins; ++b) {
        h.frequencies[b] = (h.counts[b] / total + smoothing) / norm;
    }
    return h;
}

DihedralHistogram build_reference_histogram(std::span<const Structure> structures, std::size_t bins) {
    std::vector<double> pool;
    for (const auto& s : structures) {
        s.validate(4);
        const auto angles = chain_dihedrals(s.coords);
        pool.insert(pool.end(), angles.begin(), angles.end());
    }
    return histogram_from_angles(pool, bins);
}

double kl_divergence(const DihedralHistogram& p, const DihedralHistogram& q) {
    if (p.bins() != q.bins() || p.frequencies.size() != q.frequencies.size()) {
        fail(ErrorKind::InvalidInput, "histogram bin counts differ: " + std::to_string(p.bins()) +
                                          " vs " + std::to_string(q.bins()));
    }
    double kl = 0.0;
    for (std::size_t b = 0; b < p.frequencies.size(); ++b) {
        const double pb = p.frequencies[b];
        const double qb = q.frequencies[b];
        if (!(qb > 0.0)) fail(ErrorKind::InvalidInput, "reference histogram has an empty bin");
        if (pb > 0.0) kl += pb * std::log(pb / qb);
    }
    return kl;
}

HandednessDecision resolve_handedness(const Coords& x, const DihedralHistogram& reference) {
    if (x.rows() < 4) fail(ErrorKind::InvalidInput, "handedness needs at least 4 residues");
    const auto angles = chain_dihedrals(x);
    if (angles.empty()) {
        fail(ErrorKind::HandednessUndecidable, "every Cα quadruple is degenerate");
    }
    // Mirroring negates every non-degenerate dihedral.
    std::vector<double> reflected(angles.size());
    for (std::size_t k = 0; k < angles.size(); ++k) reflected[k] = -angles[k];

    HandednessDecision decision;
    decision.kl_original = kl_divergence(histogram_from_angles(angles, reference.bins()), reference);
    decision.kl_mirrored = kl_divergence(histogram_from_angles(reflected, reference.bins()), reference);
    decision.mirrored = decision.kl_mirrored < decision.kl_original - 1e-12;
    decision.coords = decision.mirrored ? mirror(x) : x;
    return decision;
}

io::Tensor DihedralHistogram::to_tensor() const {
    io::Tensor t = io::Tensor::from_f64({static_cast<std::uint32_t>(frequencies.size())}, frequencies);
    t.set_meta("kind", "dihedral_histogram");
    t.set_meta("bins", std::to_string(bins()));
    t.set_meta("smoothing", "1e-4");
    std::ostringstream counts_text;
    for (std::size_t b = 0; b < counts.size(); ++b) {
        if (b) counts_text << ',';
        counts_text << static_cast<long long>(counts[b]);
    }
    t.set_meta("counts", counts_text.str());
    return t;
}

DihedralHistogram DihedralHistogram::from_tensor(const io::Tensor& t) {
    if (t.meta("kind") != std::optional<std::string>("dihedral_histogram") || t.rank() != 1) {
        fail(ErrorKind::Format, "not a dihedral histogram tensor");
    }
    DihedralHistogram h;
    h.frequencies = t.to_f64();
    h.counts.assign(h.frequencies.size(), 0.0);
    if (const auto counts = t.meta("counts")) {
        std::stringstream in(*counts);
        std::string item;
        std::size_t b = 0;
        while (std::getline(in, item, ',') && b < h.counts.size()) h.counts[b++] = std::stod(item);
    }
    for (double f : h.frequencies) {
        if (!(f > 0.0)) fail(ErrorKind::Format, "histogram frequencies must be positive");
    }
    return h;
}

void DihedralHistogram::save(const std::filesystem::path& path) const { io::write_tensor(to_tensor(), path); }

DihedralHistogram DihedralHistogram::load(const std::filesystem::path& path) {
    return from_tensor(io::read_tensor(path));
}

}  // namespace scorefold
