#pragma once

#include "scorefold/geometry.hpp"
#include "scorefold/io.hpp"

#include <filesystem>
#include <span>
#include <vector>

namespace scorefold {

inline constexpr std::size_t kDefaultDihedralBins = 36;
inline constexpr double kHistogramSmoothing = 1e-4;

/// Histogram of Cα virtual dihedrals over (−π, π]. Bin b covers
/// (−π + b·w, −π + (b+1)·w] with w = 2π/B.
struct DihedralHistogram {
    std::vector<double> counts;
    /// Normalized frequencies after add-ε smoothing: (f_b + ε) / (1 + B·ε).
    std::vector<double> frequencies;

    std::size_t bins() const noexcept { return counts.size(); }

    io::Tensor to_tensor() const;
    static DihedralHistogram from_tensor(const io::Tensor& tensor);
    void save(const std::filesystem::path& path) const;
    static DihedralHistogram load(const std::filesystem::path& path);
};

std::size_t dihedral_bin(double angle, std::size_t bins);

/// Dihedrals of every consecutive Cα quadruple; degenerate quadruples are skipped.
std::vector<double> chain_dihedrals(const Coords& x);

/// Bins a pool of angles. Throws InvalidInput for an empty pool.
DihedralHistogram histogram_from_angles(std::span<const double> angles,
                                        std::size_t bins = kDefaultDihedralBins,
                                        double smoothing = kHistogramSmoothing);

/// Pools the chain dihedrals of every structure into one histogram.
DihedralHistogram build_reference_histogram(std::span<const Structure> structures,
                                            std::size_t bins = kDefaultDihedralBins);

/// Σ_b P_b ln(P_b / Q_b) with 0·ln 0 = 0. Throws on a bin-count mismatch or a
/// non-positive Q_b.
double kl_divergence(const DihedralHistogram& p, const DihedralHistogram& q);

struct HandednessDecision {
    Coords coords;
    bool mirrored = false;
    double kl_original = 0.0;
    double kl_mirrored = 0.0;
};

/// Picks whichever of X and mirror(X) has the lower dihedral KL against the
/// reference; ties (|ΔKL| < 1e-12) keep X. Throws HandednessUndecidable when every
/// quadruple is degenerate.
HandednessDecision resolve_handedness(const Coords& x, const DihedralHistogram& reference);

}  // namespace scorefold
