#pragma once

#include "scorefold/geometry.hpp"

#include <vector>

namespace scorefold {

struct MetricParams {
    double lddt_radius = 15.0;
    std::vector<double> lddt_thresholds{0.5, 1.0, 2.0, 4.0};
    /// Pairs with |i − j| below this are ignored by lDDT.
    std::size_t min_separation = 1;
    std::vector<double> gdt_thresholds{1.0, 2.0, 4.0, 8.0};

    void validate() const;
};

/// Superposition-free. Over native pairs (i < j, j − i ≥ min_separation) with native
/// distance < R₀, the fraction with |d_pred − d_native| < threshold, averaged over
/// thresholds. Returns 0 when no pair qualifies.
double lddt_ca(const Coords& pred, const Coords& native, const MetricParams& params = {});

/// Mean over thresholds of the best fraction of residues within the threshold after
/// a proper superposition. The search runs iterative Kabsch refinement seeded from
/// every contiguous window of length L, L/2 and L/4 (a lower bound on the optimum).
double gdt_ts(const Coords& pred, const Coords& native, const MetricParams& params = {});

/// Minimal RMSD over proper rigid motions.
double rmsd(const Coords& pred, const Coords& native);

inline double lddt_ca(const Structure& pred, const Structure& native, const MetricParams& params = {}) {
    return lddt_ca(pred.coords, native.coords, params);
}
inline double gdt_ts(const Structure& pred, const Structure& native, const MetricParams& params = {}) {
    return gdt_ts(pred.coords, native.coords, params);
}
inline double rmsd(const Structure& pred, const Structure& native) {
    return rmsd(pred.coords, native.coords);
}

}  // namespace scorefold
