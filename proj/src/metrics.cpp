#include "scorefold/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace scorefold {

namespace {

void check_increasing(const std::vector<double>& values, const char* what) {
    if (values.empty()) fail(ErrorKind::InvalidConfig, std::string(what) + " list is empty");
    for (std::size_t k = 0; k < values.size(); ++k) {
        if (!(values[k] > 0.0) || (k > 0 && !(values[k] > values[k - 1]))) {
            fail(ErrorKind::InvalidConfig, std::string(what) + " must be positive and strictly increasing");
        }
    }
}

void check_pair(const Coords& pred, const Coords& native, Eigen::Index min_length) {
    if (pred.rows() != native.rows()) {
        fail(ErrorKind::InvalidInput, "length mismatch: " + std::to_string(pred.rows()) + " vs " +
                                          std::to_string(native.rows()));
    }
    if (pred.rows() < min_length) {
        fail(ErrorKind::InvalidInput, "need at least " + std::to_string(min_length) + " residues");
    }
    require_finite(pred, "predicted coordinates");
    require_finite(native, "native coordinates");
}

}  // namespace

void MetricParams::validate() const {
    check_increasing(lddt_thresholds, "lDDT thresholds");
    check_increasing(gdt_thresholds, "GDT thresholds");
    if (!(lddt_radius > lddt_thresholds.back())) {
        fail(ErrorKind::InvalidConfig, "lDDT radius must exceed the largest threshold");
    }
}

double lddt_ca(const Coords& pred, const Coords& native, const MetricParams& params) {
    params.validate();
    check_pair(pred, native, 1);
    const Eigen::Index n = native.rows();
    const auto sep = static_cast<Eigen::Index>(std::max<std::size_t>(params.min_separation, 1));
    std::vector<std::size_t> preserved(params.lddt_thresholds.size(), 0);
    std::size_t pairs = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + sep; j < n; ++j) {
            const double d_native = (native.row(i) - native.row(j)).norm();
            if (!(d_native < params.lddt_radius)) continue;
            const double diff = std::abs((pred.row(i) - pred.row(j)).norm() - d_native);
            ++pairs;
            for (std::size_t k = 0; k < preserved.size(); ++k) {
                if (diff < params.lddt_thresholds[k]) ++preserved[k];
            }
        }
    }
    if (pairs == 0) return 0.0;
    double total = 0.0;
    for (std::size_t count : preserved) total += static_cast<double>(count) / static_cast<double>(pairs);
    return total / static_cast<double>(preserved.size());
}

namespace {

constexpr int kMaxRefinements = 20;

/// Best count of residues within `cutoff` reachable from one seed subset.
std::size_t refine_from(const Coords& pred, const Coords& native, std::vector<Eigen::Index> subset,
                        double cutoff) {
    const Eigen::Index n = pred.rows();
    std::size_t best = 0;
    for (int round = 0; round < kMaxRefinements && subset.size() >= 3; ++round) {
        const Superposition sup = kabsch_superpose(pred, native, subset);
        const Coords moved = sup.apply(pred);
        std::vector<Eigen::Index> within;
        for (Eigen::Index i = 0; i < n; ++i) {
            if ((moved.row(i) - native.row(i)).norm() <= cutoff) within.push_back(i);
        }
        best = std::max(best, within.size());
        if (within == subset) break;
        subset = std::move(within);
    }
    return best;
}

}  // namespace

double gdt_ts(const Coords& pred, const Coords& native, const MetricParams& params) {
    params.validate();
    check_pair(pred, native, 3);
    const Eigen::Index n = pred.rows();

    std::vector<Eigen::Index> windows{n, n / 2, n / 4};
    windows.erase(std::remove_if(windows.begin(), windows.end(), [](Eigen::Index w) { return w < 3; }),
                  windows.end());
    std::sort(windows.begin(), windows.end());
    windows.erase(std::unique(windows.begin(), windows.end()), windows.end());

    double total = 0.0;
    for (double cutoff : params.gdt_thresholds) {
        std::size_t best = 0;
        for (Eigen::Index w : windows) {
            for (Eigen::Index start = 0; start + w <= n; ++start) {
                std::vector<Eigen::Index> seed(static_cast<std::size_t>(w));
                for (Eigen::Index k = 0; k < w; ++k) seed[static_cast<std::size_t>(k)] = start + k;
                best = std::max(best, refine_from(pred, native, std::move(seed), cutoff));
                if (best == static_cast<std::size_t>(n)) break;
            }
            if (best == static_cast<std::size_t>(n)) break;
        }
        total += static_cast<double>(best) / static_cast<double>(n);
    }
    return total / static_cast<double>(params.gdt_thresholds.size());
}

double rmsd(const Coords& pred, const Coords& native) {
    check_pair(pred, native, 2);
    return kabsch_superpose(pred, native).rmsd;
}

}  // namespace scorefold
