#pragma once

// Data-parallel inner loops. Each kernel has a serial reference and an OpenMP
// version; both produce bit-identical results (same per-element operation order),
// which the kernel tests check directly.

#include "scorefold/common.hpp"

namespace scorefold::kernels {

namespace serial {

/// out(i, j) = Σ_axis (x_i − x_j)², computed once per unordered pair.
void squared_distances(const Coords& x, Matrix& out);

/// g_i = Σ_j 2 (h_ij + h_ji)(x_i − x_j).
void chain_rule(const Matrix& h, const Coords& x, Coords& g);

}  // namespace serial

namespace parallel {

void squared_distances(const Coords& x, Matrix& out);
void chain_rule(const Matrix& h, const Coords& x, Coords& g);

}  // namespace parallel

/// Below this length the OpenMP fork/join costs more than the O(L²) loop.
inline constexpr std::size_t kParallelThreshold = 384;

inline void squared_distances(const Coords& x, Matrix& out) {
    if (static_cast<std::size_t>(x.rows()) >= kParallelThreshold) {
        parallel::squared_distances(x, out);
    } else {
        serial::squared_distances(x, out);
    }
}

inline void chain_rule(const Matrix& h, const Coords& x, Coords& g) {
    if (static_cast<std::size_t>(x.rows()) >= kParallelThreshold) {
        parallel::chain_rule(h, x, g);
    } else {
        serial::chain_rule(h, x, g);
    }
}

}  // namespace scorefold::kernels
