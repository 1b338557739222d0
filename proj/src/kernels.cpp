#include "scorefold/kernels.hpp"

namespace scorefold::kernels {

namespace {

inline double pair_distance(const Coords& x, Eigen::Index i, Eigen::Index j) {
    const double dx = x(i, 0) - x(j, 0);
    const double dy = x(i, 1) - x(j, 1);
    const double dz = x(i, 2) - x(j, 2);
    return dx * dx + dy * dy + dz * dz;
}

inline void chain_rule_row(const Matrix& h, const Coords& x, Coords& g, Eigen::Index i) {
    double gx = 0.0, gy = 0.0, gz = 0.0;
    const Eigen::Index n = x.rows();
    for (Eigen::Index j = 0; j < n; ++j) {
        const double w = 2.0 * (h(i, j) + h(j, i));
        gx += w * (x(i, 0) - x(j, 0));
        gy += w * (x(i, 1) - x(j, 1));
        gz += w * (x(i, 2) - x(j, 2));
    }
    g(i, 0) = gx;
    g(i, 1) = gy;
    g(i, 2) = gz;
}

}  // namespace

namespace serial {

void squared_distances(const Coords& x, Matrix& out) {
    const Eigen::Index n = x.rows();
    out.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        out(i, i) = 0.0;
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double d = pair_distance(x, i, j);
            out(i, j) = d;
            out(j, i) = d;
        }
    }
}

void chain_rule(const Matrix& h, const Coords& x, Coords& g) {
    g.resize(x.rows(), 3);
    for (Eigen::Index i = 0; i < x.rows(); ++i) chain_rule_row(h, x, g, i);
}

}  // namespace serial

namespace parallel {

void squared_distances(const Coords& x, Matrix& out) {
    const Eigen::Index n = x.rows();
    out.resize(n, n);
    // Rows own the upper-triangle pairs (i, j > i); the mirrored write (j, i) never
    // collides with another row's writes.
#pragma omp parallel for schedule(dynamic, 16)
    for (Eigen::Index i = 0; i < n; ++i) {
        out(i, i) = 0.0;
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double d = pair_distance(x, i, j);
            out(i, j) = d;
            out(j, i) = d;
        }
    }
}

void chain_rule(const Matrix& h, const Coords& x, Coords& g) {
    g.resize(x.rows(), 3);
    const Eigen::Index n = x.rows();
#pragma omp parallel for schedule(static)
    for (Eigen::Index i = 0; i < n; ++i) chain_rule_row(h, x, g, i);
}

}  // namespace parallel

}  // namespace scorefold::kernels
