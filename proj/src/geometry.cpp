#include "scorefold/geometry.hpp"

#include "scorefold/kernels.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <cmath>
#include <numbers>

namespace scorefold {

void require_finite(const Coords& x, const char* what) {
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        if (!x.row(i).allFinite()) {
            fail(ErrorKind::InvalidInput,
                 std::string("non-finite ") + what + " at row " + std::to_string(i));
        }
    }
}

void Structure::validate(std::size_t min_length) const {
    if (sequence.size() != length()) {
        fail(ErrorKind::InvalidInput, "sequence length " + std::to_string(sequence.size()) +
                                          " does not match " + std::to_string(length()) +
                                          " coordinate rows");
    }
    if (length() < min_length) {
        fail(ErrorKind::InvalidInput, "structure has " + std::to_string(length()) +
                                          " residues, need at least " + std::to_string(min_length));
    }
    require_finite(coords);
}

DistanceMatrix DistanceMatrix::from_values(Matrix values) {
    if (values.rows() != values.cols()) {
        fail(ErrorKind::InvalidDistanceMatrix, "matrix is not square");
    }
    const Eigen::Index n = values.rows();
    for (Eigen::Index i = 0; i < n; ++i) {
        if (values(i, i) != 0.0) {
            fail(ErrorKind::InvalidDistanceMatrix, "non-zero diagonal at " + std::to_string(i));
        }
        for (Eigen::Index j = 0; j < n; ++j) {
            const double v = values(i, j);
            if (!std::isfinite(v) || v < 0.0) {
                fail(ErrorKind::InvalidDistanceMatrix, "entry (" + std::to_string(i) + ", " +
                                                           std::to_string(j) +
                                                           ") is negative or non-finite");
            }
            if (v != values(j, i)) {
                fail(ErrorKind::InvalidDistanceMatrix, "matrix is not symmetric at (" +
                                                           std::to_string(i) + ", " +
                                                           std::to_string(j) + ")");
            }
        }
    }
    return DistanceMatrix(std::move(values));
}

DistanceMatrix distance_matrix(const Coords& x) {
    require_finite(x);
    Matrix out;
    kernels::squared_distances(x, out);
    return DistanceMatrix(std::move(out));
}

Coords center(const Coords& x) {
    if (x.rows() == 0) return x;
    const Eigen::RowVector3d mean = x.colwise().mean();
    return x.rowwise() - mean;
}

Coords mirror(const Coords& x) {
    Coords out = x;
    out.col(2) = -out.col(2);
    return out;
}

double dihedral(const Vec3& p1, const Vec3& p2, const Vec3& p3, const Vec3& p4) {
    const Vec3 b1 = p2 - p1;
    const Vec3 b2 = p3 - p2;
    const Vec3 b3 = p4 - p3;
    const Vec3 n1 = b1.cross(b2);
    const Vec3 n2 = b2.cross(b3);
    if (n1.norm() < kDegenerateCrossNorm || n2.norm() < kDegenerateCrossNorm) {
        fail(ErrorKind::DegenerateGeometry, "collinear points in dihedral");
    }
    const double angle = std::atan2(n1.cross(n2).dot(b2.normalized()), n1.dot(n2));
    // atan2 can return exactly −π; the convention here is (−π, π].
    return angle <= -std::numbers::pi ? std::numbers::pi : angle;
}

Coords Superposition::apply(const Coords& x) const {
    Coords out = x * rotation.transpose();
    out.rowwise() += translation.transpose();
    return out;
}

namespace {

Superposition superpose_weighted(const Coords& mobile, const Coords& reference,
                                 const std::vector<Eigen::Index>* subset) {
    if (mobile.rows() != reference.rows()) {
        fail(ErrorKind::InvalidInput, "superposition length mismatch: " +
                                          std::to_string(mobile.rows()) + " vs " +
                                          std::to_string(reference.rows()));
    }
    const std::size_t count =
        subset ? subset->size() : static_cast<std::size_t>(mobile.rows());
    if (count < 2) fail(ErrorKind::InvalidInput, "superposition needs at least 2 points");

    auto index = [&](std::size_t k) {
        return subset ? (*subset)[k] : static_cast<Eigen::Index>(k);
    };

    Vec3 mobile_mean = Vec3::Zero();
    Vec3 ref_mean = Vec3::Zero();
    for (std::size_t k = 0; k < count; ++k) {
        mobile_mean += mobile.row(index(k)).transpose();
        ref_mean += reference.row(index(k)).transpose();
    }
    mobile_mean /= static_cast<double>(count);
    ref_mean /= static_cast<double>(count);

    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (std::size_t k = 0; k < count; ++k) {
        const Vec3 p = mobile.row(index(k)).transpose() - mobile_mean;
        const Vec3 q = reference.row(index(k)).transpose() - ref_mean;
        cov += p * q.transpose();
    }

    Eigen::JacobiSVD<Eigen::Matrix3d> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Eigen::Matrix3d& u = svd.matrixU();
    const Eigen::Matrix3d& v = svd.matrixV();
    Eigen::Matrix3d correction = Eigen::Matrix3d::Identity();
    if ((v * u.transpose()).determinant() < 0.0) correction(2, 2) = -1.0;

    Superposition sup;
    sup.rotation = v * correction * u.transpose();
    sup.translation = ref_mean - sup.rotation * mobile_mean;

    double sum = 0.0;
    for (std::size_t k = 0; k < count; ++k) {
        const Vec3 moved = sup.rotation * mobile.row(index(k)).transpose() + sup.translation;
        sum += (moved - reference.row(index(k)).transpose()).squaredNorm();
    }
    sup.rmsd = std::sqrt(sum / static_cast<double>(count));
    return sup;
}

}  // namespace

Superposition kabsch_superpose(const Coords& mobile, const Coords& reference) {
    return superpose_weighted(mobile, reference, nullptr);
}

Superposition kabsch_superpose(const Coords& mobile, const Coords& reference,
                               const std::vector<Eigen::Index>& subset) {
    return superpose_weighted(mobile, reference, &subset);
}

Coords reconstruct_from_distances(const DistanceMatrix& d) {
    const Eigen::Index n = static_cast<Eigen::Index>(d.size());
    if (n == 0) fail(ErrorKind::InvalidDistanceMatrix, "empty matrix");

    // B = −½ J D J with J = I − 11ᵀ/n, done with row/column means.
    const Matrix& values = d.values();
    const Eigen::VectorXd row_mean = values.rowwise().mean();
    const double grand_mean = row_mean.mean();
    Matrix gram(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            gram(i, j) = -0.5 * (values(i, j) - row_mean(i) - row_mean(j) + grand_mean);
        }
    }

    Eigen::SelfAdjointEigenSolver<Matrix> solver(gram);
    if (solver.info() != Eigen::Success) {
        fail(ErrorKind::InvalidDistanceMatrix, "Gram eigendecomposition failed");
    }
    const Eigen::VectorXd& eigenvalues = solver.eigenvalues();  // ascending
    const double largest = eigenvalues(n - 1);
    const double floor = -1e-6 * std::max(largest, 0.0);
    if (eigenvalues(0) < floor || (largest <= 0.0 && eigenvalues(0) < 0.0)) {
        fail(ErrorKind::InvalidDistanceMatrix,
             "Gram matrix has negative eigenvalue " + std::to_string(eigenvalues(0)));
    }

    Coords out = Coords::Zero(n, 3);
    for (Eigen::Index a = 0; a < 3 && a < n; ++a) {
        const Eigen::Index col = n - 1 - a;
        const double lambda = std::max(eigenvalues(col), 0.0);
        out.col(a) = solver.eigenvectors().col(col) * std::sqrt(lambda);
    }
    return out;
}

double radius_of_gyration(const Coords& x) {
    if (x.rows() == 0) return 0.0;
    const Coords c = center(x);
    return std::sqrt(c.squaredNorm() / static_cast<double>(x.rows()));
}

}  // namespace scorefold
