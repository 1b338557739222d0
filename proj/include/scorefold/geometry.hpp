#pragma once

#include "scorefold/common.hpp"

#include <Eigen/Core>

#include <string>

namespace scorefold {

/// Amino-acid sequence plus one Cα per residue.
struct Structure {
    std::string sequence;
    Coords coords;

    std::size_t length() const noexcept { return static_cast<std::size_t>(coords.rows()); }

    /// Throws InvalidInput if the sequence and coordinate counts disagree, any
    /// coordinate is non-finite, or the chain is shorter than `min_length`.
    void validate(std::size_t min_length = 4) const;
};

/// Throws InvalidInput naming the first row holding a non-finite coordinate.
void require_finite(const Coords& x, const char* what = "coordinates");

/// L×L squared Euclidean distances (Å²). Symmetric with an exact zero diagonal.
class DistanceMatrix {
public:
    DistanceMatrix() = default;

    /// Validating constructor for externally supplied matrices: square, finite,
    /// symmetric, zero diagonal, non-negative.
    static DistanceMatrix from_values(Matrix values);

    const Matrix& values() const noexcept { return values_; }
    std::size_t size() const noexcept { return static_cast<std::size_t>(values_.rows()); }
    double operator()(Eigen::Index i, Eigen::Index j) const { return values_(i, j); }

private:
    friend DistanceMatrix distance_matrix(const Coords& x);
    explicit DistanceMatrix(Matrix values) : values_(std::move(values)) {}

    Matrix values_;
};

DistanceMatrix distance_matrix(const Coords& x);

/// Subtracts the column means.
Coords center(const Coords& x);

/// Negates the z column. Any other reflection differs from this one by a proper rotation.
Coords mirror(const Coords& x);

/// Signed torsion of four points in (−π, π]. Throws DegenerateGeometry when either
/// plane normal has norm below 1e-9 Å².
double dihedral(const Vec3& p1, const Vec3& p2, const Vec3& p3, const Vec3& p4);

inline constexpr double kDegenerateCrossNorm = 1e-9;

/// Proper rigid motion mapping a mobile structure onto a reference.
struct Superposition {
    Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
    Vec3 translation = Vec3::Zero();
    double rmsd = 0.0;

    /// rotation · x_i + translation for every row.
    Coords apply(const Coords& x) const;
};

/// Kabsch with determinant correction (reflections are never returned).
Superposition kabsch_superpose(const Coords& mobile, const Coords& reference);

/// Same, restricted to the residues listed in `subset`. The returned rmsd is over the subset.
Superposition kabsch_superpose(const Coords& mobile, const Coords& reference,
                               const std::vector<Eigen::Index>& subset);

/// Classical MDS: double-center, take the top three eigenpairs of the Gram matrix.
/// Throws InvalidDistanceMatrix when the Gram matrix has an eigenvalue below
/// −1e-6 · (largest eigenvalue).
Coords reconstruct_from_distances(const DistanceMatrix& d);

double radius_of_gyration(const Coords& x);

}  // namespace scorefold
