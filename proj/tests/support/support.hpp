#pragma once

// Test-only generators and independent reference implementations.

#include "scorefold/common.hpp"
#include "scorefold/conditioning.hpp"
#include "scorefold/geometry.hpp"
#include "scorefold/training.hpp"

#include <Eigen/Core>

#include <filesystem>
#include <string>
#include <vector>

namespace scorefold::testing {

inline const std::filesystem::path kDataDir = SCOREFOLD_TEST_DATA;
inline const std::filesystem::path kCliPath = SCOREFOLD_CLI_PATH;

// --- random primitives ------------------------------------------------------

double uniform(Rng& rng, double lo, double hi);
std::size_t uniform_index(Rng& rng, std::size_t lo, std::size_t hi);  // inclusive
Eigen::Matrix3d random_rotation(Rng& rng);
Vec3 random_translation(Rng& rng, double scale = 20.0);
Coords rigid_move(const Coords& x, const Eigen::Matrix3d& r, const Vec3& t);
std::string random_sequence(std::size_t length, Rng& rng);
Coords random_cloud(std::size_t length, Rng& rng, double scale = 5.0);

// --- synthetic Cα traces ----------------------------------------------------

/// Places atom 4 from atoms 1–3 given |34|, angle(2,3,4) and dihedral(1,2,3,4).
Vec3 place_next(const Vec3& a, const Vec3& b, const Vec3& c, double bond, double angle, double torsion);

/// Cα chain with 3.8 Å virtual bonds from per-residue angles/torsions (radians).
/// angles[i] / torsions[i] define residue i + 3 (the first three residues are fixed).
Coords nerf_chain(const std::vector<double>& angles, const std::vector<double>& torsions);

/// Right-handed ideal α-helix: radius 2.3 Å, 100° per residue, rise 1.5 Å.
Structure ideal_helix(std::size_t length);

/// Two antiparallel strands joined by a two-residue turn.
Structure ideal_hairpin(std::size_t length);

/// Mix of helix / strand / loop segments; protein-like local geometry.
Structure protein_like(std::size_t length, Rng& rng);

/// Five idealized helices and hairpins, L between 20 and 28.
std::vector<Structure> toy_structures();

/// Soft one-hot distance predictions from a native (37 distance bins: bin 0 is
/// > 20 Å, bins 1–36 cover 2–20 Å in 0.5 Å steps); orientation groups uniform.
Predictions toy_predictions(const Structure& native);

std::vector<TrainingExample> toy_examples();

// --- independent reference implementations ------------------------------------

/// Σ_ij h_ij ‖x_i − x_j‖², evaluated directly.
double pair_energy(const Matrix& h, const Coords& x);

/// Central finite differences of pair_energy with respect to every coordinate.
Coords finite_difference_gradient(const Matrix& h, const Coords& x, double step);

/// lDDT by enumerating every ordered pair (i ≠ j) and every threshold separately.
double brute_force_lddt(const Coords& pred, const Coords& native);

/// Unsuperposed RMSD.
double raw_rmsd(const Coords& a, const Coords& b);

double median(std::vector<double> values);

/// Runs the CLI binary; returns its exit code. Output goes to the given files.
int run_cli(const std::string& args, const std::filesystem::path& stdout_file = {},
            const std::filesystem::path& stderr_file = {});

std::string read_text(const std::filesystem::path& path);

/// Fresh empty directory under the system temp dir.
std::filesystem::path scratch_dir(const std::string& name);

}  // namespace scorefold::testing
