#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace scorefold {

/// L×3 Cα coordinates in Ångström, one residue per row.
using Coords = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;
using Matrix = Eigen::MatrixXd;
using Vec3 = Eigen::Vector3d;

/// Every random draw in the library goes through this engine so a seed fully
/// determines a run.
using Rng = std::mt19937_64;

enum class ErrorKind {
    InvalidInput,
    InvalidConfig,
    DegenerateGeometry,
    InvalidDistanceMatrix,
    Format,
    Data,
    Parse,
    EmptyStructure,
    Range,
    Io,
    SamplingFailure,
    TrainingFailure,
    HandednessUndecidable,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message);

    ErrorKind kind() const noexcept { return kind_; }

    /// The message without the kind prefix that what() carries.
    const std::string& message() const noexcept { return message_; }

    /// Sampling and training failures are numerical; everything else is an
    /// input or usage problem.
    bool numerical() const noexcept {
        return kind_ == ErrorKind::SamplingFailure || kind_ == ErrorKind::TrainingFailure;
    }

private:
    ErrorKind kind_;
    std::string message_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& message);

/// splitmix64 mix of (seed, stream); used to give every decoy / worker its own stream.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
    return Rng(derive_seed(seed, stream));
}

/// Fills an L×3 matrix with i.i.d. standard normal entries, row by row.
Coords standard_normal(std::size_t rows, Rng& rng);

}  // namespace scorefold
