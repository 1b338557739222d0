#include "scorefold/common.hpp"

namespace scorefold {

const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidInput: return "invalid input";
        case ErrorKind::InvalidConfig: return "invalid config";
        case ErrorKind::DegenerateGeometry: return "degenerate geometry";
        case ErrorKind::InvalidDistanceMatrix: return "invalid distance matrix";
        case ErrorKind::Format: return "format error";
        case ErrorKind::Data: return "data error";
        case ErrorKind::Parse: return "parse error";
        case ErrorKind::EmptyStructure: return "empty structure";
        case ErrorKind::Range: return "range error";
        case ErrorKind::Io: return "i/o error";
        case ErrorKind::SamplingFailure: return "sampling failure";
        case ErrorKind::TrainingFailure: return "training failure";
        case ErrorKind::HandednessUndecidable: return "handedness undecidable";
    }
    return "error";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind), message_(message) {}

void fail(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

Coords standard_normal(std::size_t rows, Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Coords out(static_cast<Eigen::Index>(rows), 3);
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
        for (Eigen::Index a = 0; a < 3; ++a) out(i, a) = normal(rng);
    }
    return out;
}

}  // namespace scorefold
