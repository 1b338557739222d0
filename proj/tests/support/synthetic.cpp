#include "support.hpp"

#include "scorefold/conditioning.hpp"

#include <Eigen/Geometry>

#include <cmath>
#include <numbers>

namespace scorefold::testing {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;
constexpr double kBond = 3.8;

}  // namespace

double uniform(Rng& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

std::size_t uniform_index(Rng& rng, std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

Eigen::Matrix3d random_rotation(Rng& rng) {
    std::normal_distribution<double> n;
    Eigen::Quaterniond q(n(rng), n(rng), n(rng), n(rng));
    q.normalize();
    return q.toRotationMatrix();
}

Vec3 random_translation(Rng& rng, double scale) {
    return Vec3(uniform(rng, -scale, scale), uniform(rng, -scale, scale), uniform(rng, -scale, scale));
}

Coords rigid_move(const Coords& x, const Eigen::Matrix3d& r, const Vec3& t) {
    Coords out(x.rows(), 3);
    for (Eigen::Index i = 0; i < x.rows(); ++i) out.row(i) = (r * x.row(i).transpose() + t).transpose();
    return out;
}

std::string random_sequence(std::size_t length, Rng& rng) {
    std::string s(length, 'A');
    for (auto& c : s) c = kAlphabet[uniform_index(rng, 0, kAlphabet.size() - 1)];
    return s;
}

Coords random_cloud(std::size_t length, Rng& rng, double scale) {
    return scale * standard_normal(length, rng);
}

Vec3 place_next(const Vec3& a, const Vec3& b, const Vec3& c, double bond, double angle, double torsion) {
    const Vec3 bc = (c - b).normalized();
    const Vec3 n = (b - a).cross(bc).normalized();
    const Vec3 m = n.cross(bc);
    const Vec3 local(-bond * std::cos(angle), bond * std::sin(angle) * std::cos(torsion),
                     bond * std::sin(angle) * std::sin(torsion));
    return c + local.x() * bc + local.y() * m + local.z() * n;
}

Coords nerf_chain(const std::vector<double>& angles, const std::vector<double>& torsions) {
    const std::size_t n = angles.size() + 3;
    Coords x(static_cast<Eigen::Index>(n), 3);
    const double first = angles.empty() ? 100.0 * kDeg : angles.front();
    x.row(0) = Vec3(0.0, 0.0, 0.0).transpose();
    x.row(1) = Vec3(kBond, 0.0, 0.0).transpose();
    x.row(2) = Vec3(kBond - kBond * std::cos(first), kBond * std::sin(first), 0.0).transpose();
    for (std::size_t i = 0; i < angles.size(); ++i) {
        const auto k = static_cast<Eigen::Index>(i + 3);
        x.row(k) = place_next(x.row(k - 3).transpose(), x.row(k - 2).transpose(), x.row(k - 1).transpose(),
                              kBond, angles[i], torsions[i])
                       .transpose();
    }
    return x;
}

Structure ideal_helix(std::size_t length) {
    Structure s;
    s.coords.resize(static_cast<Eigen::Index>(length), 3);
    for (std::size_t i = 0; i < length; ++i) {
        const double phase = 100.0 * kDeg * static_cast<double>(i);
        s.coords.row(static_cast<Eigen::Index>(i)) =
            Vec3(2.3 * std::cos(phase), 2.3 * std::sin(phase), 1.5 * static_cast<double>(i)).transpose();
    }
    s.sequence = std::string(length, 'A');
    for (std::size_t i = 0; i < length; i += 4) s.sequence[i] = 'L';
    for (std::size_t i = 2; i < length; i += 7) s.sequence[i] = 'E';
    return s;
}

Structure ideal_hairpin(std::size_t length) {
    const std::size_t strand = (length - 2) / 2;
    Structure s;
    s.coords.resize(static_cast<Eigen::Index>(length), 3);
    Eigen::Index row = 0;
    // Strand 1 runs along +x with a 1 Å pleat, strand 2 returns 4.8 Å away in y.
    for (std::size_t i = 0; i < strand; ++i) {
        s.coords.row(row++) = Vec3(3.3 * static_cast<double>(i), 0.0, (i % 2) ? 1.0 : -1.0).transpose();
    }
    const double end = 3.3 * static_cast<double>(strand - 1);
    s.coords.row(row++) = Vec3(end + 2.6, 1.0, 0.0).transpose();
    s.coords.row(row++) = Vec3(end + 2.6, 3.8, 0.0).transpose();
    for (std::size_t i = 0; row < static_cast<Eigen::Index>(length); ++i) {
        const double x = end - 3.3 * static_cast<double>(i);
        s.coords.row(row++) = Vec3(x, 4.8, ((strand - 1 - i) % 2) ? 1.0 : -1.0).transpose();
    }
    s.sequence = std::string(length, 'V');
    for (std::size_t i = 1; i < length; i += 2) s.sequence[i] = 'T';
    s.sequence[strand] = 'N';
    s.sequence[strand + 1] = 'G';
    return s;
}

Structure protein_like(std::size_t length, Rng& rng) {
    std::vector<double> angles, torsions;
    const std::size_t needed = length - 3;
    while (angles.size() < needed) {
        const double pick = uniform(rng, 0.0, 1.0);
        std::size_t segment;
        if (pick < 0.5) {
            segment = uniform_index(rng, 6, 14);
            for (std::size_t k = 0; k < segment; ++k) {
                angles.push_back((91.0 + uniform(rng, -3.0, 3.0)) * kDeg);
                torsions.push_back((50.0 + uniform(rng, -6.0, 6.0)) * kDeg);
            }
        } else if (pick < 0.8) {
            segment = uniform_index(rng, 4, 8);
            for (std::size_t k = 0; k < segment; ++k) {
                angles.push_back((120.0 + uniform(rng, -6.0, 6.0)) * kDeg);
                torsions.push_back((-170.0 + uniform(rng, -12.0, 12.0)) * kDeg);
            }
        } else {
            segment = uniform_index(rng, 2, 5);
            for (std::size_t k = 0; k < segment; ++k) {
                angles.push_back(uniform(rng, 85.0, 125.0) * kDeg);
                torsions.push_back(uniform(rng, -180.0, 180.0) * kDeg);
            }
        }
    }
    angles.resize(needed);
    torsions.resize(needed);
    Structure s;
    s.coords = center(nerf_chain(angles, torsions));
    s.sequence = random_sequence(length, rng);
    return s;
}

std::vector<Structure> toy_structures() {
    return {ideal_helix(20), ideal_hairpin(22), ideal_helix(24), ideal_hairpin(26), ideal_helix(28)};
}

Predictions toy_predictions(const Structure& native) {
    const std::size_t n = native.length();
    PairMap map(n, kPredictionChannels);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const double d = (native.coords.row(static_cast<Eigen::Index>(i)) -
                              native.coords.row(static_cast<Eigen::Index>(j)))
                                 .norm();
            std::vector<double> w(37, 0.0);
            if (d > 20.0) {
                w[0] = 1.0;
            } else {
                double total = 0.0;
                for (std::size_t b = 1; b < 37; ++b) {
                    const double centre = 2.0 + 0.5 * (static_cast<double>(b) - 0.5);
                    w[b] = std::exp(-0.5 * std::pow((d - centre) / 0.5, 2));
                    total += w[b];
                }
                if (total < 1e-12) {
                    w.assign(37, 0.0);
                    w[1] = 1.0;
                    total = 1.0;
                }
                for (auto& v : w) v /= total;
            }
            for (std::size_t b = 0; b < 37; ++b) map.at(i, j, b) = static_cast<float>(w[b]);
            for (const auto& group : kPredictionGroups) {
                if (group.offset == 0) continue;
                for (std::size_t b = 0; b < group.width; ++b) {
                    map.at(i, j, group.offset + b) = 1.0f / static_cast<float>(group.width);
                }
            }
        }
    }
    return validate_predictions(std::move(map));
}

std::vector<TrainingExample> toy_examples() {
    std::vector<TrainingExample> out;
    for (auto& s : toy_structures()) {
        auto preds = toy_predictions(s);
        TrainingExample ex;
        ex.bundle = assemble(s.sequence, preds);
        ex.structure = std::move(s);
        out.push_back(std::move(ex));
    }
    return out;
}

}  // namespace scorefold::testing
