#include "scorefold/score.hpp"

#include "scorefold/kernels.hpp"
#include "scorefold/pairwise_net.hpp"

#include <cmath>
#include <deque>
#include <mutex>

namespace scorefold {

Coords chain_rule_gradients(const ScoreField& h, const Coords& x) {
    if (h.rows() != x.rows() || h.cols() != x.rows()) {
        fail(ErrorKind::InvalidInput, "score field is " + std::to_string(h.rows()) + "x" +
                                          std::to_string(h.cols()) + " but coordinates have " +
                                          std::to_string(x.rows()) + " rows");
    }
    Coords g;
    kernels::chain_rule(h, x, g);
    return g;
}

namespace {

class OracleScore final : public CoordinateScore {
public:
    OracleScore(Structure native, NoiseSchedule schedule)
        : native_(std::move(native)), schedule_(std::move(schedule)) {}

    const NoiseSchedule& schedule() const override { return schedule_; }
    std::size_t length() const override { return native_.length(); }

    Coords evaluate(const Coords& x, const DistanceMatrix&, const ConditioningBundle&,
                    std::size_t level) const override {
        if (x.rows() != native_.coords.rows()) {
            fail(ErrorKind::InvalidInput, "oracle built for " + std::to_string(native_.length()) +
                                              " residues, got " + std::to_string(x.rows()));
        }
        const double sigma = schedule_.sigma(level);
        return (native_.coords - x) / (sigma * sigma);
    }

private:
    Structure native_;
    NoiseSchedule schedule_;
};

class NetScore final : public CoordinateScore {
public:
    explicit NetScore(std::shared_ptr<const PairwiseScoreNet> net) : net_(std::move(net)) {}

    const NoiseSchedule& schedule() const override { return net_->schedule(); }

    Coords evaluate(const Coords& x, const DistanceMatrix& distances, const ConditioningBundle& bundle,
                    std::size_t level) const override {
        if (bundle.length() != static_cast<std::size_t>(x.rows()) ||
            distances.size() != static_cast<std::size_t>(x.rows())) {
            fail(ErrorKind::InvalidInput, "bundle length " + std::to_string(bundle.length()) +
                                              " does not match " + std::to_string(x.rows()) +
                                              " residues");
        }
        const auto projection = projection_for(bundle);
        return chain_rule_gradients(net_->forward(distances, *projection, level), x);
    }

private:
    // Memoizes the bundle-only part of the input layer; a sampler evaluates
    // the same bundle thousands of times.
    std::shared_ptr<const PairwiseScoreNet::StaticInputs> projection_for(const ConditioningBundle& bundle) const {
        {
            std::lock_guard lock(mutex_);
            for (const auto& [id, projection] : cache_) {
                if (id == bundle.id()) return projection;
            }
        }
        auto projection = std::make_shared<const PairwiseScoreNet::StaticInputs>(net_->prepare(bundle));
        std::lock_guard lock(mutex_);
        cache_.emplace_back(bundle.id(), projection);
        if (cache_.size() > kCacheEntries) cache_.pop_front();
        return projection;
    }

    static constexpr std::size_t kCacheEntries = 8;

    std::shared_ptr<const PairwiseScoreNet> net_;
    mutable std::mutex mutex_;
    mutable std::deque<std::pair<std::uint64_t, std::shared_ptr<const PairwiseScoreNet::StaticInputs>>> cache_;
};

}  // namespace

std::shared_ptr<const CoordinateScore> oracle_score(Structure native, NoiseSchedule schedule) {
    native.validate(1);
    return std::make_shared<OracleScore>(std::move(native), std::move(schedule));
}

std::shared_ptr<const CoordinateScore> net_score(std::shared_ptr<const PairwiseScoreNet> net) {
    if (!net) fail(ErrorKind::InvalidInput, "null network");
    for (double p : net->parameters()) {
        if (!std::isfinite(p)) fail(ErrorKind::InvalidInput, "network has non-finite parameters");
    }
    return std::make_shared<NetScore>(std::move(net));
}

}  // namespace scorefold
