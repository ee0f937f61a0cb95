#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "exitsim/error.hpp"
#include "exitsim/killed_walk.hpp"
#include "exitsim/model.hpp"
#include "exitsim/numeric.hpp"
#include "exitsim/paths.hpp"

namespace exitsim {

/// How the walls of the moving domain are placed.
enum class FrontierWalls {
    moving,    ///< D_s = (-sigma b_s, 1 - sigma b_s)
    envelope,  ///< (min_s -sigma b_s, max_s 1 - sigma b_s) over [0, t]: a larger fixed domain
};

/// Heat flow of sigma1 in the domain D_s = (-sigma b_s, 1 - sigma b_s),
/// evaluated through its backward representation: u_t(x) is the mean of
/// pi0(x + sigma1 w_t) over walks that stay in the time-reversed domain
/// D_{t-s}, s in [0, t].
class FrontierProblem {
public:
    FrontierProblem(const ModelParams& params, const InitialDensity& pi0,
                    std::shared_ptr<const BrownianPath> b,
                    CrossingCorrection correction = CrossingCorrection::nearer)
        : params_(params), pi0_(pi0), b_(std::move(b)), correction_(correction) {
        if (!b_) throw ParameterError("frontier needs a path");
    }

    const ModelParams& params() const { return params_; }
    const InitialDensity& pi0() const { return pi0_; }
    const BrownianPath& path() const { return *b_; }
    CrossingCorrection correction() const { return correction_; }

    /// Left wall -sigma b_t of D_t.
    double left_wall(double t) const { return -params_.sigma() * b_->at(t); }

    /// Walls of the reversed domain for target time t.
    KilledWalk reversed_walls(double t, FrontierWalls kind = FrontierWalls::moving) const {
        const std::size_t n = b_->index_of(t);
        std::vector<double> lower(n + 1);
        for (std::size_t k = 0; k <= n; ++k) lower[k] = -params_.sigma() * (*b_)[n - k];
        std::vector<double> upper(n + 1);
        for (std::size_t k = 0; k <= n; ++k) upper[k] = lower[k] + 1.0;
        if (kind == FrontierWalls::envelope) {
            const double lo = *std::min_element(lower.begin(), lower.end());
            const double hi = *std::max_element(upper.begin(), upper.end());
            std::fill(lower.begin(), lower.end(), lo);
            std::fill(upper.begin(), upper.end(), hi);
        }
        return KilledWalk(std::move(lower), std::move(upper), b_->dt(), params_.sigma1(), correction_);
    }

    /// Stream for target time t: estimates at different x share w paths.
    RandomStream stream(std::uint64_t seed, double t) const {
        return RandomStream(seed, 0x46524F4E00000000ull + b_->index_of(t));
    }

private:
    ModelParams params_;
    InitialDensity pi0_;
    std::shared_ptr<const BrownianPath> b_;
    CrossingCorrection correction_;
};

/// First grid time at which x + sigma1 w_s leaves the reversed domain, or
/// nullopt when the walk survives to s = t. `w_path` must share the grid of b.
inline std::optional<double> exit_time_reversed(const FrontierProblem& fp, double x,
                                                const BrownianPath& w_path, double t,
                                                const RandomStream& kill_rng,
                                                std::uint64_t replica = 0) {
    const KilledWalk walls = fp.reversed_walls(t);
    if (w_path.horizon() + 1e-12 < t) throw ParameterError("w path is shorter than t");
    const WalkOutcome o =
        run_explicit_walk(walls, w_path, x, kill_rng, replica, fp.params().sigma1());
    if (o.survived) return std::nullopt;
    return fp.path().time(o.exit_index);
}

namespace detail {

inline Estimate frontier_mean(const FrontierProblem& fp, const KilledWalk& walls, double x,
                              long long M, const RandomStream& rng) {
    MeanAccumulator acc;
    for (long long r = 0; r < M; ++r) {
        const WalkOutcome o = walls.run(rng, static_cast<std::uint64_t>(r), x);
        acc.add(o.survived ? fp.pi0()(o.final_position) : 0.0);
    }
    return acc.estimate();
}

}  // namespace detail

/// Monte Carlo value of u_t(x) with its standard error.
inline Estimate u_estimate(const FrontierProblem& fp, double t, double x, long long M,
                           std::uint64_t seed, FrontierWalls kind = FrontierWalls::moving) {
    if (M < 100) throw ParameterError("u_estimate needs at least 100 replicas");
    const std::size_t n = fp.path().index_of(t);
    const double lo = fp.left_wall(t);
    if (x < lo - 1e-12 || x > lo + 1.0 + 1e-12) throw DomainError("x lies outside the closed domain at time t");
    if (n == 0) return {fp.pi0()(x), 0.0};
    const KilledWalk walls = fp.reversed_walls(t, kind);
    return detail::frontier_mean(fp, walls, x, M, fp.stream(seed, t));
}

struct BoundaryRatio {
    double offset = 0.0;
    double ratio = 0.0;
    double se = 0.0;
};

/// u_t(left wall + offset) / offset for each offset, all on common random numbers.
inline std::vector<BoundaryRatio> boundary_ratio(const FrontierProblem& fp, double t,
                                                 const std::vector<double>& offsets, long long M,
                                                 std::uint64_t seed) {
    if (offsets.empty()) throw ParameterError("no offsets given");
    for (std::size_t i = 0; i < offsets.size(); ++i) {
        if (!(offsets[i] > 0.0) || offsets[i] > 0.25) throw ParameterError("offsets must lie in (0, 0.25]");
        if (i > 0 && !(offsets[i] < offsets[i - 1])) {
            throw ParameterError("offsets must be strictly decreasing");
        }
    }
    const double lo = fp.left_wall(t);
    std::vector<BoundaryRatio> out;
    for (double off : offsets) {
        const Estimate e = u_estimate(fp, t, lo + off, M, seed);
        out.push_back({off, e.mean / off, e.se / off});
    }
    return out;
}

}  // namespace exitsim
