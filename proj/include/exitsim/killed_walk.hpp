#pragma once

// Brownian motion killed on leaving a time-dependent interval.
//
// The walk z_k = start + sigma1 w(k dt) is checked against walls
// lower[k] < z < upper[k], linearly interpolated between grid times (for a
// linear wall the Brownian-bridge crossing probability exp(-2 d1 d2 / (s^2 h))
// is exact). Instead of generating w at every grid time, the path is built
// top-down: coarse increments over dyadic blocks, then bridge midpoints only
// where a crossing is not already ruled out. An interval is skipped when its
// bridge crossing probability against the wall envelope is below e^-36, so
// the result agrees in law with a full fine-grid simulation up to that
// probability per interval. Every w value is addressed by its grid index, so
// runs that differ only in `start` share the same w path exactly.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "exitsim/error.hpp"
#include "exitsim/paths.hpp"
#include "exitsim/rng.hpp"

namespace exitsim {

enum class CrossingCorrection {
    none,    ///< check grid times only
    nearer,  ///< bridge kill against the wall with the larger crossing probability
    both,    ///< independent bridge kills against both walls
};

enum class ExitSide { none, lower, upper };

struct WalkOutcome {
    bool survived = true;
    ExitSide side = ExitSide::none;
    /// Grid index of the exit (valid when !survived).
    std::size_t exit_index = 0;
    /// z at the last grid index (valid when survived).
    double final_position = 0.0;
    /// Normal draws used (cost accounting).
    std::size_t draws = 0;
};

inline constexpr double kSkipExponent = 36.0;

class KilledWalk {
public:
    KilledWalk(std::vector<double> lower, std::vector<double> upper, double dt, double sigma1,
               CrossingCorrection correction)
        : lower_(std::move(lower)), upper_(std::move(upper)), dt_(dt), sigma1_(sigma1),
          correction_(correction) {
        if (lower_.size() != upper_.size() || lower_.empty()) {
            throw ParameterError("wall sequences must have equal, nonzero length");
        }
        if (!(dt > 0.0) || !(sigma1 > 0.0)) throw ParameterError("walk needs dt > 0 and sigma1 > 0");
        for (std::size_t k = 0; k < lower_.size(); ++k) {
            if (!(lower_[k] < upper_[k])) throw ParameterError("walls must not cross");
        }
        const std::size_t n = steps();
        top_ = n == 0 ? 0 : std::max(0, static_cast<int>(std::bit_width(n)) - 1 - 6);
        build_envelope();
    }

    /// Walls lower[k] and lower[k] + width.
    static KilledWalk unit_width(std::vector<double> lower, double width, double dt, double sigma1,
                                 CrossingCorrection correction) {
        std::vector<double> upper(lower.size());
        for (std::size_t k = 0; k < lower.size(); ++k) upper[k] = lower[k] + width;
        return KilledWalk(std::move(lower), std::move(upper), dt, sigma1, correction);
    }

    std::size_t steps() const { return lower_.size() - 1; }
    double dt() const { return dt_; }
    double lower(std::size_t k) const { return lower_[k]; }
    double upper(std::size_t k) const { return upper_[k]; }
    CrossingCorrection correction() const { return correction_; }

    bool outside(double z, std::size_t k) const { return z <= lower_[k] || z >= upper_[k]; }

    /// Crossing probability of the bridge from z0 at k to z1 at k + 1.
    double leaf_kill_probability(double z0, double z1, std::size_t k) const {
        if (correction_ == CrossingCorrection::none) return 0.0;
        const double s2h = sigma1_ * sigma1_ * dt_;
        const double p_lo = std::exp(-2.0 * (z0 - lower_[k]) * (z1 - lower_[k + 1]) / s2h);
        const double p_hi = std::exp(-2.0 * (upper_[k] - z0) * (upper_[k + 1] - z1) / s2h);
        if (correction_ == CrossingCorrection::nearer) return std::max(p_lo, p_hi);
        return 1.0 - (1.0 - p_lo) * (1.0 - p_hi);
    }

    /// Exit during grid step k -> k + 1: the end node is outside, or the
    /// bridge is killed. Kill uniforms are addressed by (replica, k + 1).
    ExitSide leaf_exit(double z0, double z1, std::size_t k, const RandomStream& rng,
                       std::uint64_t replica) const {
        if (z1 <= lower_[k + 1]) return ExitSide::lower;
        if (z1 >= upper_[k + 1]) return ExitSide::upper;
        if (correction_ == CrossingCorrection::none) return ExitSide::none;
        const double s2h = sigma1_ * sigma1_ * dt_;
        const double p_lo = std::exp(-2.0 * (z0 - lower_[k]) * (z1 - lower_[k + 1]) / s2h);
        const double p_hi = std::exp(-2.0 * (upper_[k] - z0) * (upper_[k + 1] - z1) / s2h);
        if (std::max(p_lo, p_hi) <= 1e-17) return ExitSide::none;
        const double u = rng.uniform(replica, DrawTag::walk_kill, static_cast<std::uint32_t>(k + 1));
        if (correction_ == CrossingCorrection::nearer) {
            if (u >= std::max(p_lo, p_hi)) return ExitSide::none;
            return p_lo >= p_hi ? ExitSide::lower : ExitSide::upper;
        }
        if (u < p_lo) return ExitSide::lower;
        if (u < p_lo + p_hi * (1.0 - p_lo)) return ExitSide::upper;
        return ExitSide::none;
    }

    WalkOutcome run(const RandomStream& rng, std::uint64_t replica, double start) const {
        WalkOutcome out;
        if (outside(start, 0)) {
            out.survived = false;
            out.side = start <= lower_[0] ? ExitSide::lower : ExitSide::upper;
            out.exit_index = 0;
            return out;
        }
        const std::size_t n = steps();
        double w0 = 0.0;
        std::size_t k0 = 0;
        while (k0 < n) {
            int m = top_;
            while ((k0 + (std::size_t{1} << m)) > n) --m;
            const std::size_t k1 = k0 + (std::size_t{1} << m);
            const double w1 =
                w0 + std::sqrt(std::ldexp(dt_, m)) * rng.normal(replica, DrawTag::walk_coarse,
                                                                 static_cast<std::uint32_t>(k1));
            ++out.draws;
            if (!descend(rng, replica, start, k0, m, w0, w1, out)) return out;
            w0 = w1;
            k0 = k1;
        }
        out.final_position = start + sigma1_ * w0;
        return out;
    }

private:
    struct Node {
        std::size_t k0;
        int m;
        double w0, w1;
    };

    void build_envelope() {
        const std::size_t n = steps();
        env_max_.assign(static_cast<std::size_t>(top_) + 1, {});
        env_min_.assign(static_cast<std::size_t>(top_) + 1, {});
        if (n == 0) return;
        env_max_[0].resize(n);
        env_min_[0].resize(n);
        for (std::size_t j = 0; j < n; ++j) {
            env_max_[0][j] = std::max(lower_[j], lower_[j + 1]);
            env_min_[0][j] = std::min(upper_[j], upper_[j + 1]);
        }
        for (int m = 1; m <= top_; ++m) {
            const auto& pmax = env_max_[static_cast<std::size_t>(m - 1)];
            const auto& pmin = env_min_[static_cast<std::size_t>(m - 1)];
            auto& cmax = env_max_[static_cast<std::size_t>(m)];
            auto& cmin = env_min_[static_cast<std::size_t>(m)];
            cmax.resize(n >> m);
            cmin.resize(n >> m);
            for (std::size_t j = 0; j < cmax.size(); ++j) {
                cmax[j] = std::max(pmax[2 * j], pmax[2 * j + 1]);
                cmin[j] = std::min(pmin[2 * j], pmin[2 * j + 1]);
            }
        }
    }

    // Depth-first, earliest interval first; false when the walk is killed.
    bool descend(const RandomStream& rng, std::uint64_t replica, double start, std::size_t k0, int m,
                 double w0, double w1, WalkOutcome& out) const {
        Node stack[64];
        int top = 0;
        stack[top++] = Node{k0, m, w0, w1};
        const double s2 = sigma1_ * sigma1_;
        while (top > 0) {
            const Node nd = stack[--top];
            const double z0 = start + sigma1_ * nd.w0;
            const double z1 = start + sigma1_ * nd.w1;
            if (nd.m == 0) {
                const std::size_t k1 = nd.k0 + 1;
                const ExitSide side = leaf_exit(z0, z1, nd.k0, rng, replica);
                if (side != ExitSide::none) {
                    out.survived = false;
                    out.side = side;
                    out.exit_index = k1;
                    return false;
                }
                continue;
            }
            const std::size_t j = nd.k0 >> nd.m;
            const double lo = env_max_[static_cast<std::size_t>(nd.m)][j];
            const double hi = env_min_[static_cast<std::size_t>(nd.m)][j];
            const double h = std::ldexp(dt_, nd.m);
            const double d1 = z0 - lo, d2 = z1 - lo, e1 = hi - z0, e2 = hi - z1;
            const double bound = kSkipExponent * s2 * h;
            if (d1 > 0.0 && d2 > 0.0 && e1 > 0.0 && e2 > 0.0 && 2.0 * d1 * d2 > bound &&
                2.0 * e1 * e2 > bound) {
                continue;
            }
            const std::size_t km = nd.k0 + (std::size_t{1} << (nd.m - 1));
            const double wm = 0.5 * (nd.w0 + nd.w1) +
                              0.5 * std::sqrt(h) *
                                  rng.normal(replica, DrawTag::walk_bridge, static_cast<std::uint32_t>(km));
            ++out.draws;
            stack[top++] = Node{km, nd.m - 1, wm, nd.w1};
            stack[top++] = Node{nd.k0, nd.m - 1, nd.w0, wm};
        }
        return true;
    }

    std::vector<double> lower_, upper_;
    double dt_;
    double sigma1_;
    CrossingCorrection correction_;
    int top_ = 0;
    std::vector<std::vector<double>> env_max_, env_min_;
};

/// Reference walk on an explicit w path (one check per grid step). Kill
/// uniforms use the same counters as KilledWalk::run.
inline WalkOutcome run_explicit_walk(const KilledWalk& walls, const BrownianPath& w, double start,
                                     const RandomStream& rng, std::uint64_t replica,
                                     double sigma1) {
    if (std::abs(w.dt() - walls.dt()) > 1e-15 * walls.dt() || w.steps() < walls.steps()) {
        throw AlignmentError("w path grid does not match the walls");
    }
    WalkOutcome out;
    if (walls.outside(start, 0)) {
        out.survived = false;
        out.side = start <= walls.lower(0) ? ExitSide::lower : ExitSide::upper;
        return out;
    }
    for (std::size_t k = 0; k < walls.steps(); ++k) {
        const double z0 = start + sigma1 * w[k];
        const double z1 = start + sigma1 * w[k + 1];
        const ExitSide side = walls.leaf_exit(z0, z1, k, rng, replica);
        if (side != ExitSide::none) {
            out.survived = false;
            out.side = side;
            out.exit_index = k + 1;
            return out;
        }
    }
    out.final_position = start + sigma1 * w[walls.steps()];
    return out;
}

}  // namespace exitsim
