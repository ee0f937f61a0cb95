#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "exitsim/error.hpp"
#include "exitsim/exit_cdf.hpp"
#include "exitsim/killed_walk.hpp"
#include "exitsim/model.hpp"
#include "exitsim/numeric.hpp"
#include "exitsim/paths.hpp"

namespace exitsim {

/// Draw from pi0 by rejection against its peak, addressed by particle index.
inline double sample_initial_position(const InitialDensity& pi0, const RandomStream& rng,
                                      std::uint64_t index) {
    const double lo = pi0.center() - pi0.radius();
    const double width = 2.0 * pi0.radius();
    for (std::uint32_t attempt = 0;; ++attempt) {
        const auto [u, v] = rng.uniform_pair(index, DrawTag::initial_position, attempt);
        const double x = lo + width * u;
        if (v * pi0.peak() < pi0(x)) return x;
        if (attempt == 0xFFFFFFFFu) throw ResourceError("rejection sampler did not terminate");
    }
}

/// M particles x_t = x0 + sigma1 w_t + sigma b_t on a frozen b, run to T.
struct ParticleEnsemble {
    std::shared_ptr<const BrownianPath> path;
    ModelParams params;
    double horizon = 0.0;
    std::uint64_t seed = 0;
    /// Fraction exited by each grid time, with binomial standard errors.
    ExitCDF exit;
    std::vector<bool> alive;
    /// Grid index of the exit for exited particles (0 for survivors).
    std::vector<std::size_t> exit_index;
    /// x_T for survivors (fixed frame; meaningful only where alive).
    std::vector<double> position;
    std::size_t draws = 0;

    std::size_t size() const { return alive.size(); }
    double final_A() const { return exit.values.back(); }
};

/// Simulate the particle system. The exit test is x in (0, 1), with bridge
/// kills against both walls between grid times.
inline ParticleEnsemble simulate_exit(long long M, std::shared_ptr<const BrownianPath> b, double T,
                                      const ModelParams& params, const InitialDensity& pi0,
                                      std::uint64_t seed,
                                      CrossingCorrection correction = CrossingCorrection::both) {
    if (!b) throw ParameterError("simulation needs a path");
    if (M < 100) throw ParameterError("particle ensemble needs at least 100 particles");
    if (T > b->horizon() * (1.0 + 1e-12)) throw ParameterError("path is shorter than T");
    const std::size_t n = b->index_of(T);
    // x = z + sigma b  in (0, 1)  <=>  z in (-sigma b, 1 - sigma b)
    std::vector<double> lower(n + 1), upper(n + 1);
    for (std::size_t k = 0; k <= n; ++k) {
        lower[k] = -params.sigma() * (*b)[k];
        upper[k] = lower[k] + 1.0;
    }
    const KilledWalk walls(std::move(lower), std::move(upper), b->dt(), params.sigma1(), correction);
    const RandomStream rng(seed, 0x5041525400000000ull);

    ParticleEnsemble e;
    e.path = b;
    e.params = params;
    e.horizon = T;
    e.seed = seed;
    const auto m = static_cast<std::size_t>(M);
    e.alive.assign(m, true);
    e.exit_index.assign(m, 0);
    e.position.assign(m, 0.0);
    std::vector<long long> exits_at(n + 1, 0);
    const double bT = (*b)[n];
    for (std::size_t i = 0; i < m; ++i) {
        const double x0 = sample_initial_position(pi0, rng, i);
        const WalkOutcome o = walls.run(rng, i, x0);
        e.draws += o.draws;
        if (o.survived) {
            e.position[i] = o.final_position + params.sigma() * bT;
        } else {
            e.alive[i] = false;
            e.exit_index[i] = o.exit_index;
            ++exits_at[o.exit_index];
        }
    }
    long long cum = 0;
    const double dm = static_cast<double>(M);
    for (std::size_t k = 0; k <= n; ++k) {
        cum += exits_at[k];
        const double A = static_cast<double>(cum) / dm;
        e.exit.times.push_back(b->time(k));
        e.exit.values.push_back(A);
        e.exit.se.push_back(std::sqrt(A * (1.0 - A) / dm));
    }
    return e;
}

inline ParticleEnsemble simulate_exit(long long M, const BrownianPath& b, double T,
                                      const ModelParams& params, const InitialDensity& pi0,
                                      std::uint64_t seed,
                                      CrossingCorrection correction = CrossingCorrection::both) {
    return simulate_exit(M, std::make_shared<const BrownianPath>(b), T, params, pi0, seed, correction);
}

/// Mean over all particles of 1{alive} phi(x_T), with standard error.
inline Estimate conditional_moment(const ParticleEnsemble& e, const std::function<double(double)>& phi) {
    MeanAccumulator acc;
    for (std::size_t i = 0; i < e.size(); ++i) {
        if (!e.alive[i]) {
            acc.add(0.0);
            continue;
        }
        const double v = phi(e.position[i]);
        if (!std::isfinite(v)) throw ParameterError("test function is not finite at a particle position");
        acc.add(v);
    }
    return acc.estimate();
}

/// Same, for phi given by values on the uniform grid of [0, 1] (linear between nodes).
inline Estimate conditional_moment(const ParticleEnsemble& e, std::span<const double> grid_phi) {
    if (grid_phi.size() < 2) throw ParameterError("grid function needs two nodes");
    for (double v : grid_phi) {
        if (!std::isfinite(v)) throw ParameterError("grid function is not finite");
    }
    const std::size_t cells = grid_phi.size() - 1;
    return conditional_moment(e, [&](double x) {
        const double pos = std::clamp(x, 0.0, 1.0) * static_cast<double>(cells);
        const auto j = std::min(static_cast<std::size_t>(pos), cells - 1);
        const double w = pos - static_cast<double>(j);
        return (1.0 - w) * grid_phi[j] + w * grid_phi[j + 1];
    });
}

/// Smallest survival fraction 1 - A_t over the grid times up to T.
inline double positivity_of_survival(std::shared_ptr<const BrownianPath> b, double T,
                                     const ModelParams& params, const InitialDensity& pi0,
                                     long long M, std::uint64_t seed) {
    const ParticleEnsemble e = simulate_exit(M, std::move(b), T, params, pi0, seed);
    double mn = 1.0;
    for (double A : e.exit.values) mn = std::min(mn, 1.0 - A);
    return mn;
}

/// Survivor counts in equal bins of [0, 1].
inline std::vector<long long> survivor_histogram(const ParticleEnsemble& e, std::size_t bins) {
    if (bins == 0) throw ParameterError("histogram needs bins");
    std::vector<long long> counts(bins, 0);
    for (std::size_t i = 0; i < e.size(); ++i) {
        if (!e.alive[i]) continue;
        const double x = e.position[i];
        const auto j = std::min(static_cast<std::size_t>(x * static_cast<double>(bins)), bins - 1);
        ++counts[j];
    }
    return counts;
}

}  // namespace exitsim
