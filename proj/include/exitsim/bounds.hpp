#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <vector>

#include "exitsim/error.hpp"
#include "exitsim/killed_walk.hpp"
#include "exitsim/numeric.hpp"
#include "exitsim/paths.hpp"
#include "exitsim/rng.hpp"

namespace exitsim {

inline constexpr int kRangeLevel = 12;
inline constexpr int kGammaLevel = 12;

/// Range threshold c (sqrt 2 - 1) / 2 for the range probability.
inline double range_threshold(double c) { return c * (std::numbers::sqrt2 - 1.0) / 2.0; }

/// P(sup w - inf w >= c (sqrt 2 - 1) / 2 on [0, 1]), estimated on a dyadic
/// grid. The grid range understates the true range, so the estimate is
/// biased low; the bias shrinks as the level grows. Replica r uses the
/// path stream r, so paths at different levels are nested.
inline Estimate range_prob(double c, long long M, std::uint64_t seed, int level = kRangeLevel) {
    if (!(c >= 0.0)) throw ParameterError("c must be nonnegative");
    if (M < 1000) throw ParameterError("range_prob needs at least 1000 replicas");
    if (level < kRangeLevel) throw ParameterError("range grid level must be >= 12");
    const double thr = range_threshold(c);
    if (thr == 0.0) return {1.0, 0.0};
    MeanAccumulator acc;
    for (long long r = 0; r < M; ++r) {
        const BrownianPath w = sample_path(seed, 0x52414E4700000000ull + static_cast<std::uint64_t>(r), 1.0, level);
        const auto [lo, hi] = std::minmax_element(w.values().begin(), w.values().end());
        acc.add(*hi - *lo >= thr ? 1.0 : 0.0);
    }
    return acc.estimate();
}

struct BetaValue {
    double r = 0.0;
    /// 2((r - 1) p + 1) / r^alpha
    double beta = 0.0;
    /// 2 (1 - p) / (1 - alpha) r^-alpha
    double beta_alt = 0.0;
};

inline constexpr double kBetaIdentityTolerance = 1e-12;

/// r(alpha, c) and beta(alpha, c) for a range probability p = p(c), by both
/// closed forms; their agreement is checked.
inline BetaValue beta_of(double alpha, double p) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ParameterError("alpha must lie in (0, 1)");
    if (p == 0.0 || p == 1.0) throw ParameterError("degenerate range probability");
    if (!(p > 0.0 && p < 1.0)) throw ParameterError("p must lie in (0, 1)");
    BetaValue v;
    v.r = alpha * (1.0 - p) / (p * (1.0 - alpha));
    v.beta = 2.0 * ((v.r - 1.0) * p + 1.0) / std::pow(v.r, alpha);
    v.beta_alt = 2.0 * (1.0 - p) / (1.0 - alpha) * std::pow(v.r, -alpha);
    if (std::abs(v.beta - v.beta_alt) > kBetaIdentityTolerance * std::max(1.0, std::abs(v.beta))) {
        throw Error("beta closed forms disagree");
    }
    return v;
}

/// Smallest alpha in (p, 1) with beta(alpha) < 1, to 1e-10.
///
/// On alpha > p (r > 1) beta decreases from 2 towards 2p, so the set is an
/// interval (alpha_hat, 1) when p < 1/2 and empty otherwise.
inline std::optional<double> alpha_hat(double p) {
    if (!(p > 0.0 && p < 1.0)) throw ParameterError("p must lie in (0, 1)");
    if (p >= 0.5) return std::nullopt;
    double lo = p, hi = 1.0;
    // beta(hi) < 1 for hi close enough to 1
    double probe = 1.0 - 1e-3;
    while (beta_of(probe, p).beta >= 1.0) {
        probe = 1.0 - (1.0 - probe) * 1e-2;
        if (1.0 - probe < 1e-15) return std::nullopt;
    }
    hi = probe;
    while (hi - lo > 1e-11) {
        const double mid = 0.5 * (lo + hi);
        if (beta_of(mid, p).beta < 1.0) hi = mid;
        else lo = mid;
    }
    return hi;
}

/// P(tau_{d,d} ^ (delta/2) < tau_{d,-c}) for w started at d / sqrt 2:
/// w hits d before -c, or does not hit -c by time delta / 2.
inline Estimate gamma_prob(double c, double d, double delta, long long M, std::uint64_t seed,
                           int level = kGammaLevel) {
    if (!(c > 0.0) || !(d > 0.0) || !(delta > 0.0)) throw ParameterError("c, d and delta must be positive");
    if (M < 1) throw ParameterError("gamma_prob needs replicas");
    const std::size_t n = std::size_t{1} << level;
    const KilledWalk walk(std::vector<double>(n + 1, -c), std::vector<double>(n + 1, d),
                          (0.5 * delta) / static_cast<double>(n), 1.0, CrossingCorrection::both);
    const RandomStream rng(seed, 0x47414D4D00000000ull);
    const double start = d / std::numbers::sqrt2;
    MeanAccumulator acc;
    for (long long r = 0; r < M; ++r) {
        const WalkOutcome o = walk.run(rng, static_cast<std::uint64_t>(r), start);
        acc.add(o.survived || o.side == ExitSide::upper ? 1.0 : 0.0);
    }
    return acc.estimate();
}

/// Gambler's-ruin probability of hitting d before -c from d / sqrt 2.
inline double gamblers_ruin_bound(double c, double d) {
    return (c + d / std::numbers::sqrt2) / (c + d);
}

/// (1 - alpha_hat) log2(gamma^-2); absent with alpha_hat.
inline std::optional<double> nu0(std::optional<double> alpha_hat_value, double gamma) {
    if (gamma == 0.0) throw UndefinedResultError("gamma = 0 makes the bound diverge");
    if (!(gamma > 0.0 && gamma <= 1.0)) throw ParameterError("gamma must lie in (0, 1]");
    if (!alpha_hat_value) return std::nullopt;
    return -2.0 * (1.0 - *alpha_hat_value) * std::log2(gamma);
}

/// (1 + mu) (2 pi eps^2)^(-1/2) exp(-1 / (2 eps^2)).
inline double nu_remark(double mu, double eps) {
    if (!(eps > 0.0)) throw DomainError("eps must be positive");
    if (!(mu >= 0.0)) throw ParameterError("mu must be nonnegative");
    return (1.0 + mu) / std::sqrt(2.0 * std::numbers::pi * eps * eps) * std::exp(-1.0 / (2.0 * eps * eps));
}

struct BoundConstants {
    double c = 0.0, d = 0.0, delta = 1.0, eps = 0.0, mu = 0.0;
    /// Range probability at c eps, with its standard error.
    double p = 0.0, p_se = 0.0;
    /// r and beta at the reporting alpha.
    double alpha = 0.3;
    double r = 0.0, beta = 0.0;
    std::optional<double> alpha_hat;
    double gamma = 0.0, gamma_se = 0.0;
    std::optional<double> nu0;
    double nu0_se = 0.0;
    double nu_remark = 0.0;
    // provenance
    std::uint64_t seed = 0;
    long long range_replicas = 0, gamma_replicas = 0;
};

/// The whole pipeline: p(c eps), alpha_hat, gamma(c, d, delta), nu0 with a
/// delta-method error, and the closed-form small-eps nu.
inline BoundConstants compute_bounds(double eps, double c, double d, double delta, double mu, double alpha,
                                     long long range_replicas, long long gamma_replicas, std::uint64_t seed) {
    if (!(eps > 0.0)) throw DomainError("eps must be positive");
    BoundConstants k;
    k.c = c;
    k.d = d;
    k.delta = delta;
    k.eps = eps;
    k.mu = mu;
    k.alpha = alpha;
    k.seed = seed;
    k.range_replicas = range_replicas;
    k.gamma_replicas = gamma_replicas;
    const Estimate p = range_prob(c * eps, range_replicas, seed);
    k.p = p.mean;
    k.p_se = p.se;
    const Estimate g = gamma_prob(c, d, delta, gamma_replicas, seed);
    k.gamma = g.mean;
    k.gamma_se = g.se;
    k.nu_remark = nu_remark(mu, eps);
    if (k.p > 0.0 && k.p < 1.0) {
        const BetaValue b = beta_of(alpha, k.p);
        k.r = b.r;
        k.beta = b.beta;
        k.alpha_hat = alpha_hat(k.p);
    }
    if (k.gamma > 0.0) {
        k.nu0 = nu0(k.alpha_hat, k.gamma);
        if (k.nu0) {
            // d nu0 / d gamma and d nu0 / d alpha_hat * d alpha_hat / d p
            const double a = *k.alpha_hat;
            const double dg = -2.0 * (1.0 - a) / (k.gamma * std::numbers::ln2);
            const double da = 2.0 * std::log2(k.gamma);
            double dp = 0.0;
            const double h = std::min(1e-4, 0.5 * std::min(k.p, 0.5 - k.p));
            const auto up = alpha_hat(k.p + h), dn = alpha_hat(k.p - h);
            if (up && dn) dp = (*up - *dn) / (2.0 * h);
            k.nu0_se = std::hypot(dg * k.gamma_se, da * dp * k.p_se);
        }
    }
    return k;
}

// ---------------------------------------------------------------------------
// Geometric-time check

struct Lemma31Report {
    double gamma_ratio = 0.5;
    double beta_factor = 8.0;
    int K = 60;
    long long seeds = 0;
    /// 1 - Phi(1)
    double alpha = 0.0;
    /// Indicator frequency per m = 0..max_index, with standard errors.
    std::vector<double> frequency;
    std::vector<double> frequency_se;
    /// Fraction of seeds whose k-th success index m_k <= beta_factor k at k = K/2.
    double fraction_within = 0.0;
    /// Median over seeds of #{k : m_k <= K} / K.
    double ergodic_median = 0.0;
    int max_index = 0;
};

/// Sample B at t_m = gamma^m (m = 0..max_index) exactly, from the smallest
/// time upward, and record the indices with B(t_m) >= sqrt(t_m).
inline Lemma31Report lemma31_check(double gamma_ratio, double beta_factor, int K, long long seeds,
                                   std::uint64_t seed) {
    const double alpha = 1.0 - normal_cdf(1.0);
    if (!(gamma_ratio > 0.0 && gamma_ratio < 1.0)) throw ParameterError("gamma_ratio must lie in (0, 1)");
    if (!(beta_factor * alpha > 1.0)) throw ParameterError("beta_factor * P(B_1 >= 1) must exceed 1");
    if (K < 20) throw ParameterError("K must be >= 20");
    if (seeds < 1) throw ParameterError("need at least one seed");
    Lemma31Report rep;
    rep.gamma_ratio = gamma_ratio;
    rep.beta_factor = beta_factor;
    rep.K = K;
    rep.seeds = seeds;
    rep.alpha = alpha;
    const int kk = K / 2;
    rep.max_index = std::max(K, static_cast<int>(std::ceil(beta_factor * kk)));
    const auto nm = static_cast<std::size_t>(rep.max_index) + 1;
    std::vector<long long> hits(nm, 0);
    std::vector<double> ergodic;
    long long within = 0;
    const RandomStream rng(seed, 0x4C454D4D00000000ull);
    std::vector<double> times(nm);
    for (std::size_t m = 0; m < nm; ++m) times[m] = std::pow(gamma_ratio, static_cast<double>(m));
    std::vector<bool> ind(nm);
    for (long long s = 0; s < seeds; ++s) {
        const auto idx = static_cast<std::uint64_t>(s);
        double B = 0.0, t_prev = 0.0;
        for (std::size_t i = nm; i-- > 0;) {
            B += std::sqrt(times[i] - t_prev) * rng.normal(idx, DrawTag::geometric_increment, static_cast<std::uint32_t>(i));
            t_prev = times[i];
            ind[i] = B >= std::sqrt(times[i]);
        }
        int count = 0, kth = -1, up_to_K = 0;
        for (std::size_t m = 0; m < nm; ++m) {
            if (!ind[m]) continue;
            ++hits[m];
            if (m >= 1) {
                ++count;
                if (count == kk) kth = static_cast<int>(m);
                if (static_cast<int>(m) <= K) ++up_to_K;
            }
        }
        if (kth >= 0 && kth <= beta_factor * kk) ++within;
        ergodic.push_back(static_cast<double>(up_to_K) / static_cast<double>(K));
    }
    const double ds = static_cast<double>(seeds);
    for (std::size_t m = 0; m < nm; ++m) {
        const double f = static_cast<double>(hits[m]) / ds;
        rep.frequency.push_back(f);
        rep.frequency_se.push_back(std::sqrt(f * (1.0 - f) / ds));
    }
    rep.fraction_within = static_cast<double>(within) / ds;
    rep.ergodic_median = median(ergodic);
    return rep;
}

}  // namespace exitsim
