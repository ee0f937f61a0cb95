#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "exitsim/error.hpp"
#include "exitsim/exit_cdf.hpp"
#include "exitsim/mc_frontier.hpp"
#include "exitsim/numeric.hpp"
#include "exitsim/rng.hpp"
#include "exitsim/spde_solver.hpp"

namespace exitsim {

// ---------------------------------------------------------------------------
// Shrinking windows

struct IncrementStudy {
    double t0 = 0.0;
    std::vector<long long> n;
    /// (A(t0 + h) - A(t0)) / h with h the snapped window length.
    std::vector<double> ratio;
    /// |h - 1/n| for each window.
    std::vector<double> snap;
};

namespace detail {

inline std::size_t snap_index(const ExitCDF& A, double t) {
    const double dt = A.step();
    const double pos = (t - A.times.front()) / dt;
    const double r = std::round(pos);
    if (r < 0.0 || r > static_cast<double>(A.size() - 1)) throw DomainError("time outside the series");
    return static_cast<std::size_t>(r);
}

}  // namespace detail

/// Difference quotients of A over [t0, t0 + 1/n] with windows snapped to
/// grid times (never interpolated).
inline IncrementStudy shrinking_window(const ExitCDF& A, double t0, const std::vector<long long>& n_list) {
    if (A.size() < 2) throw ResolutionError("series too short");
    if (n_list.empty()) throw ParameterError("no window sizes");
    const double dt = A.step();
    const long long nmin = *std::min_element(n_list.begin(), n_list.end());
    if (nmin < 1) throw ParameterError("window counts must be >= 1");
    if (t0 < A.times.front() || t0 + 1.0 / static_cast<double>(nmin) > A.times.back() + 0.5 * dt) {
        throw DomainError("window leaves the series");
    }
    IncrementStudy s;
    const std::size_t i0 = detail::snap_index(A, t0);
    s.t0 = A.times[i0];
    for (long long n : n_list) {
        const double want = 1.0 / static_cast<double>(n);
        if (want < dt * (1.0 - 1e-9)) throw ResolutionError("window 1/" + std::to_string(n) + " is below the grid step");
        const std::size_t i1 = detail::snap_index(A, s.t0 + want);
        const double h = A.times[i1] - A.times[i0];
        if (!(h > 0.0)) throw ResolutionError("window collapses on the grid");
        s.n.push_back(n);
        s.ratio.push_back((A.values[i1] - A.values[i0]) / h);
        s.snap.push_back(std::abs(h - want));
    }
    return s;
}

struct WindowSummary {
    long long n = 0;
    Quartiles q;
};

/// Quartiles of the ratio per window size over many studies (t0 points, seeds).
inline std::vector<WindowSummary> aggregate_windows(const std::vector<IncrementStudy>& studies) {
    if (studies.empty()) throw DataError("no studies to aggregate");
    std::vector<WindowSummary> out;
    for (std::size_t j = 0; j < studies.front().n.size(); ++j) {
        std::vector<double> r;
        for (const auto& s : studies) {
            if (s.n.size() != studies.front().n.size() || s.n[j] != studies.front().n[j]) {
                throw DataError("studies use different window lists");
            }
            r.push_back(s.ratio[j]);
        }
        out.push_back({studies.front().n[j], quartiles(r)});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Dyadic concentration

/// Fraction of the 2^level dyadic intervals needed to carry q of the total increase.
inline double dyadic_concentration(const ExitCDF& A, int level, double q) {
    if (!(q > 0.0 && q < 1.0)) throw ParameterError("q must lie in (0, 1)");
    if (level < 0 || level > 30) throw ParameterError("level out of range");
    const std::size_t steps = A.size() - 1;
    const std::size_t cells = std::size_t{1} << level;
    if (A.size() < 2 || steps % cells != 0) throw ResolutionError("series does not resolve the level");
    const std::size_t stride = steps / cells;
    const double total = A.values.back() - A.values.front();
    if (!(total > 0.0)) throw UndefinedResultError("no increase to distribute");
    std::vector<double> inc(cells);
    for (std::size_t i = 0; i < cells; ++i) inc[i] = A.values[(i + 1) * stride] - A.values[i * stride];
    std::sort(inc.begin(), inc.end(), std::greater<>());
    const double target = q * total * (1.0 - 1e-12);
    double acc = 0.0;
    std::size_t k = 0;
    while (k < cells && acc < target) acc += inc[k++];
    return static_cast<double>(k) / static_cast<double>(cells);
}

/// Reference processes on the grid t_i = i T / 2^level.
inline ExitCDF linear_cdf(double T, int level, double slope = 1.0) {
    ExitCDF A;
    const std::size_t n = std::size_t{1} << level;
    for (std::size_t i = 0; i <= n; ++i) {
        const double t = T * static_cast<double>(i) / static_cast<double>(n);
        A.times.push_back(t);
        A.values.push_back(slope * t);
    }
    return A;
}

inline ExitCDF step_cdf(double T, int level, double jump_time) {
    ExitCDF A = linear_cdf(T, level, 0.0);
    for (std::size_t i = 0; i < A.size(); ++i) A.values[i] = A.times[i] >= jump_time ? 1.0 : 0.0;
    return A;
}

/// Ternary Cantor function on [0, 1].
inline double cantor_function(double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    double value = 0.0, scale = 0.5;
    for (int i = 0; i < 60; ++i) {
        x *= 3.0;
        const double digit = std::floor(x);
        x -= digit;
        if (digit == 1.0) return value + scale;
        if (digit == 2.0) value += scale;
        scale *= 0.5;
    }
    return value;
}

inline ExitCDF cantor_cdf(double T, int level) {
    ExitCDF A = linear_cdf(T, level, 0.0);
    for (std::size_t i = 0; i < A.size(); ++i) A.values[i] = cantor_function(A.times[i] / T);
    return A;
}

// ---------------------------------------------------------------------------
// Power-law fit

struct ExponentFit {
    double slope = 0.0;
    double intercept = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
    std::size_t points = 0;
};

namespace detail {

inline std::pair<double, double> least_squares(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    const double slope = sxy / sxx;
    return {slope, my - slope * mx};
}

}  // namespace detail

inline constexpr int kBootstrapResamples = 200;

/// Least-squares slope of log profile against log x over [x_lo, x_hi], with a
/// 95% residual-bootstrap interval.
inline ExponentFit exponent_fit(const std::vector<double>& x, const std::vector<double>& profile, double x_lo,
                                double x_hi, std::uint64_t seed = 1) {
    if (x.size() != profile.size()) throw DataError("profile columns differ in length");
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] < x_lo || x[i] > x_hi) continue;
        if (!(x[i] > 0.0)) throw DataError("x values must be positive");
        if (!(profile[i] > 0.0) || !std::isfinite(profile[i])) {
            throw DataError("profile must be positive in the fit window");
        }
        lx.push_back(std::log(x[i]));
        ly.push_back(std::log(profile[i]));
    }
    if (lx.size() < 3) throw DataError("fit window holds fewer than three points");
    const auto [mn, mx] = std::minmax_element(lx.begin(), lx.end());
    if (*mx - *mn < 3.0 * std::log(2.0) * (1.0 - 1e-12)) throw DataError("fit window spans fewer than three octaves");
    ExponentFit fit;
    fit.points = lx.size();
    std::tie(fit.slope, fit.intercept) = detail::least_squares(lx, ly);
    std::vector<double> resid(lx.size());
    for (std::size_t i = 0; i < lx.size(); ++i) resid[i] = ly[i] - (fit.intercept + fit.slope * lx[i]);
    const RandomStream rng(seed, 0x424F4F5400000000ull);
    std::vector<double> slopes;
    std::vector<double> yb(lx.size());
    for (int r = 0; r < kBootstrapResamples; ++r) {
        for (std::size_t i = 0; i < lx.size(); ++i) {
            const double u = rng.uniform(static_cast<std::uint64_t>(r), DrawTag::bootstrap, static_cast<std::uint32_t>(i));
            const auto j = std::min(static_cast<std::size_t>(u * static_cast<double>(lx.size())), lx.size() - 1);
            yb[i] = fit.intercept + fit.slope * lx[i] + resid[j];
        }
        slopes.push_back(detail::least_squares(lx, yb).first);
    }
    fit.ci_lo = quantile(slopes, 0.025);
    fit.ci_hi = quantile(slopes, 0.975);
    return fit;
}

// ---------------------------------------------------------------------------
// Comparison of the density with the moving-boundary solution

/// Trapezoidal L2 distance of f and g on a (possibly nonuniform) grid.
inline double l2_distance(const std::vector<double>& x, const std::vector<double>& f, const std::vector<double>& g) {
    if (x.size() != f.size() || x.size() != g.size() || x.size() < 2) throw DataError("grid sizes differ");
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < x.size(); ++i) {
        const double h = x[i + 1] - x[i];
        const double a = f[i] - g[i], b = f[i + 1] - g[i + 1];
        s += 0.5 * h * (a * a + b * b);
    }
    return std::sqrt(s);
}

struct ModificationDistance {
    double t = 0.0;
    double distance = 0.0;
    /// sqrt(sum_i w_i se_i^2) with trapezoid weights w_i.
    double aggregate_se = 0.0;
    /// Trapezoid of the frontier values over x_grid (the mass when the grid spans [0, 1]).
    double frontier_mass = 0.0;
    double frontier_mass_se = 0.0;
};

/// L2 distance between pi_t(x) from the solver and u_t(x - sigma b_t) from
/// the frontier estimator, over x_grid, for each time.
inline std::vector<ModificationDistance> compare_modifications(const SolverTrajectory& traj,
                                                               const FrontierProblem& fp,
                                                               const std::vector<double>& times,
                                                               const std::vector<double>& x_grid, long long M,
                                                               std::uint64_t seed) {
    if (!traj.path || !traj.path->same_source(fp.path()) || traj.path->level() != fp.path().level()) {
        throw AlignmentError("solver and frontier use different observation paths");
    }
    if (x_grid.size() < 2) throw ParameterError("x grid needs two points");
    const double cells = std::ldexp(1.0, traj.space_level);
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < x_grid.size(); ++i) {
        const long long j = grid_index(x_grid[i], 1.0 / cells);
        if (j < 0 || j > static_cast<long long>(cells)) throw AlignmentError("x grid point is not a solver node");
        if (i > 0 && !(x_grid[i] > x_grid[i - 1])) throw ParameterError("x grid must increase");
        idx.push_back(static_cast<std::size_t>(j));
    }
    std::vector<double> w(x_grid.size(), 0.0);
    for (std::size_t i = 0; i + 1 < x_grid.size(); ++i) {
        w[i] += 0.5 * (x_grid[i + 1] - x_grid[i]);
        w[i + 1] += 0.5 * (x_grid[i + 1] - x_grid[i]);
    }
    std::vector<ModificationDistance> out;
    for (double t : times) {
        const DensityField& field = traj.snapshot_at(t);
        const double shift = fp.params().sigma() * fp.path().at(t);
        std::vector<double> pi(x_grid.size()), u(x_grid.size());
        double se2 = 0.0, mass = 0.0, mass_var = 0.0;
        for (std::size_t i = 0; i < x_grid.size(); ++i) {
            pi[i] = field.values[idx[i]];
            const Estimate e = u_estimate(fp, t, x_grid[i] - shift, M, seed);
            u[i] = e.mean;
            se2 += w[i] * e.se * e.se;
            mass += w[i] * e.mean;
            mass_var += w[i] * w[i] * e.se * e.se;
        }
        // points share w paths, so the mass error is correlated; this is the independent-point figure
        out.push_back({t, l2_distance(x_grid, pi, u), std::sqrt(se2), mass, std::sqrt(mass_var)});
    }
    return out;
}

}  // namespace exitsim
