#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "exitsim/error.hpp"
#include "exitsim/exit_cdf.hpp"
#include "exitsim/model.hpp"
#include "exitsim/numeric.hpp"
#include "exitsim/paths.hpp"

namespace exitsim {

/// Density pi_t sampled at x_j = j dx, j = 0..2^level.
struct DensityField {
    int level = 9;
    double time = 0.0;
    std::vector<double> values;
    /// Mass removed by clamping negative values so far.
    double clamped_mass = 0.0;

    std::size_t cells() const { return values.size() - 1; }
    double dx() const { return std::ldexp(1.0, -level); }
    double x(std::size_t j) const { return static_cast<double>(j) * dx(); }

    /// Trapezoidal mass; the end values are zero.
    double mass() const {
        double s = 0.0;
        for (std::size_t j = 1; j < cells(); ++j) s += values[j];
        return s * dx();
    }

    static DensityField zeros(int level) {
        if (level < 2 || level > 20) throw ParameterError("space level out of range");
        DensityField f;
        f.level = level;
        f.values.assign((std::size_t{1} << level) + 1, 0.0);
        return f;
    }
};

/// pi0 sampled on the grid of the given level.
inline DensityField sample_density(const InitialDensity& pi0, int level) {
    DensityField f = DensityField::zeros(level);
    for (std::size_t j = 1; j < f.cells(); ++j) f.values[j] = pi0(f.x(j));
    return f;
}

struct StepReport {
    double min_before_clamp = 0.0;
    double clamped = 0.0;
};

/// Trapezoidal-in-time diffusion with absorbing rows and explicit centered
/// transport on the fixed grid, followed by clamping of negative values.
class FixedFrameStepper {
public:
    FixedFrameStepper(int level, double dt, const ModelParams& params)
        : level_(level), dt_(dt), sigma_(params.sigma()) {
        const double dx = std::ldexp(1.0, -level);
        if (!(dt > 0.0)) throw ParameterError("time step must be positive");
        if (sigma_ * sigma_ * dt > dx * dx * (1.0 + 1e-12)) {
            throw ConfigurationError("stability contract sigma^2 dt <= dx^2 violated");
        }
        mu_ = params.a() * dt / (4.0 * dx * dx);
        const std::size_t n = (std::size_t{1} << level) - 1;
        lower_.assign(n, -mu_);
        upper_.assign(n, -mu_);
        diag_.assign(n, 1.0 + 2.0 * mu_);
        rhs_.resize(n);
        dx_ = dx;
    }

    double mu() const { return mu_; }

    /// Linear part of one step (no clamping); interior values only.
    void linear_step(const std::vector<double>& in, double db, std::vector<double>& out) {
        const std::size_t n = rhs_.size();
        const double c = sigma_ * db / (2.0 * dx_);
        for (std::size_t i = 0; i < n; ++i) {
            const double um = in[i], u0 = in[i + 1], up = in[i + 2];
            rhs_[i] = (1.0 - 2.0 * mu_) * u0 + mu_ * (um + up) - c * (up - um);
        }
        solve_tridiagonal(lower_, diag_, upper_, rhs_, scratch_);
        out.assign(in.size(), 0.0);
        for (std::size_t i = 0; i < n; ++i) out[i + 1] = rhs_[i];
    }

    DensityField step(const DensityField& field, double db, StepReport* report = nullptr) {
        if (field.level != level_) throw AlignmentError("field level does not match the stepper");
        DensityField next = field;
        linear_step(field.values, db, next.values);
        double mn = std::numeric_limits<double>::infinity();
        double clamped = 0.0;
        for (std::size_t j = 1; j + 1 < next.values.size(); ++j) {
            double& v = next.values[j];
            mn = std::min(mn, v);
            if (v < 0.0) {
                clamped -= v;
                v = 0.0;
            }
        }
        next.values.front() = 0.0;
        next.values.back() = 0.0;
        next.clamped_mass += clamped * field.dx();
        next.time = field.time + dt_;
        if (report != nullptr) *report = {mn, clamped * field.dx()};
        return next;
    }

private:
    int level_;
    double dt_;
    double sigma_;
    double mu_ = 0.0;
    double dx_ = 0.0;
    std::vector<double> lower_, diag_, upper_, rhs_, scratch_;
};

/// One fixed-frame step. Throws ConfigurationError when sigma^2 dt > dx^2.
inline DensityField step(const DensityField& field, double dt, double db, const ModelParams& params,
                         StepReport* report = nullptr) {
    FixedFrameStepper stepper(field.level, dt, params);
    return stepper.step(field, db, report);
}

// ---------------------------------------------------------------------------
// Full solve

enum class Scheme { comoving, fixed_frame };

inline Scheme parse_scheme(const std::string& name) {
    if (name == "comoving") return Scheme::comoving;
    if (name == "fixed_frame") return Scheme::fixed_frame;
    throw ParameterError("unknown scheme '" + name + "'");
}

inline const char* scheme_name(Scheme s) { return s == Scheme::comoving ? "comoving" : "fixed_frame"; }

struct SolveConfig {
    int space_level = 9;
    Scheme scheme = Scheme::comoving;
    double clamp_tolerance = 1e-6;
    /// Times (on the path grid) at which to keep a DensityField; the final
    /// time is always kept.
    std::vector<double> snapshot_times;
    /// Record sup over time of pi_t(x_j) for every node.
    bool track_sup = false;
};

/// View of the solver state handed to observers at every grid time.
class SolverState {
public:
    virtual ~SolverState() = default;
    virtual std::size_t index() const = 0;
    virtual double time() const = 0;
    /// (pi_t, g) with the scheme's native quadrature.
    virtual double inner(const std::function<double(double)>& g) const = 0;
    /// Total mass by the same quadrature.
    virtual double mass() const = 0;
};

using SolverObserver = std::function<void(const SolverState&)>;

enum class SolveStatus { ok, clamp_exceeded };

struct SolverTrajectory {
    SolveStatus status = SolveStatus::ok;
    std::string message;
    Scheme scheme = Scheme::comoving;
    int space_level = 9;
    /// A_t = 1 - mass at every grid time reached.
    ExitCDF exit;
    std::vector<double> mass;
    /// Clamped-mass accumulator after each step.
    std::vector<double> clamped;
    /// Smallest interior value before clamping, over all steps.
    double min_before_clamp = 0.0;
    /// Largest one-step mass increase (negative when mass always drops).
    double max_mass_increase = -std::numeric_limits<double>::infinity();
    std::vector<DensityField> snapshots;
    /// sup over time of pi_t(x_j), j = 0..2^level (empty unless tracked).
    std::vector<double> sup_profile;

    // Inputs, kept so that the run can be replayed.
    std::shared_ptr<const BrownianPath> path;
    InitialDensity pi0;
    ModelParams params;
    SolveConfig config;

    bool ok() const { return status == SolveStatus::ok; }
    double final_A() const { return exit.values.back(); }
    const DensityField& final_field() const { return snapshots.back(); }

    const DensityField& snapshot_at(double t) const {
        for (const auto& s : snapshots) {
            if (std::abs(s.time - t) <= 1e-12 * std::max(1.0, std::abs(t))) return s;
        }
        throw AlignmentError("no snapshot at time " + format_double(t));
    }
};

namespace detail {

/// Heat flow of sigma1 in the frame moving with -sigma b: a fixed lattice
/// z_j = j dx, walls at L and L + 1 with L = -sigma b_t. pi_t(x) = u(x + L).
class ComovingState final : public SolverState {
public:
    ComovingState(const InitialDensity& pi0, const BrownianPath& b, const ModelParams& params,
                  int level)
        : b_(b), sigma_(params.sigma()), dx_(std::ldexp(1.0, -level)), level_(level) {
        const auto [lo, hi] = std::minmax_element(b.values().begin(), b.values().end());
        const double wmin = -sigma_ * *hi, wmax = -sigma_ * *lo;
        jmin_ = static_cast<long long>(std::floor(wmin / dx_)) - 2;
        const long long jmax = static_cast<long long>(std::ceil((wmax + 1.0) / dx_)) + 2;
        u_.assign(static_cast<std::size_t>(jmax - jmin_ + 1), 0.0);
        kappa_ = params.sigma1() * params.sigma1() * b.dt() / (2.0 * dx_ * dx_);
        set_walls(0);
        for (std::size_t k = first_; k <= last_; ++k) u_[k] = pi0(z(k) - wall_);
    }

    std::size_t index() const override { return n_; }
    double time() const override { return b_.time(n_); }

    double inner(const std::function<double(double)>& g) const override {
        double s = 0.0;
        for (std::size_t k = first_; k <= last_; ++k) {
            if (u_[k] != 0.0) s += u_[k] * g(z(k) - wall_);
        }
        return s * dx_;
    }

    double mass() const override {
        double s = 0.0;
        for (std::size_t k = first_; k <= last_; ++k) s += u_[k];
        return s * dx_;
    }

    /// Advance to grid index n + 1. Returns the smallest value before clamping.
    double advance(double& clamped) {
        ++n_;
        const std::size_t old_first = first_, old_last = last_;
        set_walls(n_);
        for (std::size_t k = old_first; k < first_; ++k) u_[k] = 0.0;
        for (std::size_t k = last_ + 1; k <= old_last; ++k) u_[k] = 0.0;
        // Backward Euler with the wall value 0 extrapolated into ghost nodes.
        const std::size_t m = last_ - first_ + 1;
        lower_.assign(m, -kappa_);
        upper_.assign(m, -kappa_);
        diag_.assign(m, 1.0 + 2.0 * kappa_);
        diag_.front() = 1.0 + kappa_ * (1.0 + theta_lo_) / theta_lo_;
        diag_.back() = 1.0 + kappa_ * (1.0 + theta_hi_) / theta_hi_;
        if (m == 1) diag_[0] = 1.0 + kappa_ * (1.0 / theta_lo_ + 1.0 / theta_hi_);
        rhs_.assign(u_.begin() + static_cast<std::ptrdiff_t>(first_),
                    u_.begin() + static_cast<std::ptrdiff_t>(last_ + 1));
        solve_tridiagonal(lower_, diag_, upper_, rhs_, scratch_);
        double mn = std::numeric_limits<double>::infinity();
        clamped = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            double v = rhs_[i];
            mn = std::min(mn, v);
            if (v < 0.0) {
                clamped -= v * dx_;
                v = 0.0;
            }
            u_[first_ + i] = v;
        }
        return mn;
    }

    /// pi_t(x) for x in [0, 1]: linear between lattice nodes, and between
    /// the wall (value 0) and the nearest inside node.
    double value_at(double x) const {
        const double zz = x + wall_;
        const double zf = z(first_), zl = z(last_);
        if (zz <= wall_ || zz >= wall_ + 1.0) return 0.0;
        if (zz < zf) return u_[first_] * (zz - wall_) / (zf - wall_);
        if (zz > zl) return u_[last_] * (wall_ + 1.0 - zz) / (wall_ + 1.0 - zl);
        const double pos = (zz - z(first_)) / dx_;
        const auto i = std::min(static_cast<std::size_t>(pos), last_ - first_);
        const double w = pos - static_cast<double>(i);
        const std::size_t k = first_ + i;
        return w == 0.0 ? u_[k] : (1.0 - w) * u_[k] + w * u_[k + 1];
    }

    DensityField field() const {
        DensityField f = DensityField::zeros(level_);
        f.time = time();
        for (std::size_t j = 1; j < f.cells(); ++j) f.values[j] = value_at(f.x(j));
        return f;
    }

private:
    double z(std::size_t k) const { return static_cast<double>(static_cast<long long>(k) + jmin_) * dx_; }

    void set_walls(std::size_t n) {
        wall_ = -sigma_ * b_[n];
        // inside nodes: wall < z < wall + 1, strictly
        long long jf = static_cast<long long>(std::floor(wall_ / dx_)) + 1;
        if (static_cast<double>(jf) * dx_ <= wall_) ++jf;
        long long jl = static_cast<long long>(std::ceil((wall_ + 1.0) / dx_)) - 1;
        if (static_cast<double>(jl) * dx_ >= wall_ + 1.0) --jl;
        first_ = static_cast<std::size_t>(jf - jmin_);
        last_ = static_cast<std::size_t>(jl - jmin_);
        theta_lo_ = (static_cast<double>(jf) * dx_ - wall_) / dx_;
        theta_hi_ = (wall_ + 1.0 - static_cast<double>(jl) * dx_) / dx_;
    }

    const BrownianPath& b_;
    double sigma_;
    double dx_;
    int level_;
    long long jmin_ = 0;
    double kappa_ = 0.0;
    std::size_t n_ = 0;
    double wall_ = 0.0;
    std::size_t first_ = 0, last_ = 0;
    double theta_lo_ = 1.0, theta_hi_ = 1.0;
    std::vector<double> u_;
    std::vector<double> lower_, diag_, upper_, rhs_, scratch_;
};

class FixedFrameState final : public SolverState {
public:
    FixedFrameState(const InitialDensity& pi0, const BrownianPath& b, const ModelParams& params,
                    int level)
        : b_(b), field_(sample_density(pi0, level)), stepper_(level, b.dt(), params) {}

    std::size_t index() const override { return n_; }
    double time() const override { return b_.time(n_); }

    double inner(const std::function<double(double)>& g) const override {
        double s = 0.0;
        for (std::size_t j = 1; j < field_.cells(); ++j) {
            if (field_.values[j] != 0.0) s += field_.values[j] * g(field_.x(j));
        }
        return s * field_.dx();
    }
    double mass() const override { return field_.mass(); }

    double advance(double& clamped) {
        StepReport rep;
        field_ = stepper_.step(field_, b_[n_ + 1] - b_[n_], &rep);
        ++n_;
        field_.time = b_.time(n_);
        clamped = rep.clamped;
        return rep.min_before_clamp;
    }

    double value_at(double x) const {
        const double pos = x / field_.dx();
        const auto j = std::min(static_cast<std::size_t>(pos), field_.cells() - 1);
        const double w = pos - static_cast<double>(j);
        return (1.0 - w) * field_.values[j] + w * field_.values[j + 1];
    }

    DensityField field() const { return field_; }

private:
    const BrownianPath& b_;
    DensityField field_;
    FixedFrameStepper stepper_;
    std::size_t n_ = 0;
};

template <class State>
void run_solve(State& state, const BrownianPath& b, SolverTrajectory& traj,
               const SolverObserver& observer) {
    const SolveConfig& cfg = traj.config;
    std::vector<std::size_t> snaps;
    for (double t : cfg.snapshot_times) snaps.push_back(b.index_of(t));
    snaps.push_back(b.steps());
    std::sort(snaps.begin(), snaps.end());
    snaps.erase(std::unique(snaps.begin(), snaps.end()), snaps.end());
    std::size_t next_snap = 0;

    const std::size_t nodes = (std::size_t{1} << cfg.space_level) + 1;
    const double dx = std::ldexp(1.0, -cfg.space_level);
    auto track = [&] {
        if (!cfg.track_sup) return;
        for (std::size_t j = 1; j + 1 < nodes; ++j) {
            traj.sup_profile[j] = std::max(traj.sup_profile[j], state.value_at(dx * static_cast<double>(j)));
        }
    };
    auto record = [&](double accumulated) {
        const std::size_t n = state.index();
        const double m = state.mass();
        if (!traj.mass.empty()) traj.max_mass_increase = std::max(traj.max_mass_increase, m - traj.mass.back());
        traj.exit.times.push_back(b.time(n));
        traj.exit.values.push_back(1.0 - m);
        traj.mass.push_back(m);
        traj.clamped.push_back(accumulated);
        if (next_snap < snaps.size() && snaps[next_snap] == n) {
            DensityField f = state.field();
            f.clamped_mass = accumulated;
            traj.snapshots.push_back(std::move(f));
            ++next_snap;
        }
        track();
        if (observer) observer(state);
    };

    if (cfg.track_sup) traj.sup_profile.assign(nodes, 0.0);
    traj.min_before_clamp = std::numeric_limits<double>::infinity();
    double accumulated = 0.0;
    record(accumulated);
    for (std::size_t n = 0; n < b.steps(); ++n) {
        double clamped = 0.0;
        traj.min_before_clamp = std::min(traj.min_before_clamp, state.advance(clamped));
        accumulated += clamped;
        if (accumulated > cfg.clamp_tolerance) {
            traj.status = SolveStatus::clamp_exceeded;
            traj.message = "clamped mass " + format_double(accumulated) + " exceeds tolerance at t = " +
                           format_double(b.time(n + 1));
            record(accumulated);
            if (traj.snapshots.empty() || traj.snapshots.back().time != state.time()) {
                DensityField f = state.field();
                f.clamped_mass = accumulated;
                traj.snapshots.push_back(std::move(f));
            }
            return;
        }
        record(accumulated);
    }
}

}  // namespace detail

/// Solve for pi_t on the path grid of b. On clamp failure the result carries
/// status clamp_exceeded and the trajectory up to the failing step.
inline SolverTrajectory solve(const InitialDensity& pi0, std::shared_ptr<const BrownianPath> b,
                              const ModelParams& params, const SolveConfig& config,
                              const SolverObserver& observer = {}) {
    if (!b) throw ParameterError("solve needs a path");
    if (config.space_level < 4 || config.space_level > 20) throw ParameterError("space level out of range");
    SolverTrajectory traj;
    traj.scheme = config.scheme;
    traj.space_level = config.space_level;
    traj.path = b;
    traj.pi0 = pi0;
    traj.params = params;
    traj.config = config;
    if (config.scheme == Scheme::comoving) {
        detail::ComovingState state(pi0, *b, params, config.space_level);
        detail::run_solve(state, *b, traj, observer);
    } else {
        detail::FixedFrameState state(pi0, *b, params, config.space_level);
        detail::run_solve(state, *b, traj, observer);
    }
    return traj;
}

inline SolverTrajectory solve(const InitialDensity& pi0, const BrownianPath& b,
                              const ModelParams& params, const SolveConfig& config,
                              const SolverObserver& observer = {}) {
    return solve(pi0, std::make_shared<const BrownianPath>(b), params, config, observer);
}

/// Largest defect, over all grid times, of the weak identity
///   (pi_t, z) = (pi_0, z) + sum (a/2)(pi_s, z'') ds + sum (pi_s, sigma z') db_s
/// with left-point sums, replaying the solve that produced `traj`.
inline double weak_form_residual(const SolverTrajectory& traj, const Bump& zeta,
                                 const BrownianPath& b) {
    if (zeta.support_lo() <= 0.0 || zeta.support_hi() >= 1.0) {
        throw ParameterError("test function support must lie strictly inside (0, 1)");
    }
    if (!traj.path || !traj.path->same_source(b) || traj.path->level() != b.level()) {
        throw AlignmentError("path does not match the trajectory");
    }
    if (zeta.amplitude() == 0.0) return 0.0;
    const double half_a = 0.5 * traj.params.a();
    const double sigma = traj.params.sigma();
    double initial = 0.0, drift = 0.0, worst = 0.0;
    auto obs = [&](const SolverState& s) {
        const std::size_t n = s.index();
        const double lhs = s.inner([&](double x) { return zeta(x); });
        if (n == 0) initial = lhs;
        worst = std::max(worst, std::abs(lhs - (initial + drift)));
        if (n < b.steps()) {
            const double db = b[n + 1] - b[n];
            drift += s.inner([&](double x) {
                return half_a * b.dt() * zeta.second_derivative(x) + sigma * db * zeta.derivative(x);
            });
        }
    };
    SolveConfig cfg = traj.config;
    cfg.snapshot_times.clear();
    cfg.track_sup = false;
    (void)solve(traj.pi0, traj.path, traj.params, cfg, obs);
    return worst;
}

}  // namespace exitsim
