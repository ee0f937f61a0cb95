#pragma once

// Experiment kinds behind the command-line tool. Each study function returns
// plain results (used directly by the acceptance suite); run() writes them.

#include <algorithm>
#include <array>
#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "exitsim/bounds.hpp"
#include "exitsim/diagnostics.hpp"
#include "exitsim/io.hpp"
#include "exitsim/kernel_oracle.hpp"
#include "exitsim/mc_frontier.hpp"
#include "exitsim/model.hpp"
#include "exitsim/particle_oracle.hpp"
#include "exitsim/paths.hpp"
#include "exitsim/spde_solver.hpp"

namespace exitsim {

inline constexpr std::array<const char*, 6> kExperimentKinds = {"solve",  "compare", "singularity",
                                                                 "bounds", "lemma31", "calibrate"};

inline bool is_experiment_kind(const std::string& kind) {
    return std::find(kExperimentKinds.begin(), kExperimentKinds.end(), kind) != kExperimentKinds.end();
}

struct ExperimentPlan {
    std::string kind;
    RunConfig config;
    fs::path out = "out";
    bool plots = false;
};

inline SolveConfig solve_config(const RunConfig& cfg) {
    SolveConfig sc;
    sc.space_level = cfg.space_level;
    sc.scheme = parse_scheme(cfg.scheme);
    sc.clamp_tolerance = cfg.clamp_tolerance;
    return sc;
}

inline std::shared_ptr<const BrownianPath> observation_path(const RunConfig& cfg, std::uint64_t stream) {
    return std::make_shared<const BrownianPath>(sample_path(cfg.seed, stream, cfg.horizon, cfg.time_level));
}

/// Uniform grid of `points` nodes on [0, 1].
inline std::vector<double> unit_grid(int points) {
    if (points < 2) throw ParameterError("grid needs two points");
    std::vector<double> x(static_cast<std::size_t>(points));
    for (int i = 0; i < points; ++i) x[static_cast<std::size_t>(i)] = static_cast<double>(i) / (points - 1);
    return x;
}

// ---------------------------------------------------------------------------
// solve

inline std::vector<SolverTrajectory> solve_study(const RunConfig& cfg) {
    cfg.validate();
    std::vector<SolverTrajectory> out;
    for (int s = 0; s < cfg.b_seeds; ++s) {
        out.push_back(solve(cfg.initial_density(), observation_path(cfg, static_cast<std::uint64_t>(s)), cfg.model(),
                            solve_config(cfg)));
    }
    return out;
}

// ---------------------------------------------------------------------------
// compare

struct CompareResult {
    double horizon = 0.0;
    double A_spde = 0.0;
    Estimate A_particles;
    Estimate A_frontier;
    double min_survival = 0.0;
    /// compare_modifications at the base levels, and after one refinement of
    /// the path and the space grid with four times the replicas.
    ModificationDistance base, refined;
    bool solver_ok = true;
    std::string message;
};

inline CompareResult compare_study(const RunConfig& cfg) {
    cfg.validate();
    const auto b = observation_path(cfg, 0);
    const ModelParams params = cfg.model();
    const InitialDensity pi0 = cfg.initial_density();
    const double T = cfg.horizon;
    const std::vector<double> grid = unit_grid(cfg.grid_points);
    CompareResult r;
    r.horizon = T;

    SolveConfig sc = solve_config(cfg);
    sc.snapshot_times = {T};
    const SolverTrajectory traj = solve(pi0, b, params, sc);
    r.solver_ok = traj.ok();
    r.message = traj.message;
    if (!traj.ok()) return r;
    r.A_spde = traj.final_A();

    const ParticleEnsemble e = simulate_exit(cfg.particles, b, T, params, pi0, cfg.seed);
    r.A_particles = {e.final_A(), e.exit.se.back()};
    r.min_survival = 1.0;
    for (double A : e.exit.values) r.min_survival = std::min(r.min_survival, 1.0 - A);

    const FrontierProblem fp(params, pi0, b);
    r.base = compare_modifications(traj, fp, {T}, grid, cfg.frontier_replicas, cfg.seed).front();
    r.A_frontier = {1.0 - r.base.frontier_mass, r.base.frontier_mass_se};

    const auto b2 = std::make_shared<const BrownianPath>(refine(*b));
    SolveConfig sc2 = sc;
    sc2.space_level = cfg.space_level + 1;
    const SolverTrajectory traj2 = solve(pi0, b2, params, sc2);
    if (!traj2.ok()) {
        r.solver_ok = false;
        r.message = "refined solve: " + traj2.message;
        return r;
    }
    const FrontierProblem fp2(params, pi0, b2);
    r.refined = compare_modifications(traj2, fp2, {T}, grid, 4 * cfg.frontier_replicas, cfg.seed).front();
    return r;
}

// ---------------------------------------------------------------------------
// singularity

struct SingularityResult {
    std::vector<double> t0;
    std::vector<long long> n;
    std::vector<WindowSummary> windows;
    std::vector<WindowSummary> control_windows;
    std::optional<ExponentFit> window_fit;
    std::vector<double> offsets;
    /// Per offset: median over b seeds of u_t(wall + offset) / offset.
    std::vector<double> boundary_median;
    std::vector<std::vector<BoundaryRatio>> boundary_by_seed;
    std::vector<BoundaryRatio> control_boundary;
    double control_derivative = 0.0;
    double control_sigma1 = 0.0;
    double max_clamped = 0.0;
    int failed_solves = 0;
};

inline std::vector<double> base_times(const RunConfig& cfg) {
    if (cfg.t0_count < 1) throw ParameterError("t0_count must be >= 1");
    std::vector<double> t0;
    for (int i = 0; i < cfg.t0_count; ++i) {
        const double f = cfg.t0_count == 1 ? 0.0 : static_cast<double>(i) / (cfg.t0_count - 1);
        t0.push_back(cfg.t0_first + f * (cfg.t0_last - cfg.t0_first));
    }
    return t0;
}

inline SingularityResult singularity_study(const RunConfig& cfg, bool with_boundary = true) {
    cfg.validate();
    if (cfg.n_min_log2 < 0 || cfg.n_max_log2 < cfg.n_min_log2 || cfg.offset_max_log2 < cfg.offset_min_log2 ||
        cfg.offset_min_log2 < 2) {
        throw ParameterError("window or offset exponents out of order");
    }
    SingularityResult r;
    r.t0 = base_times(cfg);
    for (int k = cfg.n_min_log2; k <= cfg.n_max_log2; ++k) r.n.push_back(1LL << k);
    for (int k = cfg.offset_min_log2; k <= cfg.offset_max_log2; ++k) r.offsets.push_back(std::ldexp(1.0, -k));

    const ModelParams params = cfg.model();
    const InitialDensity pi0 = cfg.initial_density();
    const SolveConfig sc = solve_config(cfg);
    std::vector<IncrementStudy> studies;
    for (int s = 0; s < cfg.b_seeds; ++s) {
        const auto b = observation_path(cfg, static_cast<std::uint64_t>(s));
        const SolverTrajectory traj = solve(pi0, b, params, sc);
        if (!traj.ok()) {
            ++r.failed_solves;
            continue;
        }
        r.max_clamped = std::max(r.max_clamped, traj.clamped.empty() ? 0.0 : traj.clamped.back());
        for (double t0 : r.t0) studies.push_back(shrinking_window(traj.exit, t0, r.n));
        if (with_boundary) {
            const FrontierProblem fp(params, pi0, b);
            r.boundary_by_seed.push_back(boundary_ratio(fp, cfg.boundary_time, r.offsets, cfg.frontier_replicas, cfg.seed));
        }
    }
    if (studies.empty()) throw UndefinedResultError("every solve failed");
    r.windows = aggregate_windows(studies);

    // control: no observation coupling, same total diffusion
    r.control_sigma1 = std::sqrt(params.a());
    const ModelParams control = ModelParams::decoupled(r.control_sigma1);
    const auto b0 = observation_path(cfg, 0);
    const SolverTrajectory ctraj = solve(pi0, b0, control, sc);
    if (!ctraj.ok()) throw UndefinedResultError("control solve failed: " + ctraj.message);
    std::vector<IncrementStudy> cstudies;
    for (double t0 : r.t0) cstudies.push_back(shrinking_window(ctraj.exit, t0, r.n));
    r.control_windows = aggregate_windows(cstudies);

    std::vector<double> h, med;
    for (const auto& w : r.windows) {
        h.push_back(1.0 / static_cast<double>(w.n));
        med.push_back(w.q.median);
    }
    try {
        r.window_fit = exponent_fit(h, med, h.back(), h.front(), cfg.seed);
    } catch (const DataError&) {
        r.window_fit.reset();
    }

    if (with_boundary) {
        for (std::size_t j = 0; j < r.offsets.size(); ++j) {
            std::vector<double> v;
            for (const auto& row : r.boundary_by_seed) v.push_back(row[j].ratio);
            r.boundary_median.push_back(median(v));
        }
        const FrontierProblem cfp(control, pi0, b0);
        r.control_boundary = boundary_ratio(cfp, cfg.boundary_time, r.offsets, cfg.control_replicas, cfg.seed);
        const KernelProblem kp(control.a(), KernelData::from_density(pi0));
        r.control_derivative = IntervalSeries(kp, cfg.boundary_time, std::nullopt).derivative(0.0);
    }
    return r;
}

// ---------------------------------------------------------------------------
// calibrate

struct CalibrationLevel {
    int space_level = 0;
    int time_level = 0;
    double sup_error = 0.0;
    std::optional<double> order;
    double clamped = 0.0;
    double min_before_clamp = 0.0;
    bool ok = true;
};

struct CalibrationReport {
    std::string scheme;
    double sigma1 = 0.0;
    double horizon = 0.0;
    std::vector<CalibrationLevel> levels;
    double clamp_tolerance = 0.0;
};

/// Sup-norm error against the series solution, sigma = 0, at space levels
/// 7..10 with time level 2 L - 2 (dt proportional to dx^2).
inline CalibrationReport calibrate(const RunConfig& cfg, int first_level = 7, int last_level = 10) {
    cfg.validate();
    CalibrationReport rep;
    rep.scheme = cfg.scheme;
    rep.sigma1 = cfg.sigma1;
    rep.horizon = cfg.horizon;
    rep.clamp_tolerance = cfg.clamp_tolerance;
    const ModelParams params = ModelParams::decoupled(cfg.sigma1);
    const InitialDensity pi0 = cfg.initial_density();
    const KernelProblem kp(params.a(), KernelData::from_density(pi0));
    const IntervalSeries exact(kp, cfg.horizon, std::nullopt);
    for (int L = first_level; L <= last_level; ++L) {
        CalibrationLevel lv;
        lv.space_level = L;
        lv.time_level = 2 * L - 2;
        const auto b = std::make_shared<const BrownianPath>(sample_path(cfg.seed, 0, cfg.horizon, lv.time_level));
        SolveConfig sc = solve_config(cfg);
        sc.space_level = L;
        const SolverTrajectory traj = solve(pi0, b, params, sc);
        lv.ok = traj.ok();
        lv.clamped = traj.clamped.empty() ? 0.0 : traj.clamped.back();
        lv.min_before_clamp = traj.min_before_clamp;
        if (lv.ok) {
            const DensityField& f = traj.final_field();
            for (std::size_t j = 0; j <= f.cells(); ++j) {
                lv.sup_error = std::max(lv.sup_error, std::abs(f.values[j] - exact.value(f.x(j))));
            }
            if (!rep.levels.empty() && rep.levels.back().ok && lv.sup_error > 0.0) {
                lv.order = std::log2(rep.levels.back().sup_error / lv.sup_error);
            }
        }
        rep.levels.push_back(lv);
    }
    return rep;
}

inline nlohmann::json to_json(const CalibrationReport& rep) {
    nlohmann::json levels = nlohmann::json::array();
    for (const auto& lv : rep.levels) {
        levels.push_back({{"space_level", lv.space_level},
                          {"time_level", lv.time_level},
                          {"sup_error", json_number(lv.sup_error)},
                          {"order", lv.order ? json_number(*lv.order) : nlohmann::json(nullptr)},
                          {"clamped_mass", lv.clamped},
                          {"min_before_clamp", lv.min_before_clamp},
                          {"ok", lv.ok}});
    }
    const auto& last = rep.levels.back();
    return {{"kind", "calibrate"},
            {"scheme", rep.scheme},
            {"sigma", 0.0},
            {"sigma1", rep.sigma1},
            {"horizon", rep.horizon},
            {"levels", levels},
            {"spatial_order", last.order ? json_number(*last.order) : nlohmann::json(nullptr)},
            {"clamp_tolerance", rep.clamp_tolerance},
            {"clamp_within_tolerance",
             std::all_of(rep.levels.begin(), rep.levels.end(),
                         [&](const CalibrationLevel& l) { return l.ok && l.clamped <= rep.clamp_tolerance; })}};
}

// ---------------------------------------------------------------------------
// JSON records

inline nlohmann::json optional_json(const std::optional<double>& v) {
    return v ? json_number(*v) : nlohmann::json(nullptr);
}

inline nlohmann::json to_json(const BoundConstants& k) {
    return {{"kind", "bounds"},
            {"eps", k.eps},
            {"c", k.c},
            {"d", k.d},
            {"delta", k.delta},
            {"mu", k.mu},
            {"p", k.p},
            {"p_se", k.p_se},
            {"alpha", k.alpha},
            {"r", json_number(k.r)},
            {"beta", json_number(k.beta)},
            {"alpha_hat", optional_json(k.alpha_hat)},
            {"gamma", k.gamma},
            {"gamma_se", k.gamma_se},
            {"gamblers_ruin_bound", gamblers_ruin_bound(k.c, k.d)},
            {"nu0", optional_json(k.nu0)},
            {"nu0_se", k.nu0 ? json_number(k.nu0_se) : nlohmann::json(nullptr)},
            {"nu_remark", k.nu_remark},
            {"seed", k.seed},
            {"range_replicas", k.range_replicas},
            {"gamma_replicas", k.gamma_replicas}};
}

inline nlohmann::json to_json(const Lemma31Report& r) {
    return {{"kind", "lemma31"},
            {"gamma_ratio", r.gamma_ratio},
            {"beta_factor", r.beta_factor},
            {"K", r.K},
            {"seeds", r.seeds},
            {"alpha", r.alpha},
            {"max_index", r.max_index},
            {"fraction_within", r.fraction_within},
            {"ergodic_median", r.ergodic_median}};
}

namespace detail {

inline nlohmann::json windows_json(const std::vector<WindowSummary>& w) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& s : w) a.push_back({{"n", s.n}, {"q1", s.q.q1}, {"median", s.q.median}, {"q3", s.q.q3}});
    return a;
}

inline std::vector<double> thin(const std::vector<double>& v, std::size_t stride) {
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); i += stride) out.push_back(v[i]);
    if (!v.empty() && (v.size() - 1) % stride != 0) out.push_back(v.back());
    return out;
}

inline std::string seed_tag(int s) { return "b" + std::to_string(s); }

}  // namespace detail

// ---------------------------------------------------------------------------
// run

/// Process exit status of run().
enum RunStatus : int { run_ok = 0, run_error = 1, run_usage = 2, run_solver_failure = 3 };

/// Execute a plan and write its artifacts. Invalid kinds are rejected before
/// anything touches the output directory.
inline int run(const ExperimentPlan& plan) {
    if (!is_experiment_kind(plan.kind)) throw UsageError("unknown experiment kind '" + plan.kind + "'");
    const RunConfig& cfg = plan.config;
    cfg.validate();
    OutputDir out(plan.out, plan.kind, cfg);
    std::vector<std::uint64_t> seeds = {cfg.seed};
    int status = run_ok;

    if (plan.kind == "solve") {
        const auto trajs = solve_study(cfg);
        nlohmann::json runs = nlohmann::json::array();
        std::vector<PlotSeries> series;
        for (std::size_t s = 0; s < trajs.size(); ++s) {
            const auto& tr = trajs[s];
            const std::string tag = detail::seed_tag(static_cast<int>(s));
            CsvTable cdf({"time", "A", "mass", "clamped_mass"});
            for (std::size_t i = 0; i < tr.exit.size(); ++i) {
                cdf.add({tr.exit.times[i], tr.exit.values[i], tr.mass[i], tr.clamped[i]});
            }
            out.write("exit_cdf_" + tag + ".csv", cdf.str());
            nlohmann::json rec = {{"b_stream", s},
                                  {"status", tr.ok() ? "ok" : "clamp_exceeded"},
                                  {"final_time", tr.exit.times.back()},
                                  {"final_A", tr.final_A()},
                                  {"min_before_clamp", tr.min_before_clamp},
                                  {"clamped_mass", tr.clamped.empty() ? 0.0 : tr.clamped.back()},
                                  {"max_mass_increase", json_number(tr.max_mass_increase)}};
            if (tr.ok()) {
                const DensityField& f = tr.final_field();
                CsvTable dens({"x", "pi"});
                for (std::size_t j = 0; j <= f.cells(); ++j) dens.add({f.x(j), f.values[j]});
                out.write("density_" + tag + ".csv", dens.str());
            } else {
                out.write_json("failure_" + tag + ".json", {{"b_stream", s}, {"message", tr.message}, {"record", rec}});
                status = run_solver_failure;
            }
            runs.push_back(rec);
            const std::size_t stride = std::max<std::size_t>(1, tr.exit.size() / 1024);
            series.push_back({tag, detail::thin(tr.exit.times, stride), detail::thin(tr.exit.values, stride)});
        }
        out.write_json("solve.json", {{"kind", "solve"}, {"scheme", cfg.scheme}, {"runs", runs}});
        if (plan.plots) out.write("exit_cdf.svg", svg_plot({"exit distribution A_t", "t", "A_t"}, series));
    } else if (plan.kind == "compare") {
        const CompareResult r = compare_study(cfg);
        if (!r.solver_ok) {
            out.write_json("failure.json", {{"message", r.message}});
            status = run_solver_failure;
        } else {
            CsvTable t({"solver", "A_T", "se"});
            t.add_text({"spde", format_double(r.A_spde), "0"});
            t.add_text({"particles", format_double(r.A_particles.mean), format_double(r.A_particles.se)});
            t.add_text({"frontier", format_double(r.A_frontier.mean), format_double(r.A_frontier.se)});
            out.write("compare.csv", t.str());
            out.write_json("compare.json",
                           {{"kind", "compare"},
                            {"horizon", r.horizon},
                            {"A_spde", r.A_spde},
                            {"A_particles", r.A_particles.mean},
                            {"A_particles_se", r.A_particles.se},
                            {"A_frontier", r.A_frontier.mean},
                            {"A_frontier_se", r.A_frontier.se},
                            {"min_survival", r.min_survival},
                            {"l2_base", r.base.distance},
                            {"l2_base_se", r.base.aggregate_se},
                            {"l2_refined", r.refined.distance},
                            {"l2_refined_se", r.refined.aggregate_se}});
        }
    } else if (plan.kind == "singularity") {
        const SingularityResult r = singularity_study(cfg);
        CsvTable w({"n", "q1", "median", "q3", "control_median"});
        for (std::size_t j = 0; j < r.windows.size(); ++j) {
            const auto& s = r.windows[j];
            w.add({static_cast<double>(s.n), s.q.q1, s.q.median, s.q.q3, r.control_windows[j].q.median});
        }
        out.write("windows.csv", w.str());
        CsvTable bt({"offset", "median_ratio", "control_ratio", "control_se"});
        for (std::size_t j = 0; j < r.offsets.size(); ++j) {
            bt.add({r.offsets[j], r.boundary_median[j], r.control_boundary[j].ratio, r.control_boundary[j].se});
        }
        out.write("boundary.csv", bt.str());
        nlohmann::json fit = nullptr;
        if (r.window_fit) {
            fit = {{"slope", r.window_fit->slope}, {"ci_lo", r.window_fit->ci_lo}, {"ci_hi", r.window_fit->ci_hi}};
        }
        out.write_json("singularity.json", {{"kind", "singularity"},
                                            {"b_seeds", cfg.b_seeds},
                                            {"failed_solves", r.failed_solves},
                                            {"max_clamped", r.max_clamped},
                                            {"windows", detail::windows_json(r.windows)},
                                            {"control_windows", detail::windows_json(r.control_windows)},
                                            {"window_exponent_fit", fit},
                                            {"control_sigma1", r.control_sigma1},
                                            {"control_derivative", r.control_derivative}});
        if (plan.plots) {
            PlotSeries m{"median", {}, {}}, c{"control", {}, {}};
            for (std::size_t j = 0; j < r.windows.size(); ++j) {
                m.x.push_back(static_cast<double>(r.windows[j].n));
                m.y.push_back(r.windows[j].q.median);
                c.x.push_back(static_cast<double>(r.windows[j].n));
                c.y.push_back(r.control_windows[j].q.median);
            }
            out.write("windows.svg", svg_plot({"window ratio", "n", "(A(t0+1/n)-A(t0)) n", true, true}, {m, c}));
        }
        if (r.failed_solves > 0) status = run_solver_failure;
    } else if (plan.kind == "bounds") {
        const BoundConstants k = compute_bounds(cfg.model().eps(), cfg.c, cfg.d, cfg.delta, cfg.mu, cfg.alpha,
                                                cfg.range_replicas, cfg.gamma_replicas, cfg.seed);
        out.write_json("bounds.json", to_json(k));
    } else if (plan.kind == "lemma31") {
        const Lemma31Report r = lemma31_check(cfg.gamma_ratio, cfg.beta_factor, cfg.lemma_k, cfg.lemma_seeds, cfg.seed);
        CsvTable t({"m", "frequency", "se"});
        for (std::size_t m = 0; m < r.frequency.size(); ++m) {
            t.add({static_cast<double>(m), r.frequency[m], r.frequency_se[m]});
        }
        out.write("lemma31.csv", t.str());
        out.write_json("lemma31.json", to_json(r));
    } else if (plan.kind == "calibrate") {
        const CalibrationReport rep = calibrate(cfg);
        out.write_json("calibrate.json", to_json(rep));
        if (!std::all_of(rep.levels.begin(), rep.levels.end(), [](const CalibrationLevel& l) { return l.ok; })) {
            status = run_solver_failure;
        }
    }
    out.commit(seeds, status == run_ok ? "ok" : "failed");
    return status;
}

}  // namespace exitsim
