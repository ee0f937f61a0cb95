// Acceptance criteria, one PASS/FAIL line each. Exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "exitsim/exitsim.hpp"

using namespace exitsim;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[1024];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// 1 ------------------------------------------------------------------------

Outcome kernel_agreement() {
    const auto start = std::chrono::steady_clock::now();
    const ModelParams p = ModelParams::decoupled(1.0);
    const InitialDensity pi0 = bump_density(0.5, 0.25);
    const auto b = std::make_shared<const BrownianPath>(sample_path(1, 0, 0.1, 12));
    SolveConfig sc;
    sc.space_level = 9;
    const SolverTrajectory tr = solve(pi0, b, p, sc);
    const IntervalSeries exact(KernelProblem(p.a(), KernelData::from_density(pi0)), 0.1);
    const DensityField& f = tr.final_field();
    double err = 0.0;
    for (std::size_t j = 0; j <= f.cells(); ++j) err = std::max(err, std::abs(f.values[j] - exact.value(f.x(j))));
    const double secs = seconds_since(start);
    return {tr.ok() && err <= 5e-4 && secs < 10.0, fmt("sup error %.3g (<= 5e-4), %.1f s (< 10 s)", err, secs)};
}

// 2 ------------------------------------------------------------------------

Outcome three_way() {
    const auto start = std::chrono::steady_clock::now();
    RunConfig cfg;
    cfg.sigma1 = 0.5;
    cfg.sigma = 1.0;
    cfg.horizon = 0.25;
    cfg.time_level = 16;
    cfg.space_level = 9;
    cfg.particles = 100000;
    cfg.frontier_replicas = 20000;
    cfg.grid_points = 33;
    const CompareResult r = compare_study(cfg);
    const double secs = seconds_since(start);
    const double gap = std::abs(r.A_spde - r.A_particles.mean);
    const bool ok = r.solver_ok && gap <= 0.02 && r.base.distance <= 0.02 && r.refined.distance < r.base.distance &&
                    secs < 300.0;
    return {ok, fmt("A spde %.5f, particles %.5f +- %.5f, frontier %.5f; |gap| %.4f (<= 0.02); "
                    "L2 %.4f -> %.4f (<= 0.02, decreasing); %.0f s (< 300 s)",
                    r.A_spde, r.A_particles.mean, r.A_particles.se, r.A_frontier.mean, gap, r.base.distance,
                    r.refined.distance, secs)};
}

// 3 ------------------------------------------------------------------------

Outcome positivity_and_mass() {
    double worst_under = 0.0, worst_clamp = 0.0, worst_increase = -INFINITY, min_survival = 1.0;
    int failures = 0;
    std::string per_eps;
    const InitialDensity pi0 = bump_density(0.5, 0.25);
    for (double eps : {0.1, 0.5, 1.0}) {
        const ModelParams p = derive_constants(eps, 1.0);
        double eps_survival = 1.0, eps_mass = 1.0;
        for (std::uint64_t s = 0; s < 20; ++s) {
            const auto b = std::make_shared<const BrownianPath>(sample_path(3, s, 1.0, 14));
            SolveConfig sc;
            sc.space_level = 9;
            const SolverTrajectory tr = solve(pi0, b, p, sc);
            if (!tr.ok()) ++failures;
            worst_under = std::min(worst_under, tr.min_before_clamp);
            worst_clamp = std::max(worst_clamp, tr.clamped.back());
            worst_increase = std::max(worst_increase, tr.max_mass_increase);
            eps_mass = std::min(eps_mass, tr.mass.back());
            eps_survival = std::min(eps_survival, positivity_of_survival(b, 1.0, p, pi0, 100000, s + 1));
        }
        min_survival = std::min(min_survival, eps_survival);
        per_eps += fmt("%seps %.1f: particles %.3g, solver %.3g", per_eps.empty() ? "" : "; ", eps, eps_survival, eps_mass);
    }
    const bool ok = failures == 0 && worst_under >= -1e-7 && worst_clamp <= 1e-6 && worst_increase <= 1e-10 &&
                    min_survival > 0.0;
    return {ok, fmt("undershoot %.3g (>= -1e-7), clamped %.3g (<= 1e-6), mass increase %.3g (<= 1e-10), "
                    "min survival (> 0) [%s], failed solves %d",
                    worst_under, worst_clamp, worst_increase, per_eps.c_str(), failures)};
}

// 4 ------------------------------------------------------------------------

RunConfig singular_config() {
    RunConfig cfg;
    cfg.sigma1 = 0.1;
    cfg.sigma = 1.0;
    cfg.horizon = 1.0;
    cfg.time_level = 14;
    cfg.space_level = 9;
    cfg.b_seeds = 20;
    cfg.t0_count = 32;
    cfg.seed = 4;
    return cfg;
}

Outcome singularity_trend() {
    const auto start = std::chrono::steady_clock::now();
    const SingularityResult r = singularity_study(singular_config(), false);
    const double secs = seconds_since(start);
    const double first = r.windows.front().q.median, last = r.windows.back().q.median;
    double cmin = INFINITY, cmax = -INFINITY;
    for (const auto& w : r.control_windows) {
        cmin = std::min(cmin, w.q.median);
        cmax = std::max(cmax, w.q.median);
    }
    const double variation = (cmax - cmin) / cmax;
    const bool ok = r.failed_solves == 0 && last <= 0.5 * first && variation < 0.2 && secs < 1800.0;
    return {ok, fmt("median ratio n=2^4 %.4g, n=2^10 %.4g (<= half); control variation %.1f%% (< 20%%); "
                    "failed solves %d; %.0f s (< 1800 s)",
                    first, last, 100.0 * variation, r.failed_solves, secs)};
}

// 5 ------------------------------------------------------------------------

Outcome boundary_trend() {
    RunConfig cfg = singular_config();
    cfg.t0_count = 1;
    cfg.t0_first = cfg.t0_last = 0.125;
    cfg.boundary_time = 0.5;
    cfg.offset_min_log2 = 4;
    cfg.offset_max_log2 = 9;
    cfg.frontier_replicas = 100000;
    // SE of the smallest-offset control ratio is about 0.006 here, a quarter of the 5% band
    cfg.control_replicas = 20000000;
    const SingularityResult r = singularity_study(cfg, true);
    bool decreasing = true;
    std::string medians;
    for (std::size_t j = 0; j < r.boundary_median.size(); ++j) {
        if (j > 0 && !(r.boundary_median[j] < r.boundary_median[j - 1])) decreasing = false;
        medians += fmt("%s%.3g", j ? " " : "", r.boundary_median[j]);
    }
    const BoundaryRatio& c = r.control_boundary.back();
    const double rel = std::abs(c.ratio - r.control_derivative) / r.control_derivative;
    return {decreasing && rel <= 0.05,
            fmt("medians [%s] strictly decreasing: %s; control %.4f +- %.4f vs kernel derivative %.5f (%.1f%%, <= 5%%)",
                medians.c_str(), decreasing ? "yes" : "no", c.ratio, c.se, r.control_derivative, 100.0 * rel)};
}

// 6 ------------------------------------------------------------------------

Outcome bounds_pipeline() {
    const auto start = std::chrono::steady_clock::now();
    std::mt19937_64 gen(6);
    std::uniform_real_distribution<double> u(1e-6, 1.0 - 1e-6);
    double worst = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const BetaValue v = beta_of(u(gen), u(gen));
        worst = std::max(worst, std::abs(v.beta - v.beta_alt) / std::max(1.0, v.beta));
    }
    const Estimate g = gamma_prob(1.0, 1.0, 1.0, 100000, 6);
    const double gr = gamblers_ruin_bound(1.0, 1.0);
    const double nu = nu_remark(0.0, 1.0);
    const Lemma31Report L = lemma31_check(0.5, 8.0, 60, 10000, 6);
    const auto m = static_cast<std::size_t>(L.K / 2);
    const double z = std::abs(L.frequency[m] - L.alpha) / L.frequency_se[m];
    const double secs = seconds_since(start);
    const bool ok = worst <= 1e-12 && g.mean >= gr - 3 * g.se && std::abs(nu - 0.241971) <= 1e-6 && z <= 3.0 && secs < 600.0;
    return {ok, fmt("beta identity %.2g (<= 1e-12); gamma %.5f +- %.5f vs ruin bound %.5f; nu_remark %.7f; "
                    "indicator frequency at m=%zu %.5f, %.2f SE from %.5f; %.0f s (< 600 s)",
                    worst, g.mean, g.se, gr, nu, m, L.frequency[m], z, L.alpha, secs)};
}

// 7 ------------------------------------------------------------------------

Outcome reproducibility() {
    const fs::path root = fs::temp_directory_path() / "exitsim_acceptance_repro";
    fs::remove_all(root);
    std::vector<ExperimentPlan> plans;
    RunConfig small;
    small.space_level = 7;
    small.time_level = 12;
    small.horizon = 0.25;
    small.b_seeds = 2;
    small.particles = 5000;
    small.frontier_replicas = 2000;
    small.control_replicas = 2000;
    small.range_replicas = 2000;
    small.gamma_replicas = 2000;
    small.lemma_seeds = 1000;
    small.t0_count = 4;
    small.t0_first = 0.0;
    small.t0_last = 0.125;
    small.n_min_log2 = 3;
    small.n_max_log2 = 6;
    small.boundary_time = 0.125;
    small.offset_max_log2 = 6;
    for (const char* kind : kExperimentKinds) plans.push_back({kind, small, {}, true});
    int files = 0, mismatches = 0;
    for (auto& plan : plans) {
        plan.out = root / "a" / plan.kind;
        run(plan);
        plan.out = root / "b" / plan.kind;
        run(plan);
        const auto manifest = nlohmann::json::parse(read_file(root / "a" / plan.kind / "manifest.json"));
        for (const auto& f : manifest["runs"][0]["files"]) {
            const std::string name = f["name"];
            ++files;
            if (read_file(root / "a" / plan.kind / name) != read_file(root / "b" / plan.kind / name)) ++mismatches;
        }
        if (read_file(root / "a" / plan.kind / "manifest.json") != read_file(root / "b" / plan.kind / "manifest.json")) {
            ++mismatches;
        }
    }
    fs::remove_all(root);
    return {mismatches == 0 && files > 0, fmt("%d files over %zu experiment kinds, %d differ", files, plans.size(), mismatches)};
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
        {"1 kernel agreement", kernel_agreement},
        {"2 three-way consistency", three_way},
        {"3 positivity and mass", positivity_and_mass},
        {"4 singularity trend", singularity_trend},
        {"5 boundary derivative trend", boundary_trend},
        {"6 bounds pipeline", bounds_pipeline},
        {"7 reproducibility", reproducibility},
    };
    int failed = 0;
    for (const auto& [name, check] : criteria) {
        Outcome o;
        try {
            o = check();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        if (!o.pass) ++failed;
        std::printf("%s  %s: %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
