// exitsim <kind> --config <file> [--seed N] [--out DIR] [--plots] [--<key> value ...]

#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "exitsim/exitsim.hpp"

namespace {

std::string kinds_list() {
    std::string s;
    for (const char* k : exitsim::kExperimentKinds) {
        if (!s.empty()) s += ", ";
        s += k;
    }
    return s;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Simulate the conditional exit-time process and its diagnostics"};
    app.set_help_all_flag("--help-all", "List every config key override");

    std::string kind;
    std::string config_path;
    std::string out_dir = "out";
    bool plots = false;
    app.add_option("kind", kind, "Experiment kind: " + kinds_list())->required();
    app.add_option("--config", config_path, "JSON config file (comments allowed)");
    app.add_option("--out", out_dir, "Output directory");
    app.add_flag("--plots", plots, "Also write SVG plots");

    // one override flag per config key; --seed is one of them
    std::map<std::string, std::string> overrides;
    auto* keys = app.add_option_group("config keys", "Override config file values");
    for (const auto& k : exitsim::config_keys()) {
        keys->add_option("--" + std::string(k.name), overrides[k.name], k.doc);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : exitsim::run_usage;
    }

    try {
        if (!exitsim::is_experiment_kind(kind)) {
            throw exitsim::UsageError("unknown experiment kind '" + kind + "' (expected one of " + kinds_list() + ")");
        }
        exitsim::ExperimentPlan plan;
        plan.kind = kind;
        plan.out = out_dir;
        plan.plots = plots;
        if (!config_path.empty()) plan.config = exitsim::load_config(config_path);
        for (const auto& k : exitsim::config_keys()) {
            const auto* opt = keys->get_option("--" + std::string(k.name));
            if (opt->count() > 0) exitsim::set_config_from_string(plan.config, k.name, overrides[k.name]);
        }
        const int status = exitsim::run(plan);
        if (status == exitsim::run_solver_failure) {
            std::cerr << "exitsim: solver failure, see failure files in " << out_dir << "\n";
        }
        return status;
    } catch (const exitsim::UsageError& e) {
        std::cerr << "exitsim: usage error: " << e.what() << "\n";
        return exitsim::run_usage;
    } catch (const exitsim::ParameterError& e) {
        std::cerr << "exitsim: usage error: " << e.what() << "\n";
        return exitsim::run_usage;
    } catch (const std::exception& e) {
        std::cerr << "exitsim: " << e.what() << "\n";
        return exitsim::run_error;
    }
}
