#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>

#include "dyn/errors.hpp"
#include "dyn/harness.hpp"

namespace {

struct Overrides {
    std::uint64_t seed = 0;
    std::int64_t budget = 0;
    int jobs = 0;
    std::string out_dir;
};

dyn::ExperimentConfig load(const std::string& path, const Overrides& o, CLI::App& app)
{
    auto cfg = dyn::load_config(path);
    if (app.count("--seed"))
        cfg.seed = o.seed;
    if (app.count("--budget"))
        cfg.budget = o.budget;
    if (app.count("--jobs"))
        cfg.jobs = o.jobs;
    if (app.count("--out-dir"))
        cfg.out_dir = o.out_dir;
    else if (cfg.out_dir.empty())
        if (const char* env = std::getenv("DYNLAB_OUT_DIR"))
            cfg.out_dir = env;
    dyn::validate_config(cfg);
    return cfg;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Blender and IFS experiment driver"};
    app.require_subcommand(1);
    Overrides o;
    app.add_option("--seed", o.seed, "override the config seed");
    app.add_option("--budget", o.budget, "override the visit budget")->check(CLI::PositiveNumber);
    app.add_option("--jobs", o.jobs, "worker threads")->check(CLI::Range(1, 256));
    app.add_option("--out-dir", o.out_dir, "report directory (default $DYNLAB_OUT_DIR)");

    std::string config, filter;
    auto* run = app.add_subcommand("run", "run an experiment config");
    run->add_option("config", config, "config file")->required();
    auto* list = app.add_subcommand("list", "list the experiment presets");
    list->add_option("filter", filter, "substring of the preset name");
    auto* validate = app.add_subcommand("validate", "check a config without running it");
    validate->add_option("config", config, "config file")->required();
    app.fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : dyn::exit_config;
    }

    try {
        if (*list) {
            std::cout << dyn::format_experiment_list(filter);
            return dyn::exit_pass;
        }
        auto cfg = load(config, o, app);
        if (*validate) {
            std::cout << "ok: " << cfg.experiment << "\n";
            return dyn::exit_pass;
        }
        auto report = dyn::run_experiment(cfg);
        for (const auto& [name, c] : report.checks)
            std::cout << (c.pass ? "PASS " : "FAIL ") << name << ": " << c.detail << "\n";
        for (const auto& a : report.artifacts)
            std::cout << "wrote " << a << "\n";
        return report.exit_code();
    } catch (const dyn::ConfigInvalid& e) {
        std::cerr << e.what() << "\n";
        return dyn::exit_config;
    } catch (const dyn::BudgetExhausted& e) {
        std::cerr << e.what() << "\n";
        return dyn::exit_budget;
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return dyn::exit_fail;
    }
}
