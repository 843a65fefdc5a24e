#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace dyn {

// Config file layout (INI):
//   [experiment]  name, seed, budget, jobs
//   [output]      dir, json, csv
//   [params]      preset-specific keys, see list_experiments()
struct ExperimentConfig {
    std::string experiment;
    std::uint64_t seed = 1;
    std::optional<std::int64_t> budget;
    int jobs = 1;
    std::string out_dir;  // empty: nothing written
    bool json = true;
    bool csv = true;
    std::map<std::string, double> params;  // validated, defaults filled in
};

struct ParamSpec {
    std::string key;
    double value = 0;  // default
    double min = 0, max = 0;
    bool integer = false;
    std::string help;
};

struct CheckOutcome {
    bool pass = false;
    std::string detail;
};

// A plot-ready point cloud: fixed header row, one row per point.
struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    void add(std::vector<std::string> row) { rows.push_back(std::move(row)); }
    std::string to_csv() const;
};

struct Report {
    std::string experiment;
    std::uint64_t seed = 0;
    nlohmann::json config;                       // echo with defaults filled in
    std::map<std::string, CheckOutcome> checks;  // ordered by name
    nlohmann::json metrics = nlohmann::json::object();
    std::map<std::string, Table> tables;         // written as <experiment>-<name>.csv
    std::vector<std::string> artifacts;          // paths written by write_report
    bool budget_exhausted = false;
    double wall_clock = 0;

    bool pass() const;
    // 0 all checks pass, 1 some check failed, 3 a failure with an exhausted budget
    int exit_code() const;
    // timing is left out unless asked for, so that equal runs give equal text
    nlohmann::json to_json(bool with_timing = false) const;
};

struct RunContext {
    const ExperimentConfig& cfg;
    double p(const std::string& key) const { return cfg.params.at(key); }
    int n(const std::string& key) const { return static_cast<int>(cfg.params.at(key)); }
};

struct Preset {
    std::string name;
    std::string exercises;  // the statement the experiment checks
    std::vector<ParamSpec> params;
    std::optional<std::int64_t> default_budget;  // experiments with a visit budget
    std::function<void(const RunContext&, Report&)> run;
};

// The registry; throws std::logic_error when empty.
const std::vector<Preset>& presets();
const Preset& find_preset(const std::string& name);
// Presets whose name contains the filter.
std::vector<const Preset*> list_experiments(const std::string& filter = "");
std::string format_experiment_list(const std::string& filter = "");

// ConfigInvalid with the offending field path (e.g. "params.eps").
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);
// Fills defaults, checks ranges and cross-field feasibility.
void validate_config(ExperimentConfig& cfg);
// A config for the named preset with every parameter at its default.
ExperimentConfig default_config(const std::string& experiment);
// Override a parameter then revalidate.
ExperimentConfig with_param(ExperimentConfig cfg, const std::string& key, double value);

// Runs the preset. Module errors are rethrown as Error with the experiment name prefixed;
// BudgetExhausted marks the report instead of propagating.
Report run_experiment(const ExperimentConfig& cfg);
// Writes <dir>/<experiment>.json and one CSV per table; records the paths.
void write_report(Report& report, const std::string& dir, bool json = true, bool csv = true);

// Exit codes of the command line tool.
enum ExitCode { exit_pass = 0, exit_fail = 1, exit_config = 2, exit_budget = 3 };

}  // namespace dyn
