#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "dyn/errors.hpp"
#include "dyn/harness.hpp"

namespace dyn {

namespace {

namespace pt = boost::property_tree;

double parse_number(const std::string& path, const std::string& text)
{
    size_t used = 0;
    double v = 0;
    try {
        v = std::stod(text, &used);
    } catch (const std::exception&) {
        throw ConfigInvalid(path + ": not a number: '" + text + "'");
    }
    while (used < text.size() && std::isspace(static_cast<unsigned char>(text[used])))
        ++used;
    if (used != text.size() || !std::isfinite(v))
        throw ConfigInvalid(path + ": not a number: '" + text + "'");
    return v;
}

bool parse_bool(const std::string& path, const std::string& text)
{
    if (text == "true" || text == "1" || text == "yes")
        return true;
    if (text == "false" || text == "0" || text == "no")
        return false;
    throw ConfigInvalid(path + ": expected true or false, got '" + text + "'");
}

void check_keys(const pt::ptree& section, const std::string& name, const std::set<std::string>& allowed)
{
    for (const auto& [key, child] : section) {
        if (!child.empty())
            throw ConfigInvalid(name + "." + key + ": nested keys are not allowed");
        if (!allowed.count(key))
            throw ConfigInvalid(name + "." + key + ": unknown key");
    }
}

}  // namespace

ExperimentConfig parse_config(const std::string& text)
{
    pt::ptree tree;
    std::istringstream in(text);
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigInvalid("line " + std::to_string(e.line()) + ": " + e.message());
    }

    ExperimentConfig cfg;
    for (const auto& [name, section] : tree) {
        if (section.empty() && !section.data().empty())
            throw ConfigInvalid(name + ": keys must be inside a section");
        if (name == "experiment") {
            check_keys(section, name, {"name", "seed", "budget", "jobs"});
            cfg.experiment = section.get<std::string>("name", "");
            if (auto s = section.get_optional<std::string>("seed")) {
                double v = parse_number("experiment.seed", *s);
                if (v < 0 || v != std::floor(v) || v > 9.007199254740992e15)
                    throw ConfigInvalid("experiment.seed: expected a non-negative integer");
                cfg.seed = static_cast<std::uint64_t>(v);
            }
            if (auto s = section.get_optional<std::string>("budget")) {
                double v = parse_number("experiment.budget", *s);
                if (v < 1 || v != std::floor(v))
                    throw ConfigInvalid("experiment.budget: expected a positive integer");
                cfg.budget = static_cast<std::int64_t>(v);
            }
            if (auto s = section.get_optional<std::string>("jobs")) {
                double v = parse_number("experiment.jobs", *s);
                if (v < 1 || v > 256 || v != std::floor(v))
                    throw ConfigInvalid("experiment.jobs: expected an integer in [1, 256]");
                cfg.jobs = static_cast<int>(v);
            }
        } else if (name == "output") {
            check_keys(section, name, {"dir", "json", "csv"});
            cfg.out_dir = section.get<std::string>("dir", "");
            if (auto s = section.get_optional<std::string>("json"))
                cfg.json = parse_bool("output.json", *s);
            if (auto s = section.get_optional<std::string>("csv"))
                cfg.csv = parse_bool("output.csv", *s);
        } else if (name == "params") {
            for (const auto& [key, child] : section) {
                if (!child.empty())
                    throw ConfigInvalid("params." + key + ": nested keys are not allowed");
                cfg.params[key] = parse_number("params." + key, child.data());
            }
        } else {
            throw ConfigInvalid(name + ": unknown section");
        }
    }
    validate_config(cfg);
    return cfg;
}

ExperimentConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigInvalid("cannot read config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

void validate_config(ExperimentConfig& cfg)
{
    if (cfg.experiment.empty())
        throw ConfigInvalid("experiment.name: missing");
    const Preset* preset = nullptr;
    try {
        preset = &find_preset(cfg.experiment);
    } catch (const Error&) {
        throw ConfigInvalid("experiment.name: unknown experiment '" + cfg.experiment + "'");
    }
    if (cfg.jobs < 1)
        throw ConfigInvalid("experiment.jobs: must be at least 1");
    if (cfg.budget && *cfg.budget < 1)
        throw ConfigInvalid("experiment.budget: must be positive");

    std::map<std::string, const ParamSpec*> specs;
    for (const auto& s : preset->params)
        specs[s.key] = &s;
    for (const auto& [key, v] : cfg.params) {
        auto it = specs.find(key);
        if (it == specs.end())
            throw ConfigInvalid("params." + key + ": unknown key for " + cfg.experiment);
        const auto& s = *it->second;
        if (v < s.min || v > s.max) {
            std::ostringstream msg;
            msg << "params." << key << ": " << v << " outside [" << s.min << ", " << s.max << "]";
            throw ConfigInvalid(msg.str());
        }
        if (s.integer && v != std::floor(v))
            throw ConfigInvalid("params." + key + ": expected an integer");
    }
    for (const auto& s : preset->params)
        cfg.params.emplace(s.key, s.value);

    // feasibility of the perturbation schedule
    if (cfg.experiment == "f-mu-minimality") {
        int symbols = static_cast<int>(cfg.params["symbols"]);
        int l = static_cast<int>(cfg.params["l"]);
        if (symbols - 1 < 2 * l + 4)
            throw ConfigInvalid("params.symbols: need symbols - 1 >= 2 l + 4");
        double delta = cfg.params["delta"];
        int k = static_cast<int>(cfg.params["k"]);
        if (!(std::pow(1 - delta, k) > 0.5))
            throw ConfigInvalid("params.k: (1 - delta)^k must exceed 1/2");
    }
}

ExperimentConfig default_config(const std::string& experiment)
{
    ExperimentConfig cfg;
    cfg.experiment = experiment;
    validate_config(cfg);
    return cfg;
}

ExperimentConfig with_param(ExperimentConfig cfg, const std::string& key, double value)
{
    cfg.params[key] = value;
    validate_config(cfg);
    return cfg;
}

}  // namespace dyn
