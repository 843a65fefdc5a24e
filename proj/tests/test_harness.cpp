#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "dyn/errors.hpp"
#include "dyn/harness.hpp"

using namespace dyn;

namespace {

std::string config_error(const std::string& text)
{
    try {
        parse_config(text);
    } catch (const ConfigInvalid& e) {
        return e.what();
    }
    return "";
}

std::string slurp(const std::string& path)
{
    std::ifstream in(path);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

}  // namespace

TEST_CASE("config parsing")
{
    auto cfg = parse_config("[experiment]\nname = ifs-density\nseed = 7\njobs = 2\n[params]\neps = 0.01\n");
    CHECK(cfg.experiment == "ifs-density");
    CHECK(cfg.seed == 7);
    CHECK(cfg.jobs == 2);
    CHECK(cfg.params.at("eps") == 0.01);
    CHECK(cfg.params.at("targets") == 16);  // default filled in
    CHECK_FALSE(cfg.budget.has_value());

    auto out = parse_config("[experiment]\nname = recurrence-fraction\n[output]\ndir = /tmp/x\ncsv = false\n");
    CHECK(out.out_dir == "/tmp/x");
    CHECK_FALSE(out.csv);
    CHECK(out.json);
}

TEST_CASE("config errors name the field")
{
    CHECK(config_error("[experiment]\nname = ifs-density\n[params]\neps = -0.1\n").find("params.eps") !=
          std::string::npos);
    CHECK(config_error("[experiment]\nname = ifs-density\n[params]\nepsilon = 0.1\n").find("params.epsilon") !=
          std::string::npos);
    CHECK(config_error("[experiment]\nname = ifs-density\ncolour = red\n").find("experiment.colour") !=
          std::string::npos);
    CHECK(config_error("[experiment]\nname = ifs-density\n[params]\neps = abc\n").find("params.eps") !=
          std::string::npos);
    CHECK(config_error("[experiment]\nname = ifs-density\n[params]\ntargets = 2.5\n").find("params.targets") !=
          std::string::npos);
    CHECK(config_error("[experiment]\nname = no-such\n").find("experiment.name") != std::string::npos);
    CHECK(config_error("[experiment]\nseed = 1\n").find("experiment.name") != std::string::npos);
    CHECK(config_error("[experiment]\nname = ifs-density\nseed = -1\n").find("experiment.seed") !=
          std::string::npos);
    CHECK(config_error("[experiment]\nname = ifs-density\n[plots]\nx = 1\n").find("plots") != std::string::npos);
    CHECK(config_error("[experiment]\nname = ifs-density\n[output]\njson = maybe\n").find("output.json") !=
          std::string::npos);
    // feasibility of the block schedule and the weak power
    CHECK(config_error("[experiment]\nname = f-mu-minimality\n[params]\nsymbols = 8\n").find("params.symbols") !=
          std::string::npos);
    CHECK(config_error("[experiment]\nname = f-mu-minimality\n[params]\nk = 7\n").find("params.k") !=
          std::string::npos);
    CHECK(config_error("[experiment]\nname = f-mu-minimality\n[params]\nk = 6\n").empty());
    CHECK_THROWS_AS(load_config("/nonexistent/file.ini"), ConfigInvalid);
}

TEST_CASE("experiment registry")
{
    auto all = list_experiments();
    CHECK(all.size() == 11);
    std::set<std::string> names;
    for (const auto* p : all)
        names.insert(p->name);
    CHECK(names == std::set<std::string>{"ifs-density", "ifs-construct", "skew-unstable-equivalence",
                                         "symbolic-blender", "geometric-blender", "double-blender", "f-mu-minimality",
                                         "twist-transitivity", "chain-shadow", "robustness-sweep",
                                         "recurrence-fraction"});
    CHECK(list_experiments("blender").size() == 3);
    CHECK(list_experiments("zzz").empty());
    auto text = format_experiment_list();
    CHECK(std::count(text.begin(), text.end(), '\n') == 11);
    for (const auto* p : all)
        CHECK_FALSE(p->exercises.empty());
}

TEST_CASE("ifs-density and skew equivalence presets")
{
    auto r = run_experiment(default_config("ifs-density"));
    CHECK(r.pass());
    CHECK(r.exit_code() == exit_pass);
    CHECK(r.tables.at("witnesses").rows.size() == 16);
    CHECK(r.tables.at("witnesses").columns == std::vector<std::string>{"target", "word", "endpoint", "error"});

    auto s = run_experiment(with_param(default_config("skew-unstable-equivalence"), "depth", 6));
    CHECK(s.checks.at("projection-dyadic").pass);
    CHECK(s.checks.at("projection-overlap").pass);
    CHECK(s.checks.at("exact-leaves").pass);
}

TEST_CASE("exit codes")
{
    // nothing returns within one step at radius 1e-9
    auto cfg = default_config("recurrence-fraction");
    cfg = with_param(cfg, "eps", 1e-9);
    cfg = with_param(cfg, "horizon", 1);
    auto r = run_experiment(cfg);
    CHECK_FALSE(r.checks.at("twist-recurrent").pass);
    CHECK(r.exit_code() == exit_fail);

    auto tw = default_config("twist-transitivity");
    tw.budget = 50;
    auto b = run_experiment(tw);
    CHECK(b.budget_exhausted);
    CHECK(b.exit_code() == exit_budget);
}

TEST_CASE("reports are deterministic")
{
    for (const auto* p : list_experiments()) {
        CAPTURE(p->name);
        auto cfg = default_config(p->name);
        cfg.seed = 3;
        auto a = run_experiment(cfg);
        auto b = run_experiment(cfg);
        CHECK(a.to_json().dump() == b.to_json().dump());
        REQUIRE(a.tables.size() == b.tables.size());
        for (const auto& [name, t] : a.tables)
            CHECK(t.to_csv() == b.tables.at(name).to_csv());
    }
}

TEST_CASE("report files")
{
    auto dir = std::filesystem::temp_directory_path() / "dynlab-report-test";
    std::filesystem::remove_all(dir);
    auto cfg = default_config("recurrence-fraction");
    cfg.out_dir = dir.string();
    auto r = run_experiment(cfg);
    REQUIRE(r.artifacts.size() == 2);
    auto csv = slurp((dir / "recurrence-fraction-samples.csv").string());
    CHECK(csv.rfind("I,theta,recurrent\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 101);
    auto j = nlohmann::json::parse(slurp((dir / "recurrence-fraction.json").string()));
    CHECK(j["experiment"] == "recurrence-fraction");
    CHECK(j["pass"] == true);
    CHECK(j["checks"]["twist-recurrent"]["pass"] == true);
    CHECK(j["config"]["params"]["samples"] == 100);
    CHECK(j.contains("wall_clock_s"));
    CHECK_FALSE(r.to_json().contains("wall_clock_s"));

    Table t{{"a", "b"}, {{"1", "x,y"}, {"2", "say \"hi\""}}};
    CHECK(t.to_csv() == "a,b\n1,\"x,y\"\n2,\"say \"\"hi\"\"\"\n");
    std::filesystem::remove_all(dir);
}
