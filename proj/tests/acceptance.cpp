// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.
#include <chrono>
#include <cstdio>
#include <exception>
#include <functional>
#include <string>
#include <vector>

#include "dyn/harness.hpp"

using namespace dyn;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

ExperimentConfig config(const std::string& name, const std::vector<std::pair<std::string, double>>& params)
{
    auto cfg = default_config(name);
    for (const auto& [k, v] : params)
        cfg.params[k] = v;
    validate_config(cfg);
    return cfg;
}

// all listed checks of the report pass; detail collects theirs
Outcome checks(const Report& r, const std::vector<std::string>& names)
{
    Outcome o{true, ""};
    for (const auto& n : names) {
        auto it = r.checks.find(n);
        bool ok = it != r.checks.end() && it->second.pass;
        o.pass = o.pass && ok;
        o.detail += (o.detail.empty() ? "" : "; ") + n + (it == r.checks.end() ? " missing" : ": " + it->second.detail);
    }
    return o;
}

void merge(Outcome& into, const Outcome& o)
{
    into.pass = into.pass && o.pass;
    into.detail += (into.detail.empty() ? "" : " | ") + o.detail;
}

}  // namespace

int main()
{
    struct Criterion {
        int id;
        std::string name;
        double limit;  // seconds
        std::function<Outcome()> run;
    };
    std::vector<Criterion> criteria;

    criteria.push_back({1, "projected unstable set equals the IFS orbit, n <= 8", 10, [] {
        auto r = run_experiment(config("skew-unstable-equivalence",
                                       {{"depth", 8}, {"eps", 1.0 / 256}, {"exact_depth", 0}, {"points", 1}}));
        return checks(r, {"projection-dyadic", "projection-overlap"});
    }});
    criteria.push_back({2, "unstable enumeration leaf-for-leaf, n <= 6, d <= 3, exact", 5, [] {
        auto r = run_experiment(
            config("skew-unstable-equivalence", {{"depth", 0}, {"exact_depth", 6}, {"symbols", 3}, {"points", 4}}));
        return checks(r, {"exact-leaves"});
    }});
    auto construct = [](int perturbations) {
        Outcome all{true, ""};
        for (int n : {1, 2})
            for (double lam : {0.3, 0.5, 0.7}) {
                auto r = run_experiment(config("ifs-construct", {{"n", n},
                                                                 {"lambda", lam},
                                                                 {"radius", 1e-3},
                                                                 {"perturbations", perturbations},
                                                                 {"eta_factor", 0.05}}));
                std::vector<std::string> names{"covering", "well-distributed", "density", "word-length"};
                if (perturbations > 0)
                    names = {"perturbed-covering", "perturbed-well-distributed", "perturbed-density",
                             "perturbed-word-length"};
                auto o = checks(r, names);
                all.pass = all.pass && o.pass;
                if (!o.pass)
                    merge(all, Outcome{false, "n=" + std::to_string(n) + " lambda=" + std::to_string(lam) + ": " + o.detail});
            }
        if (all.pass)
            all.detail = perturbations ? "20 perturbations of 6 constructions" : "6 constructions";
        return all;
    };
    criteria.push_back({3, "translation construction covers, is well distributed and dense", 60,
                        [&] { return construct(0); }});
    criteria.push_back({4, "density survives 20 perturbations at eta = 0.05 lambda", 120,
                        [&] { return construct(20); }});
    criteria.push_back({5, "symbolic blender: 100 strips at depth <= 8, also perturbed", 60, [] {
        auto r = run_experiment(config("symbolic-blender", {{"strips", 100},
                                                             {"eps", 1.0 / 32},
                                                             {"max_depth", 8},
                                                             {"trials", 20},
                                                             {"eta_factor", 0.3}}));
        return checks(r, {"strips-hit", "perturbed-strips-hit"});
    }});
    criteria.push_back({6, "double symplectic blender, 100 strips each way", 120, [] {
        auto r = run_experiment(config("double-blender", {{"strips", 100}, {"tol", 1e-8}}));
        return checks(r, {"s-strips", "u-strips", "symplectic"});
    }});

    Report fmu;
    bool fmu_ran = false;
    auto fmu_report = [&]() -> const Report& {
        if (!fmu_ran) {
            fmu = run_experiment(config("f-mu-minimality", {{"mu", 1},
                                                            {"samples", 64},
                                                            {"depth", 12},
                                                            {"L", 1},
                                                            {"product_samples", 1000},
                                                            {"threshold", 0.95}}));
            fmu_ran = true;
        }
        return fmu;
    };
    criteria.push_back({7, "F_mu is the product at mu = 0 and the block maps at mu > 0", 600,
                        [&] { return checks(fmu_report(), {"product-at-zero", "block-restricted"}); }});
    criteria.push_back({8, "almost minimality on the desk model", 600,
                        [&] { return checks(fmu_report(), {"blender", "almost-minimality"}); }});
    criteria.push_back({9, "three-generator twist pack covers a 64x64 grid", 300, [] {
        auto cfg = config("twist-transitivity", {{"grid", 64}, {"generators", 3}, {"coverage", 0.99}, {"control", 0.05}});
        cfg.budget = 1000000;
        return checks(run_experiment(cfg), {"pack-coverage", "single-twist-control"});
    }});
    criteria.push_back({10, "chain of tori from I = 0.1 to I = 0.9 and its shadow", 60, [] {
        auto r = run_experiment(config("chain-shadow", {{"eps", 0.1},
                                                         {"u_level", 0.1},
                                                         {"v_level", 0.9},
                                                         {"u_width", 0.01},
                                                         {"v_width", 0.01},
                                                         {"max_links", 22}}));
        return checks(r, {"chain-length", "shadow-replay"});
    }});
    criteria.push_back({11, "h_eps flow: identity outside, symplectic, moves circles", 30, [] {
        auto r = run_experiment(config("chain-shadow", {{"circle", 0.5}}));
        return checks(r, {"h-flow-identity-outside", "h-flow-symplectic", "h-flow-moves-circle"});
    }});
    criteria.push_back({12, "recurrence on the twist, none on the translation", 10, [] {
        auto r = run_experiment(config("recurrence-fraction", {{"samples", 100}, {"eps", 0.02}, {"horizon", 500}}));
        return checks(r, {"twist-recurrent", "translation-control"});
    }});
    criteria.push_back({13, "re-runs reproduce verdicts and cell sets", 600, [] {
        Outcome o{true, ""};
        for (const auto* p : list_experiments()) {
            auto cfg = default_config(p->name);
            auto a = run_experiment(cfg), b = run_experiment(cfg);
            bool same = a.to_json().dump() == b.to_json().dump() && a.tables.size() == b.tables.size();
            for (const auto& [name, t] : a.tables)
                same = same && b.tables.count(name) && t.to_csv() == b.tables.at(name).to_csv();
            if (!same)
                merge(o, Outcome{false, p->name + " differs"});
        }
        if (o.pass)
            o.detail = std::to_string(list_experiments().size()) + " experiments";
        return o;
    }});

    int failed = 0;
    for (const auto& c : criteria) {
        auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = Outcome{false, std::string("error: ") + e.what()};
        }
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        bool in_time = secs < c.limit;
        bool pass = o.pass && in_time;
        failed += !pass;
        std::printf("%s criterion %d: %s (%.2f s, limit %.0f s)%s\n    %s\n", pass ? "PASS" : "FAIL", c.id,
                    c.name.c_str(), secs, c.limit, in_time ? "" : " over time", o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed ? 1 : 0;
}
