#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "lfv/acceptance.hpp"
#include "lfv/config.hpp"
#include "lfv/ensemble.hpp"
#include "lfv/scaling.hpp"

using namespace lfv;

namespace {

struct Common {
    std::vector<std::string> configs;
    std::optional<std::uint64_t> seed;
    unsigned workers = 0;
    std::optional<std::string> out;
};

RunConfig load(const std::string& path, const Common& c) {
    nlohmann::json j;
    {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open config file '" + path + "'");
        try {
            j = nlohmann::json::parse(in);
        } catch (const nlohmann::json::parse_error& e) {
            throw ConfigError(path + ": " + e.what());
        }
    }
    // overrides go through the json so the provenance block reproduces the run
    if (j.is_object()) {
        if (c.seed) j["base_seed"] = *c.seed;
        if (c.out) j["output_dir"] = *c.out;
    }
    return parse_config(j);
}

unsigned workers(const Common& c) { return c.workers == 0 ? default_workers() : c.workers; }

void print_schedule(const ScheduleReport& r) {
    std::printf("schedule %s: %s\n", theorem_name(r.theorem).c_str(), r.pass ? "PASS" : "FAIL");
    for (const auto& c : r.conditions) {
        std::printf("  %-28s %-5s", c.name.c_str(), c.pass ? "ok" : "FAIL");
        if (std::isfinite(c.limit)) std::printf("  limit %.6g", c.limit);
        if (c.witness > 0) std::printf("  m=%d", c.witness);
        std::printf("\n");
    }
}

int cmd_simulate(const Common& c) {
    const RunConfig cfg = load(c.configs.at(0), c);
    const RunReport r = simulate(cfg, workers(c));
    write_report(r, cfg.output_dir);
    std::printf("%s: %zu replicates, %zu rows, final mean %.6g (se %.3g) -> %s/run.csv\n", r.model.c_str(),
                cfg.replicates, r.rows.size(), r.rows.back().mean, r.rows.back().se, cfg.output_dir.c_str());
    return 0;
}

int cmd_validate(const Common& c) {
    const RunConfig cfg = load(c.configs.at(0), c);
    if (!cfg.source.contains("scaling") && cfg.model != Model::LfvsfeLookdown && cfg.model != Model::LfvsfeProjected)
        throw ConfigError("validate-schedule needs a config with a scaling section");
    const ScheduleReport r = validate_schedule(cfg.schedule, default_probe_Ns());
    print_schedule(r);
    return r.pass ? 0 : 1;
}

int cmd_compare(const Common& c) {
    if (c.configs.size() != 2) throw ConfigError("compare needs --config twice");
    const RunConfig a = load(c.configs[0], c), b = load(c.configs[1], c);
    const CompareResult r = compare(a, b, workers(c));
    std::printf("t=%.6g  A: mean %.6g se %.3g (n=%zu)  B: mean %.6g se %.3g (n=%zu)\n", r.t, r.a.mean, r.a.se, r.a.n,
                r.b.mean, r.b.se, r.b.n);
    std::printf("KS D=%.4f p=%.4g  %s; means %s\n", r.ks.statistic, r.ks.p_value, r.ks_pass ? "ok" : "FAIL",
                r.mean_pass ? "ok" : "FAIL");
    std::printf("%s\n", r.pass() ? "PASS" : "FAIL");
    return r.pass() ? 0 : 1;
}

int cmd_diagnose(const Common& c) {
    const RunConfig cfg = load(c.configs.at(0), c);
    const CoxDiagnostic d = diagnose_poisson(cfg, workers(c));
    const bool ok = d.laplace_consistent(3.0) && d.ks_p_value > 0.01;
    std::printf("Laplace: empirical %.6g (se %.3g) vs Poisson %.6g\n", d.laplace_lhs, d.lhs_se, d.laplace_rhs);
    std::printf("gaps: D=%.4f p=%.4g over %zu gaps from %zu configurations\n", d.ks_gap_stat, d.ks_p_value, d.n_gaps,
                d.n_samples);
    std::printf("%s\n", ok ? "PASS" : "FAIL");
    return ok ? 0 : 1;
}

int cmd_accept(const Common& c, const std::vector<int>& only) {
    AcceptanceOptions opt;
    opt.workers = workers(c);
    if (c.seed) opt.seed = *c.seed;
    if (c.out) opt.scratch_dir = *c.out;
    opt.only = only;
    bool all = true;
    for (const auto& r : run_acceptance(opt)) {
        std::printf("%s\n", format_result(r).c_str());
        std::fflush(stdout);
        all = all && r.pass;
    }
    return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Lambda-Fleming-Viot fluctuating-selection simulator"};
    app.set_version_flag("--version", code_version());
    app.require_subcommand(1);

    Common c;
    std::vector<int> only;
    auto add_common = [&](CLI::App* s, bool config_required, bool many) {
        auto* o = s->add_option("--config", c.configs, "run config (JSON)");
        if (config_required) o->required();
        if (!many) o->expected(1);
        s->add_option("--seed", c.seed, "override base_seed");
        s->add_option("--workers", c.workers, "worker threads (0: hardware)");
        s->add_option("--out", c.out, "output directory");
    };
    auto* sim = app.add_subcommand("simulate", "run an ensemble and write run.csv, report.json, plot.py");
    add_common(sim, true, false);
    auto* val = app.add_subcommand("validate-schedule", "check a scaling schedule against its theorem");
    add_common(val, true, false);
    auto* cmp = app.add_subcommand("compare", "KS and mean comparison of two ensembles at the horizon");
    add_common(cmp, true, true);
    auto* dia = app.add_subcommand("diagnose-poisson", "conditionally-Poisson check of lookdown levels");
    add_common(dia, true, false);
    auto* acc = app.add_subcommand("accept", "run the acceptance suite");
    add_common(acc, false, false);
    acc->add_option("--only", only, "criterion numbers to run");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (*sim) return cmd_simulate(c);
        if (*val) return cmd_validate(c);
        if (*cmp) return cmd_compare(c);
        if (*dia) return cmd_diagnose(c);
        if (*acc) return cmd_accept(c, only);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const ParameterError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
