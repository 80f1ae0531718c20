#include "lfv/ensemble.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>

#include "lfv/limit_lookdown.hpp"
#include "lfv/lookdown.hpp"
#include "lfv/projected.hpp"
#include "lfv/spatial.hpp"

#ifndef LFV_VERSION
#define LFV_VERSION "0.0.0"
#endif

namespace lfv {

using nlohmann::json;

std::string code_version() { return LFV_VERSION; }

unsigned default_workers() {
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

Runner make_runner(const RunConfig& cfg) {
    const double horizon = cfg.horizon, rec = cfg.record_every;
    switch (cfg.model) {
    case Model::LfvsfeLookdown: {
        const ScaledRates rates = cfg.schedule.rates(cfg.N);
        LfvsfeOptions opt{cfg.x0, cfg.ceiling, horizon, rec, cfg.guard.value_or(0.0)};
        return [rates, spec = cfg.selection, opt](Rng& rng) {
            return run_lfvsfe(rates, spec, EnvSpec{}, opt, rng);
        };
    }
    case Model::LfvsfeProjected: {
        const ScaledRates rates = cfg.schedule.rates(cfg.N);
        ProjectedOptions opt{cfg.x0, horizon, rec, cfg.guard.value_or(0.0)};
        return [rates, spec = cfg.selection, opt](Rng& rng) {
            return run_projected(rates, spec, EnvSpec{}, opt, rng);
        };
    }
    case Model::Feller:
    case Model::FellerRe: {
        const DiffusionKind kind = cfg.model == Model::Feller ? DiffusionKind::Feller : DiffusionKind::FellerRe;
        return [p = cfg.diffusion, kind, horizon, dt = cfg.dt, rec](Rng& rng) {
            return run_diffusion(p, kind, horizon, dt, rec, rng);
        };
    }
    default:
        break;
    }

    LimitOptions lopt;
    lopt.x0 = cfg.x0;
    lopt.initial_profile = cfg.initial;
    lopt.horizon = horizon;
    lopt.record_every = rec;
    lopt.dt = cfg.dt;
    lopt.max_particles = cfg.max_particles;
    lopt.probes = cfg.probes;

    switch (cfg.model) {
    case Model::KrFeller:
        return [p = cfg.limit, lopt](Rng& rng) { return run_kr_feller(p, lopt, rng); };
    case Model::KrFellerRe:
        return [p = cfg.limit, lopt](Rng& rng) { return run_kr_feller_re(p, lopt, rng); };
    case Model::BbmreDirect:
    case Model::BbmreLookdown:
    case Model::SbmreLookdown: {
        EnvSpec es = cfg.env;
        if (cfg.frozen_env) es.change_rate = 0.0;
        auto env = std::make_shared<const Environment>(es, cfg.grid);
        std::shared_ptr<const EnvState> init;
        if (cfg.frozen_env) init = std::make_shared<const EnvState>(env->constant(*cfg.frozen_env));
        const Model m = cfg.model;
        return [p = cfg.limit, lopt, env, init, m](Rng& rng) {
            if (m == Model::BbmreDirect) return run_bbmre_direct(p, *env, init.get(), lopt, rng);
            if (m == Model::BbmreLookdown) return run_bbmre_lookdown(p, *env, init.get(), lopt, rng);
            return run_sbmre_lookdown(p, *env, lopt, rng);
        };
    }
    case Model::Slfvfs:
    case Model::SlfvfsLookdown: {
        const SlfvParams p = cfg.schedule.slfv(cfg.N);
        EnvSpec es = cfg.env;
        es.change_rate = p.env_rate();
        auto env = std::make_shared<const Environment>(es, cfg.grid);
        SpatialOptions opt;
        opt.initial_profile = cfg.initial;
        opt.horizon = horizon;
        opt.record_every = rec;
        opt.probes = cfg.probes;
        opt.guard = cfg.guard.value_or(0.0);
        opt.ceiling = cfg.ceiling;
        const bool lookdown = cfg.model == Model::SlfvfsLookdown;
        return [p, spec = cfg.selection, env, opt, lookdown](Rng& rng) {
            return lookdown ? run_slfvfs_lookdown(p, spec, *env, opt, rng) : run_slfvfs(p, spec, *env, opt, rng);
        };
    }
    case Model::MytnikBrw: {
        auto env = std::make_shared<const Environment>(cfg.env, cfg.grid);
        MytnikOptions opt;
        opt.n = cfg.mytnik_n;
        opt.coupling = cfg.mytnik_coupling;
        opt.initial_profile = cfg.initial;
        opt.horizon = horizon;
        opt.record_every = rec;
        opt.probes = cfg.probes;
        return [env, opt](Rng& rng) { return run_mytnik_brw(*env, opt, rng); };
    }
    default:
        throw ConfigError("no runner for model " + model_name(cfg.model));
    }
}

std::vector<Trajectory> run_replicates(const RunConfig& cfg, unsigned workers) {
    const Runner run = make_runner(cfg);
    const std::uint64_t base = cfg.base_seed;
    return parallel_map<Trajectory>(cfg.replicates, workers, [&](std::size_t i) {
        Rng rng(derive_seed(base, i));
        return run(rng);
    });
}

const std::vector<double>& observable(const RunConfig& cfg, const Trajectory& tr) {
    if (cfg.observable < 0) return tr.values;
    const auto k = static_cast<std::size_t>(cfg.observable);
    if (k >= tr.probe_values.size()) throw ConfigError("trajectory has no readout for the requested probe");
    return tr.probe_values[k];
}

RunReport build_report(const RunConfig& cfg, const std::vector<Trajectory>& runs) {
    RunReport r;
    r.model = model_name(cfg.model);
    r.times = time_grid(cfg.horizon, cfg.record_every);
    r.base_seed = cfg.base_seed;
    r.version = code_version();
    r.config = cfg.source;
    r.config_hash = config_hash(cfg.source);
    std::vector<double> col(runs.size());
    for (std::size_t k = 0; k < r.times.size(); ++k) {
        for (std::size_t i = 0; i < runs.size(); ++i) {
            const auto& v = observable(cfg, runs[i]);
            if (v.size() != r.times.size()) throw std::logic_error("runner returned a trajectory off the time grid");
            col[i] = v[k];
        }
        if (col.size() >= 2) {
            r.rows.push_back(summarize(col));
        } else {
            EnsembleSummary s;
            s.n = col.size();
            s.mean = col.empty() ? 0.0 : col[0];
            r.rows.push_back(s);
        }
    }
    for (const auto& tr : runs) r.stopped += tr.stopped ? 1 : 0;
    r.verdicts["guard_hits"] = r.stopped;
    return r;
}

RunReport simulate(const RunConfig& cfg, unsigned workers) { return build_report(cfg, run_replicates(cfg, workers)); }

std::string report_csv(const RunReport& r) {
    std::string out = "t,mean,se,var,var_lo,var_hi,n\n";
    char buf[512];
    for (std::size_t k = 0; k < r.rows.size(); ++k) {
        const auto& s = r.rows[k];
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%zu\n", r.times[k], s.mean, s.se, s.var,
                      s.var_lo, s.var_hi, s.n);
        out += buf;
    }
    return out;
}

json report_json(const RunReport& r) {
    json j;
    j["model"] = r.model;
    j["rows"] = r.rows.size();
    j["verdicts"] = r.verdicts;
    j["provenance"] = {{"config_hash", r.config_hash},
                       {"base_seed", r.base_seed},
                       {"version", r.version},
                       {"config", r.config}};
    j["final"] = r.rows.empty() ? json(nullptr)
                                : json{{"t", r.times.back()},
                                       {"mean", r.rows.back().mean},
                                       {"se", r.rows.back().se},
                                       {"var", r.rows.back().var}};
    return j;
}

std::string plot_script(const std::string& csv_name) {
    return "#!/usr/bin/env python3\n"
           "import csv, sys\n"
           "import matplotlib\n"
           "matplotlib.use('Agg')\n"
           "import matplotlib.pyplot as plt\n"
           "\n"
           "rows = list(csv.DictReader(open('" + csv_name + "')))\n"
           "t = [float(r['t']) for r in rows]\n"
           "m = [float(r['mean']) for r in rows]\n"
           "se = [float(r['se']) for r in rows]\n"
           "v = [float(r['var']) for r in rows]\n"
           "fig, ax = plt.subplots(1, 2, figsize=(9, 3.5))\n"
           "ax[0].plot(t, m)\n"
           "ax[0].fill_between(t, [a - 2 * b for a, b in zip(m, se)], [a + 2 * b for a, b in zip(m, se)], alpha=0.3)\n"
           "ax[0].set_xlabel('t'); ax[0].set_ylabel('mean')\n"
           "ax[1].plot(t, v)\n"
           "ax[1].set_xlabel('t'); ax[1].set_ylabel('variance')\n"
           "fig.tight_layout()\n"
           "fig.savefig(sys.argv[1] if len(sys.argv) > 1 else 'run.png', dpi=120)\n";
}

void write_report(const RunReport& r, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    auto put = [&](const std::string& name, const std::string& text) {
        std::ofstream f(fs::path(dir) / name, std::ios::binary);
        if (!f) throw std::runtime_error("cannot write " + (fs::path(dir) / name).string());
        f << text;
    };
    put("run.csv", report_csv(r));
    put("report.json", report_json(r).dump(2) + "\n");
    put("plot.py", plot_script("run.csv"));
}

CompareResult compare_marginals(std::span<const double> a, std::span<const double> b, double t, double alpha) {
    CompareResult c;
    c.t = t;
    c.alpha = alpha;
    c.ks = ks_two_sample(a, b);
    c.a = summarize(a);
    c.b = summarize(b);
    c.ks_pass = c.ks.p_value > alpha;
    const double se = std::hypot(c.a.se, c.b.se);
    const double diff = std::abs(c.a.mean - c.b.mean);
    c.mean_pass = se > 0.0 ? diff <= 3.0 * se : diff == 0.0;
    return c;
}

CompareResult compare(const RunConfig& a, const RunConfig& b, unsigned workers, double alpha) {
    if (a.horizon != b.horizon) throw ConfigError("compare: the two configs need the same horizon");
    const auto ra = run_replicates(a, workers);
    const auto rb = run_replicates(b, workers);
    std::vector<double> fa, fb;
    for (const auto& tr : ra) fa.push_back(observable(a, tr).back());
    for (const auto& tr : rb) fb.push_back(observable(b, tr).back());
    return compare_marginals(fa, fb, a.horizon, alpha);
}

CoxDiagnostic diagnose_poisson(const RunConfig& cfg, unsigned workers) {
    if (cfg.model != Model::LfvsfeLookdown) throw ConfigError("diagnose-poisson needs model lfvsfe-lookdown");
    const ScaledRates rates = cfg.schedule.rates(cfg.N);
    const LfvsfeOptions opt{cfg.x0, cfg.ceiling, cfg.horizon, cfg.record_every, cfg.guard.value_or(0.0)};
    const auto configs = parallel_map<std::vector<double>>(cfg.replicates, workers, [&](std::size_t i) {
        Rng rng(derive_seed(cfg.base_seed, i));
        LevelConfig final;
        run_lfvsfe(rates, cfg.selection, EnvSpec{}, opt, rng, &final);
        std::vector<double> levels;
        levels.reserve(final.individuals.size());
        for (const auto& ind : final.individuals) levels.push_back(ind.level);
        return levels;
    });
    const double K = rates.total_intensity, ceiling = cfg.ceiling;
    return laplace_functional_check(
        configs, Window{0.0, ceiling}, [K](double) { return K; },
        [K, ceiling](double l) { return std::exp(-l / ceiling) / (K * ceiling); });
}

}  // namespace lfv
