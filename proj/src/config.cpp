#include "lfv/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace lfv {

using nlohmann::json;

namespace {

const std::vector<std::pair<std::string, Model>> kModels = {
    {"lfvsfe-lookdown", Model::LfvsfeLookdown}, {"lfvsfe-projected", Model::LfvsfeProjected},
    {"feller", Model::Feller},                  {"feller-re", Model::FellerRe},
    {"kr-feller", Model::KrFeller},             {"kr-feller-re", Model::KrFellerRe},
    {"bbmre-direct", Model::BbmreDirect},       {"bbmre-lookdown", Model::BbmreLookdown},
    {"sbmre-lookdown", Model::SbmreLookdown},   {"slfvfs", Model::Slfvfs},
    {"slfvfs-lookdown", Model::SlfvfsLookdown}, {"mytnik-brw", Model::MytnikBrw},
};

/** Object reader that rejects keys nobody asked for. */
class Table {
public:
    Table(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(path_ + ": expected a table");
    }

    bool has(const std::string& k) const { return j_.contains(k); }

    template <class T>
    T get(const std::string& k, T def) {
        used_.insert(k);
        if (!j_.contains(k)) return def;
        return convert<T>(k);
    }

    template <class T>
    T need(const std::string& k) {
        used_.insert(k);
        if (!j_.contains(k)) throw ConfigError(path_ + ": missing key '" + k + "'");
        return convert<T>(k);
    }

    const json& raw(const std::string& k) {
        used_.insert(k);
        return j_.at(k);
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!used_.count(it.key())) throw ConfigError(path_ + ": unknown key '" + it.key() + "'");
    }

    std::string sub(const std::string& k) const { return path_.empty() ? k : path_ + "." + k; }

private:
    template <class T>
    T convert(const std::string& k) const {
        try {
            return j_.at(k).get<T>();
        } catch (const json::exception& e) {
            throw ConfigError(sub(k) + ": " + e.what());
        }
    }

    json j_;
    std::string path_;
    std::set<std::string> used_;
};

PowerLaw power_law(const json& j, const std::string& path) {
    if (j.is_number()) return {j.get<double>(), 0.0};
    if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
        return {j[0].get<double>(), j[1].get<double>()};
    throw ConfigError(path + ": expected a number or [coef, exponent]");
}

Point point(const json& j, const std::string& path) {
    if (!j.is_array() || j.empty() || j.size() > 3) throw ConfigError(path + ": expected 1 to 3 coordinates");
    Point p{0.0, 0.0, 0.0};
    for (std::size_t i = 0; i < j.size(); ++i) p[i] = j[i].get<double>();
    return p;
}

EnvSpec parse_env(Table t, bool allow_rate, std::optional<int>& frozen) {
    EnvSpec e;
    const std::string kind = t.get<std::string>("kind", "global-flip");
    if (kind == "global-flip") e.kind = EnvKind::GlobalFlip;
    else if (kind == "gaussian-threshold") e.kind = EnvKind::GaussianThreshold;
    else throw ConfigError("env.kind: unknown kind '" + kind + "'");
    e.corr_length = t.get<double>("corr_length", 1.0);
    if (allow_rate) e.change_rate = t.get<double>("change_rate", 0.0);
    if (t.has("frozen")) {
        const int v = t.get<int>("frozen", 1);
        if (v != 1 && v != -1) throw ConfigError("env.frozen: must be +1 or -1");
        frozen = v;
    }
    t.finish();
    return e;
}

}  // namespace

Model parse_model(const std::string& name) {
    for (const auto& [n, m] : kModels)
        if (n == name) return m;
    throw ConfigError("unknown model '" + name + "'");
}

std::string model_name(Model m) {
    for (const auto& [n, mm] : kModels)
        if (mm == m) return n;
    return "?";
}

Probe parse_probe(const json& j, int dim) {
    Table t(j, "probe");
    Probe p;
    const std::string kind = t.need<std::string>("kind");
    if (kind == "constant") p.kind = ProbeKind::Constant;
    else if (kind == "indicator-box") p.kind = ProbeKind::IndicatorBox;
    else if (kind == "cosine") p.kind = ProbeKind::Cosine;
    else if (kind == "gaussian-bump") p.kind = ProbeKind::GaussianBump;
    else throw ConfigError("probe.kind: unknown kind '" + kind + "'");
    p.offset = t.get<double>("offset", 0.0);
    p.scale = t.get<double>("scale", 1.0);
    if (t.has("lo")) p.lo = point(t.raw("lo"), "probe.lo");
    if (t.has("hi")) p.hi = point(t.raw("hi"), "probe.hi");
    if (t.has("center")) p.center = point(t.raw("center"), "probe.center");
    if (t.has("mode")) {
        const auto m = t.get<std::vector<int>>("mode", {});
        if (m.empty() || m.size() > 3) throw ConfigError("probe.mode: 1 to 3 integers expected");
        p.mode = {0, 0, 0};
        for (std::size_t i = 0; i < m.size(); ++i) p.mode[i] = m[i];
    }
    p.width = t.get<double>("width", 1.0);
    if (p.width <= 0.0) throw ConfigError("probe.width must be positive");
    (void)dim;
    t.finish();
    return p;
}

RunConfig parse_config(const json& j) {
    RunConfig c;
    c.source = j;
    Table top(j, "");
    c.model = parse_model(top.need<std::string>("model"));
    const long reps = top.get<long>("replicates", 1);
    if (reps < 1) throw ConfigError("replicates must be >= 1");
    c.replicates = static_cast<std::size_t>(reps);
    c.horizon = top.get<double>("horizon", 1.0);
    if (!(c.horizon > 0.0)) throw ConfigError("horizon must be positive");
    c.record_every = top.get<double>("record_every", c.horizon / 10.0);
    if (!(c.record_every > 0.0)) throw ConfigError("record_every must be positive");
    c.base_seed = top.get<std::uint64_t>("base_seed", 0);
    c.output_dir = top.get<std::string>("output_dir", "out");
    {
        const std::string obs = top.get<std::string>("observable", "mass");
        if (obs == "mass") c.observable = -1;
        else if (obs.rfind("probe:", 0) == 0) c.observable = std::stoi(obs.substr(6));
        else throw ConfigError("observable: expected 'mass' or 'probe:<index>'");
    }

    const Model m = c.model;
    const bool uses_schedule = m == Model::LfvsfeLookdown || m == Model::LfvsfeProjected || m == Model::Slfvfs ||
                               m == Model::SlfvfsLookdown;
    const bool spatial_schedule = m == Model::Slfvfs || m == Model::SlfvfsLookdown;
    const bool uses_diffusion = m == Model::Feller || m == Model::FellerRe;
    const bool uses_limit = m == Model::KrFeller || m == Model::KrFellerRe || m == Model::BbmreDirect ||
                            m == Model::BbmreLookdown || m == Model::SbmreLookdown;
    const bool spatial = spatial_schedule || m == Model::BbmreDirect || m == Model::BbmreLookdown ||
                         m == Model::SbmreLookdown || m == Model::MytnikBrw;

    auto reject = [&](const char* key, bool allowed) {
        if (j.contains(key) && !allowed)
            throw ConfigError(std::string("section '") + key + "' does not apply to model " + model_name(m));
    };
    reject("scaling", uses_schedule);
    reject("selection", uses_schedule);
    reject("lookdown", uses_schedule);
    reject("diffusion", uses_diffusion);
    reject("limit", uses_limit);
    reject("env", spatial);
    reject("grid", spatial);
    reject("initial", spatial);
    reject("probes", spatial);
    reject("mytnik", m == Model::MytnikBrw);

    if (spatial) {
        if (j.contains("grid")) {
            Table g(top.raw("grid"), "grid");
            c.grid.dim = g.get<int>("dim", 1);
            c.grid.side_length = g.get<double>("side_length", 1.0);
            c.grid.cells_per_side = g.get<int>("cells_per_side", 64);
            g.finish();
        } else {
            c.grid = Grid{1, 1.0, 64};
        }
        try {
            c.grid.validate();
        } catch (const ParameterError& e) {
            throw ConfigError(std::string("grid: ") + e.what());
        }
        if (j.contains("env")) c.env = parse_env(Table(top.raw("env"), "env"), !spatial_schedule, c.frozen_env);
        if (j.contains("initial")) c.initial = parse_probe(top.raw("initial"), c.grid.dim);
        if (j.contains("probes")) {
            const json& arr = top.raw("probes");
            if (!arr.is_array()) throw ConfigError("probes: expected an array");
            for (const auto& p : arr) c.probes.push_back(parse_probe(p, c.grid.dim));
        }
    }
    if (c.observable >= static_cast<int>(c.probes.size()))
        throw ConfigError("observable refers to a probe that is not configured");

    if (uses_schedule) {
        Table s(j.contains("scaling") ? top.raw("scaling") : json::object(), "scaling");
        const std::string preset = s.get<std::string>("preset", "fluctuating");
        c.N = s.get<double>("N", 1000.0);
        if (!(c.N > 0.0)) throw ConfigError("scaling.N must be positive");
        try {
            if (preset == "fluctuating") {
                c.schedule = fluctuating_schedule(s.get<double>("eps", 0.1), s.get<double>("beta", 0.1),
                                                  s.get<double>("gamma", 0.05), s.get<double>("s0", 1.0),
                                                  s.get<double>("u", 1.0), s.get<bool>("s_decay", true));
            } else if (preset == "critical-neutral") {
                c.schedule = critical_neutral_schedule(s.get<double>("eps", 0.1), s.get<double>("u", 1.0));
            } else if (preset == "custom") {
                ScalingSchedule& sc = c.schedule;
                sc.theorem = parse_theorem(s.need<std::string>("theorem"));
                sc.J = power_law(s.raw("J"), "scaling.J");
                sc.K = power_law(s.raw("K"), "scaling.K");
                if (s.has("M")) sc.M = power_law(s.raw("M"), "scaling.M");
                if (s.has("S")) sc.S = power_law(s.raw("S"), "scaling.S");
                if (s.has("Shat")) sc.Shat = power_law(s.raw("Shat"), "scaling.Shat");
                if (s.has("s")) sc.s = power_law(s.raw("s"), "scaling.s");
                sc.u = s.get<double>("u", 1.0);
                sc.r = s.get<double>("r", 1.0);
                sc.dim = s.get<int>("dim", spatial_schedule ? c.grid.dim : 0);
            } else {
                throw ConfigError("scaling.preset: unknown preset '" + preset + "'");
            }
        } catch (const ParameterError& e) {
            throw ConfigError(std::string("scaling: ") + e.what());
        }
        if (spatial_schedule && preset != "custom")
            throw ConfigError("spatial models need scaling.preset = custom");
        s.finish();

        std::array<double, 2> sr = c.schedule.sigma_rare, sc = c.schedule.sigma_common;
        if (j.contains("selection")) {
            Table t(top.raw("selection"), "selection");
            sr = t.get<std::array<double, 2>>("sigma_rare", sr);
            sc = t.get<std::array<double, 2>>("sigma_common", sc);
            t.finish();
        }
        c.schedule.sigma_rare = sr;
        c.schedule.sigma_common = sc;
        try {
            c.selection = c.schedule.selection();
            c.selection.s = c.schedule.s(c.N);
        } catch (const ParameterError& e) {
            throw ConfigError(std::string("selection: ") + e.what());
        }

        Table l(j.contains("lookdown") ? top.raw("lookdown") : json::object(), "lookdown");
        c.x0 = l.get<double>("x0", 1.0);
        c.ceiling = l.get<double>("ceiling", 20.0);
        if (l.has("guard")) c.guard = l.get<double>("guard", 0.0);
        l.finish();
        if (!(c.ceiling > 0.0)) throw ConfigError("lookdown.ceiling must be positive");
        if (!c.guard) {
            // stopped-process guard: ten times the mean-growth envelope of the initial mass
            const double b = effective_params(c.schedule, c.N).b;
            const double mass0 = spatial_schedule ? total_mass(c.initial, c.grid) : c.x0;
            c.guard = 10.0 * mass0 * std::exp(b * b * c.horizon);
        }
    }

    if (uses_diffusion) {
        Table d(j.contains("diffusion") ? top.raw("diffusion") : json::object(), "diffusion");
        c.diffusion.a = d.get<double>("a", 0.5);
        c.diffusion.b = d.get<double>("b", 0.0);
        c.diffusion.x0 = d.get<double>("x0", 1.0);
        c.dt = d.get<double>("dt", 1e-3);
        d.finish();
        if (c.diffusion.a < 0.0 || c.diffusion.x0 < 0.0 || !(c.dt > 0.0))
            throw ConfigError("diffusion: need a >= 0, x0 >= 0, dt > 0");
    }

    if (uses_limit) {
        Table d(j.contains("limit") ? top.raw("limit") : json::object(), "limit");
        c.limit.a = d.get<double>("a", 0.5);
        c.limit.b = d.get<double>("b", 0.0);
        c.limit.lambda = d.get<double>("lambda", 20.0);
        c.x0 = d.get<double>("x0", 1.0);
        c.dt = d.get<double>("dt", 1e-3);
        c.max_particles = d.get<std::size_t>("max_particles", 1'000'000);
        d.finish();
        if (!(c.limit.a > 0.0) || !(c.limit.lambda > 0.0) || !(c.dt > 0.0) || c.x0 < 0.0)
            throw ConfigError("limit: need a > 0, lambda > 0, dt > 0, x0 >= 0");
    }

    if (m == Model::MytnikBrw) {
        Table t(j.contains("mytnik") ? top.raw("mytnik") : json::object(), "mytnik");
        c.mytnik_n = t.get<std::size_t>("n", 1000);
        c.mytnik_coupling = t.get<double>("coupling", 0.5);
        t.finish();
        if (c.mytnik_n < 4 || 4.0 * c.mytnik_coupling * c.mytnik_coupling > static_cast<double>(c.mytnik_n))
            throw ConfigError("mytnik: need n >= max(4, 4 coupling^2)");
        if (c.env.kind != EnvKind::GaussianThreshold)
            throw ConfigError("mytnik-brw needs env.kind = gaussian-threshold");
    }
    if (m == Model::SbmreLookdown && c.env.kind != EnvKind::GaussianThreshold)
        throw ConfigError("sbmre-lookdown needs env.kind = gaussian-threshold");

    top.finish();
    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(path + ": " + e.what());
    }
    return parse_config(j);
}

std::string config_hash(const json& j) {
    // where the files go does not change what is simulated
    json k = j;
    if (k.is_object()) k.erase("output_dir");
    const std::string s = k.dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace lfv
