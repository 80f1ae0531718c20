#include "lfv/lookdown.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lfv/point_process.hpp"
#include "lookdown_core.hpp"

namespace lfv {

SelectionSpec SelectionSpec::make(std::array<double, 2> rare, std::array<double, 2> common, double s,
                                  bool require_symmetry) {
    for (double v : rare) require(v > 0.0, "selection: sigma values must be positive");
    for (double v : common) require(v > 0.0, "selection: sigma values must be positive");
    require(s >= 0.0 && s <= 1.0, "selection: s must lie in [0, 1]");
    SelectionSpec out;
    out.sigma_rare = rare;
    out.sigma_common = common;
    out.s = s;
    if (require_symmetry)
        require(std::abs(out.symmetry_defect()) <= 1e-12,
                "selection: E[sigma_rare/sigma_common - 1] must vanish under the uniform environment law");
    return out;
}

double SelectionSpec::symmetry_defect() const {
    return 0.5 * (sigma_rare[0] / sigma_common[0] - 1.0) + 0.5 * (sigma_rare[1] / sigma_common[1] - 1.0);
}

ScaledRates ScaledRates::from_params(double N, double J, double K, double S, double Shat, double u, double s) {
    ScaledRates r;
    r.neutral_rate = N;
    r.selective_rate = N * Shat * s / S;
    r.env_rate = Shat * Shat;
    r.impact = u / J;
    r.offspring_intensity = u * K / J;
    r.total_intensity = K;
    r.validate();
    return r;
}

void ScaledRates::validate() const {
    require(neutral_rate >= 0.0 && selective_rate >= 0.0 && env_rate >= 0.0, "rates must be nonnegative");
    require(impact >= 0.0 && impact < 1.0, "impact must lie in [0, 1)");
    require(offspring_intensity >= 0.0, "offspring intensity must be nonnegative");
    require(total_intensity > 0.0, "total intensity K must be positive");
}

double j_neu(double l, double l_star, double v_star, double impact) {
    if (!(impact >= 0.0 && impact < 1.0)) throw ParameterError("j_neu: impact must lie in [0, 1)");
    if (l == l_star) return v_star;
    if (l > l_star) return (l - (l_star - v_star)) / (1.0 - impact);
    return l / (1.0 - impact);
}

double j_sel(double l, Type ty, double l_star, Type ty_star, int zeta, double v_star, double impact,
             const SelectionSpec& spec) {
    if (!(impact >= 0.0 && impact < 1.0)) throw ParameterError("j_sel: impact must lie in [0, 1)");
    if (l == l_star) return v_star;
    if (l > v_star)
        return (l - (l_star - v_star) * spec.sigma(ty, zeta) / spec.sigma(ty_star, zeta)) / (1.0 - impact);
    return l / (1.0 - impact);
}

std::optional<Individual> select_parent_neutral(const LevelConfig& config, double v_star) {
    const std::size_t i = detail::parent_index_neutral(config.individuals, v_star);
    if (i >= config.individuals.size()) return std::nullopt;
    return config.individuals[i];
}

std::optional<Individual> select_parent_selective(const LevelConfig& config, double v_star, int zeta,
                                                  const SelectionSpec& spec) {
    const std::size_t i = detail::parent_index_selective(config.individuals, v_star, zeta, spec);
    if (i >= config.individuals.size()) return std::nullopt;
    return config.individuals[i];
}

EventStats apply_event_with_offspring(LevelConfig& config, EventKind kind, const std::vector<double>& offspring,
                                      double impact, int zeta, const SelectionSpec& spec,
                                      std::vector<Individual>& scratch) {
    require(!offspring.empty(), "apply_event_with_offspring: offspring set is empty");
    require(impact >= 0.0 && impact < 1.0, "impact must lie in [0, 1)");
    return detail::apply_core(config.individuals, config.ceiling, kind, offspring, impact, zeta, spec, scratch,
                              [](double l, Type t, std::size_t) { return Individual{l, t}; });
}

EventStats apply_event_inplace(LevelConfig& config, EventKind kind, const ScaledRates& rates, int zeta,
                               const SelectionSpec& spec, Rng& rng, std::vector<Individual>& scratch) {
    static thread_local std::vector<double> offspring;
    offspring.clear();
    const long m = poisson(rng, rates.offspring_intensity * config.ceiling);
    if (m == 0) {
        return detail::thin_all(config.individuals, config.ceiling, rates.impact);
    }
    sample_uniform_sorted(static_cast<std::size_t>(m), Window{0.0, config.ceiling}, rng, offspring);
    return apply_event_with_offspring(config, kind, offspring, rates.impact, zeta, spec, scratch);
}

LevelConfig apply_event(const LevelConfig& config, EventKind kind, const ScaledRates& rates, int zeta,
                        const SelectionSpec& spec, Rng& rng) {
    LevelConfig out = config;
    std::vector<Individual> scratch;
    apply_event_inplace(out, kind, rates, zeta, spec, rng, scratch);
    return out;
}

double rare_mass(const LevelConfig& config) {
    std::size_t k = 0;
    for (const auto& x : config.individuals)
        if (x.ty == Type::Rare && x.level <= config.ceiling) ++k;
    return static_cast<double>(k) / config.ceiling;
}

LevelConfig initial_config(double x0, double K, double ceiling, Rng& rng) {
    require(x0 >= 0.0 && x0 <= K, "initial rare intensity must lie in [0, K]");
    require(ceiling > 0.0, "ceiling must be positive");
    LevelConfig c;
    c.ceiling = ceiling;
    c.total_intensity = K;
    const long nr = poisson(rng, x0 * ceiling);
    const long nc = poisson(rng, (K - x0) * ceiling);
    std::vector<double> levels;
    levels.reserve(static_cast<std::size_t>(nr + nc));
    sample_uniform_sorted(static_cast<std::size_t>(nr + nc), Window{0.0, ceiling}, rng, levels);
    std::vector<Type> types(levels.size(), Type::Common);
    std::fill(types.begin(), types.begin() + nr, Type::Rare);
    std::shuffle(types.begin(), types.end(), rng);
    c.individuals.resize(levels.size());
    for (std::size_t i = 0; i < levels.size(); ++i) c.individuals[i] = {levels[i], types[i]};
    return c;
}

std::vector<double> time_grid(double horizon, double record_every) {
    require(horizon > 0.0, "horizon must be positive");
    require(record_every > 0.0, "record interval must be positive");
    const auto steps = static_cast<std::size_t>(std::llround(std::ceil(horizon / record_every - 1e-9)));
    std::vector<double> g;
    g.reserve(steps + 1);
    for (std::size_t k = 0; k < steps; ++k) g.push_back(static_cast<double>(k) * record_every);
    g.push_back(horizon);
    return g;
}

Trajectory run_lfvsfe(const ScaledRates& rates, const SelectionSpec& spec, const EnvSpec& env_spec,
                      const LfvsfeOptions& opt, Rng& rng, LevelConfig* final_config) {
    rates.validate();
    require(env_spec.kind == EnvKind::GlobalFlip, "non-spatial runs use the global-flip environment");
    Environment env(EnvSpec{EnvKind::GlobalFlip, 1.0, rates.env_rate});
    EnvState es = env.initial(rng);

    LevelConfig cfg = initial_config(opt.x0, rates.total_intensity, opt.ceiling, rng);
    std::vector<Individual> scratch;

    Trajectory tr;
    tr.times = time_grid(opt.horizon, opt.record_every);
    tr.values.reserve(tr.times.size());

    const double inf = std::numeric_limits<double>::infinity();
    auto draw = [&](double rate) { return rate > 0.0 ? exponential(rng, rate) : inf; };
    double t_env = draw(rates.env_rate);
    double t_neu = draw(rates.neutral_rate);
    double t_sel = draw(rates.selective_rate);
    std::size_t next_rec = 0;
    double x = rare_mass(cfg);

    for (;;) {
        const double t = std::min({t_env, t_neu, t_sel});
        while (next_rec < tr.times.size() && tr.times[next_rec] < t) {
            tr.values.push_back(x);
            ++next_rec;
        }
        if (next_rec == tr.times.size()) break;
        if (t_env == t) {
            env.resample(es, t, rng);
            ++es.epoch;
            t_env = t + draw(rates.env_rate);
            continue;
        }
        const EventKind kind = t_neu == t ? EventKind::Neutral : EventKind::Selective;
        const EventStats st = apply_event_inplace(cfg, kind, rates, es.field[0], spec, rng, scratch);
        ++tr.events;
        tr.clamped += st.clamped;
        if (st.untracked_parent) ++tr.untracked_parents;
        if (kind == EventKind::Neutral) t_neu = t + draw(rates.neutral_rate);
        else t_sel = t + draw(rates.selective_rate);
        x = rare_mass(cfg);
        if (opt.guard > 0.0 && x > opt.guard) {
            tr.stopped = true;
            tr.stop_time = t;
            while (tr.values.size() < tr.times.size()) tr.values.push_back(x);
            break;
        }
    }
    if (final_config) *final_config = std::move(cfg);
    return tr;
}

}  // namespace lfv
