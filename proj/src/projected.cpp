#include "lfv/projected.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace lfv {

void DiffusionParams::validate() const {
    require(a >= 0.0, "diffusion: a must be >= 0");
    require(x0 >= 0.0, "diffusion: x0 must be >= 0");
}

double selective_parent_probability(double w, int zeta, const SelectionSpec& spec) {
    const double r = spec.sigma(Type::Rare, zeta) * w;
    const double c = spec.sigma(Type::Common, zeta) * (1.0 - w);
    return r / (r + c);
}

double projected_update(double w, double impact, bool parent_rare) {
    return std::clamp((1.0 - impact) * w + (parent_rare ? impact : 0.0), 0.0, 1.0);
}

DensityState projected_event(DensityState state, EventKind kind, double impact, int zeta,
                             const SelectionSpec& spec, Rng& rng) {
    require(impact >= 0.0 && impact < 1.0, "impact must lie in [0, 1)");
    const double p = kind == EventKind::Neutral ? state.w : selective_parent_probability(state.w, zeta, spec);
    const bool rare = uniform01(rng) < p;
    state.w = projected_update(state.w, impact, rare);
    return state;
}

Trajectory run_projected(const ScaledRates& rates, const SelectionSpec& spec, const EnvSpec& env_spec,
                         const ProjectedOptions& opt, Rng& rng) {
    rates.validate();
    require(env_spec.kind == EnvKind::GlobalFlip, "non-spatial runs use the global-flip environment");
    const double K = rates.total_intensity;
    require(opt.x0 >= 0.0 && opt.x0 <= K, "x0 must lie in [0, K]");
    Environment env(EnvSpec{EnvKind::GlobalFlip, 1.0, rates.env_rate});
    EnvState es = env.initial(rng);

    Trajectory tr;
    tr.times = time_grid(opt.horizon, opt.record_every);
    tr.values.reserve(tr.times.size());

    const double inf = std::numeric_limits<double>::infinity();
    auto draw = [&](double rate) { return rate > 0.0 ? exponential(rng, rate) : inf; };
    double t_env = draw(rates.env_rate);
    double t_neu = draw(rates.neutral_rate);
    double t_sel = draw(rates.selective_rate);
    std::size_t next_rec = 0;
    DensityState st{opt.x0 / K, 0.0};

    for (;;) {
        const double t = std::min({t_env, t_neu, t_sel});
        while (next_rec < tr.times.size() && tr.times[next_rec] < t) {
            tr.values.push_back(K * st.w);
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
        st = projected_event(st, kind, rates.impact, es.field[0], spec, rng);
        st.t = t;
        ++tr.events;
        if (kind == EventKind::Neutral) t_neu = t + draw(rates.neutral_rate);
        else t_sel = t + draw(rates.selective_rate);
        if (opt.guard > 0.0 && K * st.w > opt.guard) {
            tr.stopped = true;
            tr.stop_time = t;
            while (tr.values.size() < tr.times.size()) tr.values.push_back(K * st.w);
            break;
        }
    }
    return tr;
}

double feller_step_with_noise(double y, const DiffusionParams& p, double dt, double z) {
    if (y <= 0.0) return 0.0;
    const double next = y + p.b * y * dt + std::sqrt(2.0 * p.a * y * dt) * z;
    return std::max(next, 0.0);
}

double feller_re_step_with_noise(double y, const DiffusionParams& p, double dt, double z) {
    if (y <= 0.0) return 0.0;
    const double b2 = p.b * p.b;
    const double next = y + b2 * y * dt + std::sqrt(2.0 * (p.a * y + b2 * y * y) * dt) * z;
    return std::max(next, 0.0);
}

double feller_step(double y, const DiffusionParams& p, double dt, Rng& rng) {
    require(dt > 0.0, "dt must be positive");
    return feller_step_with_noise(y, p, dt, std_normal(rng));
}

double feller_re_step(double y, const DiffusionParams& p, double dt, Rng& rng) {
    require(dt > 0.0, "dt must be positive");
    return feller_re_step_with_noise(y, p, dt, std_normal(rng));
}

Trajectory run_diffusion(const DiffusionParams& p, DiffusionKind kind, double horizon, double dt,
                         double record_every, Rng& rng) {
    p.validate();
    require(dt > 0.0, "dt must be positive");
    Trajectory tr;
    tr.times = time_grid(horizon, record_every);
    tr.values.reserve(tr.times.size());
    double y = p.x0;
    double t = 0.0;
    tr.values.push_back(y);
    for (std::size_t k = 1; k < tr.times.size(); ++k) {
        const double target = tr.times[k];
        while (t < target - 1e-12) {
            const double h = std::min(dt, target - t);
            y = kind == DiffusionKind::Feller ? feller_step(y, p, h, rng) : feller_re_step(y, p, h, rng);
            t += h;
            ++tr.events;
        }
        t = target;
        tr.values.push_back(y);
    }
    return tr;
}

std::pair<double, double> moment_oracle(const DiffusionParams& p, double t, DiffusionKind kind) {
    p.validate();
    require(t >= 0.0, "moment_oracle: t must be >= 0");
    if (t == 0.0) return {p.x0, 0.0};
    const int steps = 10000;
    const double h = t / steps;
    // (m1, m2)' = A (m1, m2)
    double a11, a21, a22;
    if (kind == DiffusionKind::Feller) {
        a11 = p.b;
        a21 = 2.0 * p.a;
        a22 = 2.0 * p.b;
    } else {
        a11 = p.b * p.b;
        a21 = 2.0 * p.a;
        a22 = 4.0 * p.b * p.b;
    }
    auto f = [&](double m1, double m2, double& d1, double& d2) {
        d1 = a11 * m1;
        d2 = a21 * m1 + a22 * m2;
    };
    double m1 = p.x0, m2 = p.x0 * p.x0;
    for (int k = 0; k < steps; ++k) {
        double k1a, k1b, k2a, k2b, k3a, k3b, k4a, k4b;
        f(m1, m2, k1a, k1b);
        f(m1 + 0.5 * h * k1a, m2 + 0.5 * h * k1b, k2a, k2b);
        f(m1 + 0.5 * h * k2a, m2 + 0.5 * h * k2b, k3a, k3b);
        f(m1 + h * k3a, m2 + h * k3b, k4a, k4b);
        m1 += h / 6.0 * (k1a + 2.0 * k2a + 2.0 * k3a + k4a);
        m2 += h / 6.0 * (k1b + 2.0 * k2b + 2.0 * k3b + k4b);
    }
    return {m1, m2 - m1 * m1};
}

}  // namespace lfv
