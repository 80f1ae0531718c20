#include "lfv/spatial.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "lfv/point_process.hpp"
#include "lfv/projected.hpp"
#include "lfv/stats.hpp"
#include "lookdown_core.hpp"

namespace lfv {

double SlfvParams::neutral_rate_density(int dim) const { return N * std::pow(M, dim); }

double SlfvParams::selective_rate_density(int dim) const { return N * Shat * s / S * std::pow(M, dim); }

void SlfvParams::validate() const {
    require(N > 0 && J > 0 && K > 0 && M > 0 && S > 0 && Shat > 0, "spatial parameters must be positive");
    require(u > 0.0 && u < 1.0, "u must lie in (0, 1)");
    require(impact() < 1.0, "impact u/J must be < 1");
    require(s >= 0.0 && s <= 1.0, "s must lie in [0, 1]");
    require(r > 0.0, "r must be positive");
}

double unit_ball_volume(int d) {
    switch (d) {
    case 0: return 1.0;
    case 1: return 2.0;
    case 2: return std::numbers::pi;
    case 3: return 4.0 / 3.0 * std::numbers::pi;
    default: throw ParameterError("unit_ball_volume: dimension must be 0..3");
    }
}

void covered_cells(const Grid& g, const Point& center, double radius, std::vector<std::size_t>& out) {
    out.clear();
    require(2.0 * radius < g.side_length, "event radius must be below half the torus side");
    const double h = g.cell_size();
    const int n = g.cells_per_side;
    std::array<int, 3> lo{0, 0, 0}, hi{0, 0, 0};
    for (int j = 0; j < g.dim; ++j) {
        lo[j] = static_cast<int>(std::ceil((center[j] - radius) / h - 0.5));
        hi[j] = static_cast<int>(std::floor((center[j] + radius) / h - 0.5));
    }
    const double r2 = radius * radius;
    auto wrap_idx = [n](int i) { return ((i % n) + n) % n; };
    for (int k = lo[2]; k <= hi[2]; ++k) {
        const double dz = g.dim > 2 ? (k + 0.5) * h - center[2] : 0.0;
        for (int j = lo[1]; j <= hi[1]; ++j) {
            const double dy = g.dim > 1 ? (j + 0.5) * h - center[1] : 0.0;
            for (int i = lo[0]; i <= hi[0]; ++i) {
                const double dx = (i + 0.5) * h - center[0];
                if (dx * dx + dy * dy + dz * dz > r2) continue;
                std::size_t idx = static_cast<std::size_t>(wrap_idx(i));
                if (g.dim > 1) idx += static_cast<std::size_t>(n) * static_cast<std::size_t>(wrap_idx(j));
                if (g.dim > 2)
                    idx += static_cast<std::size_t>(n) * static_cast<std::size_t>(n) *
                           static_cast<std::size_t>(wrap_idx(k));
                out.push_back(idx);
            }
        }
    }
}

Point uniform_in_ball(const Grid& g, const Point& center, double radius, Rng& rng) {
    for (;;) {
        Point off{0.0, 0.0, 0.0};
        double r2 = 0.0;
        for (int j = 0; j < g.dim; ++j) {
            off[j] = (2.0 * uniform01(rng) - 1.0) * radius;
            r2 += off[j] * off[j];
        }
        if (r2 > radius * radius) continue;
        Point y = center;
        for (int j = 0; j < g.dim; ++j) y[j] += off[j];
        return g.wrap(y);
    }
}

void slfvfs_event_forced(SpatialDensity& field, const SpatialEvent& ev, const Grid& g, bool parent_rare) {
    static thread_local std::vector<std::size_t> cells;
    covered_cells(g, ev.center, ev.radius, cells);
    for (std::size_t c : cells) field.w[c] = projected_update(field.w[c], ev.impact, parent_rare);
}

void slfvfs_event(SpatialDensity& field, const SpatialEvent& ev, const Environment& env, const EnvState& es,
                  const SelectionSpec& spec, Rng& rng) {
    const Grid& g = env.grid();
    const Point y = uniform_in_ball(g, ev.center, ev.radius, rng);
    const double w = field.w[g.cell_index(y)];
    const double p = ev.kind == EventKind::Neutral ? w : selective_parent_probability(w, env.query(es, y), spec);
    const bool rare = uniform01(rng) < p;
    slfvfs_event_forced(field, ev, g, rare);
}

double readout(const SpatialDensity& field, const Grid& g, const Probe& phi) {
    double s = 0.0;
    for (std::size_t c = 0; c < field.w.size(); ++c) s += field.w[c] * phi.value(g.cell_center(c), g);
    return s * field.K * g.cell_volume();
}

namespace {

Point uniform_on_torus(const Grid& g, Rng& rng) {
    Point x{0.0, 0.0, 0.0};
    for (int j = 0; j < g.dim; ++j) {
        x[j] = uniform01(rng) * g.side_length;
        if (x[j] >= g.side_length) x[j] = 0.0;
    }
    return x;
}

/** Shared driver for the two spatial event-driven models. */
template <class State, class Apply, class Observe>
Trajectory drive_spatial(const SlfvParams& p, const Environment& env, const SpatialOptions& opt, Rng& rng,
                         State& state, Apply&& apply, Observe&& observe) {
    const Grid& g = env.grid();
    const double vol = g.volume();
    const double r_neu = p.neutral_rate_density(g.dim) * vol;
    const double r_sel = p.selective_rate_density(g.dim) * vol;
    const double r_env = p.env_rate();
    EnvState es = env.initial(rng);

    Trajectory tr;
    tr.times = time_grid(opt.horizon, opt.record_every);
    tr.probe_values.assign(opt.probes.size(), {});
    const double inf = std::numeric_limits<double>::infinity();
    auto draw = [&](double rate) { return rate > 0.0 ? exponential(rng, rate) : inf; };
    double t_env = draw(r_env), t_neu = draw(r_neu), t_sel = draw(r_sel);
    std::size_t next_rec = 0;
    double mass = observe(state, nullptr);

    for (;;) {
        const double t = std::min({t_env, t_neu, t_sel});
        while (next_rec < tr.times.size() && tr.times[next_rec] < t) {
            tr.values.push_back(mass);
            for (std::size_t j = 0; j < opt.probes.size(); ++j)
                tr.probe_values[j].push_back(observe(state, &opt.probes[j]));
            ++next_rec;
        }
        if (next_rec == tr.times.size()) break;
        if (t_env == t) {
            env.resample(es, t, rng);
            ++es.epoch;
            t_env = t + draw(r_env);
            continue;
        }
        SpatialEvent ev;
        ev.t = t;
        ev.center = uniform_on_torus(g, rng);
        ev.radius = p.radius();
        ev.impact = p.impact();
        ev.kind = t_neu == t ? EventKind::Neutral : EventKind::Selective;
        apply(state, ev, es);
        ++tr.events;
        if (ev.kind == EventKind::Neutral) t_neu = t + draw(r_neu);
        else t_sel = t + draw(r_sel);
        mass = observe(state, nullptr);
        if (opt.guard > 0.0 && mass > opt.guard) {
            tr.stopped = true;
            tr.stop_time = t;
            while (tr.values.size() < tr.times.size()) {
                tr.values.push_back(mass);
                for (std::size_t j = 0; j < opt.probes.size(); ++j)
                    tr.probe_values[j].push_back(observe(state, &opt.probes[j]));
            }
            break;
        }
    }
    return tr;
}

}  // namespace

Trajectory run_slfvfs(const SlfvParams& p, const SelectionSpec& spec, const Environment& env,
                      const SpatialOptions& opt, Rng& rng) {
    p.validate();
    const Grid& g = env.grid();
    require(g.cell_size() <= p.radius() / 4.0 * (1.0 + 1e-12), "grid cells must be at most a quarter of r/M");
    SpatialDensity field;
    field.K = p.K;
    field.w = rasterize(opt.initial_profile, g);
    for (double& w : field.w) {
        w /= p.K;
        require(w >= 0.0 && w <= 1.0, "initial density must lie in [0, K]");
    }
    std::vector<std::vector<double>> probe_cells;
    for (const auto& ph : opt.probes) probe_cells.push_back(rasterize(ph, g));
    const double cv = g.cell_volume();
    auto observe = [&](const SpatialDensity& f, const Probe* ph) {
        double s = 0.0;
        if (!ph) {
            for (double w : f.w) s += w;
        } else {
            const auto& pc = probe_cells[static_cast<std::size_t>(ph - opt.probes.data())];
            for (std::size_t c = 0; c < f.w.size(); ++c) s += f.w[c] * pc[c];
        }
        return s * f.K * cv;
    };
    auto apply = [&](SpatialDensity& f, const SpatialEvent& ev, const EnvState& es) {
        slfvfs_event(f, ev, env, es, spec, rng);
    };
    return drive_spatial(p, env, opt, rng, field, apply, observe);
}

EventStats spatial_lookdown_event(SpatialLevelConfig& config, const SpatialEvent& ev, int zeta,
                                  const SelectionSpec& spec, const Grid& g, Rng& rng) {
    require(ev.impact >= 0.0 && ev.impact < 1.0, "impact must lie in [0, 1)");
    auto& all = config.individuals;
    std::vector<SpatialIndividual> inside, outside;
    const double r2 = ev.radius * ev.radius;
    for (const auto& ind : all) {
        const Point d = g.displacement(ev.center, ind.x);
        double s = 0.0;
        for (int j = 0; j < g.dim; ++j) s += d[j] * d[j];
        (s <= r2 ? inside : outside).push_back(ind);
    }
    std::sort(inside.begin(), inside.end(),
              [](const SpatialIndividual& a, const SpatialIndividual& b) { return a.level < b.level; });

    const double ball = unit_ball_volume(g.dim) * std::pow(ev.radius, g.dim);
    const long m = poisson(rng, ev.impact * config.K * ball * config.ceiling);
    EventStats st;
    if (m == 0) {
        st = detail::thin_all(inside, config.ceiling, ev.impact);
    } else {
        std::vector<double> offspring;
        sample_uniform_sorted(static_cast<std::size_t>(m), Window{0.0, config.ceiling}, rng, offspring);
        std::vector<Point> pos;
        pos.reserve(offspring.size());
        for (std::size_t j = 0; j < offspring.size(); ++j) pos.push_back(uniform_in_ball(g, ev.center, ev.radius, rng));
        std::vector<SpatialIndividual> scratch;
        st = detail::apply_core(inside, config.ceiling, ev.kind, offspring, ev.impact, zeta, spec, scratch,
                                [&](double l, Type t, std::size_t j) { return SpatialIndividual{l, t, pos[j]}; });
    }
    outside.insert(outside.end(), inside.begin(), inside.end());
    all.swap(outside);
    return st;
}

SpatialLevelConfig initial_spatial_config(const Probe& x0, double K, double ceiling, const Grid& g, Rng& rng) {
    require(ceiling > 0.0 && K > 0.0, "ceiling and K must be positive");
    SpatialLevelConfig c;
    c.ceiling = ceiling;
    c.K = K;
    std::vector<double> rare = rasterize(x0, g), common(rare.size());
    double mr = 0.0, mc = 0.0;
    for (std::size_t i = 0; i < rare.size(); ++i) {
        require(rare[i] >= 0.0 && rare[i] <= K, "initial density must lie in [0, K]");
        common[i] = K - rare[i];
        mr += rare[i];
        mc += common[i];
    }
    const double cv = g.cell_volume();
    const long nr = poisson(rng, mr * cv * ceiling), nc = poisson(rng, mc * cv * ceiling);
    const auto xr = sample_positions_weighted(rare, g, static_cast<std::size_t>(nr), rng);
    const auto xc = sample_positions_weighted(common, g, static_cast<std::size_t>(nc), rng);
    std::uniform_real_distribution<double> ul(0.0, ceiling);
    for (const auto& x : xr) c.individuals.push_back({ul(rng), Type::Rare, x});
    for (const auto& x : xc) c.individuals.push_back({ul(rng), Type::Common, x});
    return c;
}

Trajectory run_slfvfs_lookdown(const SlfvParams& p, const SelectionSpec& spec, const Environment& env,
                               const SpatialOptions& opt, Rng& rng) {
    p.validate();
    const Grid& g = env.grid();
    SpatialLevelConfig cfg = initial_spatial_config(opt.initial_profile, p.K, opt.ceiling, g, rng);
    auto observe = [&](const SpatialLevelConfig& c, const Probe* ph) {
        double s = 0.0;
        for (const auto& ind : c.individuals)
            if (ind.ty == Type::Rare && ind.level <= c.ceiling) s += ph ? ph->value(ind.x, g) : 1.0;
        return s / c.ceiling;
    };
    auto apply = [&](SpatialLevelConfig& c, const SpatialEvent& ev, const EnvState& es) {
        spatial_lookdown_event(c, ev, env.query(es, ev.center), spec, g, rng);
    };
    return drive_spatial(p, env, opt, rng, cfg, apply, observe);
}

double mytnik_split_probability(int zeta, std::size_t n, double coupling) {
    require(n >= 1, "n must be positive");
    require(4.0 * coupling * coupling <= static_cast<double>(n), "n must be at least 4 coupling^2");
    return std::clamp(0.5 + coupling * zeta / std::sqrt(static_cast<double>(n)), 0.0, 1.0);
}

Trajectory run_mytnik_brw(const Environment& env, const MytnikOptions& opt, Rng& rng, QvTrajectory* qv) {
    const Grid& g = env.grid();
    const std::size_t n = opt.n;
    require(n >= 4, "approximation level n must be >= 4");
    const double nd = static_cast<double>(n);
    const double h = 1.0 / nd;
    const auto generations = static_cast<std::size_t>(std::llround(opt.horizon * nd));
    const auto per_record = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(opt.record_every * nd)));

    const auto n0 = static_cast<std::size_t>(std::llround(nd * total_mass(opt.initial_profile, g)));
    std::vector<Point> xs = sample_positions(opt.initial_profile, g, n0, rng);
    std::vector<Point> next;
    EnvState es = env.initial(rng);

    Trajectory tr;
    tr.probe_values.assign(opt.probes.size(), {});
    auto record = [&](std::size_t k) {
        tr.times.push_back(static_cast<double>(k) * h);
        tr.values.push_back(static_cast<double>(xs.size()) / nd);
        for (std::size_t j = 0; j < opt.probes.size(); ++j) {
            double s = 0.0;
            for (const auto& x : xs) s += opt.probes[j].value(x, g);
            tr.probe_values[j].push_back(s / nd);
        }
    };
    if (qv) {
        require(opt.qv_probe != nullptr, "QV recording needs a probe");
        *qv = QvTrajectory{};
        qv->h = h;
        qv->cells = g.cell_count();
    }
    auto record_qv = [&]() {
        const Probe& ph = *opt.qv_probe;
        double a = 0.0, b = 0.0, c = 0.0;
        const std::size_t base = qv->cell_phi.size();
        qv->cell_phi.resize(base + qv->cells, 0.0);
        for (const auto& x : xs) {
            const double v = ph.value(x, g);
            a += v;
            b += v * v;
            c += 0.5 * ph.laplacian(x, g);
            qv->cell_phi[base + g.cell_index(x)] += v / nd;
        }
        qv->x_phi.push_back(a / nd);
        qv->x_phi2.push_back(b / nd);
        qv->x_drift.push_back(c / nd);
    };

    record(0);
    if (qv) record_qv();
    const double sd = std::sqrt(h);
    for (std::size_t k = 1; k <= generations; ++k) {
        env.resample(es, static_cast<double>(k) * h, rng);
        ++es.epoch;
        next.clear();
        for (const auto& x : xs) {
            const double p = mytnik_split_probability(env.query(es, x), n, opt.coupling);
            if (uniform01(rng) >= p) continue;
            for (int c = 0; c < 2; ++c) {
                Point y = x;
                for (int j = 0; j < g.dim; ++j) y[j] += sd * std_normal(rng);
                next.push_back(g.wrap(y));
            }
        }
        xs.swap(next);
        ++tr.events;
        if (k % per_record == 0 || k == generations) record(k);
        if (qv) record_qv();
    }
    return tr;
}

double ball_second_moment(int d) {
    require(d >= 1 && d <= 3, "ball_second_moment: d must be 1..3");
    // x_1 = sin(theta): C(d) = V_{d-1} * int sin^2 cos^d over (-pi/2, pi/2),
    // midpoint rule refined three times with Richardson extrapolation
    const double vol = unit_ball_volume(d - 1);
    auto midpoint = [d](int m) {
        const double a = -0.5 * std::numbers::pi, hh = std::numbers::pi / m;
        double s = 0.0;
        for (int i = 0; i < m; ++i) {
            const double th = a + (i + 0.5) * hh;
            const double sn = std::sin(th), cs = std::cos(th);
            s += sn * sn * std::pow(cs, d);
        }
        return s * hh;
    };
    constexpr int levels = 4;
    double table[levels][levels];
    int m = 1 << 12;
    for (int i = 0; i < levels; ++i, m *= 2) {
        table[i][0] = midpoint(m);
        double f = 4.0;
        for (int j = 1; j <= i; ++j, f *= 4.0) table[i][j] = table[i][j - 1] + (table[i][j - 1] - table[i - 1][j - 1]) / (f - 1.0);
    }
    return vol * table[levels - 1][levels - 1];
}

double laplacian_coeff(int d, double r, double u, double N, double J, double M) {
    require(r > 0 && N > 0 && J > 0 && M > 0 && u > 0, "laplacian_coeff: parameters must be positive");
    return ball_second_moment(d) * N * u * std::pow(r, d + 2) / (J * M * M);
}

QvReport qv_decomposition_check(const std::vector<QvTrajectory>& ensemble, const Eigen::MatrixXd& q, double a_eff,
                                double b_eff, double growth, std::size_t min_trajectories) {
    if (ensemble.size() < min_trajectories || ensemble.size() < 2)
        throw InsufficientDataError("qv_decomposition_check: ensemble too small");
    std::vector<double> realized, predicted;
    realized.reserve(ensemble.size());
    predicted.reserve(ensemble.size());
    const double b2 = b_eff * b_eff;
    for (const auto& tr : ensemble) {
        const std::size_t steps = tr.x_phi.size();
        if (steps < 2) throw InsufficientDataError("qv_decomposition_check: trajectory needs >= 2 points");
        std::vector<double> comp(steps, 0.0);
        for (std::size_t k = 1; k < steps; ++k)
            comp[k] = comp[k - 1] + tr.h * (tr.x_drift[k - 1] + growth * tr.x_phi[k - 1]);
        realized.push_back(realized_qv(tr.x_phi, comp));
        double pred = 0.0;
        for (std::size_t k = 0; k + 1 < steps; ++k) {
            double qterm = 0.0;
            if (b2 != 0.0 && tr.cells > 0) {
                const Eigen::Map<const Eigen::VectorXd> bk(tr.cell_phi.data() + k * tr.cells,
                                                           static_cast<Eigen::Index>(tr.cells));
                qterm = bk.dot(q * bk);
            }
            pred += tr.h * (a_eff * tr.x_phi2[k] + b2 * qterm);
        }
        predicted.push_back(pred);
    }
    QvReport rep;
    rep.n = ensemble.size();
    rep.realized = summarize(realized).mean;
    rep.predicted = summarize(predicted).mean;
    if (rep.predicted > 0.0) {
        const RatioEstimate r = ratio_of_means(realized, predicted);
        rep.ratio = r.ratio;
        rep.ratio_se = r.se;
    }
    rep.rel_error = std::abs(rep.ratio - 1.0);
    return rep;
}

std::vector<double> heat_flow(const Grid& g, std::vector<double> m, double c, double t) {
    require(m.size() == g.cell_count(), "heat_flow: one value per cell expected");
    require(c >= 0.0 && t >= 0.0, "heat_flow: c and t must be >= 0");
    if (c == 0.0 || t == 0.0) return m;
    const double h = g.cell_size();
    const int n = g.cells_per_side;
    const double dt_max = 0.2 * h * h / (c * g.dim);
    const auto steps = static_cast<std::size_t>(std::ceil(t / dt_max));
    const double dt = t / static_cast<double>(steps);
    std::vector<std::size_t> stride(static_cast<std::size_t>(g.dim));
    for (int j = 0; j < g.dim; ++j) stride[static_cast<std::size_t>(j)] = static_cast<std::size_t>(std::pow(n, j));
    auto lap = [&](const std::vector<double>& v, std::vector<double>& out) {
        for (std::size_t i = 0; i < v.size(); ++i) {
            double s = 0.0;
            for (int j = 0; j < g.dim; ++j) {
                const std::size_t st = stride[static_cast<std::size_t>(j)];
                const std::size_t coord = (i / st) % static_cast<std::size_t>(n);
                const std::size_t up = coord + 1 == static_cast<std::size_t>(n) ? i + st - n * st : i + st;
                const std::size_t dn = coord == 0 ? i + (n - 1) * st : i - st;
                s += v[up] + v[dn] - 2.0 * v[i];
            }
            out[i] = c * s / (h * h);
        }
    };
    const std::size_t sz = m.size();
    std::vector<double> k1(sz), k2(sz), k3(sz), k4(sz), tmp(sz);
    for (std::size_t s = 0; s < steps; ++s) {
        lap(m, k1);
        for (std::size_t i = 0; i < sz; ++i) tmp[i] = m[i] + 0.5 * dt * k1[i];
        lap(tmp, k2);
        for (std::size_t i = 0; i < sz; ++i) tmp[i] = m[i] + 0.5 * dt * k2[i];
        lap(tmp, k3);
        for (std::size_t i = 0; i < sz; ++i) tmp[i] = m[i] + dt * k3[i];
        lap(tmp, k4);
        for (std::size_t i = 0; i < sz; ++i) m[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    return m;
}

}  // namespace lfv
