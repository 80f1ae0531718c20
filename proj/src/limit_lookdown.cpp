#include "lfv/limit_lookdown.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lfv/point_process.hpp"

namespace lfv {

void LimitParams::validate() const {
    require(a > 0.0, "limit params: a must be positive");
    require(lambda > 0.0, "limit params: lambda must be positive");
}

double level_flow_reciprocal(double y, double a, double kappa, double t) {
    const double kt = kappa * t;
    const double growth = std::abs(kt) < 1e-10 ? t * (1.0 + 0.5 * kt) : std::expm1(kt) / kappa;
    return y * std::exp(kt) - a * growth;
}

double level_hitting_time(double y, double a, double kappa, double ceiling) {
    const double y_top = 1.0 / ceiling;
    if (y <= y_top) return 0.0;
    if (kappa == 0.0) return (y - y_top) / a;
    const double denom = a - kappa * y;
    if (denom <= 0.0) return std::numeric_limits<double>::infinity();
    return std::log1p(kappa * (y - y_top) / denom) / kappa;
}

double gamma_mass(const std::vector<LevelParticle>& particles, double lambda) {
    std::size_t k = 0;
    for (const auto& p : particles)
        if (p.level <= lambda) ++k;
    return static_cast<double>(k) / lambda;
}

double gamma_probe(const std::vector<LevelParticle>& particles, double lambda, const Probe& phi, const Grid& g) {
    double s = 0.0;
    for (const auto& p : particles)
        if (p.level <= lambda) s += phi.value(p.position, g);
    return s / lambda;
}

namespace {

/** Lookdown particle in reciprocal-level coordinates. */
struct FlowItem {
    double y;
    Point x;
    double start;
    double kappa;
};

/**
 * Advance every item from its start time to t1.  Birth proposals arrive at rate
 * 2 a lambda and are accepted with probability (lambda - l) / lambda; children get a
 * level uniform on (l, lambda) and are processed from their birth time.
 */
bool lookdown_step(std::vector<FlowItem>& items, double a, double lambda, double t1, Rng& rng,
                   std::size_t max_particles) {
    const double proposal_rate = 2.0 * a * lambda;
    std::vector<FlowItem> survivors;
    survivors.reserve(items.size());
    for (std::size_t i = 0; i < items.size(); ++i) {
        const FlowItem it = items[i];
        const double hit = it.start + level_hitting_time(it.y, a, it.kappa, lambda);
        const double end = std::min(t1, hit);
        double s = it.start + exponential(rng, proposal_rate);
        while (s < end) {
            const double yl = level_flow_reciprocal(it.y, a, it.kappa, s - it.start);
            const double l = 1.0 / yl;
            if (uniform01(rng) * lambda < lambda - l) {
                std::uniform_real_distribution<double> u(l, lambda);
                double lc = u(rng);
                if (!(lc < lambda)) lc = std::nextafter(lambda, 0.0);
                items.push_back({1.0 / lc, it.x, s, it.kappa});
                if (items.size() > max_particles + i) return false;
            }
            s += exponential(rng, proposal_rate);
        }
        if (hit > t1) {
            FlowItem next = it;
            next.y = level_flow_reciprocal(it.y, a, it.kappa, t1 - it.start);
            next.start = t1;
            survivors.push_back(next);
        }
    }
    items.swap(survivors);
    return true;
}

std::vector<FlowItem> poisson_levels(double mass, double lambda, Rng& rng) {
    const PppSample s = sample_ppp(mass, Window{0.0, lambda}, rng);
    std::vector<FlowItem> items;
    items.reserve(s.points.size());
    for (double l : s.points)
        if (l > 0.0) items.push_back({1.0 / l, Point{0.0, 0.0, 0.0}, 0.0, 0.0});
    return items;
}

std::vector<LevelParticle> to_particles(const std::vector<FlowItem>& items) {
    std::vector<LevelParticle> out;
    out.reserve(items.size());
    for (const auto& it : items) out.push_back({1.0 / it.y, it.x});
    return out;
}

void record(Trajectory& tr, std::vector<std::vector<double>>& probe_vals, double count, double lambda,
            const std::vector<Point>& positions, const LimitOptions& opt, const Grid& g) {
    tr.values.push_back(count / lambda);
    for (std::size_t j = 0; j < opt.probes.size(); ++j) {
        double s = 0.0;
        for (const auto& x : positions) s += opt.probes[j].value(x, g);
        probe_vals[j].push_back(s / lambda);
    }
}

void freeze(Trajectory& tr, std::vector<std::vector<double>>& probe_vals, double t) {
    tr.stopped = true;
    tr.stop_time = t;
    while (tr.values.size() < tr.times.size()) tr.values.push_back(tr.values.back());
    for (auto& v : probe_vals)
        while (v.size() < tr.times.size()) v.push_back(v.empty() ? 0.0 : v.back());
}

std::vector<Point> positions_of(const std::vector<FlowItem>& items) {
    std::vector<Point> p;
    p.reserve(items.size());
    for (const auto& it : items) p.push_back(it.x);
    return p;
}

/** Flatten probe readouts into the trajectory (one block per probe after the mass). */
void attach_probes(Trajectory& tr, std::vector<std::vector<double>>& probe_vals) {
    tr.probe_values = std::move(probe_vals);
}

void brownian_move(std::vector<Point>& xs, const Grid& g, double h, Rng& rng) {
    const double sd = std::sqrt(h);
    for (auto& x : xs) {
        for (int j = 0; j < g.dim; ++j) x[j] += sd * std_normal(rng);
        x = g.wrap(x);
    }
}

}  // namespace

Trajectory run_kr_feller(const LimitParams& p, const LimitOptions& opt, Rng& rng,
                         std::vector<LevelParticle>* final_particles) {
    p.validate();
    require(opt.x0 >= 0.0, "x0 must be >= 0");
    std::vector<FlowItem> items = poisson_levels(opt.x0, p.lambda, rng);
    for (auto& it : items) it.kappa = p.b;
    Trajectory tr;
    tr.times = time_grid(opt.horizon, opt.record_every);
    tr.values.push_back(static_cast<double>(items.size()) / p.lambda);
    for (std::size_t k = 1; k < tr.times.size(); ++k) {
        if (!lookdown_step(items, p.a, p.lambda, tr.times[k], rng, opt.max_particles)) {
            std::vector<std::vector<double>> none;
            freeze(tr, none, tr.times[k]);
            break;
        }
        tr.values.push_back(static_cast<double>(items.size()) / p.lambda);
    }
    if (final_particles) *final_particles = to_particles(items);
    return tr;
}

Trajectory run_kr_feller_re(const LimitParams& p, const LimitOptions& opt, Rng& rng) {
    p.validate();
    require(opt.dt > 0.0, "dt must be positive");
    std::vector<FlowItem> items = poisson_levels(opt.x0, p.lambda, rng);
    Trajectory tr;
    tr.times = time_grid(opt.horizon, opt.record_every);
    tr.values.push_back(static_cast<double>(items.size()) / p.lambda);
    double t = 0.0;
    for (std::size_t k = 1; k < tr.times.size(); ++k) {
        bool ok = true;
        while (ok && t < tr.times[k] - 1e-12) {
            const double h = std::min(opt.dt, tr.times[k] - t);
            const double dB = std::sqrt(h) * std_normal(rng);
            // Ito drift +b^2 l cancels the noise correction, so log l is a pure Brownian increment
            const double kappa = -std::sqrt(2.0) * p.b * dB / h;
            for (auto& it : items) it.kappa = kappa;
            t += h;
            ok = lookdown_step(items, p.a, p.lambda, t, rng, opt.max_particles);
        }
        t = tr.times[k];
        if (!ok) {
            std::vector<std::vector<double>> none;
            freeze(tr, none, t);
            break;
        }
        tr.values.push_back(static_cast<double>(items.size()) / p.lambda);
    }
    return tr;
}

namespace {

struct Walker {
    Point x;
    double start;
};

}  // namespace

Trajectory run_bbmre_direct(const LimitParams& p, const Environment& env, const EnvState* initial_env,
                            const LimitOptions& opt, Rng& rng) {
    p.validate();
    const Grid& g = env.grid();
    const double birth = p.lambda * p.a;
    const double sq = std::sqrt(p.lambda) * p.b;
    require(birth - std::abs(sq) > 0.0, "bbmre: death rate lambda a - sqrt(lambda) b must be positive");
    EnvState es = initial_env ? *initial_env : env.initial(rng);

    const auto n0 = static_cast<std::size_t>(std::llround(p.lambda * total_mass(opt.initial_profile, g)));
    std::vector<Point> xs = sample_positions(opt.initial_profile, g, n0, rng);

    Trajectory tr;
    tr.times = time_grid(opt.horizon, opt.record_every);
    std::vector<std::vector<double>> probe_vals(opt.probes.size());
    record(tr, probe_vals, static_cast<double>(xs.size()), p.lambda, xs, opt, g);

    std::vector<Walker> work;
    double t = 0.0;
    for (std::size_t k = 1; k < tr.times.size(); ++k) {
        bool ok = true;
        while (ok && t < tr.times[k] - 1e-12) {
            const double h = std::min(opt.dt, tr.times[k] - t);
            const double t1 = t + h;
            es = env.advance(es, t, rng);
            work.clear();
            for (const auto& x : xs) work.push_back({x, t});
            std::vector<Point> next;
            next.reserve(work.size());
            for (std::size_t i = 0; i < work.size(); ++i) {
                const Walker w = work[i];
                const double death = birth - env.query(es, w.x) * sq;
                const double total = birth + death;
                double s = w.start;
                bool alive = true;
                for (;;) {
                    s += exponential(rng, total);
                    if (s >= t1) break;
                    if (uniform01(rng) * total < birth) {
                        work.push_back({w.x, s});
                    } else {
                        alive = false;
                        break;
                    }
                }
                if (alive) next.push_back(w.x);
                if (work.size() > opt.max_particles) {
                    ok = false;
                    break;
                }
            }
            xs.swap(next);
            brownian_move(xs, g, h, rng);
            t = t1;
        }
        t = tr.times[k];
        if (!ok) {
            freeze(tr, probe_vals, t);
            break;
        }
        record(tr, probe_vals, static_cast<double>(xs.size()), p.lambda, xs, opt, g);
    }
    attach_probes(tr, probe_vals);
    return tr;
}

Trajectory run_bbmre_lookdown(const LimitParams& p, const Environment& env, const EnvState* initial_env,
                              const LimitOptions& opt, Rng& rng) {
    p.validate();
    const Grid& g = env.grid();
    const double sq = std::sqrt(p.lambda) * p.b;
    require(p.lambda * p.a - std::abs(sq) > 0.0, "bbmre: lambda a - sqrt(lambda) b must be positive");
    EnvState es = initial_env ? *initial_env : env.initial(rng);

    const auto n0 = static_cast<std::size_t>(std::llround(p.lambda * total_mass(opt.initial_profile, g)));
    const std::vector<Point> x0 = sample_positions(opt.initial_profile, g, n0, rng);
    std::vector<FlowItem> items;
    items.reserve(n0);
    std::uniform_real_distribution<double> ul(0.0, p.lambda);
    for (const auto& x : x0) {
        double l = ul(rng);
        while (l <= 0.0) l = ul(rng);
        items.push_back({1.0 / l, x, 0.0, 0.0});
    }

    Trajectory tr;
    tr.times = time_grid(opt.horizon, opt.record_every);
    std::vector<std::vector<double>> probe_vals(opt.probes.size());
    record(tr, probe_vals, static_cast<double>(items.size()), p.lambda, positions_of(items), opt, g);

    double t = 0.0;
    for (std::size_t k = 1; k < tr.times.size(); ++k) {
        bool ok = true;
        while (ok && t < tr.times[k] - 1e-12) {
            const double h = std::min(opt.dt, tr.times[k] - t);
            es = env.advance(es, t, rng);
            for (auto& it : items) it.kappa = env.query(es, it.x) * sq;
            t += h;
            ok = lookdown_step(items, p.a, p.lambda, t, rng, opt.max_particles);
            const double sd = std::sqrt(h);
            for (auto& it : items) {
                for (int j = 0; j < g.dim; ++j) it.x[j] += sd * std_normal(rng);
                it.x = g.wrap(it.x);
            }
        }
        t = tr.times[k];
        if (!ok) {
            freeze(tr, probe_vals, t);
            break;
        }
        record(tr, probe_vals, static_cast<double>(items.size()), p.lambda, positions_of(items), opt, g);
    }
    attach_probes(tr, probe_vals);
    return tr;
}

namespace {

/** Correlated standard normals with covariance q(x_i, x_j). */
Eigen::VectorXd field_noise(const std::vector<FlowItem>& items, const Environment& env, Rng& rng) {
    const auto n = static_cast<Eigen::Index>(items.size());
    Eigen::VectorXd out(n);
    if (n == 0) return out;
    if (items.size() <= 500) {
        Eigen::MatrixXd q(n, n);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j <= i; ++j)
                q(i, j) = q(j, i) = env.covariance(items[static_cast<std::size_t>(i)].x,
                                                   items[static_cast<std::size_t>(j)].x);
        Eigen::LDLT<Eigen::MatrixXd> ldlt(q);
        Eigen::VectorXd z(n);
        for (Eigen::Index i = 0; i < n; ++i) z[i] = std_normal(rng);
        Eigen::VectorXd d = ldlt.vectorD().cwiseMax(0.0).cwiseSqrt();
        Eigen::VectorXd v = ldlt.matrixL() * d.cwiseProduct(z);
        out = ldlt.transpositionsP().transpose() * v;
        return out;
    }
    // binned: one draw per grid cell with the cell-centre covariance
    const Grid& g = env.grid();
    const Eigen::MatrixXd qc = env.cell_covariance();
    Eigen::LDLT<Eigen::MatrixXd> ldlt(qc);
    const auto m = qc.rows();
    Eigen::VectorXd z(m);
    for (Eigen::Index i = 0; i < m; ++i) z[i] = std_normal(rng);
    Eigen::VectorXd d = ldlt.vectorD().cwiseMax(0.0).cwiseSqrt();
    Eigen::VectorXd v = ldlt.matrixL() * d.cwiseProduct(z);
    Eigen::VectorXd cells = ldlt.transpositionsP().transpose() * v;
    for (Eigen::Index i = 0; i < n; ++i)
        out[i] = cells[static_cast<Eigen::Index>(g.cell_index(items[static_cast<std::size_t>(i)].x))];
    return out;
}

}  // namespace

Trajectory run_sbmre_lookdown(const LimitParams& p, const Environment& env, const LimitOptions& opt, Rng& rng) {
    p.validate();
    require(env.spec().kind == EnvKind::GaussianThreshold, "sbmre lookdown needs a gaussian-threshold covariance");
    const Grid& g = env.grid();
    const double mass = total_mass(opt.initial_profile, g);
    const PppSample lv = sample_ppp(mass, Window{0.0, p.lambda}, rng);
    const std::vector<Point> x0 = sample_positions(opt.initial_profile, g, lv.points.size(), rng);
    std::vector<FlowItem> items;
    for (std::size_t i = 0; i < x0.size(); ++i)
        if (lv.points[i] > 0.0) items.push_back({1.0 / lv.points[i], x0[i], 0.0, 0.0});

    Trajectory tr;
    tr.times = time_grid(opt.horizon, opt.record_every);
    std::vector<std::vector<double>> probe_vals(opt.probes.size());
    record(tr, probe_vals, static_cast<double>(items.size()), p.lambda, positions_of(items), opt, g);

    double t = 0.0;
    for (std::size_t k = 1; k < tr.times.size(); ++k) {
        bool ok = true;
        while (ok && t < tr.times[k] - 1e-12) {
            const double h = std::min(opt.dt, tr.times[k] - t);
            const Eigen::VectorXd z = field_noise(items, env, rng);
            const double sh = std::sqrt(h);
            for (std::size_t i = 0; i < items.size(); ++i)
                items[i].kappa = -std::sqrt(2.0) * p.b * sh * z[static_cast<Eigen::Index>(i)] / h;
            t += h;
            ok = lookdown_step(items, p.a, p.lambda, t, rng, opt.max_particles);
            for (auto& it : items) {
                for (int j = 0; j < g.dim; ++j) it.x[j] += sh * std_normal(rng);
                it.x = g.wrap(it.x);
            }
        }
        t = tr.times[k];
        if (!ok) {
            freeze(tr, probe_vals, t);
            break;
        }
        record(tr, probe_vals, static_cast<double>(items.size()), p.lambda, positions_of(items), opt, g);
    }
    attach_probes(tr, probe_vals);
    return tr;
}

}  // namespace lfv
