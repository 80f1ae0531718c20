#include "lfv/scaling.hpp"

#include <cmath>
#include <functional>
#include <limits>

namespace lfv {

Theorem parse_theorem(const std::string& id) {
    if (id == "spatial-fluctuating") return Theorem::SpatialFluctuating;
    if (id == "fluctuating") return Theorem::Fluctuating;
    if (id == "critical") return Theorem::Critical;
    if (id == "directional") return Theorem::Directional;
    if (id == "spatial-critical") return Theorem::SpatialCritical;
    if (id == "spatial-directional") return Theorem::SpatialDirectional;
    throw ParameterError("unknown theorem id '" + id + "'");
}

std::string theorem_name(Theorem t) {
    switch (t) {
    case Theorem::SpatialFluctuating: return "spatial-fluctuating";
    case Theorem::Fluctuating: return "fluctuating";
    case Theorem::Critical: return "critical";
    case Theorem::Directional: return "directional";
    case Theorem::SpatialCritical: return "spatial-critical";
    case Theorem::SpatialDirectional: return "spatial-directional";
    }
    return "?";
}

double PowerLaw::operator()(double N) const { return coef * std::pow(N, exponent); }

ScaledRates ScalingSchedule::rates(double N) const {
    return ScaledRates::from_params(N, J(N), K(N), S(N), Shat(N), u, s(N));
}

SlfvParams ScalingSchedule::slfv(double N) const {
    SlfvParams p;
    p.N = N;
    p.J = J(N);
    p.K = K(N);
    p.M = M(N);
    p.S = S(N);
    p.Shat = Shat(N);
    p.u = u;
    p.s = s(N);
    p.r = r;
    return p;
}

SelectionSpec ScalingSchedule::selection() const {
    const bool fluctuating = theorem == Theorem::Fluctuating || theorem == Theorem::SpatialFluctuating;
    return SelectionSpec::make(sigma_rare, sigma_common, 0.0, fluctuating);
}

ScalingSchedule fluctuating_schedule(double eps, double beta, double gamma, double s0, double u, bool s_decay) {
    require(eps > 0.0 && eps < 0.25, "eps must lie in (0, 1/4)");
    require(beta > 0.0 && beta < 0.25 - eps, "beta must lie in (0, 1/4 - eps)");
    require(gamma > 0.0 && gamma < beta, "gamma must lie in (0, beta)");
    ScalingSchedule s;
    s.theorem = Theorem::Fluctuating;
    s.J = {1.0, 0.75 + eps};
    s.K = {1.0, 0.5 + 2.0 * eps};
    s.M = {1.0, 0.0};
    s.S = {1.0, beta};
    s.Shat = {1.0, gamma};
    s.s = {s0, s_decay ? -(0.25 - eps - beta) : 0.0};
    s.u = u;
    s.sigma_rare = {0.5, 1.5};
    s.sigma_common = {1.0, 1.0};
    return s;
}

ScalingSchedule critical_neutral_schedule(double eps, double u) {
    require(eps > 0.0 && eps < 0.25, "eps must lie in (0, 1/4)");
    ScalingSchedule s;
    s.theorem = Theorem::Critical;
    s.J = {1.0, 0.75 + eps};
    s.K = {1.0, 0.5 + 2.0 * eps};
    s.u = u;
    return s;
}

std::vector<std::string> ScheduleReport::failed() const {
    std::vector<std::string> out;
    for (const auto& c : conditions)
        if (!c.pass) out.push_back(c.name);
    return out;
}

std::vector<double> default_probe_Ns() { return {1e2, 1e4, 1e6, 1e8, 1e10, 1e12, 1e14, 1e16}; }

namespace {

bool strictly_increasing(const std::vector<double>& v) {
    for (std::size_t i = 1; i < v.size(); ++i)
        if (!(v[i] > v[i - 1])) return false;
    return true;
}

bool vanishes(const std::vector<double>& v) {
    for (std::size_t i = 1; i < v.size(); ++i)
        if (!(std::abs(v[i]) < std::abs(v[i - 1]))) return false;
    const double last = std::abs(v.back());
    return last == 0.0 || std::abs(v.front()) / last >= 4.0;
}

bool diverges(const std::vector<double>& v) {
    return v.front() > 0.0 && strictly_increasing(v) && v.back() / v.front() >= 4.0;
}

double aitken(const std::vector<double>& v) {
    const std::size_t n = v.size();
    const double x1 = v[n - 3], x2 = v[n - 2], x3 = v[n - 1];
    const double d = (x3 - x2) - (x2 - x1);
    if (std::abs(d) < 1e-300 || !std::isfinite(d)) return x3;
    const double l = x3 - (x3 - x2) * (x3 - x2) / d;
    return std::isfinite(l) ? l : x3;
}

/** Finite limit: successive relative changes shrink and the last is below 5%. */
bool converges(const std::vector<double>& v, double& limit) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    const double last = v.back();
    bool constant = true;
    for (double x : v)
        if (std::abs(x - last) > 1e-12 * std::max(1.0, std::abs(last))) constant = false;
    if (constant) {
        limit = last;
        return true;
    }
    if (vanishes(v)) {
        limit = 0.0;
        return true;
    }
    std::vector<double> rel;
    for (std::size_t i = 1; i < v.size(); ++i)
        rel.push_back(std::abs(v[i] - v[i - 1]) / std::max(std::abs(v[i]), 1e-300));
    for (std::size_t i = 1; i < rel.size(); ++i)
        if (rel[i] > rel[i - 1] * (1.0 + 1e-9) + 1e-15) return false;
    if (rel.back() >= 0.05) return false;
    limit = aitken(v);
    return true;
}

struct Ctx {
    const ScalingSchedule& s;
    const std::vector<double>& Ns;
    std::vector<ConditionResult>& out;

    std::vector<double> eval(const std::function<double(double)>& f) const {
        std::vector<double> v;
        for (double N : Ns) v.push_back(f(N));
        return v;
    }
    void add(std::string name, Trend t, const std::function<double(double)>& f, double scale = 1.0,
             bool sqrt_limit = false) {
        ConditionResult c;
        c.name = std::move(name);
        c.trend = t;
        c.values = eval(f);
        switch (t) {
        case Trend::Diverges: c.pass = diverges(c.values); break;
        case Trend::Vanishes: c.pass = vanishes(c.values); break;
        case Trend::Converges: {
            double lim = 0.0;
            c.pass = converges(c.values, lim);
            lim *= scale;
            c.limit = sqrt_limit ? std::sqrt(std::max(lim, 0.0)) : lim;
            break;
        }
        default: break;
        }
        out.push_back(std::move(c));
    }
    void exists(std::string name, const std::function<double(double, int)>& f) {
        ConditionResult c;
        c.name = std::move(name);
        c.trend = Trend::ExistsVanishing;
        for (int m = 1; m <= 8; ++m) {
            auto v = eval([&](double N) { return f(N, m); });
            if (vanishes(v)) {
                c.pass = true;
                c.witness = m;
                c.values = v;
                break;
            }
            if (m == 8) c.values = v;
        }
        out.push_back(std::move(c));
    }
    void equals(std::string name, const std::function<double(double)>& f, double target) {
        ConditionResult c;
        c.name = std::move(name);
        c.trend = Trend::Equals;
        c.values = eval(f);
        c.limit = target;
        c.pass = true;
        for (double x : c.values)
            if (std::abs(x - target) > 1e-12 * std::max(1.0, std::abs(target))) c.pass = false;
        out.push_back(std::move(c));
    }
};

double volume_factor(const ScalingSchedule& s) {
    return s.spatial() ? unit_ball_volume(s.dim) * std::pow(s.r, s.dim) : 1.0;
}

double b_squared_expr(const ScalingSchedule& s, double N) {
    const double base = s.s(N) * s.u * N * volume_factor(s) / (s.S(N) * s.J(N));
    double e = 0.0;
    for (int z = 0; z < 2; ++z) {
        const double d = base * (s.sigma_rare[z] / s.sigma_common[z] - 1.0);
        e += 0.5 * d * d;
    }
    return e;
}

double b_directional_expr(const ScalingSchedule& s, double N) {
    const double base = s.s(N) * s.u * N * volume_factor(s) / (s.S(N) * s.J(N));
    return base * (s.sigma_rare[1] / s.sigma_common[1] - 1.0);
}

double env_dependence(const ScalingSchedule& s) {
    return std::abs(s.sigma_rare[0] - s.sigma_rare[1]) + std::abs(s.sigma_common[0] - s.sigma_common[1]);
}

}  // namespace

ScheduleReport validate_schedule(const ScalingSchedule& sched, const std::vector<double>& probe_Ns) {
    require(probe_Ns.size() >= 3, "validate_schedule: at least 3 probe values of N");
    for (std::size_t i = 1; i < probe_Ns.size(); ++i)
        require(probe_Ns[i] > probe_Ns[i - 1], "validate_schedule: probe values must ascend");
    const bool sp = sched.theorem == Theorem::SpatialFluctuating || sched.theorem == Theorem::SpatialCritical || sched.theorem == Theorem::SpatialDirectional;
    require(sp == sched.spatial(), "validate_schedule: spatial theorems need dim >= 1, non-spatial ones dim = 0");

    ScheduleReport rep;
    rep.theorem = sched.theorem;
    rep.probe_Ns = probe_Ns;
    Ctx c{sched, probe_Ns, rep.conditions};
    const auto& s = sched;
    const double u = s.u;
    const int d = s.dim;
    const double vr = volume_factor(s);

    {
        ConditionResult inv;
        inv.name = "J,K,M,S,Shat positive and nondecreasing";
        inv.trend = Trend::Equals;
        inv.pass = true;
        for (const PowerLaw* f : {&s.J, &s.K, &s.M, &s.S, &s.Shat}) {
            double prev = 0.0;
            for (double N : probe_Ns) {
                const double v = (*f)(N);
                if (!(v > 0.0) || v < prev) inv.pass = false;
                prev = v;
            }
        }
        rep.conditions.push_back(inv);
    }

    auto J = [&](double N) { return s.J(N); };
    auto K = [&](double N) { return s.K(N); };
    auto M = [&](double N) { return s.M(N); };
    auto S = [&](double N) { return s.S(N); };
    auto Sh = [&](double N) { return s.Shat(N); };
    auto Md = [&](double N) { return std::pow(s.M(N), d); };
    auto nk_over_j = [&](double N, int m) { return N * std::pow(K(N) / J(N), m); };

    switch (s.theorem) {
    case Theorem::Fluctuating:
        c.add("J -> inf", Trend::Diverges, J);
        c.add("K -> inf", Trend::Diverges, K);
        c.add("S -> inf", Trend::Diverges, S);
        c.add("Shat -> inf", Trend::Diverges, Sh);
        c.add("K/J -> 0", Trend::Vanishes, [&](double N) { return K(N) / J(N); });
        c.add("u^2 N K / J^2 -> 2a", Trend::Converges,
              [&](double N) { return u * u * N * K(N) / (J(N) * J(N)); }, 0.5);
        c.add("N^2 / (K J^2) -> 0", Trend::Vanishes, [&](double N) { return N * N / (K(N) * J(N) * J(N)); });
        c.add("E_pi[(suN/(SJ) (sigma_r/sigma_c - 1))^2] -> b^2", Trend::Converges,
              [&](double N) { return b_squared_expr(s, N); }, 1.0, true);
        c.add("Shat/K -> 0", Trend::Vanishes, [&](double N) { return Sh(N) / K(N); });
        c.add("Shat/S -> 0", Trend::Vanishes, [&](double N) { return Sh(N) / S(N); });
        c.exists("exists m: N K^m / J^m -> 0", nk_over_j);
        break;
    case Theorem::Critical:
        c.add("J -> inf", Trend::Diverges, J);
        c.add("K -> inf", Trend::Diverges, K);
        c.add("K/J -> 0", Trend::Vanishes, [&](double N) { return K(N) / J(N); });
        c.add("N^2 / (K J^2) -> 0", Trend::Vanishes, [&](double N) { return N * N / (K(N) * J(N) * J(N)); });
        c.add("u^2 N K / J^2 -> 2a", Trend::Converges,
              [&](double N) { return u * u * N * K(N) / (J(N) * J(N)); }, 0.5);
        c.exists("exists m: N K^m / J^m -> 0", nk_over_j);
        break;
    case Theorem::Directional:
        c.equals("Shat = 1", Sh, 1.0);
        c.equals("sigma independent of the environment", [&](double) { return env_dependence(s); }, 0.0);
        c.add("J -> inf", Trend::Diverges, J);
        c.add("K -> inf", Trend::Diverges, K);
        c.add("S -> inf", Trend::Diverges, S);
        c.add("K/J -> 0", Trend::Vanishes, [&](double N) { return K(N) / J(N); });
        c.add("N^2 / (K J^2) -> 0", Trend::Vanishes, [&](double N) { return N * N / (K(N) * J(N) * J(N)); });
        c.add("u^2 N K / J^2 -> 2a", Trend::Converges,
              [&](double N) { return u * u * N * K(N) / (J(N) * J(N)); }, 0.5);
        c.add("suN/(SJ) (sigma_r/sigma_c - 1) -> b", Trend::Converges,
              [&](double N) { return b_directional_expr(s, N); });
        c.exists("exists m: N K^m / J^m -> 0", nk_over_j);
        break;
    case Theorem::SpatialFluctuating:
        c.add("C_d u r^(d+2) N / (J M^2) -> C1", Trend::Converges, [&](double N) {
            return ball_second_moment(d) * u * std::pow(s.r, d + 2) * N / (J(N) * M(N) * M(N));
        });
        c.add("J -> inf", Trend::Diverges, J);
        c.add("K -> inf", Trend::Diverges, K);
        c.add("M -> inf", Trend::Diverges, M);
        c.add("S -> inf", Trend::Diverges, S);
        c.add("Shat -> inf", Trend::Diverges, Sh);
        c.add("K / (J M^d) -> 0", Trend::Vanishes, [&](double N) { return K(N) / (J(N) * Md(N)); });
        c.add("u^2 V_R N K / (J^2 M^d) -> a", Trend::Converges,
              [&](double N) { return u * u * vr * N * K(N) / (J(N) * J(N) * Md(N)); });
        c.add("N^2 / (K J^2 M^d) -> 0", Trend::Vanishes,
              [&](double N) { return N * N / (K(N) * J(N) * J(N) * Md(N)); });
        c.add("E_pi[(suNV_R/(SJ) (sigma_r/sigma_c - 1))^2] -> b^2", Trend::Converges,
              [&](double N) { return b_squared_expr(s, N); }, 1.0, true);
        c.add("Shat/S -> 0", Trend::Vanishes, [&](double N) { return Sh(N) / S(N); });
        c.exists("exists n: N (K/J)^n -> 0", nk_over_j);
        break;
    case Theorem::SpatialCritical:
        c.add("C_d u r^(d+2) N / (J M^2) -> C1", Trend::Converges, [&](double N) {
            return ball_second_moment(d) * u * std::pow(s.r, d + 2) * N / (J(N) * M(N) * M(N));
        });
        c.add("J -> inf", Trend::Diverges, J);
        c.add("K -> inf", Trend::Diverges, K);
        c.add("M -> inf", Trend::Diverges, M);
        c.add("K / (J M^d) -> 0", Trend::Vanishes, [&](double N) { return K(N) / (J(N) * Md(N)); });
        c.add("N^2 / (M^d K J^2) -> 0", Trend::Vanishes,
              [&](double N) { return N * N / (K(N) * J(N) * J(N) * Md(N)); });
        c.add("u^2 V_R N K / (J^2 M^d) -> a", Trend::Converges,
              [&](double N) { return u * u * vr * N * K(N) / (J(N) * J(N) * Md(N)); });
        c.exists("exists n: N (K/J)^n -> 0", nk_over_j);
        break;
    case Theorem::SpatialDirectional:
        c.equals("Shat = 1", Sh, 1.0);
        c.equals("sigma independent of the environment", [&](double) { return env_dependence(s); }, 0.0);
        c.add("N / (J M^2) -> C1", Trend::Converges, [&](double N) { return N / (J(N) * M(N) * M(N)); });
        c.add("J -> inf", Trend::Diverges, J);
        c.add("K -> inf", Trend::Diverges, K);
        c.add("M -> inf", Trend::Diverges, M);
        c.add("K / (J M^d) -> 0", Trend::Vanishes, [&](double N) { return K(N) / (J(N) * Md(N)); });
        c.add("N^2 / (M^d K J^2) -> 0", Trend::Vanishes,
              [&](double N) { return N * N / (K(N) * J(N) * J(N) * Md(N)); });
        c.add("u^2 V_R N K / (J^2 M^d) -> a", Trend::Converges,
              [&](double N) { return u * u * vr * N * K(N) / (J(N) * J(N) * Md(N)); });
        c.add("suNV_R/(JS) (sigma_r/sigma_c - 1) -> b", Trend::Converges,
              [&](double N) { return b_directional_expr(s, N); });
        c.exists("exists n: N (K/J)^n -> 0", nk_over_j);
        break;
    }
    rep.pass = true;
    for (const auto& cr : rep.conditions) rep.pass = rep.pass && cr.pass;
    return rep;
}

EffectiveParams effective_params(const ScalingSchedule& s, double N) {
    EffectiveParams e;
    const double J = s.J(N), K = s.K(N), M = s.M(N);
    const double u = s.u;
    switch (s.theorem) {
    case Theorem::Fluctuating:
        e.a = u * u * N * K / (2.0 * J * J);
        e.b = std::sqrt(b_squared_expr(s, N));
        break;
    case Theorem::Critical:
        e.a = u * u * N * K / (2.0 * J * J);
        break;
    case Theorem::Directional:
        e.a = u * u * N * K / (2.0 * J * J);
        e.b = b_directional_expr(s, N);
        break;
    case Theorem::SpatialFluctuating:
    case Theorem::SpatialCritical:
    case Theorem::SpatialDirectional: {
        const double md = std::pow(M, s.dim);
        e.a = u * u * volume_factor(s) * N * K / (J * J * md);
        if (s.theorem == Theorem::SpatialFluctuating) e.b = std::sqrt(b_squared_expr(s, N));
        if (s.theorem == Theorem::SpatialDirectional) e.b = b_directional_expr(s, N);
        e.c1 = s.theorem == Theorem::SpatialDirectional ? N / (J * M * M) : laplacian_coeff(s.dim, s.r, u, N, J, M);
        break;
    }
    }
    return e;
}

}  // namespace lfv
