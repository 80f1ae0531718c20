#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "lfv/limit_lookdown.hpp"
#include "lfv/projected.hpp"
#include "lfv/stats.hpp"

using namespace lfv;

namespace {

// plain RK4 on dl/dt = a l^2 - kappa l
double rk4_level(double l, double a, double kappa, double t) {
    const int n = 20000;
    const double h = t / n;
    auto f = [&](double x) { return a * x * x - kappa * x; };
    for (int i = 0; i < n; ++i) {
        const double k1 = f(l), k2 = f(l + 0.5 * h * k1), k3 = f(l + 0.5 * h * k2), k4 = f(l + h * k3);
        l += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
    }
    return l;
}

template <class Run>
std::vector<std::vector<double>> ensemble(std::size_t n, std::uint64_t seed, Run run) {
    std::vector<std::vector<double>> out;
    Rng rng(seed);
    for (std::size_t i = 0; i < n; ++i) out.push_back(run(rng).values);
    return out;
}

std::vector<double> column(const std::vector<std::vector<double>>& rows, std::size_t k) {
    std::vector<double> c;
    for (const auto& r : rows) c.push_back(r.at(k));
    return c;
}

LimitOptions nonspatial(double x0, double horizon = 1.0) {
    LimitOptions o;
    o.x0 = x0;
    o.horizon = horizon;
    o.record_every = 0.5;
    o.dt = 1e-3;
    return o;
}

}  // namespace

TEST_CASE("level flow against direct integration") {
    for (double a : {0.5, 1.0, 2.0})
        for (double kappa : {-0.6, 0.0, 0.8})
            for (double l : {0.05, 0.3, 1.0}) {
                const double t = 0.4;
                const double y = level_flow_reciprocal(1.0 / l, a, kappa, t);
                CHECK(1.0 / y == doctest::Approx(rk4_level(l, a, kappa, t)).epsilon(1e-8));
            }
}

TEST_CASE("hitting time reaches the ceiling") {
    const double a = 1.0, kappa = 0.5, ceiling = 10.0;
    const double th = level_hitting_time(1.0 / 0.8, a, kappa, ceiling);
    REQUIRE(std::isfinite(th));
    CHECK(1.0 / level_flow_reciprocal(1.0 / 0.8, a, kappa, th) == doctest::Approx(ceiling).epsilon(1e-9));
    // below the fixed point kappa/a the level decays and never dies
    CHECK(std::isinf(level_hitting_time(1.0 / 0.2, a, kappa, ceiling)));
}

TEST_CASE("level flows never cross") {
    Rng rng(1);
    for (int k = 0; k < 2000; ++k) {
        double l1 = 5.0 * uniform01(rng), l2 = 5.0 * uniform01(rng);
        if (l1 == l2) continue;
        if (l1 > l2) std::swap(l1, l2);
        const double a = 0.1 + uniform01(rng), kappa = 2.0 * uniform01(rng) - 1.0, t = uniform01(rng);
        const double y1 = level_flow_reciprocal(1.0 / l1, a, kappa, t), y2 = level_flow_reciprocal(1.0 / l2, a, kappa, t);
        // y <= 0 means the level has blown up; lower levels blow up later
        if (y2 > 0.0) CHECK(y1 > y2);
    }
}

TEST_CASE("gamma projection is linear") {
    const Grid g{1, 1.0, 8};
    const Probe phi{ProbeKind::Cosine, 0.5, 1.0};
    std::vector<LevelParticle> a{{0.1, {0.1, 0, 0}}, {0.4, {0.7, 0, 0}}}, b{{0.2, {0.3, 0, 0}}};
    std::vector<LevelParticle> u = a;
    u.insert(u.end(), b.begin(), b.end());
    CHECK(gamma_mass(u, 4.0) == doctest::Approx(gamma_mass(a, 4.0) + gamma_mass(b, 4.0)));
    CHECK(gamma_mass(u, 4.0) == 0.75);
    CHECK(gamma_probe(u, 4.0, phi, g) == doctest::Approx(gamma_probe(a, 4.0, phi, g) + gamma_probe(b, 4.0, phi, g)));
    CHECK(gamma_mass({}, 4.0) == 0.0);
}

TEST_CASE("empty populations stay empty") {
    Rng rng(2);
    const LimitParams p{1.0, 0.5, 20.0};
    for (double v : run_kr_feller(p, nonspatial(0.0), rng).values) CHECK(v == 0.0);
    for (double v : run_kr_feller_re(p, nonspatial(0.0), rng).values) CHECK(v == 0.0);
    const Grid g{1, 1.0, 4};
    const Environment env(EnvSpec{EnvKind::GlobalFlip, 1.0, 1.0}, g);
    LimitOptions o = nonspatial(0.0);
    o.initial_profile = Probe{ProbeKind::Constant, 0.0, 0.0};
    for (double v : run_bbmre_lookdown(p, env, nullptr, o, rng).values) CHECK(v == 0.0);
    for (double v : run_bbmre_direct(p, env, nullptr, o, rng).values) CHECK(v == 0.0);
}

TEST_CASE("critical Feller lookdown: mean and variance") {
    const LimitParams p{1.0, 0.0, 20.0};
    const auto rows = ensemble(3000, 3, [&](Rng& r) { return run_kr_feller(p, nonspatial(1.0), r); });
    const auto s = summarize(column(rows, 2));
    CHECK(std::abs(s.mean - 1.0) <= 3.0 * s.se);
    const double oracle = moment_oracle(DiffusionParams{1.0, 0.0, 1.0}, 1.0, DiffusionKind::Feller).second;
    // Poisson readout noise of the count adds mean/lambda
    CHECK(s.var - s.mean / p.lambda == doctest::Approx(oracle).epsilon(0.15));
}

TEST_CASE("Feller lookdown with drift") {
    const LimitParams p{1.0, 0.5, 20.0};
    const auto rows = ensemble(3000, 4, [&](Rng& r) { return run_kr_feller(p, nonspatial(1.0), r); });
    const auto s = summarize(column(rows, 2));
    CHECK(std::abs(s.mean - std::exp(0.5)) <= 3.0 * s.se);
}

TEST_CASE("Feller-RE lookdown") {
    Rng a(5), b(5);
    const LimitParams p{1.0, 0.5, 20.0};
    CHECK(run_kr_feller_re(p, nonspatial(1.0), a).values == run_kr_feller_re(p, nonspatial(1.0), b).values);

    const auto rows = ensemble(3000, 6, [&](Rng& r) { return run_kr_feller_re(p, nonspatial(1.0), r); });
    const auto s = summarize(column(rows, 2));
    CHECK(std::abs(s.mean - std::exp(0.25)) <= 3.0 * s.se + 0.01);

    const LimitParams p0{1.0, 0.0, 20.0};
    const auto re = ensemble(2000, 7, [&](Rng& r) { return run_kr_feller_re(p0, nonspatial(1.0), r); });
    const auto kr = ensemble(2000, 8, [&](Rng& r) { return run_kr_feller(p0, nonspatial(1.0), r); });
    CHECK(ks_two_sample(column(re, 2), column(kr, 2)).p_value > 0.01);
}

TEST_CASE("direct branching Brownian motion under a frozen environment") {
    const LimitParams p{1.0, 0.2, 25.0};
    const Grid g{1, 1.0, 8};
    const Environment env(EnvSpec{EnvKind::GlobalFlip, 1.0, 0.0}, g);
    LimitOptions o = nonspatial(1.0);
    o.initial_profile = Probe{ProbeKind::Constant, 1.0, 0.0};
    for (int z : {1, -1, 0}) {
        const LimitParams q{p.a, z == 0 ? 0.0 : p.b, p.lambda};
        const EnvState frozen = env.constant(z == 0 ? 1 : z);
        const auto rows = ensemble(1000, 9 + z, [&](Rng& r) { return run_bbmre_direct(q, env, &frozen, o, r); });
        const double rate = (z == 0 ? 0.0 : z) * std::sqrt(p.lambda) * p.b;
        for (std::size_t k : {std::size_t{1}, std::size_t{2}}) {
            const auto s = summarize(column(rows, k));
            CHECK(std::abs(s.mean - std::exp(rate * 0.5 * static_cast<double>(k))) <= 3.0 * s.se);
        }
    }
}

TEST_CASE("branching Brownian motion lookdown") {
    const LimitParams p{1.0, 0.2, 25.0};
    const Grid g{1, 1.0, 8};
    const Environment env(EnvSpec{EnvKind::GlobalFlip, 1.0, 0.0}, g);
    const EnvState frozen = env.constant(-1);
    LimitOptions o = nonspatial(1.0);
    o.initial_profile = Probe{ProbeKind::Constant, 1.0, 0.0};
    Rng a(12), b(12);
    CHECK(run_bbmre_lookdown(p, env, &frozen, o, a).values == run_bbmre_lookdown(p, env, &frozen, o, b).values);

    const auto rows = ensemble(2000, 13, [&](Rng& r) { return run_bbmre_lookdown(p, env, &frozen, o, r); });
    const auto s = summarize(column(rows, 2));
    CHECK(std::abs(s.mean - std::exp(-std::sqrt(p.lambda) * p.b)) <= 3.0 * s.se);

    CHECK_THROWS_AS(run_bbmre_lookdown(LimitParams{0.1, 2.0, 25.0}, env, &frozen, o, a), ParameterError);
}

TEST_CASE("critical runners agree on the mean") {
    const LimitParams p{1.0, 0.0, 20.0};
    const Grid g{1, 4.0, 16};
    const Environment flip(EnvSpec{EnvKind::GlobalFlip, 1.0, 1.0}, g);
    const Environment field(EnvSpec{EnvKind::GaussianThreshold, 1.0, 0.0}, g);
    LimitOptions o = nonspatial(1.0);
    o.initial_profile = Probe{ProbeKind::Constant, 0.25, 0.0};
    LimitOptions coarse = o;
    coarse.dt = 5e-3;
    const std::size_t n = 1500;
    const std::vector<std::vector<std::vector<double>>> all{
        ensemble(n, 14, [&](Rng& r) { return run_kr_feller(p, o, r); }),
        ensemble(n, 15, [&](Rng& r) { return run_kr_feller_re(p, o, r); }),
        ensemble(n, 16, [&](Rng& r) { return run_bbmre_lookdown(p, flip, nullptr, o, r); }),
        ensemble(n, 17, [&](Rng& r) { return run_sbmre_lookdown(p, field, coarse, r); }),
    };
    for (const auto& rows : all)
        for (std::size_t k : {std::size_t{1}, std::size_t{2}}) {
            const auto s = summarize(column(rows, k));
            CHECK(std::abs(s.mean - 1.0) <= 3.0 * s.se);
        }
}

TEST_CASE("field-driven lookdown with nearly independent noise") {
    const LimitParams p{1.0, 0.5, 20.0};
    const Grid g{1, 4.0, 16};
    const Environment field(EnvSpec{EnvKind::GaussianThreshold, 0.05, 0.0}, g);
    LimitOptions o = nonspatial(1.0);
    o.initial_profile = Probe{ProbeKind::Constant, 0.25, 0.0};
    o.dt = 5e-3;
    const auto rows = ensemble(1500, 18, [&](Rng& r) { return run_sbmre_lookdown(p, field, o, r); });
    const auto s = summarize(column(rows, 2));
    CHECK(std::abs(s.mean - std::exp(0.25)) <= 3.0 * s.se + 0.01);
}

TEST_CASE("limit parameters are validated") {
    CHECK_THROWS_AS((LimitParams{0.0, 0.0, 10.0}.validate()), ParameterError);
    CHECK_THROWS_AS((LimitParams{1.0, 0.0, 0.0}.validate()), ParameterError);
    Rng rng(19);
    CHECK_THROWS_AS(run_kr_feller(LimitParams{1.0, 0.0, 2.0}, nonspatial(-1.0), rng), ParameterError);
}
