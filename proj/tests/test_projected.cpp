#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "lfv/projected.hpp"
#include "lfv/stats.hpp"

using namespace lfv;

namespace {

// closed-form moments, written out independently of the library integrator
std::pair<double, double> feller_moments(double a, double b, double x0, double t) {
    const double m = x0 * std::exp(b * t);
    const double v = b == 0.0 ? 2.0 * a * x0 * t : 2.0 * a * x0 * std::exp(b * t) * (std::exp(b * t) - 1.0) / b;
    return {m, v};
}

std::pair<double, double> feller_re_moments(double a, double b, double x0, double t) {
    const double b2 = b * b;
    const double m = x0 * std::exp(b2 * t);
    const double m2 = b == 0.0 ? x0 * x0 + 2.0 * a * x0 * t
                               : x0 * x0 * std::exp(4.0 * b2 * t) +
                                     2.0 * a * x0 * (std::exp(4.0 * b2 * t) - std::exp(b2 * t)) / (3.0 * b2);
    return {m, m2 - m * m};
}

}  // namespace

TEST_CASE("projected update") {
    CHECK(projected_update(0.4, 0.5, true) == doctest::Approx(0.7).epsilon(1e-15));
    CHECK(projected_update(0.4, 0.5, false) == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(projected_update(1.0, 0.3, true) == 1.0);
    CHECK(projected_update(0.0, 0.3, false) == 0.0);
}

TEST_CASE("boundaries are absorbing") {
    const SelectionSpec s = SelectionSpec::make({1.2, 1.2}, {1.0, 1.0}, 1.0, false);
    Rng rng(1);
    for (EventKind k : {EventKind::Neutral, EventKind::Selective})
        for (int i = 0; i < 200; ++i) {
            CHECK(projected_event({0.0, 0.0}, k, 0.4, 1, s, rng).w == 0.0);
            CHECK(projected_event({1.0, 0.0}, k, 0.4, -1, s, rng).w == 1.0);
        }
}

TEST_CASE("selective parent probability") {
    const SelectionSpec s = SelectionSpec::make({1.2, 1.2}, {1.0, 1.0}, 1.0, false);
    CHECK(selective_parent_probability(0.4, 1, s) == doctest::Approx(0.48 / 1.08).epsilon(1e-14));
    const SelectionSpec eq = SelectionSpec::make({0.7, 1.3}, {0.7, 1.3}, 1.0);
    for (double w : {0.0, 0.1, 0.5, 0.93, 1.0})
        for (int z : {-1, 1}) CHECK(selective_parent_probability(w, z, eq) == doctest::Approx(w).epsilon(1e-15));

    Rng rng(2);
    const int n = 40000;
    int rare = 0;
    for (int i = 0; i < n; ++i)
        if (projected_event({0.4, 0.0}, EventKind::Selective, 0.5, 1, s, rng).w > 0.5) ++rare;
    const double p = 0.48 / 1.08, f = static_cast<double>(rare) / n;
    CHECK(std::abs(f - p) <= 3.0 * std::sqrt(p * (1 - p) / n));
}

TEST_CASE("projected events stay in the unit interval") {
    const SelectionSpec s = SelectionSpec::make({0.5, 1.5}, {1.0, 1.0}, 1.0);
    Rng rng(3);
    DensityState st{0.3, 0.0};
    for (int i = 0; i < 20000; ++i) {
        st = projected_event(st, i % 2 ? EventKind::Neutral : EventKind::Selective, 0.2, i % 3 ? 1 : -1, s, rng);
        CHECK(st.w >= 0.0);
        CHECK(st.w <= 1.0);
    }
    CHECK_THROWS_AS(projected_event(st, EventKind::Neutral, 1.0, 1, s, rng), ParameterError);
}

TEST_CASE("diffusion steppers") {
    const DiffusionParams p{1.0, 0.5, 1.0};
    CHECK(feller_step_with_noise(0.0, p, 1e-3, 2.0) == 0.0);
    CHECK(feller_re_step_with_noise(0.0, p, 1e-3, 2.0) == 0.0);
    CHECK(feller_step_with_noise(2.0, p, 1e-3, 0.0) == doctest::Approx(2.0 * (1 + 0.5e-3)).epsilon(1e-15));
    CHECK(feller_re_step_with_noise(2.0, p, 1e-3, 0.0) == doctest::Approx(2.0 * (1 + 0.25e-3)).epsilon(1e-15));
    CHECK(feller_step_with_noise(0.01, p, 1e-3, -10.0) == 0.0);
    CHECK(feller_re_step_with_noise(0.01, p, 1e-3, -10.0) == 0.0);
    Rng a(4), b(4);
    CHECK(feller_step(1.0, p, 1e-3, a) == feller_step(1.0, p, 1e-3, b));
    CHECK_THROWS_AS(feller_step(1.0, p, 0.0, a), ParameterError);
    CHECK_THROWS_AS((DiffusionParams{-1.0, 0.0, 1.0}.validate()), ParameterError);
}

TEST_CASE("moment oracle against closed forms") {
    for (double a : {0.5, 1.0, 2.0})
        for (double b : {-0.7, 0.0, 0.4})
            for (double t : {0.3, 1.0, 2.5}) {
                const DiffusionParams p{a, b, 1.5};
                const auto f = moment_oracle(p, t, DiffusionKind::Feller);
                const auto fe = feller_moments(a, b, 1.5, t);
                CHECK(f.first == doctest::Approx(fe.first).epsilon(1e-9));
                CHECK(f.second == doctest::Approx(fe.second).epsilon(1e-9));
                const auto r = moment_oracle(p, t, DiffusionKind::FellerRe);
                const auto re = feller_re_moments(a, b, 1.5, t);
                CHECK(r.first == doctest::Approx(re.first).epsilon(1e-9));
                CHECK(r.second == doctest::Approx(re.second).epsilon(1e-9));
            }
    const auto z = moment_oracle(DiffusionParams{1.0, 0.3, 2.0}, 0.0, DiffusionKind::FellerRe);
    CHECK(z.first == 2.0);
    CHECK(z.second == 0.0);
}

TEST_CASE("Euler ensembles match the moment oracle") {
    const int n = 100000;
    for (DiffusionKind kind : {DiffusionKind::Feller, DiffusionKind::FellerRe}) {
        const DiffusionParams p{1.0, 0.5, 2.0};
        Rng rng(kind == DiffusionKind::Feller ? 5 : 6);
        std::vector<double> ys(n);
        for (auto& y : ys) {
            y = p.x0;
            for (int k = 0; k < 1000; ++k)
                y = kind == DiffusionKind::Feller ? feller_step(y, p, 1e-3, rng) : feller_re_step(y, p, 1e-3, rng);
            CHECK(y >= 0.0);
        }
        const auto s = summarize(ys);
        const auto m = moment_oracle(p, 1.0, kind);
        // O(dt) bias allowance: one part in 10^3 of the mean
        CHECK(std::abs(s.mean - m.first) <= 3.0 * s.se + 1e-3 * m.first);
        CHECK(s.var == doctest::Approx(m.second).epsilon(0.05));
    }
}

TEST_CASE("run_diffusion records and is reproducible") {
    const DiffusionParams p{1.0, 0.0, 1.0};
    Rng a(7), b(7);
    const auto t1 = run_diffusion(p, DiffusionKind::Feller, 1.0, 1e-3, 0.25, a);
    const auto t2 = run_diffusion(p, DiffusionKind::Feller, 1.0, 1e-3, 0.25, b);
    CHECK(t1.times.size() == 5);
    CHECK(t1.values.front() == 1.0);
    CHECK(t1.values == t2.values);
}

TEST_CASE("projected runs") {
    const ScaledRates r = ScaledRates::from_params(200.0, 30.0, 20.0, 1.0, 1.0, 1.0, 0.0);
    const ProjectedOptions opt{1.0, 1.0, 0.25, 0.0};
    Rng a(8), b(8);
    const auto t1 = run_projected(r, SelectionSpec::neutral(), EnvSpec{}, opt, a);
    const auto t2 = run_projected(r, SelectionSpec::neutral(), EnvSpec{}, opt, b);
    CHECK(t1.values == t2.values);
    CHECK(t1.values.front() == 1.0);

    Rng rng(9);
    std::vector<double> finals;
    for (int i = 0; i < 2000; ++i) finals.push_back(run_projected(r, SelectionSpec::neutral(), EnvSpec{}, opt, rng).values.back());
    const auto s = summarize(finals);
    CHECK(std::abs(s.mean - 1.0) <= 3.0 * s.se);
    for (double x : finals) {
        CHECK(x >= 0.0);
        CHECK(x <= 20.0);
    }
    CHECK_THROWS_AS(run_projected(r, SelectionSpec::neutral(), EnvSpec{}, ProjectedOptions{25.0, 1.0, 0.25, 0.0}, rng),
                    ParameterError);
}
