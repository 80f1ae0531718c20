#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "lfv/environment.hpp"
#include "lfv/stats.hpp"

using namespace lfv;

namespace {

double threshold_oracle(double dist, double ell) {
    return 2.0 / std::numbers::pi * std::asin(std::exp(-dist * dist / (2.0 * ell * ell)));
}

}  // namespace

TEST_CASE("grid geometry") {
    const Grid g{2, 4.0, 8};
    CHECK(g.cell_count() == 64);
    CHECK(g.cell_size() == 0.5);
    CHECK(g.cell_volume() == 0.25);
    CHECK(g.volume() == 16.0);
    CHECK(g.cell_index({0.1, 0.1, 0.0}) == 0);
    CHECK(g.cell_index({0.6, 0.1, 0.0}) == 1);
    CHECK(g.cell_index({0.1, 0.6, 0.0}) == 8);
    const Point c = g.cell_center(9);
    CHECK(c[0] == 0.75);
    CHECK(c[1] == 0.75);
    CHECK_THROWS_AS(g.cell_index({4.0, 0.1, 0.0}), DomainError);
    CHECK_THROWS_AS(g.cell_index({-0.1, 0.1, 0.0}), DomainError);
    const Point w = g.wrap({-0.5, 4.25, 0.0});
    CHECK(w[0] == doctest::Approx(3.5));
    CHECK(w[1] == doctest::Approx(0.25));
    const Point d = g.displacement({0.2, 0.2, 0.0}, {3.9, 0.3, 0.0});
    CHECK(d[0] == doctest::Approx(-0.3));
    CHECK(d[1] == doctest::Approx(0.1));
    CHECK_THROWS(Grid{4, 1.0, 2}.validate());
    CHECK_THROWS(Grid{1, -1.0, 2}.validate());
}

TEST_CASE("covariance closed forms") {
    const EnvSpec gf{EnvKind::GlobalFlip, 1.0, 1.0};
    const EnvSpec gt{EnvKind::GaussianThreshold, 1.0, 1.0};
    const Point x{0.2, 0.0, 0.0}, y{1.2, 0.0, 0.0}, z{0.2, 3.0, 0.0};
    CHECK(env_covariance(gt, x, x, 1) == 1.0);
    CHECK(env_covariance(gf, x, y, 1) == 1.0);
    CHECK(env_covariance(gf, x, z, 2) == 1.0);
    CHECK(env_covariance(gt, x, y, 1) == doctest::Approx(0.4149).epsilon(1e-4));
    CHECK(std::abs(env_covariance(gt, x, y, 1) - threshold_oracle(1.0, 1.0)) < 1e-12);
    CHECK(std::abs(env_covariance(gt, x, z, 2) - threshold_oracle(3.0, 1.0)) < 1e-12);
    for (double dist : {0.0, 0.3, 1.0, 2.5, 10.0}) {
        const double q = env_covariance(EnvSpec{EnvKind::GaussianThreshold, 0.7, 0.0}, {0, 0, 0}, {dist, 0, 0}, 1);
        CHECK(q >= -1.0);
        CHECK(q <= 1.0);
    }
}

TEST_CASE("no epochs at zero change rate") {
    const Environment env(EnvSpec{EnvKind::GlobalFlip, 1.0, 0.0});
    Rng rng(1);
    const EnvState s0 = env.initial(rng);
    const EnvState s1 = env.advance(s0, 7.5, rng);
    CHECK(s1.field == s0.field);
    CHECK(s1.epoch == s0.epoch);
    CHECK(s1.last_change == s0.last_change);
    CHECK(s1.time == 7.5);
}

TEST_CASE("advance rejects going back in time") {
    const Environment env(EnvSpec{EnvKind::GlobalFlip, 1.0, 1.0});
    Rng rng(1);
    const EnvState s = env.advance(env.initial(rng), 2.0, rng);
    CHECK_THROWS_AS(env.advance(s, 1.0, rng), ParameterError);
}

TEST_CASE("global flip: fair coin after an epoch and Poisson epoch counts") {
    const double rate = 2.0, horizon = 3.0;
    const Environment env(EnvSpec{EnvKind::GlobalFlip, 1.0, rate});
    Rng rng(2);
    std::vector<double> plus, epochs;
    for (int i = 0; i < 10000; ++i) {
        EnvState s = env.initial(rng);
        s = env.advance(s, horizon, rng);
        epochs.push_back(static_cast<double>(s.epoch));
        if (s.epoch >= 1) plus.push_back(s.field[0] == 1 ? 1.0 : 0.0);
    }
    const auto p = summarize(plus);
    CHECK(std::abs(p.mean - 0.5) <= 3.0 * p.se);
    const auto e = summarize(epochs);
    CHECK(std::abs(e.mean - rate * horizon) <= 3.0 * e.se);
}

TEST_CASE("global flip is constant in space") {
    const Environment env(EnvSpec{EnvKind::GlobalFlip, 1.0, 1.0}, Grid{1, 1.0, 8});
    Rng rng(3);
    const EnvState s = env.initial(rng);
    const int v = env.query(s, {0.05, 0, 0});
    for (double x : {0.1, 0.33, 0.5, 0.99}) CHECK(env.query(s, {x, 0, 0}) == v);
}

TEST_CASE("constant states and validation") {
    const Environment env(EnvSpec{EnvKind::GaussianThreshold, 0.5, 1.0}, Grid{1, 4.0, 16});
    const EnvState s = env.constant(-1);
    CHECK(s.field.size() == 16);
    for (auto v : s.field) CHECK(v == -1);
    CHECK_THROWS_AS(env.constant(0), ParameterError);
    CHECK_THROWS_AS(Environment(EnvSpec{EnvKind::GaussianThreshold, 0.0, 1.0}, Grid{1, 1.0, 4}), ParameterError);
    CHECK_THROWS_AS(Environment(EnvSpec{EnvKind::GlobalFlip, 1.0, -1.0}), ParameterError);
    CHECK_THROWS_AS(env.query(s, {4.5, 0, 0}), DomainError);
}

TEST_CASE("gaussian threshold: marginals and covariance") {
    const double ell = 1.0;
    const Grid g{1, 8.0, 16};
    const Environment env(EnvSpec{EnvKind::GaussianThreshold, ell, 1.0}, g);
    Rng rng(4);
    const std::size_t n = g.cell_count();
    const int epochs = 10000;
    std::vector<std::vector<double>> plus(n);
    // pairs of cells: separation in cells (cell size 0.5)
    const std::vector<std::pair<std::size_t, std::size_t>> pairs = {{3, 3}, {3, 4}, {3, 5}, {2, 6}, {0, 15},
                                                                    {7, 8}, {1, 2}, {10, 13}, {5, 11}, {4, 6}};
    std::vector<std::vector<double>> prod(pairs.size());
    EnvState s = env.initial(rng);
    for (int k = 0; k < epochs; ++k) {
        env.resample(s, static_cast<double>(k), rng);
        for (std::size_t c = 0; c < n; ++c) {
            CHECK((s.field[c] == 1 || s.field[c] == -1));
            plus[c].push_back(s.field[c] == 1 ? 1.0 : 0.0);
        }
        for (std::size_t p = 0; p < pairs.size(); ++p)
            prod[p].push_back(static_cast<double>(s.field[pairs[p].first] * s.field[pairs[p].second]));
    }
    for (std::size_t c = 0; c < n; ++c) {
        const auto sm = summarize(plus[c]);
        CHECK(std::abs(sm.mean - 0.5) <= 3.5 * sm.se);
    }
    for (std::size_t p = 0; p < pairs.size(); ++p) {
        const auto sm = summarize(prod[p]);
        const double dist = 0.5 * std::abs(static_cast<double>(pairs[p].first) - static_cast<double>(pairs[p].second));
        const double q = threshold_oracle(dist, ell);
        if (dist == 0.0) CHECK(sm.mean == 1.0);
        else CHECK(std::abs(sm.mean - q) <= 3.5 * sm.se);
        CHECK(env.cell_covariance()(static_cast<Eigen::Index>(pairs[p].first),
                                    static_cast<Eigen::Index>(pairs[p].second)) == doctest::Approx(q).epsilon(1e-12));
    }
}

TEST_CASE("gaussian threshold at unit separation") {
    // cells of size 1 so that neighbouring centres are exactly 1 apart
    const Environment env(EnvSpec{EnvKind::GaussianThreshold, 1.0, 1.0}, Grid{1, 4.0, 4});
    Rng rng(5);
    std::vector<double> prod;
    EnvState s = env.initial(rng);
    for (int k = 0; k < 10000; ++k) {
        env.resample(s, k, rng);
        prod.push_back(env.query(s, {0.5, 0, 0}) * env.query(s, {1.5, 0, 0}));
    }
    const auto sm = summarize(prod);
    CHECK(std::abs(sm.mean - 0.4149) <= 3.0 * sm.se);
}

TEST_CASE("sampling is reproducible") {
    const Environment env(EnvSpec{EnvKind::GaussianThreshold, 0.8, 3.0}, Grid{2, 2.0, 6});
    Rng a(9), b(9);
    const EnvState s1 = env.advance(env.initial(a), 2.0, a);
    const EnvState s2 = env.advance(env.initial(b), 2.0, b);
    CHECK(s1.field == s2.field);
    CHECK(s1.epoch == s2.epoch);
}
