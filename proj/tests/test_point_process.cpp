#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "lfv/point_process.hpp"
#include "lfv/stats.hpp"

using namespace lfv;

TEST_CASE("zero intensity gives an empty sample") {
    Rng rng(1);
    const auto s = sample_ppp(0.0, Window{-2.0, 5.0}, rng);
    CHECK(s.points.empty());
    CHECK(s.intensity == 0.0);
}

TEST_CASE("negative intensity is rejected") {
    Rng rng(1);
    CHECK_THROWS_AS(sample_ppp(-1.0, Window{0.0, 1.0}, rng), ParameterError);
}

TEST_CASE("sampling is a pure function of the seed") {
    Rng a(42), b(42);
    const auto s1 = sample_ppp(3.0, Window{0.0, 10.0}, a);
    const auto s2 = sample_ppp(3.0, Window{0.0, 10.0}, b);
    CHECK(s1.points == s2.points);
}

TEST_CASE("points are strictly ascending and inside the window") {
    Rng rng(2);
    for (int rep = 0; rep < 200; ++rep) {
        const Window w{1.5, 4.0};
        const auto s = sample_ppp(20.0, w, rng);
        for (std::size_t i = 0; i < s.points.size(); ++i) {
            CHECK(w.contains(s.points[i]));
            if (i > 0) CHECK(s.points[i - 1] < s.points[i]);
        }
    }
}

TEST_CASE("mean count is intensity times length") {
    Rng rng(3);
    std::vector<double> counts(10000);
    for (auto& c : counts) c = static_cast<double>(sample_ppp(2.0, Window{0.0, 3.0}, rng).points.size());
    const auto s = summarize(counts);
    CHECK(std::abs(s.mean - 6.0) <= 3.0 * s.se);
    CHECK(s.var == doctest::Approx(6.0).epsilon(0.05));
}

TEST_CASE("given the count, points are uniform") {
    Rng rng(4);
    std::vector<double> pooled;
    for (int rep = 0; rep < 1000; ++rep)
        for (double x : sample_ppp(5.0, Window{0.0, 2.0}, rng).points) pooled.push_back(x);
    const auto ks = ks_one_sample(pooled, [](double x) { return std::clamp(x / 2.0, 0.0, 1.0); });
    CHECK(ks.p_value > 0.01);
}

TEST_CASE("pooled gaps are exponential") {
    Rng rng(5);
    std::vector<double> gaps;
    const double rate = 4.0;
    for (int rep = 0; rep < 1000; ++rep) {
        const auto s = sample_ppp(rate, Window{0.0, 10.0}, rng);
        // forward gaps from each point, kept only when the next point is certainly in the window
        for (std::size_t i = 0; i + 1 < s.points.size(); ++i)
            if (s.points[i] < 5.0) gaps.push_back(std::min(s.points[i + 1] - s.points[i], 5.0));
    }
    const auto ks = ks_one_sample(gaps, [rate](double x) { return x < 5.0 ? 1.0 - std::exp(-rate * x) : 1.0; });
    CHECK(ks.p_value > 0.01);
}

TEST_CASE("Laplace check: empty configurations") {
    std::vector<std::vector<double>> configs(50);
    const auto d = laplace_functional_check(configs, Window{0.0, 5.0}, [](double) { return 0.0; },
                                            [](double x) { return x < 1.0 ? 0.7 : 0.0; });
    CHECK(d.laplace_lhs == 1.0);
    CHECK(d.laplace_rhs == 1.0);
    CHECK(d.laplace_consistent());
    CHECK(d.n_samples == 50);
}

TEST_CASE("Laplace check needs configurations") {
    const std::vector<std::vector<double>> none;
    CHECK_THROWS_AS(laplace_functional_check(none, Window{0.0, 1.0}, [](double) { return 1.0; },
                                             [](double) { return 0.0; }),
                    InsufficientDataError);
}

namespace {

double bump(double x) { return 0.8 * std::exp(-2.0 * (x - 1.0) * (x - 1.0)); }

std::vector<std::vector<double>> poisson_configs(double c, std::size_t n, std::uint64_t seed, bool inject) {
    Rng rng(seed);
    std::vector<std::vector<double>> configs;
    for (std::size_t i = 0; i < n; ++i) {
        auto pts = sample_ppp(c, Window{0.0, 8.0}, rng).points;
        if (inject) pts.insert(pts.begin(), 0.0);
        configs.push_back(std::move(pts));
    }
    return configs;
}

}  // namespace

TEST_CASE("Laplace identity holds for Poisson input") {
    const double c = 3.0;
    const auto d = laplace_functional_check(poisson_configs(c, 4000, 6, false), Window{0.0, 8.0},
                                            [c](double) { return c; }, bump);
    CHECK(d.laplace_consistent(3.0));
    CHECK(d.ks_p_value > 0.01);
    CHECK(d.laplace_lhs > 0.0);
    CHECK(d.laplace_lhs <= 1.0);
    // closed form of the rhs for the bump probe, by an independent fine Simpson rule
    double integral = 0.0;
    const int m = 20000;
    const double h = 8.0 / m;
    for (int i = 0; i <= m; ++i) {
        const double w = (i == 0 || i == m) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        integral += w * (1.0 - std::exp(-bump(i * h)));
    }
    integral *= h / 3.0;
    CHECK(d.laplace_rhs == doctest::Approx(std::exp(-c * integral)).epsilon(1e-6));
}

TEST_CASE("Laplace identity fails with an injected point") {
    const double c = 3.0;
    const auto probe = [](double x) { return x < 0.5 ? 1.0 - 2.0 * x : 0.0; };
    const auto d = laplace_functional_check(poisson_configs(c, 4000, 7, true), Window{0.0, 8.0},
                                            [c](double) { return c; }, probe);
    CHECK_FALSE(d.laplace_consistent(3.0));
}

TEST_CASE("gap test rejects a lattice") {
    std::vector<std::vector<double>> configs(200);
    for (auto& c : configs)
        for (int k = 0; k < 40; ++k) c.push_back(0.25 * k + 0.01);
    const auto d = laplace_functional_check(configs, Window{0.0, 10.0}, [](double) { return 4.0; },
                                            [](double) { return 0.0; });
    CHECK(d.ks_p_value < 1e-6);
}
