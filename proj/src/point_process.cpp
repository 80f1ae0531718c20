#include "lfv/point_process.hpp"

#include <algorithm>
#include <cmath>

#include "lfv/stats.hpp"

namespace lfv {

namespace {

constexpr int kQuadratureNodes = 1 << 12;

double draw_in(Window w, Rng& rng) {
    std::uniform_real_distribution<double> u(w.lo, w.hi);
    double x = u(rng);
    while (x >= w.hi) x = u(rng);  // rounding can land on hi
    return x;
}

}  // namespace

void sample_uniform_sorted(std::size_t count, Window window, Rng& rng, std::vector<double>& out) {
    const std::size_t start = out.size();
    for (std::size_t i = 0; i < count; ++i) out.push_back(draw_in(window, rng));
    auto first = out.begin() + static_cast<std::ptrdiff_t>(start);
    std::sort(first, out.end());
    for (;;) {
        auto dup = std::adjacent_find(first, out.end());
        if (dup == out.end()) break;
        *dup = draw_in(window, rng);
        std::sort(first, out.end());
    }
}

PppSample sample_ppp(double intensity, Window window, Rng& rng) {
    if (!(intensity >= 0.0)) throw ParameterError("sample_ppp: negative intensity");
    if (!(window.hi > window.lo)) throw ParameterError("sample_ppp: empty window");
    PppSample s;
    s.intensity = intensity;
    s.window = window;
    const long n = poisson(rng, intensity * window.length());
    s.points.reserve(static_cast<std::size_t>(n));
    sample_uniform_sorted(static_cast<std::size_t>(n), window, rng, s.points);
    return s;
}

bool CoxDiagnostic::laplace_consistent(double k) const {
    const double diff = std::abs(laplace_lhs - laplace_rhs);
    if (lhs_se == 0.0) return diff <= 1e-12;
    return diff <= k * lhs_se;
}

CoxDiagnostic laplace_functional_check(const std::vector<std::vector<double>>& configs, Window window,
                                       const std::function<double(double)>& cox_intensity,
                                       const std::function<double(double)>& probe) {
    if (configs.empty()) throw InsufficientDataError("laplace_functional_check: no configurations");
    if (!(window.hi > window.lo)) throw ParameterError("laplace_functional_check: empty window");

    // trapezoid grid: cumulative intensity and the rhs integral
    const int m = kQuadratureNodes;
    const double h = window.length() / (m - 1);
    std::vector<double> cum(m, 0.0);
    double rhs_int = 0.0;
    double prev_lam = cox_intensity(window.lo);
    double prev_g = prev_lam * (1.0 - std::exp(-probe(window.lo)));
    for (int i = 1; i < m; ++i) {
        const double x = window.lo + i * h;
        const double lam = cox_intensity(x);
        const double g = lam * (1.0 - std::exp(-probe(x)));
        cum[i] = cum[i - 1] + 0.5 * h * (lam + prev_lam);
        rhs_int += 0.5 * h * (g + prev_g);
        prev_lam = lam;
        prev_g = g;
    }
    auto cumulative = [&](double x) {
        const double pos = std::clamp((x - window.lo) / h, 0.0, double(m - 1));
        const int i = std::min(static_cast<int>(pos), m - 2);
        const double f = pos - i;
        return cum[i] + f * (cum[i + 1] - cum[i]);
    };

    CoxDiagnostic d;
    d.n_samples = configs.size();
    d.laplace_rhs = std::exp(-rhs_int);

    std::vector<double> lhs_terms;
    lhs_terms.reserve(configs.size());
    for (const auto& c : configs) {
        double s = 0.0;
        for (double x : c) s += probe(x);
        lhs_terms.push_back(std::exp(-s));
    }
    if (lhs_terms.size() >= 2) {
        const auto sm = summarize(lhs_terms);
        d.laplace_lhs = sm.mean;
        d.lhs_se = sm.se;
    } else {
        d.laplace_lhs = lhs_terms[0];
    }

    // Palm forward gaps in unit-rate time, censored at T
    const double total = cum[m - 1];
    const double cap = std::min(8.0, 0.5 * total);
    std::vector<double> gaps;
    if (cap > 0.0) {
        for (const auto& c : configs) {
            for (std::size_t i = 0; i < c.size(); ++i) {
                const double s = cumulative(c[i]);
                if (s > total - cap) break;
                const double next = i + 1 < c.size() ? cumulative(c[i + 1]) : total;
                gaps.push_back(std::min(next - s, cap));
            }
        }
    }
    d.n_gaps = gaps.size();
    if (!gaps.empty()) {
        // truncated exponential: atom at cap; the KS sup is taken over x < cap
        auto cdf = [cap](double x) { return x >= cap ? 1.0 - std::exp(-cap) : 1.0 - std::exp(-x); };
        std::vector<double> below;
        for (double g : gaps)
            if (g < cap) below.push_back(g);
        std::sort(below.begin(), below.end());
        const double n = static_cast<double>(gaps.size());
        double stat = 0.0;
        for (std::size_t i = 0; i < below.size(); ++i) {
            const double f = cdf(below[i]);
            stat = std::max({stat, (i + 1) / n - f, f - i / n});
        }
        stat = std::max(stat, std::abs(below.size() / n - (1.0 - std::exp(-cap))));
        d.ks_gap_stat = std::clamp(stat, 0.0, 1.0);
        d.ks_p_value = kolmogorov_survival(stat * std::sqrt(n));
    }
    return d;
}

}  // namespace lfv
