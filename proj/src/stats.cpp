#include "lfv/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "lfv/common.hpp"

namespace lfv {

EnsembleSummary summarize(std::span<const double> samples) {
    if (samples.size() < 2) throw InsufficientDataError("summarize needs at least 2 samples");
    // summing in sorted order makes the result independent of sample order
    std::vector<double> s(samples.begin(), samples.end());
    std::sort(s.begin(), s.end());
    const double n = static_cast<double>(s.size());
    double sum = 0.0;
    for (double x : s) sum += x;
    const double mean = sum / n;
    double m2 = 0.0, m4 = 0.0;
    for (double x : s) {
        const double d = (x - mean) * (x - mean);
        m2 += d;
        m4 += d * d;
    }
    EnsembleSummary out;
    out.n = s.size();
    out.mean = mean;
    out.var = m2 / (n - 1.0);
    out.se = std::sqrt(out.var / n);
    const double mu2 = m2 / n, mu4 = m4 / n;
    const double half = 1.959963984540054 * std::sqrt(std::max(mu4 - mu2 * mu2, 0.0) / n);
    out.var_lo = std::max(out.var - half, 0.0);
    out.var_hi = out.var + half;
    return out;
}

double kolmogorov_survival(double lambda) {
    if (lambda <= 0.0) return 1.0;
    if (lambda < 1.18) {
        // small-lambda form of the cdf converges faster
        const double pi2 = std::numbers::pi * std::numbers::pi;
        double cdf = 0.0;
        for (int k = 1; k <= 50; ++k) {
            const double m = 2.0 * k - 1.0;
            cdf += std::exp(-m * m * pi2 / (8.0 * lambda * lambda));
        }
        cdf *= std::sqrt(2.0 * std::numbers::pi) / lambda;
        return std::clamp(1.0 - cdf, 0.0, 1.0);
    }
    double q = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * lambda * lambda);
        q += (k % 2 == 1 ? 2.0 : -2.0) * term;
        if (term < 1e-300) break;
    }
    return std::clamp(q, 0.0, 1.0);
}

KsResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw InsufficientDataError("ks_two_sample needs nonempty samples");
    std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    const double n1 = static_cast<double>(x.size()), n2 = static_cast<double>(y.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < x.size() && j < y.size()) {
        const double v = std::min(x[i], y[j]);
        while (i < x.size() && x[i] == v) ++i;
        while (j < y.size() && y[j] == v) ++j;
        d = std::max(d, std::abs(i / n1 - j / n2));
    }
    KsResult r;
    r.statistic = d;
    r.n1 = x.size();
    r.n2 = y.size();
    r.p_value = kolmogorov_survival(d * std::sqrt(n1 * n2 / (n1 + n2)));
    return r;
}

KsResult ks_one_sample(std::span<const double> a, const std::function<double(double)>& cdf) {
    if (a.empty()) throw InsufficientDataError("ks_one_sample needs a nonempty sample");
    std::vector<double> x(a.begin(), a.end());
    std::sort(x.begin(), x.end());
    const double n = static_cast<double>(x.size());
    double d = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double f = cdf(x[i]);
        d = std::max({d, (i + 1) / n - f, f - i / n});
    }
    KsResult r;
    r.statistic = std::clamp(d, 0.0, 1.0);
    r.n1 = x.size();
    r.p_value = kolmogorov_survival(d * std::sqrt(n));
    return r;
}

double realized_qv(std::span<const double> trajectory, std::span<const double> compensator) {
    if (trajectory.size() < 2) throw InsufficientDataError("realized_qv needs at least 2 points");
    if (compensator.size() != trajectory.size())
        throw ParameterError("trajectory and compensator lengths differ");
    double qv = 0.0;
    for (std::size_t k = 1; k < trajectory.size(); ++k) {
        const double inc = (trajectory[k] - compensator[k]) - (trajectory[k - 1] - compensator[k - 1]);
        qv += inc * inc;
    }
    return qv;
}

RatioEstimate ratio_of_means(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2)
        throw InsufficientDataError("ratio_of_means needs paired samples, n >= 2");
    const auto sx = summarize(x), sy = summarize(y);
    RatioEstimate r;
    r.ratio = sx.mean / sy.mean;
    std::vector<double> resid(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) resid[i] = x[i] - r.ratio * y[i];
    r.se = summarize(resid).se / std::abs(sy.mean);
    return r;
}

}  // namespace lfv
