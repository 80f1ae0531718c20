#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace lfv {

struct EnsembleSummary {
    std::size_t n = 0;
    double mean = 0.0;
    double se = 0.0;
    double var = 0.0;
    double var_lo = 0.0;  ///< 95% interval for var (fourth-moment normal approximation)
    double var_hi = 0.0;
};

struct KsResult {
    double statistic = 0.0;
    double p_value = 1.0;
    std::size_t n1 = 0;
    std::size_t n2 = 0;
};

EnsembleSummary summarize(std::span<const double> samples);

/** Survival function of the Kolmogorov distribution, P(K > lambda). */
double kolmogorov_survival(double lambda);

KsResult ks_two_sample(std::span<const double> a, std::span<const double> b);

/** One-sample KS against a continuous cdf. Points where `cdf` is 1 are allowed. */
KsResult ks_one_sample(std::span<const double> a, const std::function<double(double)>& cdf);

/** Sum of squared increments of (trajectory - compensator). */
double realized_qv(std::span<const double> trajectory, std::span<const double> compensator);

/** Ratio of means mean(x)/mean(y) with a delta-method standard error. */
struct RatioEstimate {
    double ratio = 0.0;
    double se = 0.0;
};
RatioEstimate ratio_of_means(std::span<const double> x, std::span<const double> y);

}  // namespace lfv
