#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "lfv/common.hpp"

namespace lfv {

/** Half-open interval [lo, hi). */
struct Window {
    double lo = 0.0;
    double hi = 1.0;
    double length() const { return hi - lo; }
    bool contains(double x) const { return x >= lo && x < hi; }
};

struct PppSample {
    std::vector<double> points;  ///< strictly ascending
    double intensity = 0.0;
    Window window;
};

/** Homogeneous Poisson process on a window. */
PppSample sample_ppp(double intensity, Window window, Rng& rng);

/** Uniform points in [lo, hi), ascending and tie-free; appended to `out`. */
void sample_uniform_sorted(std::size_t count, Window window, Rng& rng, std::vector<double>& out);

struct CoxDiagnostic {
    double laplace_lhs = 1.0;
    double laplace_rhs = 1.0;
    double lhs_se = 0.0;       ///< standard error of the empirical lhs
    double ks_gap_stat = 0.0;
    double ks_p_value = 1.0;
    std::size_t n_samples = 0;
    std::size_t n_gaps = 0;

    /** |lhs - rhs| within k standard errors (exact equality when both SEs vanish). */
    bool laplace_consistent(double k = 3.0) const;
};

/**
 * Empirical check of E exp(-<f, xi>) = exp(-int (1 - e^{-f}) dLambda) for the given
 * deterministic intensity, together with a KS test of Palm forward gaps after a
 * time change to unit rate.  Forward gaps are censored at a fixed horizon so that
 * the reference law is exactly a truncated exponential.
 */
CoxDiagnostic laplace_functional_check(const std::vector<std::vector<double>>& configs, Window window,
                                       const std::function<double(double)>& cox_intensity,
                                       const std::function<double(double)>& probe);

}  // namespace lfv
