#pragma once

#include <utility>

#include "lfv/lookdown.hpp"

namespace lfv {

struct DensityState {
    double w = 0.0;
    double t = 0.0;
};

struct DiffusionParams {
    double a = 0.0;
    double b = 0.0;
    double x0 = 0.0;
    void validate() const;
};

enum class DiffusionKind { Feller, FellerRe };

/** P(parent is rare) at a selective event. */
double selective_parent_probability(double w, int zeta, const SelectionSpec& spec);

/** Deterministic part of the update given the parent type. */
double projected_update(double w, double impact, bool parent_rare);

DensityState projected_event(DensityState state, EventKind kind, double impact, int zeta,
                             const SelectionSpec& spec, Rng& rng);

struct ProjectedOptions {
    double x0 = 1.0;
    double horizon = 1.0;
    double record_every = 0.1;
    double guard = 0.0;
};

/** Jump process for X = K w with the same three clocks as run_lfvsfe. */
Trajectory run_projected(const ScaledRates& rates, const SelectionSpec& spec, const EnvSpec& env_spec,
                         const ProjectedOptions& opt, Rng& rng);

/** Euler-Maruyama steps with a given standard normal draw; truncated at 0. */
double feller_step_with_noise(double y, const DiffusionParams& p, double dt, double z);
double feller_re_step_with_noise(double y, const DiffusionParams& p, double dt, double z);
double feller_step(double y, const DiffusionParams& p, double dt, Rng& rng);
double feller_re_step(double y, const DiffusionParams& p, double dt, Rng& rng);

Trajectory run_diffusion(const DiffusionParams& p, DiffusionKind kind, double horizon, double dt,
                         double record_every, Rng& rng);

/** (mean, variance) by RK4 integration of the first two moment equations. */
std::pair<double, double> moment_oracle(const DiffusionParams& p, double t, DiffusionKind kind);

}  // namespace lfv
