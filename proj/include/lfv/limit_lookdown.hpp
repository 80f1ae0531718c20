#pragma once

#include <vector>

#include "lfv/environment.hpp"
#include "lfv/lookdown.hpp"
#include "lfv/probe.hpp"

namespace lfv {

struct LimitParams {
    double a = 1.0;
    double b = 0.0;
    double lambda = 20.0;  ///< level ceiling
    void validate() const;
};

struct LevelParticle {
    double level = 0.0;
    Point position{0.0, 0.0, 0.0};
};

struct LimitOptions {
    double x0 = 1.0;            ///< initial mass (non-spatial runners)
    Probe initial_profile{};    ///< initial density (spatial runners)
    double horizon = 1.0;
    double record_every = 0.1;
    double dt = 1e-3;           ///< step for noise, motion and environment updates
    std::size_t max_particles = 1'000'000;
    std::vector<Probe> probes;  ///< spatial readouts <gamma(eta), phi>
};

/**
 * Level flow dl/dt = a l^2 - kappa l, solved in y = 1/l where it is affine:
 * y(t) = y e^{kappa t} - a (e^{kappa t} - 1) / kappa.
 */
double level_flow_reciprocal(double y, double a, double kappa, double t);
/** Time until 1/y reaches `ceiling` under the flow; +inf if never. */
double level_hitting_time(double y, double a, double kappa, double ceiling);

/** gamma projection: count / lambda. */
double gamma_mass(const std::vector<LevelParticle>& particles, double lambda);
double gamma_probe(const std::vector<LevelParticle>& particles, double lambda, const Probe& phi, const Grid& g);

/** Feller lookdown: births 2a(lambda - l), levels dl/dt = a l^2 - b l, death at lambda. */
Trajectory run_kr_feller(const LimitParams& p, const LimitOptions& opt, Rng& rng,
                         std::vector<LevelParticle>* final_particles = nullptr);

/** Feller-RE lookdown: all levels share one Brownian path in dl = (a l^2 + b^2 l) dt + sqrt(2) b l dB. */
Trajectory run_kr_feller_re(const LimitParams& p, const LimitOptions& opt, Rng& rng);

/**
 * Branching Brownian motion, birth rate lambda a and death rate lambda a - sqrt(lambda) zeta b.
 * Values are count / lambda; the initial count is round(lambda * mass(profile)).
 */
Trajectory run_bbmre_direct(const LimitParams& p, const Environment& env, const EnvState* initial_env,
                            const LimitOptions& opt, Rng& rng);

/** Lookdown for the same system: level drift a l^2 - zeta(x) sqrt(lambda) b l. */
Trajectory run_bbmre_lookdown(const LimitParams& p, const Environment& env, const EnvState* initial_env,
                              const LimitOptions& opt, Rng& rng);

/** Lookdown with level noise sqrt(2) b l dW(x), W white in time with spatial covariance q. */
Trajectory run_sbmre_lookdown(const LimitParams& p, const Environment& env, const LimitOptions& opt, Rng& rng);

}  // namespace lfv
