#pragma once

#include <vector>

#include <Eigen/Dense>

#include "lfv/environment.hpp"
#include "lfv/lookdown.hpp"
#include "lfv/probe.hpp"

namespace lfv {

using TorusGrid = Grid;

struct SpatialDensity {
    std::vector<double> w;  ///< per-cell rare frequency
    double K = 1.0;
};

struct SpatialEvent {
    double t = 0.0;
    Point center{0.0, 0.0, 0.0};
    double radius = 0.1;  ///< r / M
    double impact = 0.1;  ///< u / J
    EventKind kind = EventKind::Neutral;
};

/** Prelimit spatial parameters; event coordinates are the already-shrunk ones. */
struct SlfvParams {
    double N = 1.0, J = 1.0, K = 1.0, M = 1.0, S = 1.0, Shat = 1.0;
    double u = 0.5, s = 0.0, r = 1.0;
    double radius() const { return r / M; }
    double impact() const { return u / J; }
    /** Event centres per unit volume per unit time. */
    double neutral_rate_density(int dim) const;
    double selective_rate_density(int dim) const;
    double env_rate() const { return Shat * Shat; }
    void validate() const;
};

/** Volume of the unit ball in dimension d. */
double unit_ball_volume(int d);

/** Cells whose centres lie within `radius` of `center` (torus metric). */
void covered_cells(const Grid& g, const Point& center, double radius, std::vector<std::size_t>& out);

/** Uniform point in the ball, wrapped onto the torus. */
Point uniform_in_ball(const Grid& g, const Point& center, double radius, Rng& rng);

/** Update every covered cell with a parent of the given type. */
void slfvfs_event_forced(SpatialDensity& field, const SpatialEvent& ev, const Grid& g, bool parent_rare);

void slfvfs_event(SpatialDensity& field, const SpatialEvent& ev, const Environment& env, const EnvState& es,
                  const SelectionSpec& spec, Rng& rng);

struct SpatialOptions {
    Probe initial_profile{};  ///< X_0 density
    double horizon = 1.0;
    double record_every = 0.1;
    std::vector<Probe> probes;
    double guard = 0.0;       ///< stop when <X, 1> exceeds this; <= 0 disables
    double ceiling = 10.0;    ///< lookdown only
};

/** <X, phi> = sum_c K w_c phi(c) h^d */
double readout(const SpatialDensity& field, const Grid& g, const Probe& phi);

/** Values: <X, 1>; probe_values: one series per configured probe. */
Trajectory run_slfvfs(const SlfvParams& p, const SelectionSpec& spec, const Environment& env,
                      const SpatialOptions& opt, Rng& rng);

struct SpatialIndividual {
    double level = 0.0;
    Type ty = Type::Common;
    Point x{0.0, 0.0, 0.0};
};

/** Unsorted population on the torus, truncated at the level ceiling. */
struct SpatialLevelConfig {
    std::vector<SpatialIndividual> individuals;
    double ceiling = 10.0;
    double K = 1.0;
};

/**
 * Lookdown event restricted to the ball: offspring PPP(impact K |B|) on levels with
 * uniform positions in the ball; only individuals in the ball are remapped.  The
 * selective parent rule uses zeta at the event centre.
 */
EventStats spatial_lookdown_event(SpatialLevelConfig& config, const SpatialEvent& ev, int zeta,
                                  const SelectionSpec& spec, const Grid& g, Rng& rng);

SpatialLevelConfig initial_spatial_config(const Probe& x0, double K, double ceiling, const Grid& g, Rng& rng);

Trajectory run_slfvfs_lookdown(const SlfvParams& p, const SelectionSpec& spec, const Environment& env,
                               const SpatialOptions& opt, Rng& rng);

/** Clamped split probability 1/2 + coupling * zeta / sqrt(n). */
double mytnik_split_probability(int zeta, std::size_t n, double coupling);

/** Per-generation readouts of one branching-random-walk path, for the QV check. */
struct QvTrajectory {
    double h = 0.0;                 ///< time step
    std::vector<double> x_phi;      ///< X_k(phi)
    std::vector<double> x_phi2;     ///< X_k(phi^2)
    std::vector<double> x_drift;    ///< X_k(L phi) for the motion generator L
    std::vector<double> cell_phi;   ///< row-major (k, cell): sum over particles in cell of phi / n
    std::size_t cells = 0;
};

struct MytnikOptions {
    std::size_t n = 1000;
    double coupling = 0.5;
    Probe initial_profile{};
    double horizon = 1.0;
    double record_every = 0.1;
    std::vector<Probe> probes;
    const Probe* qv_probe = nullptr;  ///< record QvTrajectory readouts for this probe
};

Trajectory run_mytnik_brw(const Environment& env, const MytnikOptions& opt, Rng& rng, QvTrajectory* qv = nullptr);

/** C(d) N u r^{d+2} / (J M^2) with C(d) the first-coordinate second moment of the unit ball. */
double laplacian_coeff(int d, double r, double u, double N, double J, double M);
double ball_second_moment(int d);

struct QvReport {
    std::size_t n = 0;
    double realized = 0.0;   ///< ensemble mean realized QV
    double predicted = 0.0;  ///< ensemble mean predicted QV
    double ratio = 0.0;
    double ratio_se = 0.0;
    double rel_error = 0.0;  ///< |ratio - 1|
};

/**
 * Realized QV of M_k = X_k(phi) - X_0(phi) - sum_{j<k} h (X_j(L phi) + growth X_j(phi))
 * against the prediction sum_k h (a_eff X_k(phi^2) + b_eff^2 B_k^T q B_k).
 */
QvReport qv_decomposition_check(const std::vector<QvTrajectory>& ensemble, const Eigen::MatrixXd& q, double a_eff,
                                double b_eff, double growth = 0.0, std::size_t min_trajectories = 500);

/** Periodic finite-difference heat flow d/dt m = c Delta m on the grid (RK4). */
std::vector<double> heat_flow(const Grid& g, std::vector<double> m0, double c, double t);

}  // namespace lfv
