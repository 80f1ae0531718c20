#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "lfv/common.hpp"
#include "lfv/environment.hpp"

namespace lfv {

enum class Type : std::uint8_t { Common = 0, Rare = 1 };
enum class EventKind { Neutral, Selective };

struct Individual {
    double level = 0.0;
    Type ty = Type::Common;
    bool operator==(const Individual&) const = default;
};

/** Lookdown state truncated to levels in [0, ceiling], sorted ascending. */
struct LevelConfig {
    std::vector<Individual> individuals;
    double ceiling = 1.0;
    double total_intensity = 1.0;  ///< K
};

/**
 * Fitness table sigma(type, zeta).  Index 0 is zeta = -1, index 1 is zeta = +1.
 */
struct SelectionSpec {
    std::array<double, 2> sigma_rare{1.0, 1.0};
    std::array<double, 2> sigma_common{1.0, 1.0};
    double s = 0.0;

    /** Checks positivity and, if asked, E_pi[sigma_r/sigma_c - 1] = 0 under the uniform law on zeta. */
    static SelectionSpec make(std::array<double, 2> rare, std::array<double, 2> common, double s,
                              bool require_symmetry = true);
    static SelectionSpec neutral() { return make({1.0, 1.0}, {1.0, 1.0}, 0.0); }

    double sigma(Type t, int zeta) const {
        const std::size_t z = zeta > 0 ? 1 : 0;
        return t == Type::Rare ? sigma_rare[z] : sigma_common[z];
    }
    /** Mean of sigma_r/sigma_c - 1 over zeta = +-1. */
    double symmetry_defect() const;
};

struct ScaledRates {
    double neutral_rate = 0.0;        ///< N
    double selective_rate = 0.0;      ///< N * Shat * s / S
    double env_rate = 0.0;            ///< Shat^2
    double impact = 0.0;              ///< u / J
    double offspring_intensity = 0.0; ///< u K / J
    double total_intensity = 1.0;     ///< K

    static ScaledRates from_params(double N, double J, double K, double S, double Shat, double u, double s);
    void validate() const;
};

double j_neu(double l, double l_star, double v_star, double impact);
double j_sel(double l, Type ty, double l_star, Type ty_star, int zeta, double v_star, double impact,
             const SelectionSpec& spec);

std::optional<Individual> select_parent_neutral(const LevelConfig& config, double v_star);
std::optional<Individual> select_parent_selective(const LevelConfig& config, double v_star, int zeta,
                                                  const SelectionSpec& spec);

struct EventStats {
    std::size_t offspring = 0;
    std::size_t deaths = 0;
    std::size_t clamped = 0;      ///< selective remaps that fell below 0
    bool untracked_parent = false;
    bool empty_draw = false;
};

/** In-place lookdown event.  `scratch` is reused between calls. */
EventStats apply_event_inplace(LevelConfig& config, EventKind kind, const ScaledRates& rates, int zeta,
                               const SelectionSpec& spec, Rng& rng, std::vector<Individual>& scratch);

LevelConfig apply_event(const LevelConfig& config, EventKind kind, const ScaledRates& rates, int zeta,
                        const SelectionSpec& spec, Rng& rng);

/** Event with a caller-supplied offspring set (ascending, nonempty, within the ceiling). */
EventStats apply_event_with_offspring(LevelConfig& config, EventKind kind, const std::vector<double>& offspring,
                                      double impact, int zeta, const SelectionSpec& spec,
                                      std::vector<Individual>& scratch);

double rare_mass(const LevelConfig& config);

/** Conditionally Poisson initial state: PPP(x0) rare and PPP(K - x0) common levels. */
LevelConfig initial_config(double x0, double K, double ceiling, Rng& rng);

/** Recorded time series of a scalar observable. */
struct Trajectory {
    std::vector<double> times;
    std::vector<double> values;
    std::vector<std::vector<double>> probe_values;  ///< spatial readouts, one series per probe
    bool stopped = false;          ///< guard hit; values frozen from then on
    double stop_time = -1.0;
    std::uint64_t events = 0;
    std::uint64_t clamped = 0;
    std::uint64_t untracked_parents = 0;
};

/** Recording grid 0, dt, 2dt, ..., horizon. */
std::vector<double> time_grid(double horizon, double record_every);

struct LfvsfeOptions {
    double x0 = 1.0;
    double ceiling = 20.0;
    double horizon = 1.0;
    double record_every = 0.1;
    double guard = 0.0;  ///< stop threshold on rare mass; <= 0 disables
};

Trajectory run_lfvsfe(const ScaledRates& rates, const SelectionSpec& spec, const EnvSpec& env_spec,
                      const LfvsfeOptions& opt, Rng& rng, LevelConfig* final_config = nullptr);

}  // namespace lfv
