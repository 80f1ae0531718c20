#pragma once

#include <array>
#include <string>
#include <vector>

#include "lfv/lookdown.hpp"
#include "lfv/spatial.hpp"

namespace lfv {

/** Limit regime a schedule is checked against. */
enum class Theorem { Fluctuating, Critical, Directional, SpatialFluctuating, SpatialCritical, SpatialDirectional };

Theorem parse_theorem(const std::string& id);
std::string theorem_name(Theorem t);

/** f(N) = coef * N^exponent */
struct PowerLaw {
    double coef = 1.0;
    double exponent = 0.0;
    double operator()(double N) const;
};

struct ScalingSchedule {
    Theorem theorem = Theorem::Fluctuating;
    PowerLaw J, K, M, S, Shat;
    PowerLaw s{0.0, 0.0};  ///< selective fraction; may decay with N
    double u = 1.0;
    double r = 1.0;
    int dim = 0;           ///< 0 for the non-spatial theorems
    std::array<double, 2> sigma_rare{1.0, 1.0};
    std::array<double, 2> sigma_common{1.0, 1.0};

    bool spatial() const { return dim > 0; }
    ScaledRates rates(double N) const;
    SlfvParams slfv(double N) const;
    SelectionSpec selection() const;
};

/**
 * Non-spatial fluctuating-selection schedule J = N^{3/4+eps}, K = N^{1/2+2 eps},
 * S = N^beta, Shat = N^gamma.  The selective fraction s(N) = s0 N^{-(1/4-eps-beta)}
 * keeps suN/(SJ) constant; pass s_decay = false for a constant s = s0.
 */
ScalingSchedule fluctuating_schedule(double eps = 0.1, double beta = 0.1, double gamma = 0.05, double s0 = 1.0,
                                     double u = 1.0, bool s_decay = true);

/** Neutral schedule with the same J and K. */
ScalingSchedule critical_neutral_schedule(double eps = 0.1, double u = 1.0);

enum class Trend { Diverges, Vanishes, Converges, ExistsVanishing, Equals };

struct ConditionResult {
    std::string name;
    Trend trend = Trend::Converges;
    std::vector<double> values;
    double limit = 0.0;  ///< extrapolated limit (Converges) or the identified parameter
    int witness = 0;     ///< m for ExistsVanishing
    bool pass = false;
};

struct ScheduleReport {
    Theorem theorem = Theorem::Fluctuating;
    std::vector<double> probe_Ns;
    std::vector<ConditionResult> conditions;
    bool pass = false;
    std::vector<std::string> failed() const;
};

std::vector<double> default_probe_Ns();

ScheduleReport validate_schedule(const ScalingSchedule& sched, const std::vector<double>& probe_Ns);

struct EffectiveParams {
    double a = 0.0;
    double b = 0.0;
    double c1 = 0.0;
};

EffectiveParams effective_params(const ScalingSchedule& sched, double N);

}  // namespace lfv
