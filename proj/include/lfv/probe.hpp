#pragma once

#include <array>
#include <vector>

#include "lfv/environment.hpp"

namespace lfv {

enum class ProbeKind { Constant, IndicatorBox, Cosine, GaussianBump };

/**
 * Test function or density profile on the torus:
 *   value(x) = offset + scale * shape(x)
 * with shape 1, 1{lo <= x < hi}, cos(2 pi <mode, x> / L) or exp(-|x - center|^2 / (2 width^2)).
 */
struct Probe {
    ProbeKind kind = ProbeKind::Constant;
    double offset = 0.0;
    double scale = 1.0;
    Point lo{0.0, 0.0, 0.0};
    Point hi{1.0, 1.0, 1.0};
    std::array<int, 3> mode{1, 0, 0};
    Point center{0.0, 0.0, 0.0};
    double width = 1.0;

    double value(const Point& x, const Grid& g) const;
    double laplacian(const Point& x, const Grid& g) const;
};

/** Cell-centre values of a profile. */
std::vector<double> rasterize(const Probe& p, const Grid& g);

/** Integral of the profile over the torus by cell-centre quadrature. */
double total_mass(const Probe& p, const Grid& g);

/**
 * `count` positions drawn with density proportional to the profile: a cell is chosen
 * by its centre value, then a uniform point inside it.
 */
std::vector<Point> sample_positions(const Probe& profile, const Grid& g, std::size_t count, Rng& rng);
std::vector<Point> sample_positions_weighted(const std::vector<double>& cell_weights, const Grid& g,
                                             std::size_t count, Rng& rng);

}  // namespace lfv
