#include "lfv/probe.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace lfv {

namespace {

double wave_number_sq(const Probe& p, const Grid& g) {
    double k2 = 0.0;
    for (int j = 0; j < g.dim; ++j) {
        const double k = 2.0 * std::numbers::pi * p.mode[j] / g.side_length;
        k2 += k * k;
    }
    return k2;
}

}  // namespace

double Probe::value(const Point& x, const Grid& g) const {
    double shape = 1.0;
    switch (kind) {
    case ProbeKind::Constant:
        break;
    case ProbeKind::IndicatorBox:
        for (int j = 0; j < g.dim; ++j)
            if (!(x[j] >= lo[j] && x[j] < hi[j])) shape = 0.0;
        break;
    case ProbeKind::Cosine: {
        double phase = 0.0;
        for (int j = 0; j < g.dim; ++j) phase += mode[j] * x[j];
        shape = std::cos(2.0 * std::numbers::pi * phase / g.side_length);
        break;
    }
    case ProbeKind::GaussianBump: {
        const Point d = g.displacement(center, x);
        double r2 = 0.0;
        for (int j = 0; j < g.dim; ++j) r2 += d[j] * d[j];
        shape = std::exp(-r2 / (2.0 * width * width));
        break;
    }
    }
    return offset + scale * shape;
}

double Probe::laplacian(const Point& x, const Grid& g) const {
    switch (kind) {
    case ProbeKind::Constant:
    case ProbeKind::IndicatorBox:
        return 0.0;
    case ProbeKind::Cosine:
        return -wave_number_sq(*this, g) * (value(x, g) - offset);
    case ProbeKind::GaussianBump: {
        const Point d = g.displacement(center, x);
        double r2 = 0.0;
        for (int j = 0; j < g.dim; ++j) r2 += d[j] * d[j];
        const double w2 = width * width;
        return (value(x, g) - offset) * (r2 / (w2 * w2) - g.dim / w2);
    }
    }
    return 0.0;
}

std::vector<double> rasterize(const Probe& p, const Grid& g) {
    std::vector<double> v(g.cell_count());
    for (std::size_t c = 0; c < v.size(); ++c) v[c] = p.value(g.cell_center(c), g);
    return v;
}

double total_mass(const Probe& p, const Grid& g) {
    double s = 0.0;
    for (double v : rasterize(p, g)) s += v;
    return s * g.cell_volume();
}

std::vector<Point> sample_positions(const Probe& profile, const Grid& g, std::size_t count, Rng& rng) {
    return sample_positions_weighted(rasterize(profile, g), g, count, rng);
}

std::vector<Point> sample_positions_weighted(const std::vector<double>& w, const Grid& g, std::size_t count,
                                             Rng& rng) {
    require(w.size() == g.cell_count(), "one weight per cell expected");
    for (double v : w) require(v >= 0.0, "density profile must be nonnegative");
    std::vector<Point> out;
    if (count == 0) return out;
    std::discrete_distribution<std::size_t> pick(w.begin(), w.end());
    out.reserve(count);
    const double h = g.cell_size();
    for (std::size_t i = 0; i < count; ++i) {
        Point c = g.cell_center(pick(rng));
        for (int j = 0; j < g.dim; ++j) c[j] += (uniform01(rng) - 0.5) * h;
        out.push_back(g.wrap(c));
    }
    return out;
}

}  // namespace lfv
