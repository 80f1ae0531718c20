#include "lfv/environment.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <tuple>

namespace lfv {

std::size_t Grid::cell_count() const {
    std::size_t n = 1;
    for (int k = 0; k < dim; ++k) n *= static_cast<std::size_t>(cells_per_side);
    return n;
}

double Grid::cell_volume() const { return std::pow(cell_size(), dim); }

double Grid::volume() const { return std::pow(side_length, dim); }

bool Grid::contains(const Point& x) const {
    for (int k = 0; k < dim; ++k)
        if (!(x[k] >= 0.0 && x[k] < side_length)) return false;
    return true;
}

std::size_t Grid::cell_index(const Point& x) const {
    if (!contains(x)) throw DomainError("position outside the grid domain");
    std::size_t idx = 0;
    const double h = cell_size();
    for (int k = dim - 1; k >= 0; --k) {
        int c = static_cast<int>(x[k] / h);
        if (c >= cells_per_side) c = cells_per_side - 1;
        idx = idx * static_cast<std::size_t>(cells_per_side) + static_cast<std::size_t>(c);
    }
    return idx;
}

Point Grid::cell_center(std::size_t idx) const {
    Point p{0.0, 0.0, 0.0};
    const double h = cell_size();
    for (int k = 0; k < dim; ++k) {
        p[k] = (static_cast<double>(idx % static_cast<std::size_t>(cells_per_side)) + 0.5) * h;
        idx /= static_cast<std::size_t>(cells_per_side);
    }
    return p;
}

Point Grid::wrap(Point x) const {
    for (int k = 0; k < dim; ++k) {
        x[k] = std::fmod(x[k], side_length);
        if (x[k] < 0.0) x[k] += side_length;
        if (x[k] >= side_length) x[k] = 0.0;
    }
    return x;
}

Point Grid::displacement(const Point& x, const Point& y) const {
    Point d{0.0, 0.0, 0.0};
    for (int k = 0; k < dim; ++k) {
        double v = y[k] - x[k];
        v -= side_length * std::round(v / side_length);
        d[k] = v;
    }
    return d;
}

void Grid::validate() const {
    require(dim >= 1 && dim <= 3, "grid dimension must be 1, 2 or 3");
    require(side_length > 0.0, "grid side_length must be positive");
    require(cells_per_side >= 1, "grid cells_per_side must be >= 1");
}

double env_covariance(const EnvSpec& spec, const Point& x, const Point& y, int dim) {
    if (spec.kind == EnvKind::GlobalFlip) return 1.0;
    double r2 = 0.0;
    for (int k = 0; k < dim; ++k) r2 += (x[k] - y[k]) * (x[k] - y[k]);
    const double rho = std::exp(-r2 / (2.0 * spec.corr_length * spec.corr_length));
    return 2.0 / std::numbers::pi * std::asin(rho);
}

namespace {

using CacheKey = std::tuple<double, int, double, int>;

std::mutex cache_mutex;
std::map<CacheKey, std::shared_ptr<const Eigen::MatrixXd>> factor_cache;

Eigen::MatrixXd gaussian_correlation(const Grid& g, double ell) {
    const auto n = static_cast<Eigen::Index>(g.cell_count());
    Eigen::MatrixXd c(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Point pi = g.cell_center(static_cast<std::size_t>(i));
        for (Eigen::Index j = 0; j <= i; ++j) {
            const Point pj = g.cell_center(static_cast<std::size_t>(j));
            double r2 = 0.0;
            for (int k = 0; k < g.dim; ++k) r2 += (pi[k] - pj[k]) * (pi[k] - pj[k]);
            c(i, j) = c(j, i) = std::exp(-r2 / (2.0 * ell * ell));
        }
    }
    return c;
}

std::shared_ptr<const Eigen::MatrixXd> cholesky_factor(const Grid& g, double ell) {
    const CacheKey key{ell, g.dim, g.side_length, g.cells_per_side};
    std::lock_guard<std::mutex> lock(cache_mutex);
    if (auto it = factor_cache.find(key); it != factor_cache.end()) return it->second;
    const Eigen::MatrixXd c = gaussian_correlation(g, ell);
    const auto n = c.rows();
    for (double jitter = 1e-10; jitter <= 1e-4; jitter *= 10.0) {
        Eigen::LLT<Eigen::MatrixXd> llt(c + jitter * Eigen::MatrixXd::Identity(n, n));
        if (llt.info() == Eigen::Success) {
            auto l = std::make_shared<const Eigen::MatrixXd>(llt.matrixL());
            factor_cache.emplace(key, l);
            return l;
        }
    }
    throw ParameterError("gaussian field covariance is not positive definite");
}

}  // namespace

Environment::Environment(EnvSpec spec, Grid grid) : spec_(spec), grid_(grid) {
    require(spec_.change_rate >= 0.0, "env change_rate must be >= 0");
    grid_.validate();
    if (spec_.kind == EnvKind::GaussianThreshold) {
        require(spec_.corr_length > 0.0, "env corr_length must be positive");
        require(grid_.cell_count() <= 4096, "gaussian-threshold grid exceeds 4096 cells");
        factor_ = cholesky_factor(grid_, spec_.corr_length);
    }
}

std::size_t Environment::field_size() const {
    return spec_.kind == EnvKind::GlobalFlip ? 1 : grid_.cell_count();
}

EnvState Environment::constant(int value) const {
    require(value == 1 || value == -1, "environment values are +1 or -1");
    EnvState s;
    s.field.assign(field_size(), static_cast<std::int8_t>(value));
    return s;
}

void Environment::resample(EnvState& s, double t, Rng& rng) const {
    s.field.resize(field_size());
    if (spec_.kind == EnvKind::GlobalFlip) {
        s.field[0] = uniform01(rng) < 0.5 ? -1 : 1;
    } else {
        const auto n = static_cast<Eigen::Index>(s.field.size());
        Eigen::VectorXd z(n);
        for (Eigen::Index i = 0; i < n; ++i) z[i] = std_normal(rng);
        const Eigen::VectorXd g = factor_->triangularView<Eigen::Lower>() * z;
        for (Eigen::Index i = 0; i < n; ++i) s.field[static_cast<std::size_t>(i)] = g[i] < 0.0 ? -1 : 1;
    }
    s.last_change = t;
    s.time = t;
}

EnvState Environment::initial(Rng& rng) const {
    EnvState s;
    resample(s, 0.0, rng);
    s.epoch = 0;
    return s;
}

EnvState Environment::advance(const EnvState& s, double until, Rng& rng) const {
    require(until >= s.time, "env advance: target time precedes state time");
    EnvState out = s;
    if (spec_.change_rate > 0.0) {
        double t = s.time + exponential(rng, spec_.change_rate);
        while (t <= until) {
            resample(out, t, rng);
            ++out.epoch;
            t += exponential(rng, spec_.change_rate);
        }
    }
    out.time = until;
    return out;
}

int Environment::query(const EnvState& s, const Point& x) const {
    if (spec_.kind == EnvKind::GlobalFlip) return s.field[0];
    return s.field[grid_.cell_index(x)];
}

Eigen::MatrixXd Environment::cell_covariance() const {
    const auto n = static_cast<Eigen::Index>(grid_.cell_count());
    Eigen::MatrixXd q(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            q(i, j) = covariance(grid_.cell_center(static_cast<std::size_t>(i)),
                                 grid_.cell_center(static_cast<std::size_t>(j)));
    return q;
}

}  // namespace lfv
