#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "lfv/common.hpp"

namespace lfv {

using Point = std::array<double, 3>;

/** Periodic box [0, L)^d cut into cells_per_side^d cells. */
struct Grid {
    int dim = 1;
    double side_length = 1.0;
    int cells_per_side = 1;

    std::size_t cell_count() const;
    double cell_size() const { return side_length / cells_per_side; }
    double cell_volume() const;
    double volume() const;
    bool contains(const Point& x) const;
    /** Throws DomainError outside [0, L)^d. */
    std::size_t cell_index(const Point& x) const;
    Point cell_center(std::size_t idx) const;
    /** Wrap onto the torus. */
    Point wrap(Point x) const;
    /** Componentwise minimal-image displacement y - x. */
    Point displacement(const Point& x, const Point& y) const;
    void validate() const;
};

enum class EnvKind { GlobalFlip, GaussianThreshold };

struct EnvSpec {
    EnvKind kind = EnvKind::GlobalFlip;
    double corr_length = 1.0;
    double change_rate = 0.0;
};

struct EnvState {
    std::vector<std::int8_t> field;  ///< one entry (global flip) or one per grid cell
    double time = 0.0;
    double last_change = 0.0;
    std::uint64_t epoch = 0;
};

/** Closed-form covariance q(x, y) of the field (Euclidean distance, no wrap). */
double env_covariance(const EnvSpec& spec, const Point& x, const Point& y, int dim);

class Environment {
public:
    explicit Environment(EnvSpec spec, Grid grid = {});

    const EnvSpec& spec() const { return spec_; }
    const Grid& grid() const { return grid_; }
    std::size_t field_size() const;

    /** Epoch-0 state drawn from the stationary law. */
    EnvState initial(Rng& rng) const;
    /** State with every entry equal to `value`. */
    EnvState constant(int value) const;

    /** Fresh independent field at time t (one epoch). */
    void resample(EnvState& s, double t, Rng& rng) const;
    EnvState advance(const EnvState& s, double until, Rng& rng) const;

    int query(const EnvState& s, const Point& x) const;
    int query_cell(const EnvState& s, std::size_t cell) const {
        return s.field.size() == 1 ? s.field[0] : s.field[cell];
    }
    double covariance(const Point& x, const Point& y) const { return env_covariance(spec_, x, y, grid_.dim); }

    /** Cell-centre covariance matrix of the thresholded field. */
    Eigen::MatrixXd cell_covariance() const;

private:
    EnvSpec spec_;
    Grid grid_;
    std::shared_ptr<const Eigen::MatrixXd> factor_;
};

}  // namespace lfv
