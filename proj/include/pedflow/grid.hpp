#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "pedflow/core.hpp"

namespace pedflow {

/**
 * Uniform node grid on the closed square domain [0,L]^D.
 *
 * Nodes sit at x_i = i*dx for multi-indices i in {0..M}^D, with dx = L/M
 * derived from L and M (never the reverse).  Each node owns the half-open
 * cell [x_i - dx/2, x_i + dx/2)^D; points on a cell boundary belong to the
 * lower-index cell, so the piecewise-constant extension of a grid function
 * is single-valued.
 */
template <std::size_t D>
class GridSpec {
public:
    GridSpec(double L, int M) : length_(L), cells_per_side_(M) {
        if (L <= 0.0) throw ConfigError("grid: L must be positive");
        if (M < 2) throw ConfigError("grid: M must be at least 2");
        dx_ = L / static_cast<double>(M);
        std::size_t n = 1;
        for (int k = 0; k < D; ++k) {
            stride_[k] = n;
            n *= static_cast<std::size_t>(M + 1);
        }
        node_count_ = n;
    }

    /// Nearest integer M for a requested spacing (round half to even).
    static int round_cells(double L, double dx_requested) {
        if (dx_requested <= 0.0) throw ConfigError("grid: requested dx must be positive");
        const double q = L / dx_requested;
        int m = static_cast<int>(std::nearbyint(q));
        if (m < 2) m = 2;
        return m;
    }

    double length() const { return length_; }
    int cells_per_side() const { return cells_per_side_; }
    int nodes_per_side() const { return cells_per_side_ + 1; }
    double dx() const { return dx_; }
    std::size_t node_count() const { return node_count_; }
    double cell_volume() const { return std::pow(dx_, D); }

    std::size_t linear(const NodeIndex<D>& idx) const {
        std::size_t r = 0;
        for (int k = 0; k < D; ++k) r += stride_[k] * static_cast<std::size_t>(idx[k]);
        return r;
    }

    NodeIndex<D> unlinear(std::size_t lin) const {
        NodeIndex<D> idx{};
        const std::size_t side = static_cast<std::size_t>(nodes_per_side());
        for (int k = 0; k < D; ++k) {
            idx[k] = static_cast<int>(lin % side);
            lin /= side;
        }
        return idx;
    }

    bool contains_index(const NodeIndex<D>& idx) const {
        for (int k = 0; k < D; ++k)
            if (idx[k] < 0 || idx[k] > cells_per_side_) return false;
        return true;
    }

    Vec<D> position(const NodeIndex<D>& idx) const {
        Vec<D> x;
        for (int k = 0; k < D; ++k) x[k] = dx_ * static_cast<double>(idx[k]);
        return x;
    }

    Vec<D> position(std::size_t lin) const { return position(unlinear(lin)); }

    bool inside_closed(const Vec<D>& x, double tol = 0.0) const {
        for (int k = 0; k < D; ++k)
            if (x[k] < -tol || x[k] > length_ + tol) return false;
        return true;
    }

    /// Node whose cell contains x (ties toward the lower index).
    NodeIndex<D> cell_of(const Vec<D>& x) const {
        NodeIndex<D> idx;
        for (int k = 0; k < D; ++k) {
            int i = static_cast<int>(std::ceil(x[k] / dx_ - 0.5));
            if (i < 0) i = 0;
            if (i > cells_per_side_) i = cells_per_side_;
            idx[k] = i;
        }
        return idx;
    }

    bool on_boundary(const NodeIndex<D>& idx) const {
        for (int k = 0; k < D; ++k)
            if (idx[k] == 0 || idx[k] == cells_per_side_) return true;
        return false;
    }

private:
    double length_;
    int cells_per_side_;
    double dx_;
    std::array<std::size_t, D> stride_;
    std::size_t node_count_;
};

/// Uniform time discretization with N*dt = T held exactly.
class SimulationClock {
public:
    SimulationClock(double dt, double T) : dt_(dt) {
        if (dt <= 0.0) throw ConfigError("clock: dt must be positive");
        if (T <= 0.0) throw ConfigError("clock: T must be positive");
        steps_ = static_cast<int>(std::nearbyint(T / dt));
        if (steps_ < 1) steps_ = 1;
        horizon_ = steps_ * dt_;
        adjusted_ = std::abs(horizon_ - T) > 1e-12 * std::max(1.0, T);
    }

    double dt() const { return dt_; }
    int steps() const { return steps_; }
    double horizon() const { return horizon_; }
    double time_at(int k) const { return k * dt_; }
    /// True when the requested horizon was rounded to a whole step count.
    bool horizon_adjusted() const { return adjusted_; }

private:
    double dt_;
    int steps_;
    double horizon_;
    bool adjusted_;
};

/// Scalar grid function, one value per node.
template <std::size_t D>
struct Field {
    explicit Field(const GridSpec<D>& grid, double fill = 0.0)
        : values(grid.node_count(), fill) {}

    std::vector<double> values;

    double& operator[](std::size_t i) { return values[i]; }
    double operator[](std::size_t i) const { return values[i]; }
    std::size_t size() const { return values.size(); }

    bool all_finite() const {
        for (double v : values)
            if (!std::isfinite(v)) return false;
        return true;
    }
};

/// Vector-valued grid function (one Vec<D> per node).
template <std::size_t D>
struct VectorField {
    explicit VectorField(const GridSpec<D>& grid) : values(grid.node_count(), zero_vec<D>()) {}

    std::vector<Vec<D>> values;

    Vec<D>& operator[](std::size_t i) { return values[i]; }
    const Vec<D>& operator[](std::size_t i) const { return values[i]; }
    std::size_t size() const { return values.size(); }
};

}  // namespace pedflow
