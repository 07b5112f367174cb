#pragma once

#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "pedflow/geometry.hpp"
#include "pedflow/grid.hpp"

namespace pedflow {

/**
 * Nonnegative density per node, the discrete m_k.  Values are cell averages;
 * total mass is sum_i m_i * dx^D.  Target, Obstacle and Ghost nodes hold zero.
 */
template <std::size_t D>
struct DensityField {
    explicit DensityField(const GridSpec<D>& grid) : values(grid.node_count(), 0.0) {}

    std::vector<double> values;

    double& operator[](std::size_t i) { return values[i]; }
    double operator[](std::size_t i) const { return values[i]; }
    std::size_t size() const { return values.size(); }

    double total_mass(const GridSpec<D>& grid) const {
        // Compensated sum so mass diagnostics are sharper than the drift they measure.
        double s = 0.0, c = 0.0;
        for (double v : values) {
            const double y = v - c;
            const double t = s + y;
            c = (t - s) - y;
            s = t;
        }
        return s * grid.cell_volume();
    }

    double max_value() const {
        double m = 0.0;
        for (double v : values) m = std::max(m, v);
        return m;
    }

    double min_value() const {
        double m = 0.0;
        for (double v : values) m = std::min(m, v);
        return m;
    }
};

/// Per-exit absorbed mass per step plus the remaining-mass trace.
struct ExitLedger {
    double initial_mass = 0.0;
    std::vector<std::string> exit_names;
    std::vector<std::vector<double>> absorbed;  // [exit][step]
    std::vector<double> remaining;              // [step], after the step

    void reset(double mass0, const std::vector<std::string>& names) {
        initial_mass = mass0;
        exit_names = names;
        absorbed.assign(names.size(), {});
        remaining.clear();
    }

    void record_step(const std::vector<double>& absorbed_now, double remaining_now) {
        for (std::size_t e = 0; e < absorbed.size(); ++e)
            absorbed[e].push_back(e < absorbed_now.size() ? absorbed_now[e] : 0.0);
        remaining.push_back(remaining_now);
    }

    int steps() const { return static_cast<int>(remaining.size()); }

    double cumulative_absorbed(std::size_t e) const {
        return std::accumulate(absorbed[e].begin(), absorbed[e].end(), 0.0);
    }

    double total_absorbed() const {
        double s = 0.0;
        for (std::size_t e = 0; e < absorbed.size(); ++e) s += cumulative_absorbed(e);
        return s;
    }

    /// Largest relative violation of remaining + absorbed = initial over all steps.
    double worst_budget_error() const {
        if (initial_mass <= 0.0) return 0.0;
        double worst = 0.0;
        std::vector<double> cum(absorbed.size(), 0.0);
        for (int k = 0; k < steps(); ++k) {
            double a = 0.0;
            for (std::size_t e = 0; e < absorbed.size(); ++e) {
                cum[e] += absorbed[e][k];
                a += cum[e];
            }
            worst = std::max(worst, std::abs(remaining[k] + a - initial_mass) / initial_mass);
        }
        return worst;
    }
};

/// Indicator-type initial density: constant level on a rectangle.
template <std::size_t D>
struct InitialRectDensity {
    Box<D> rect;
    double level = 0.0;
};

/**
 * Exact cell averages of an indicator initial density: the overlap volume of
 * each node cell with the rectangle times the level, divided by dx^D.
 * Target, Obstacle and Ghost nodes are zeroed afterwards.
 */
template <std::size_t D>
DensityField<D> init_density(const ClassifiedGrid<D>& cg, const InitialRectDensity<D>& m0) {
    const GridSpec<D>& grid = cg.grid;
    if (!m0.rect.valid()) throw ConfigError("initial density: rectangle has empty extent");
    if (m0.level < 0.0) throw ConfigError("initial density: level must be nonnegative");

    bool intersects = true;
    for (int k = 0; k < D; ++k)
        if (m0.rect.hi[k] <= 0.0 || m0.rect.lo[k] >= grid.length()) intersects = false;
    if (!intersects)
        throw ConfigError("initial density: rectangle does not intersect the domain");

    DensityField<D> m(grid);
    const double dx = grid.dx();
    for (std::size_t lin = 0; lin < grid.node_count(); ++lin) {
        if (!cg.carries_density(lin)) continue;
        const Vec<D> x = grid.position(lin);
        double frac = 1.0;
        for (int k = 0; k < D; ++k) {
            const double clo = x[k] - 0.5 * dx;
            const double chi = x[k] + 0.5 * dx;
            const double o = std::min(chi, m0.rect.hi[k]) - std::max(clo, m0.rect.lo[k]);
            frac *= std::max(o, 0.0) / dx;
        }
        m[lin] = m0.level * frac;
    }
    return m;
}

/// Initial density from explicit node values (mask-style input).
template <std::size_t D>
DensityField<D> init_density_values(const ClassifiedGrid<D>& cg, const std::vector<double>& values) {
    if (values.size() != cg.grid.node_count())
        throw ConfigError("initial density values: size does not match the grid");
    DensityField<D> m(cg.grid);
    for (std::size_t lin = 0; lin < values.size(); ++lin) {
        if (values[lin] < 0.0) throw ConfigError("initial density values: negative entry");
        if (cg.carries_density(lin)) m[lin] = values[lin];
    }
    return m;
}

}  // namespace pedflow
