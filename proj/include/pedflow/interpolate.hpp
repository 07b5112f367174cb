#pragma once

#include <algorithm>
#include <array>
#include <cstddef>

#include "pedflow/grid.hpp"

namespace pedflow {

/// P1 weights of a query point: at most D+1 (node, weight) pairs.
template <std::size_t D>
struct InterpWeights {
    std::array<std::size_t, D + 1> node{};
    std::array<double, D + 1> weight{};
    int count = 0;
};

/**
 * P1 basis weights on the fixed uniform triangulation of [0,L]^D.
 *
 * Every grid square (cube) is split into simplices along the diagonal from
 * its lower corner to its upper corner (Friedrichs-Keller pattern in 2D,
 * Kuhn simplices in general).  The simplex containing the query is found by
 * sorting the fractional coordinates; weights are the barycentric
 * coordinates, so they are nonnegative, sum to one, and reproduce affine
 * functions exactly.  Sorting ties are broken by axis order, which fixes the
 * triangulation once and for all.
 */
template <std::size_t D>
InterpWeights<D> interpolation_weights(const GridSpec<D>& grid, const Vec<D>& x) {
    // Points a few ulps outside (roundoff from reflections or near-tangent
    // truncations) are clamped; anything farther is a caller error.
    if (!grid.inside_closed(x, 1e-9 * grid.length()))
        throw std::domain_error("interpolation_weights: point outside the closed domain");

    const int M = grid.cells_per_side();
    const double dx = grid.dx();

    NodeIndex<D> base;
    std::array<double, D> frac;
    for (int k = 0; k < D; ++k) {
        double s = std::min(std::max(x[k], 0.0), grid.length()) / dx;
        int c = static_cast<int>(std::floor(s));
        if (c < 0) c = 0;
        if (c > M - 1) c = M - 1;
        base[k] = c;
        double f = s - static_cast<double>(c);
        if (f < 0.0) f = 0.0;
        if (f > 1.0) f = 1.0;
        frac[k] = f;
    }

    // Axes sorted by descending fractional part (stable in axis order).
    std::array<int, D> order;
    for (int k = 0; k < D; ++k) order[k] = k;
    std::stable_sort(order.begin(), order.end(),
                     [&frac](int a, int b) { return frac[a] > frac[b]; });

    InterpWeights<D> w;
    NodeIndex<D> vertex = base;
    w.node[0] = grid.linear(vertex);
    w.weight[0] = 1.0 - frac[order[0]];
    for (int j = 0; j < D; ++j) {
        vertex[order[j]] += 1;
        const double next = (j + 1 < D) ? frac[order[j + 1]] : 0.0;
        w.node[j + 1] = grid.linear(vertex);
        w.weight[j + 1] = frac[order[j]] - next;
    }
    w.count = D + 1;
    return w;
}

/// I[u](x) = sum_i u(x_i) beta_i(x); exact for globally affine u.
template <std::size_t D>
double p1_interpolate(const GridSpec<D>& grid, const Field<D>& u, const Vec<D>& x) {
    const InterpWeights<D> w = interpolation_weights(grid, x);
    double s = 0.0;
    for (int j = 0; j < w.count; ++j) s += w.weight[j] * u[w.node[j]];
    return s;
}

/// Interpolation against a raw value array (same contract as above).
template <std::size_t D>
double p1_interpolate(const GridSpec<D>& grid, const std::vector<double>& u, const Vec<D>& x) {
    const InterpWeights<D> w = interpolation_weights(grid, x);
    double s = 0.0;
    for (int j = 0; j < w.count; ++j) s += w.weight[j] * u[w.node[j]];
    return s;
}

}  // namespace pedflow
