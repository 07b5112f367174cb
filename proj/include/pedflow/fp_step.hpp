#pragma once

#include <vector>

#include "pedflow/characteristics.hpp"
#include "pedflow/density.hpp"
#include "pedflow/geometry.hpp"
#include "pedflow/interpolate.hpp"

namespace pedflow {

template <std::size_t D>
struct FpStepResult {
    DensityField<D> next;
    std::vector<double> absorbed;  // per exit, this step
    double fold_fraction = 0.0;    // largest per-branch weight folded off ghost nodes
};

/**
 * Reflection against the classified geometry.  Rectangle scenarios mirror at
 * the snapped obstacle boxes; mask scenarios treat the cells of Ghost and
 * Obstacle nodes as the blocked region and mirror at cell faces.
 */
template <std::size_t D>
Vec<D> reflect_classified(const ClassifiedGrid<D>& cg, Vec<D> z, const Vec<D>& start) {
    const GridSpec<D>& grid = cg.grid;
    const double L = grid.length();
    if (!cg.mask_mode) return reflect<D>(z, start, L, cg.obstacles);

    auto blocked = [&](const Vec<D>& p) {
        const NodeType t = cg.type[grid.linear(grid.cell_of(p))];
        return t == NodeType::Ghost || t == NodeType::Obstacle;
    };

    for (int pass = 0; pass < 6; ++pass) {
        bool outside = false;
        for (int k = 0; k < D; ++k)
            if (z[k] < 0.0 || z[k] > L) outside = true;
        if (outside) {
            Vec<D> w;
            for (int k = 0; k < D; ++k) w[k] = std::min(std::max(z[k], 0.0), L);
            Vec<D> mirrored = 2.0 * w - z;
            bool ok = grid.inside_closed(mirrored);
            z = ok ? mirrored : w;
            continue;
        }
        if (!blocked(z)) return z;

        const NodeIndex<D> cell = grid.cell_of(z);
        const Vec<D> cx = grid.position(cell);
        Box<D> b;
        for (int k = 0; k < D; ++k) {
            b.lo[k] = std::max(cx[k] - 0.5 * grid.dx(), 0.0);
            b.hi[k] = std::min(cx[k] + 0.5 * grid.dx(), L);
        }
        Vec<D> best_w{};
        double best_d = std::numeric_limits<double>::infinity();
        for (int k = 0; k < D; ++k) {
            for (double face : {b.lo[k], b.hi[k]}) {
                Vec<D> w = z;
                w[k] = face;
                const double d = norm2<D>(w - start);
                if (d < best_d - 1e-15) {
                    best_d = d;
                    best_w = w;
                }
            }
        }
        Vec<D> mirrored = 2.0 * best_w - z;
        z = (grid.inside_closed(mirrored) && !blocked(mirrored)) ? mirrored : best_w;
        if (!blocked(z)) return z;
    }
    // Unresolvable tangle of blocked cells: keep the mass at its source.
    return start;
}

/**
 * One explicit Semi-Lagrangian step of the nonlinear FP equation.
 *
 * Every source node j splits its mass evenly over the 2*D characteristic
 * branches.  A branch is first tested against exit crossings (absorbing
 * truncation), then, if not absorbed, its foot is reflected at walls and
 * obstacles.  The branch mass is scattered onto the P1 weights of the final
 * point; weight landing on Target nodes is absorbed and credited to that
 * node's exit, everything else accumulates into the next density.  The update
 * is a convex redistribution of nonnegative mass, so it conserves mass
 * exactly in closed rooms and never produces negative values.
 *
 * Branches are processed source-major, branch-minor, single-threaded, so runs
 * are bit-reproducible.
 */
template <std::size_t D>
FpStepResult<D> fp_step(const ClassifiedGrid<D>& cg, const DensityField<D>& m,
                        const VectorField<D>& drift, double dt, double eps) {
    const GridSpec<D>& grid = cg.grid;
    FpStepResult<D> out{DensityField<D>(grid), std::vector<double>(cg.exit_names.size(), 0.0), 0.0};
    const double span_tol = grid.dx() / 100.0;
    const double branch_split = 1.0 / static_cast<double>(2 * D);

    for (std::size_t j = 0; j < grid.node_count(); ++j) {
        const double mass_j = m[j];
        if (mass_j <= 0.0) continue;
        if (!cg.carries_density(j))
            throw InternalError("fp_step: source mass on a non-density node");

        const Vec<D> xj = grid.position(j);
        const Vec<D>& bj = drift[j];
        const double branch_mass = mass_j * branch_split;

        for (int axis = 0; axis < D; ++axis) {
            for (int sign : {+1, -1}) {
                CharacteristicBranch<D> br{xj, bj, eps, axis, sign};
                const Truncation<D> tr = target_truncated_dt(br, cg.exits, dt, span_tol);

                Vec<D> p;
                if (tr.exit_index >= 0) {
                    // landing sits on the exit patch; clamp span coordinates into the domain
                    for (int k = 0; k < D; ++k)
                        p[k] = std::min(std::max(tr.landing[k], 0.0), grid.length());
                } else {
                    p = reflect_classified<D>(cg, tr.landing, xj);
                }

                const InterpWeights<D> w = interpolation_weights(grid, p);

                // Partition the P1 weights by node class.
                double free_sum = 0.0, ghost_sum = 0.0;
                for (int q = 0; q < w.count; ++q) {
                    const NodeType t = cg.type[w.node[q]];
                    if (t == NodeType::Ghost || t == NodeType::Obstacle)
                        ghost_sum += w.weight[q];
                    else
                        free_sum += w.weight[q];
                }
                double scale = 1.0;
                if (ghost_sum > 0.0) {
                    if (free_sum < 0.25)
                        throw InternalError(
                            "fp_step: characteristic foot landed inside the obstacle band "
                            "(ghost band too thin)");
                    scale = 1.0 / free_sum;
                    out.fold_fraction = std::max(out.fold_fraction, ghost_sum);
                }

                for (int q = 0; q < w.count; ++q) {
                    const std::size_t node = w.node[q];
                    const NodeType t = cg.type[node];
                    if (t == NodeType::Ghost || t == NodeType::Obstacle) continue;
                    const double contrib = branch_mass * w.weight[q] * scale;
                    if (t == NodeType::Target) {
                        int e = cg.exit_id[node];
                        if (tr.exit_index >= 0) e = tr.exit_index;
                        out.absorbed[static_cast<std::size_t>(e)] += contrib;
                    } else {
                        out.next[node] += contrib;
                    }
                }
            }
        }
    }
    // Absorbed contributions were accumulated in density units.
    for (double& a : out.absorbed) a *= grid.cell_volume();
    return out;
}

}  // namespace pedflow
