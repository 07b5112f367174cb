#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "pedflow/core.hpp"
#include "pedflow/grid.hpp"

namespace pedflow {

/// Closed axis-aligned box.
template <std::size_t D>
struct Box {
    Vec<D> lo{};
    Vec<D> hi{};

    bool valid() const {
        for (int k = 0; k < D; ++k)
            if (!(lo[k] < hi[k])) return false;
        return true;
    }

    bool contains(const Vec<D>& x, double tol = 0.0) const {
        for (int k = 0; k < D; ++k)
            if (x[k] < lo[k] - tol || x[k] > hi[k] + tol) return false;
        return true;
    }

    bool strictly_inside(const Vec<D>& x) const {
        for (int k = 0; k < D; ++k)
            if (!(x[k] > lo[k] && x[k] < hi[k])) return false;
        return true;
    }

    Vec<D> clamp(Vec<D> x) const {
        for (int k = 0; k < D; ++k) x[k] = std::min(std::max(x[k], lo[k]), hi[k]);
        return x;
    }
};

/**
 * Absorbing exit: a flat patch on the plane {x[axis] = coord}, spanning the
 * interval [span_lo, span_hi] on every other axis (stored per axis; the entry
 * for `axis` itself is ignored).  Exits live on the outer rectangle boundary
 * or on obstacle faces.
 */
template <std::size_t D>
struct ExitPatch {
    std::string id;
    int axis = 0;
    double coord = 0.0;
    Vec<D> span_lo{};
    Vec<D> span_hi{};
    /// +1 when the outward direction points toward increasing x[axis].
    int outward_sign = -1;

    bool on_patch(const Vec<D>& x, double plane_tol, double span_tol) const {
        if (std::abs(x[axis] - coord) > plane_tol) return false;
        for (int k = 0; k < D; ++k) {
            if (k == axis) continue;
            if (x[k] < span_lo[k] - span_tol || x[k] > span_hi[k] + span_tol) return false;
        }
        return true;
    }
};

/// Continuous scene description: exits plus obstacle rectangles.
template <std::size_t D>
struct SceneGeometry {
    std::vector<ExitPatch<D>> exits;
    std::vector<Box<D>> obstacles;  // snapped to grid lines by classify_nodes
};

enum class NodeType : std::uint8_t { Interior = 0, Wall = 1, Target = 2, Obstacle = 3, Ghost = 4 };

inline const char* node_type_name(NodeType t) {
    switch (t) {
        case NodeType::Interior: return "interior";
        case NodeType::Wall: return "wall";
        case NodeType::Target: return "target";
        case NodeType::Obstacle: return "obstacle";
        case NodeType::Ghost: return "ghost";
    }
    return "?";
}

/**
 * Total node classification of a grid: every node carries exactly one class,
 * Target nodes carry the index of their exit.  Obstacle boxes are stored in
 * grid-snapped form; the FP reflection uses exactly these boxes, so density
 * never reaches nodes strictly inside them.
 */
template <std::size_t D>
struct ClassifiedGrid {
    GridSpec<D> grid;
    std::vector<NodeType> type;
    std::vector<std::int16_t> exit_id;  // -1 unless Target
    std::vector<std::string> exit_names;
    std::vector<ExitPatch<D>> exits;    // snapped copies used for truncation
    std::vector<Box<D>> obstacles;      // snapped copies used for reflection
    /// Mask-loaded geometry: blocked region = cells of Ghost/Obstacle nodes.
    bool mask_mode = false;

    explicit ClassifiedGrid(const GridSpec<D>& g)
        : grid(g), type(g.node_count(), NodeType::Interior), exit_id(g.node_count(), -1) {}

    NodeType type_at(std::size_t lin) const { return type[lin]; }
    bool carries_density(std::size_t lin) const {
        const NodeType t = type[lin];
        return t == NodeType::Interior || t == NodeType::Wall;
    }
    /// Nodes whose HJB value is genuine data rather than an artificial penalty.
    bool hjb_readable(std::size_t lin) const {
        const NodeType t = type[lin];
        return t == NodeType::Interior || t == NodeType::Target;
    }

    std::size_t count(NodeType t) const {
        std::size_t n = 0;
        for (NodeType x : type)
            if (x == t) ++n;
        return n;
    }

    /// FNV-1a over class codes and exit ids; pins built-in geometries in tests.
    std::uint64_t fingerprint() const {
        std::uint64_t h = 1469598103934665603ull;
        auto mix = [&h](std::uint8_t b) {
            h ^= b;
            h *= 1099511628211ull;
        };
        for (std::size_t i = 0; i < type.size(); ++i) {
            mix(static_cast<std::uint8_t>(type[i]));
            mix(static_cast<std::uint8_t>(exit_id[i] & 0xff));
        }
        return h;
    }
};

namespace detail {

template <std::size_t D>
inline Box<D> snap_box_to_grid(const GridSpec<D>& grid, const Box<D>& b, bool& moved) {
    Box<D> s;
    moved = false;
    for (int k = 0; k < D; ++k) {
        int lo = static_cast<int>(std::nearbyint(b.lo[k] / grid.dx()));
        int hi = static_cast<int>(std::nearbyint(b.hi[k] / grid.dx()));
        lo = std::max(lo, 0);
        hi = std::min(hi, grid.cells_per_side());
        if (hi <= lo)
            throw ConfigError("obstacle collapses to zero thickness after grid snapping; refine the grid");
        s.lo[k] = lo * grid.dx();
        s.hi[k] = hi * grid.dx();
        if (std::abs(s.lo[k] - b.lo[k]) > 1e-12 || std::abs(s.hi[k] - b.hi[k]) > 1e-12) moved = true;
    }
    return s;
}

}  // namespace detail

/**
 * Ghost band width in node layers: enough layers that no characteristic query
 * lands past classified, valued nodes.  Reach per step is bounded by the
 * largest drift hop plus the diffusion displacement.
 */
inline int ghost_band_layers(double dx, double dt, double h, double eps, double alpha_max, int dim) {
    const double step = std::max(h, dt);
    const double reach = alpha_max * step + std::sqrt(2.0 * dim * eps * step);
    return static_cast<int>(std::ceil(reach / dx)) + 1;
}

/**
 * Classify every node of the grid against the scene geometry.
 *
 * Boundary nodes inside an exit patch become Target (carrying the exit id),
 * other outer-boundary nodes become Wall.  Obstacle boxes are snapped to grid
 * lines first; nodes on a snapped face become Wall, nodes strictly inside
 * become Ghost within `ghost_layers` of the face and Obstacle deeper in.
 * Ghost and Obstacle nodes carry the large penalty value in the HJB solve and
 * never carry density.
 */
template <std::size_t D>
ClassifiedGrid<D> classify_nodes(const GridSpec<D>& grid, const SceneGeometry<D>& scene,
                                 int ghost_layers, std::vector<std::string>* warnings = nullptr) {
    ClassifiedGrid<D> cg(grid);

    // Exits: validate and snap the plane coordinate to the boundary it names.
    const double span_tol = grid.dx() / 100.0;
    for (const auto& e : scene.exits) {
        if (e.axis < 0 || e.axis >= D) throw ConfigError("exit '" + e.id + "': invalid axis");
        for (int k = 0; k < D; ++k) {
            if (k == e.axis) continue;
            if (!(e.span_lo[k] < e.span_hi[k]))
                throw ConfigError("exit '" + e.id + "': empty span");
        }
    }
    for (std::size_t a = 0; a < scene.exits.size(); ++a) {
        for (std::size_t b = a + 1; b < scene.exits.size(); ++b) {
            const auto& ea = scene.exits[a];
            const auto& eb = scene.exits[b];
            if (ea.axis != eb.axis || std::abs(ea.coord - eb.coord) > span_tol) continue;
            bool overlap = true;
            for (int k = 0; k < D; ++k) {
                if (k == ea.axis) continue;
                if (ea.span_hi[k] < eb.span_lo[k] - span_tol ||
                    eb.span_hi[k] < ea.span_lo[k] - span_tol)
                    overlap = false;
            }
            if (overlap && ea.id != eb.id)
                throw ConfigError("exits '" + ea.id + "' and '" + eb.id + "' overlap");
        }
    }

    cg.exits = scene.exits;
    for (const auto& e : cg.exits) cg.exit_names.push_back(e.id);

    bool any_moved = false;
    for (const auto& ob : scene.obstacles) {
        if (!ob.valid()) throw ConfigError("obstacle box has empty extent");
        bool moved = false;
        cg.obstacles.push_back(detail::snap_box_to_grid(grid, ob, moved));
        any_moved = any_moved || moved;
    }
    if (any_moved && warnings)
        warnings->push_back("obstacle faces were snapped to grid lines");

    // Exit planes must coincide with a rectangle face or an obstacle face.
    for (const auto& e : cg.exits) {
        const bool on_rect = std::abs(e.coord) <= span_tol ||
                             std::abs(e.coord - grid.length()) <= span_tol;
        bool on_obstacle = false;
        for (const auto& ob : cg.obstacles)
            if (std::abs(e.coord - ob.lo[e.axis]) <= span_tol ||
                std::abs(e.coord - ob.hi[e.axis]) <= span_tol)
                on_obstacle = true;
        if (!on_rect && !on_obstacle)
            throw ConfigError("exit '" + e.id + "' does not lie on the rectangle or an obstacle face");
    }

    const double plane_tol = grid.dx() / 100.0;
    const double dx = grid.dx();

    for (std::size_t lin = 0; lin < grid.node_count(); ++lin) {
        const NodeIndex<D> idx = grid.unlinear(lin);
        const Vec<D> x = grid.position(idx);

        // Obstacle interiors first: strictly inside a snapped box.
        int depth_layers = -1;  // node layers from the nearest face, >=1 when inside
        for (const auto& ob : cg.obstacles) {
            if (!ob.strictly_inside(x)) continue;
            int depth = std::numeric_limits<int>::max();
            for (int k = 0; k < D; ++k) {
                const int lo_layers = static_cast<int>(std::nearbyint((x[k] - ob.lo[k]) / dx));
                const int hi_layers = static_cast<int>(std::nearbyint((ob.hi[k] - x[k]) / dx));
                depth = std::min(depth, std::min(lo_layers, hi_layers));
            }
            depth_layers = std::max(depth_layers, depth);
        }
        if (depth_layers >= 1) {
            cg.type[lin] = (depth_layers <= ghost_layers) ? NodeType::Ghost : NodeType::Obstacle;
            continue;
        }

        // Exit patches next (they may sit on the rectangle or an obstacle face).
        int hit_exit = -1;
        for (std::size_t e = 0; e < cg.exits.size(); ++e) {
            if (cg.exits[e].on_patch(x, plane_tol, span_tol)) {
                hit_exit = static_cast<int>(e);
                break;
            }
        }
        if (hit_exit >= 0) {
            cg.type[lin] = NodeType::Target;
            cg.exit_id[lin] = static_cast<std::int16_t>(hit_exit);
            continue;
        }

        // Walls: outer rectangle boundary or a snapped obstacle face.
        bool wall = grid.on_boundary(idx);
        if (!wall) {
            for (const auto& ob : cg.obstacles) {
                if (!ob.contains(x, plane_tol)) continue;
                // contains but not strictly inside => on a face
                wall = true;
                break;
            }
        }
        cg.type[lin] = wall ? NodeType::Wall : NodeType::Interior;
    }

    return cg;
}

}  // namespace pedflow
