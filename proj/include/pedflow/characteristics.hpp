#pragma once

#include <cmath>
#include <optional>

#include "pedflow/core.hpp"
#include "pedflow/geometry.hpp"

namespace pedflow {

/**
 * One Euler branch of the discrete characteristics:
 *
 *   z(t) = x + t*b + sign * sqrt(2 D eps t) * e_axis,   t in (0, t_max].
 *
 * The drift part moves every coordinate; the random-walk part displaces only
 * the branch axis.  foot(t_max) is the raw, untruncated endpoint.
 */
template <std::size_t D>
struct CharacteristicBranch {
    Vec<D> start{};
    Vec<D> drift{};
    double eps = 0.0;
    int axis = 0;
    int sign = +1;

    double diffusion_scale() const { return std::sqrt(2.0 * D * eps); }

    Vec<D> at(double t) const {
        Vec<D> z = start;
        for (int k = 0; k < D; ++k) z[k] += t * drift[k];
        z[axis] += sign * diffusion_scale() * std::sqrt(t);
        return z;
    }

    Vec<D> foot(double t_max) const { return at(t_max); }

    /// Upper bound on |z(t) - x| for t in [0, t_max].
    double reach(double t_max) const {
        return norm2(drift) * t_max + diffusion_scale() * std::sqrt(t_max);
    }
};

/// Raw characteristic endpoint: x + dt*b + sign*sqrt(2 D eps dt)*e_axis.
template <std::size_t D>
Vec<D> characteristic_foot(const Vec<D>& x, const Vec<D>& b, double dt, double eps, int axis,
                           int sign) {
    CharacteristicBranch<D> br{x, b, eps, axis, sign};
    return br.foot(dt);
}

namespace detail {

/// Positive times t with z(t)[coord_axis] == plane, smallest first.  With the
/// substitution s = sqrt(t) the branch axis gives a quadratic in s, every
/// other axis a linear equation in t.
template <std::size_t D>
inline int plane_crossings(const CharacteristicBranch<D>& br, int coord_axis, double plane,
                           double t_max, double out[2]) {
    int n = 0;
    const double c0 = br.start[coord_axis] - plane;
    const double b = br.drift[coord_axis];
    const double t_hi = t_max * (1.0 + 1e-12) + 1e-300;
    auto push = [&](double t) {
        if (t > 0.0 && t <= t_hi) out[n++] = std::min(t, t_max);
    };

    if (coord_axis != br.axis) {
        if (b != 0.0) push(-c0 / b);
        return n;
    }

    const double sq = br.sign * br.diffusion_scale();
    if (sq == 0.0) {
        if (b != 0.0) push(-c0 / b);
        return n;
    }
    // b s^2 + sq s + c0 = 0
    if (b == 0.0) {
        const double s = -c0 / sq;
        if (s > 0.0) push(s * s);
        return n;
    }
    const double disc = sq * sq - 4.0 * b * c0;
    if (disc < 0.0) return 0;
    const double root = std::sqrt(disc);
    const double q = -0.5 * (sq + (sq >= 0.0 ? root : -root));
    const double s1 = q / b;
    const double s2 = (q != 0.0) ? c0 / q : 0.0;
    const double lo = std::min(s1, s2), hi = std::max(s1, s2);
    if (lo > 0.0) push(lo * lo);
    if (hi > 0.0 && hi != lo) push(hi * hi);
    if (n == 2 && out[0] > out[1]) std::swap(out[0], out[1]);
    return n;
}

}  // namespace detail

template <std::size_t D>
struct Truncation {
    double t_hat;     // truncated step, in (0, t_max]
    Vec<D> landing;   // z(t_hat), crossed coordinate set exactly on the plane
    int exit_index;   // exit hit, or -1 when t_hat == t_max (no truncation)
};

/**
 * First time the branch enters an exit patch, capped at t_max.
 *
 * Every exit plane is tested with the s = sqrt(t) quadratic; a crossing only
 * counts when the landing point lies within the patch span (tolerance
 * span_tol along the face).  Without a valid crossing the full step and the
 * raw foot are returned.
 */
template <std::size_t D>
Truncation<D> target_truncated_dt(const CharacteristicBranch<D>& br,
                                  const std::vector<ExitPatch<D>>& exits, double t_max,
                                  double span_tol) {
    Truncation<D> best{t_max, br.foot(t_max), -1};
    if (exits.empty()) return best;

    const double reach = br.reach(t_max);
    for (std::size_t e = 0; e < exits.size(); ++e) {
        const ExitPatch<D>& patch = exits[e];
        if (std::abs(br.start[patch.axis] - patch.coord) > reach + span_tol) continue;
        double roots[2];
        const int n = detail::plane_crossings(br, patch.axis, patch.coord, t_max, roots);
        for (int r = 0; r < n; ++r) {
            const double t = roots[r];
            if (t >= best.t_hat) break;
            Vec<D> z = br.at(t);
            z[patch.axis] = patch.coord;
            bool in_span = true;
            for (int k = 0; k < D; ++k) {
                if (k == patch.axis) continue;
                if (z[k] < patch.span_lo[k] - span_tol || z[k] > patch.span_hi[k] + span_tol)
                    in_span = false;
            }
            if (!in_span) continue;
            best.t_hat = t;
            best.landing = z;
            best.exit_index = static_cast<int>(e);
            break;
        }
    }
    return best;
}

/**
 * First time the branch reaches the boundary of the rectangle [0,L]^D, capped
 * at t_max; used by the HJB characteristics.  The landing point is clamped
 * onto the crossed face.
 */
template <std::size_t D>
Truncation<D> boundary_truncated_dt(const CharacteristicBranch<D>& br, double L, double t_max) {
    Truncation<D> best{t_max, br.foot(t_max), -1};
    for (int a = 0; a < D; ++a) {
        for (double plane : {0.0, L}) {
            double roots[2];
            const int n = detail::plane_crossings(br, a, plane, t_max, roots);
            for (int r = 0; r < n; ++r) {
                const double t = roots[r];
                if (t >= best.t_hat) break;
                Vec<D> z = br.at(t);
                z[a] = plane;
                bool on_face = true;
                for (int k = 0; k < D; ++k) {
                    if (k == a) continue;
                    if (z[k] < -1e-12 * L || z[k] > L * (1.0 + 1e-12)) on_face = false;
                }
                if (!on_face) continue;
                for (int k = 0; k < D; ++k) z[k] = std::min(std::max(z[k], 0.0), L);
                best.t_hat = t;
                best.landing = z;
                best.exit_index = a;  // crossed axis, for diagnostics
                break;
            }
        }
    }
    return best;
}

/**
 * Symmetrized reflection P: points outside the admissible region are mirrored
 * across the nearest boundary point, z -> 2 w* - z.  For the rectangle w* is
 * the coordinatewise clamp; for a point inside an obstacle box w* lies on one
 * of its faces and the candidate face whose projection is closest to the
 * branch start wins.  A mirrored point that is still inadmissible collapses
 * to w* itself, so the result is always in the closed domain and outside
 * every open obstacle.
 */
template <std::size_t D>
Vec<D> reflect(Vec<D> z, const Vec<D>& start, double L, const std::vector<Box<D>>& obstacles) {
    for (int pass = 0; pass < 4; ++pass) {
        bool moved = false;

        bool outside = false;
        for (int k = 0; k < D; ++k)
            if (z[k] < 0.0 || z[k] > L) outside = true;
        if (outside) {
            Vec<D> w;
            for (int k = 0; k < D; ++k) w[k] = std::min(std::max(z[k], 0.0), L);
            Vec<D> mirrored = 2.0 * w - z;
            bool ok = true;
            for (int k = 0; k < D; ++k)
                if (mirrored[k] < 0.0 || mirrored[k] > L) ok = false;
            z = ok ? mirrored : w;
            moved = true;
        }

        for (const Box<D>& ob : obstacles) {
            if (!ob.strictly_inside(z)) continue;
            // Candidate projections: one per face of the box.
            Vec<D> best_w{};
            double best_d = std::numeric_limits<double>::infinity();
            for (int k = 0; k < D; ++k) {
                for (double face : {ob.lo[k], ob.hi[k]}) {
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
            bool ok = true;
            for (int k = 0; k < D; ++k)
                if (mirrored[k] < 0.0 || mirrored[k] > L) ok = false;
            if (ok)
                for (const Box<D>& other : obstacles)
                    if (other.strictly_inside(mirrored)) ok = false;
            z = ok ? mirrored : best_w;
            moved = true;
            break;
        }

        if (!moved) return z;
    }
    // Pathological corner: give up on mirroring, clamp into the rectangle.
    for (int k = 0; k < D; ++k) z[k] = std::min(std::max(z[k], 0.0), L);
    return z;
}

}  // namespace pedflow
