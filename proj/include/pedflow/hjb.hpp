#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "pedflow/characteristics.hpp"
#include "pedflow/controls.hpp"
#include "pedflow/geometry.hpp"
#include "pedflow/grid.hpp"
#include "pedflow/interpolate.hpp"

namespace pedflow {

struct HjbSettings {
    double lin_tol = 1e-12;     // max-norm residual target of each policy evaluation
    double pi_tol = 1e-9;       // policy-iteration stopping tolerance
    int pi_max_iters = 200;
    long eval_sweep_cap = 0;    // 0 = 10 * node count
    bool record_trace = false;  // keep per-iteration interior values in the result
    // Howard's descent holds exactly only for exact policy evaluations; sweep
    // solves leave noise of order ||B^-1|| * lin_tol.  Increases below the
    // guard are clipped (monotone policy iteration); larger ones indicate an
    // assembly bug and raise an error.
    double monotone_guard = 1e-6;
    std::size_t near_cache_row_limit = 500000;
};

/**
 * Stationary HJB problem on a classified grid: running cost F on interior
 * nodes, Dirichlet data g on Wall nodes, 0 on Target nodes and the large
 * penalty value on Ghost/Obstacle nodes.
 */
template <std::size_t D>
struct HjbProblem {
    const ClassifiedGrid<D>* cg = nullptr;
    std::vector<double> cost;        // F per node
    std::vector<double> wall_value;  // g per node, read on Wall nodes
    double ghost_value = 1e4;
    double h = 0.0;
    double eps = 0.0;

    void validate() const {
        if (!cg) throw ConfigError("hjb: missing grid");
        if (h <= 0.0) throw ConfigError("hjb: fictive step h must be positive");
        if (eps < 0.0) throw ConfigError("hjb: eps must be nonnegative");
        if (cost.size() != cg->grid.node_count() || wall_value.size() != cg->grid.node_count())
            throw ConfigError("hjb: field sizes do not match the grid");
        for (std::size_t i = 0; i < cost.size(); ++i) {
            if (!(cost[i] >= 0.0) || !std::isfinite(cost[i]))
                throw ConfigError("hjb: running cost must be finite and nonnegative");
            if (cg->type[i] == NodeType::Wall && !(wall_value[i] > 0.0))
                throw ConfigError("hjb: wall value g must be strictly positive");
        }
    }

    double boundary_value(std::size_t lin) const {
        switch (cg->type[lin]) {
            case NodeType::Target: return 0.0;
            case NodeType::Wall: return wall_value[lin];
            case NodeType::Ghost:
            case NodeType::Obstacle: return ghost_value;
            default: return 0.0;
        }
    }
};

template <std::size_t D>
struct HjbResult {
    Field<D> value;
    std::vector<int> policy;  // control index per interior node
    int iterations = 0;
    double bellman_residual = 0.0;
    double max_value_increase = 0.0;  // worst positive jump between evaluations
    long total_sweeps = 0;
    int saturated_nodes = 0;  // argmin at the control-set radius bound
    std::vector<double> value_change_trace;
    std::vector<std::vector<double>> value_trace;  // filled when record_trace is set
};

/**
 * Policy-iteration solver for the fully-discrete scheme
 *
 *   u_i = min_alpha (1/2d) sum_l [ I[u](y+) + I[u](y-)
 *                                  + (h+ + h-) * (|alpha|^2/2 + F_i) ],
 *
 * with branch steps truncated at the rectangle boundary.  Policy evaluation
 * solves B^alpha v = c(alpha) by in-place Gauss-Seidel sweeps (alternating
 * direction) on the substochastic fixed-point form; starting each evaluation
 * from the previous iterate keeps the value trace non-increasing.  Rows for
 * nodes beyond boundary reach are translation-invariant, so one pattern per
 * control serves all deep nodes; rows near the boundary are cached when the
 * cache fits.
 */
template <std::size_t D>
class HjbSolver {
public:
    static constexpr int kMaxEntries = 2 * D * (D + 1);

    struct Row {
        double h_sum = 0.0;   // cost coefficient: c_i = h_sum * (|a|^2/2 + F_i)
        double w_self = 0.0;  // weight on the node itself
        int n = 0;
        std::int32_t col[kMaxEntries];  // absolute node index (or delta in patterns)
        double w[kMaxEntries];
    };

    HjbSolver(const HjbProblem<D>& problem, const ControlSet<D>& controls,
              HjbSettings settings = {})
        : p_(problem), controls_(controls), settings_(settings) {
        p_.validate();
        const GridSpec<D>& grid = p_.cg->grid;
        const std::size_t n = grid.node_count();

        interior_.reserve(n);
        interior_index_.assign(n, -1);
        for (std::size_t lin = 0; lin < n; ++lin) {
            if (p_.cg->type[lin] == NodeType::Interior) {
                interior_index_[lin] = static_cast<std::int64_t>(interior_.size());
                interior_.push_back(lin);
            }
        }

        // Deep nodes: every branch endpoint stays clear of the rectangle
        // boundary for every control, so rows are translation invariant.
        const double reach =
            controls_.alpha_max() * p_.h + std::sqrt(2.0 * D * p_.eps * p_.h);
        const double margin = reach + 2.0 * grid.dx();
        deep_.assign(n, 0);
        std::size_t near_count = 0;
        for (std::size_t k = 0; k < interior_.size(); ++k) {
            const Vec<D> x = grid.position(interior_[k]);
            bool deep = true;
            for (int a = 0; a < D; ++a)
                if (x[a] < margin || grid.length() - x[a] < margin) deep = false;
            deep_[interior_[k]] = deep ? 1 : 0;
            if (!deep) ++near_count;
        }

        patterns_.resize(controls_.size());
        for (std::size_t c = 0; c < controls_.size(); ++c) patterns_[c] = make_pattern(c);

        near_nodes_.reserve(near_count);
        near_index_.assign(n, -1);
        for (std::size_t lin : interior_) {
            if (!deep_[lin]) {
                near_index_[lin] = static_cast<std::int64_t>(near_nodes_.size());
                near_nodes_.push_back(lin);
            }
        }
        if (near_nodes_.size() * controls_.size() <= settings_.near_cache_row_limit) {
            near_cache_.resize(near_nodes_.size() * controls_.size());
            for (std::size_t k = 0; k < near_nodes_.size(); ++k)
                for (std::size_t c = 0; c < controls_.size(); ++c)
                    near_cache_[k * controls_.size() + c] = assemble_row(near_nodes_[k], c);
            near_cached_ = true;
        }
    }

    const std::vector<std::size_t>& interior_nodes() const { return interior_; }
    const ControlSet<D>& controls() const { return controls_; }

    /// Swap in a new running cost; transition rows are unaffected.
    void set_cost(std::vector<double> cost) {
        if (cost.size() != p_.cg->grid.node_count())
            throw ConfigError("hjb: cost field size does not match the grid");
        p_.cost = std::move(cost);
    }

    /// Assemble the transition row of (node, control); boundary rows are identities.
    Row row(std::size_t lin, std::size_t control) const {
        if (p_.cg->type[lin] != NodeType::Interior) {
            Row r;
            r.h_sum = 0.0;
            r.w_self = 0.0;
            r.n = 0;
            return r;
        }
        if (deep_[lin]) return instantiate(patterns_[control], lin);
        if (near_cached_) return near_cache_[near_index_[lin] * controls_.size() + control];
        return assemble_row(lin, control);
    }

    double row_cost(const Row& r, std::size_t lin, std::size_t control) const {
        const Vec<D>& a = controls_[control];
        return r.h_sum * (0.5 * dot(a, a) + p_.cost[lin]);
    }

    /// W(v, i): one Bellman application, lowest control index wins ties.
    double bellman_apply(const std::vector<double>& v, std::size_t lin,
                         int* best_control = nullptr) const {
        double best = std::numeric_limits<double>::infinity();
        int best_c = 0;
        for (std::size_t c = 0; c < controls_.size(); ++c) {
            const Row r = row(lin, c);
            double q = row_cost(r, lin, c) + r.w_self * v[lin];
            for (int e = 0; e < r.n; ++e) q += r.w[e] * v[r.col[e]];
            if (q < best) {
                best = q;
                best_c = static_cast<int>(c);
            }
        }
        if (best_control) *best_control = best_c;
        return best;
    }

    /// Fill boundary rows of v with their Dirichlet data.
    void apply_boundary(std::vector<double>& v) const {
        for (std::size_t lin = 0; lin < v.size(); ++lin)
            if (p_.cg->type[lin] != NodeType::Interior) v[lin] = p_.boundary_value(lin);
    }

    /**
     * Solve B^policy v = c(policy) in place by Gauss-Seidel sweeps until the
     * max-norm residual drops below lin_tol.  Throws when the sweep cap is
     * exceeded, which signals that some node cannot reach the boundary.
     */
    long policy_evaluation(const std::vector<int>& policy, std::vector<double>& v) const {
        const std::size_t ni = interior_.size();
        std::vector<Row> rows(ni);
        std::vector<double> cost(ni);
        for (std::size_t k = 0; k < ni; ++k) {
            rows[k] = row(interior_[k], static_cast<std::size_t>(policy[k]));
            cost[k] = row_cost(rows[k], interior_[k], static_cast<std::size_t>(policy[k]));
            if (1.0 - rows[k].w_self < 1e-14)
                throw ConvergenceError(
                    "policy evaluation: node decoupled from the boundary (reachability failure)");
        }
        apply_boundary(v);

        const long side = p_.cg->grid.nodes_per_side();
        const long cap =
            settings_.eval_sweep_cap > 0 ? settings_.eval_sweep_cap : 10L * side * side;
        long sweeps = 0;
        double residual = std::numeric_limits<double>::infinity();
        double tol = settings_.lin_tol;
        int check_every = 8;
        while (true) {
            const bool forward = (sweeps % 2 == 0);
            for (std::size_t s = 0; s < ni; ++s) {
                const std::size_t k = forward ? s : ni - 1 - s;
                const Row& r = rows[k];
                double num = cost[k];
                for (int e = 0; e < r.n; ++e) num += r.w[e] * v[r.col[e]];
                v[interior_[k]] = num / (1.0 - r.w_self);
            }
            ++sweeps;
            if (sweeps % check_every == 0 || residual < 1e4 * tol) {
                residual = 0.0;
                double vmax = 0.0;
                for (std::size_t k = 0; k < ni; ++k) {
                    const Row& r = rows[k];
                    double num = cost[k] + r.w_self * v[interior_[k]];
                    for (int e = 0; e < r.n; ++e) num += r.w[e] * v[r.col[e]];
                    residual = std::max(residual, std::abs(v[interior_[k]] - num));
                    vmax = std::max(vmax, std::abs(v[interior_[k]]));
                }
                // Large ghost/wall data pushes values far above 1; the target
                // residual cannot drop below the roundoff of a row evaluation.
                tol = std::max(settings_.lin_tol,
                               16.0 * std::numeric_limits<double>::epsilon() * vmax);
                if (residual <= tol) break;
                if (residual < 1e4 * tol) check_every = 1;
            }
            if (sweeps >= cap)
                throw ConvergenceError(
                    "policy evaluation exceeded " + std::to_string(cap) +
                    " sweeps (reachability failure: no path to the boundary, or h too large)");
        }
        return sweeps;
    }

    /**
     * Howard's method: alternate policy evaluation and greedy improvement
     * until the Bellman residual or the value change drops below pi_tol.
     */
    HjbResult<D> policy_iteration(const std::vector<int>& warm_policy,
                                  const std::vector<double>* warm_value = nullptr) const {
        const GridSpec<D>& grid = p_.cg->grid;
        const std::size_t ni = interior_.size();

        std::vector<int> policy = warm_policy;
        if (policy.size() != ni) policy.assign(ni, 0);
        for (int c : policy)
            if (c < 0 || static_cast<std::size_t>(c) >= controls_.size())
                throw ConfigError("hjb: warm policy references an unknown control");

        HjbResult<D> out{Field<D>(grid), {}, 0, 0.0, 0.0, 0, 0, {}};
        std::vector<double>& v = out.value.values;
        if (warm_value && warm_value->size() == v.size()) v = *warm_value;
        apply_boundary(v);

        std::vector<double> v_prev;
        bool have_prev = false;

        for (int it = 1; it <= settings_.pi_max_iters; ++it) {
            out.total_sweeps += policy_evaluation(policy, v);
            out.iterations = it;

            bool converged = false;
            if (have_prev) {
                double inc = 0.0, change = 0.0;
                for (std::size_t k = 0; k < ni; ++k) {
                    const double d = v[interior_[k]] - v_prev[k];
                    inc = std::max(inc, d);
                    change = std::max(change, std::abs(d));
                }
                out.max_value_increase = std::max(out.max_value_increase, inc);
                if (inc > settings_.monotone_guard)
                    throw InternalError("policy iteration: value trace increased by " +
                                        std::to_string(inc) + " (assembly bug)");
                if (inc > 0.0)
                    for (std::size_t k = 0; k < ni; ++k)
                        v[interior_[k]] = std::min(v[interior_[k]], v_prev[k]);
                out.value_change_trace.push_back(change);
                converged = change <= settings_.pi_tol;
            }
            if (settings_.record_trace) {
                std::vector<double> snap(ni);
                for (std::size_t k = 0; k < ni; ++k) snap[k] = v[interior_[k]];
                out.value_trace.push_back(std::move(snap));
            }
            if (converged) {
                finish(v, policy, out);
                return out;
            }
            v_prev.assign(ni, 0.0);
            for (std::size_t k = 0; k < ni; ++k) v_prev[k] = v[interior_[k]];
            have_prev = true;

            // Greedy improvement; ties resolved toward the lowest control index.
            double bellman_res = 0.0;
            bool changed = false;
            for (std::size_t k = 0; k < ni; ++k) {
                int best_c = 0;
                const double q = bellman_apply(v, interior_[k], &best_c);
                bellman_res = std::max(bellman_res, std::abs(v[interior_[k]] - q));
                if (best_c != policy[k]) {
                    policy[k] = best_c;
                    changed = true;
                }
            }
            out.bellman_residual = bellman_res;
            if (bellman_res <= settings_.pi_tol || !changed) {
                finish(v, policy, out);
                return out;
            }
        }
        throw ConvergenceError("policy iteration did not converge in " +
                               std::to_string(settings_.pi_max_iters) +
                               " iterations (last residual " +
                               std::to_string(out.bellman_residual) + ")");
    }

private:
    void finish(std::vector<double>& v, std::vector<int>& policy, HjbResult<D>& out) const {
        // Final residual and saturation count for diagnostics.
        double res = 0.0;
        int saturated = 0;
        const double amax = controls_.alpha_max();
        for (std::size_t k = 0; k < interior_.size(); ++k) {
            int best_c = 0;
            const double q = bellman_apply(v, interior_[k], &best_c);
            res = std::max(res, std::abs(v[interior_[k]] - q));
            if (amax > 0.0 && norm2(controls_[static_cast<std::size_t>(policy[k])]) >= amax - 1e-12)
                ++saturated;
        }
        out.bellman_residual = res;
        out.saturated_nodes = saturated;
        out.policy = policy;

        double max_u = 0.0;
        for (std::size_t lin : interior_) max_u = std::max(max_u, v[lin]);
        if (max_u >= 0.5 * p_.ghost_value)
            throw ConvergenceError("hjb: interior value " + std::to_string(max_u) +
                                   " approaches the ghost value " +
                                   std::to_string(p_.ghost_value) +
                                   "; raise ghost_value/wall g");
    }

    struct Pattern {
        Row row;  // col holds linear deltas
    };

    /// Merge one branch's interpolation weights into a row under 1/(2d) scaling.
    static void merge(Row& r, std::int64_t col, double weight, std::int64_t self) {
        if (weight == 0.0) return;
        if (col == self) {
            r.w_self += weight;
            return;
        }
        for (int e = 0; e < r.n; ++e) {
            if (r.col[e] == static_cast<std::int32_t>(col)) {
                r.w[e] += weight;
                return;
            }
        }
        r.col[r.n] = static_cast<std::int32_t>(col);
        r.w[r.n] = weight;
        ++r.n;
    }

    Pattern make_pattern(std::size_t control) const {
        const GridSpec<D>& grid = p_.cg->grid;
        const double dx = grid.dx();
        const Vec<D>& a = controls_[control];
        Pattern pat;
        Row& r = pat.row;
        const double split = 1.0 / static_cast<double>(2 * D);
        const double sq = std::sqrt(2.0 * D * p_.eps * p_.h);
        for (int axis = 0; axis < D; ++axis) {
            for (int sign : {+1, -1}) {
                Vec<D> off;
                for (int k = 0; k < D; ++k) off[k] = p_.h * a[k];
                off[axis] += sign * sq;
                // Kuhn weights of the offset relative to the node.
                NodeIndex<D> base;
                std::array<double, D> frac;
                for (int k = 0; k < D; ++k) {
                    const double s = off[k] / dx;
                    const double c = std::floor(s);
                    base[k] = static_cast<int>(c);
                    frac[k] = s - c;
                }
                std::array<int, D> order;
                for (int k = 0; k < D; ++k) order[k] = k;
                std::stable_sort(order.begin(), order.end(),
                                 [&frac](int x, int y) { return frac[x] > frac[y]; });
                std::int64_t stride[D];
                std::int64_t m1 = 1;
                for (int k = 0; k < D; ++k) {
                    stride[k] = m1;
                    m1 *= grid.nodes_per_side();
                }
                std::int64_t delta = 0;
                for (int k = 0; k < D; ++k) delta += stride[k] * base[k];
                merge(r, delta, split * (1.0 - frac[order[0]]), 0);
                for (int j = 0; j < D; ++j) {
                    delta += stride[order[j]];
                    const double next = (j + 1 < D) ? frac[order[j + 1]] : 0.0;
                    merge(r, delta, split * (frac[order[j]] - next), 0);
                }
                r.h_sum += split * p_.h;
            }
        }
        return pat;
    }

    Row instantiate(const Pattern& pat, std::size_t lin) const {
        Row r = pat.row;
        for (int e = 0; e < r.n; ++e)
            r.col[e] = static_cast<std::int32_t>(static_cast<std::int64_t>(lin) + r.col[e]);
        return r;
    }

    Row assemble_row(std::size_t lin, std::size_t control) const {
        const GridSpec<D>& grid = p_.cg->grid;
        const Vec<D> x = grid.position(lin);
        const Vec<D>& a = controls_[control];
        Row r;
        const double split = 1.0 / static_cast<double>(2 * D);
        for (int axis = 0; axis < D; ++axis) {
            for (int sign : {+1, -1}) {
                CharacteristicBranch<D> br{x, a, p_.eps, axis, sign};
                const Truncation<D> tr = boundary_truncated_dt(br, grid.length(), p_.h);
                const InterpWeights<D> w = interpolation_weights(grid, tr.landing);
                bool collapse = false;
                if (tr.exit_index >= 0) {
                    // Landed on the boundary.  The Dirichlet data jumps at
                    // exit edges; interpolating P1 across the jump smears it
                    // over a cell and overprices narrow exits.  Blend only
                    // within one class, otherwise take the dominant node.
                    NodeType cls = NodeType::Interior;
                    bool first = true;
                    for (int q = 0; q < w.count; ++q) {
                        if (w.weight[q] <= 0.0) continue;
                        const NodeType t = p_.cg->type[w.node[q]];
                        if (first) {
                            cls = t;
                            first = false;
                        } else if (t != cls) {
                            collapse = true;
                        }
                    }
                }
                if (collapse) {
                    int dominant = 0;
                    for (int q = 1; q < w.count; ++q)
                        if (w.weight[q] > w.weight[dominant]) dominant = q;
                    merge(r, static_cast<std::int64_t>(w.node[dominant]), split,
                          static_cast<std::int64_t>(lin));
                } else {
                    for (int q = 0; q < w.count; ++q)
                        merge(r, static_cast<std::int64_t>(w.node[q]), split * w.weight[q],
                              static_cast<std::int64_t>(lin));
                }
                r.h_sum += split * tr.t_hat;
            }
        }
        return r;
    }

    HjbProblem<D> p_;
    ControlSet<D> controls_;
    HjbSettings settings_;
    std::vector<std::size_t> interior_;
    std::vector<std::int64_t> interior_index_;
    std::vector<std::uint8_t> deep_;
    std::vector<Pattern> patterns_;
    std::vector<std::size_t> near_nodes_;
    std::vector<std::int64_t> near_index_;
    std::vector<Row> near_cache_;
    bool near_cached_ = false;
};

/**
 * Discrete gradient of the HJB value: centered differences where both axis
 * neighbors carry genuine data (Interior or Target), one-sided otherwise.
 * Stencils never read the artificial Dirichlet data on Wall/Ghost/Obstacle
 * nodes, which would otherwise corrupt the drift; near those nodes the
 * one-sided stencil away from them is used instead.
 */
template <std::size_t D>
VectorField<D> discrete_gradient(const ClassifiedGrid<D>& cg, const std::vector<double>& u) {
    const GridSpec<D>& grid = cg.grid;
    VectorField<D> g(grid);
    const double dx = grid.dx();

    auto readable = [&](const NodeIndex<D>& idx) -> bool {
        if (!grid.contains_index(idx)) return false;
        return cg.hjb_readable(grid.linear(idx));
    };

    for (std::size_t lin = 0; lin < grid.node_count(); ++lin) {
        const NodeType t = cg.type[lin];
        if (t == NodeType::Ghost || t == NodeType::Obstacle) continue;  // stays zero
        const NodeIndex<D> idx = grid.unlinear(lin);
        const bool self_ok = cg.hjb_readable(lin);
        for (int a = 0; a < D; ++a) {
            NodeIndex<D> ip = idx, im = idx, ipp = idx, imm = idx;
            ip[a] += 1;
            im[a] -= 1;
            ipp[a] += 2;
            imm[a] -= 2;
            const bool has_p = readable(ip);
            const bool has_m = readable(im);
            double d = 0.0;
            if (has_p && has_m) {
                d = (u[grid.linear(ip)] - u[grid.linear(im)]) / (2.0 * dx);
            } else if (has_p) {
                if (self_ok)
                    d = (u[grid.linear(ip)] - u[lin]) / dx;
                else if (readable(ipp))
                    d = (u[grid.linear(ipp)] - u[grid.linear(ip)]) / dx;
            } else if (has_m) {
                if (self_ok)
                    d = (u[lin] - u[grid.linear(im)]) / dx;
                else if (readable(imm))
                    d = (u[grid.linear(im)] - u[grid.linear(imm)]) / dx;
            }
            g[lin][a] = d;
        }
    }
    return g;
}

}  // namespace pedflow
