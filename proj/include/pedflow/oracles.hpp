#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "pedflow/coupling.hpp"
#include "pedflow/fp_step.hpp"
#include "pedflow/philox.hpp"

namespace pedflow {

// ---------------------------------------------------------------------------
// Cole-Hopf closed form
// ---------------------------------------------------------------------------

/**
 * Analytic solution of the 1D slab problem
 *
 *   -eps u'' + (1/2) (u')^2 = F,   u(0) = u(L) = 0,  F > 0 constant,
 *
 * via u = -2 eps ln(phi): the substitution linearizes the equation to
 * 2 eps^2 phi'' = F phi, whose symmetric solution is a cosh profile.
 */
class ColeHopfSlab {
public:
    ColeHopfSlab(double eps, double F_const, double L = 1.0) : eps_(eps), F_(F_const), L_(L) {
        if (eps <= 0.0) throw ConfigError("cole-hopf: eps must be positive");
        if (F_const < 0.0) throw ConfigError("cole-hopf: F must be nonnegative");
        kappa_ = std::sqrt(F_const / (2.0 * eps * eps));
    }

    double value(double x) const {
        if (F_ == 0.0) return 0.0;
        return -2.0 * eps_ * (lncosh(kappa_ * (x - 0.5 * L_)) - lncosh(kappa_ * 0.5 * L_));
    }

    double derivative(double x) const {
        if (F_ == 0.0) return 0.0;
        return -2.0 * eps_ * kappa_ * std::tanh(kappa_ * (x - 0.5 * L_));
    }

    /// Residual of -eps u'' + 1/2 (u')^2 - F at x, from the closed form.
    double residual(double x) const {
        const double th = std::tanh(kappa_ * (x - 0.5 * L_));
        const double upp = -2.0 * eps_ * kappa_ * kappa_ * (1.0 - th * th);
        const double up = derivative(x);
        return -eps_ * upp + 0.5 * up * up - F_;
    }

    double eps() const { return eps_; }
    double F() const { return F_; }

private:
    static double lncosh(double a) {
        a = std::abs(a);
        return a + std::log1p(std::exp(-2.0 * a)) - std::log(2.0);
    }
    double eps_, F_, L_, kappa_;
};

// ---------------------------------------------------------------------------
// Heat-kernel solution of the constant-drift linear FP equation
// ---------------------------------------------------------------------------

/// Isotropic Gaussian density transported by a constant drift: mean moves
/// with b, per-axis variance grows by 2 eps t.
template <std::size_t D>
struct GaussianPulse {
    Vec<D> center{};
    double sigma0 = 0.1;

    double density(const Vec<D>& x, const Vec<D>& b, double eps, double t) const {
        const double var = sigma0 * sigma0 + 2.0 * eps * t;
        double q = 0.0;
        for (int k = 0; k < D; ++k) {
            const double d = x[k] - center[k] - b[k] * t;
            q += d * d;
        }
        const double norm = std::pow(2.0 * M_PI * var, -0.5 * D);
        return norm * std::exp(-0.5 * q / var);
    }

    /// Worst per-axis tail mass beyond a face of [0,L]^D at time t.  The
    /// free-space comparison only holds while this stays negligible.
    double boundary_tail(double L, const Vec<D>& b, double eps, double t) const {
        const double sigma = std::sqrt(sigma0 * sigma0 + 2.0 * eps * t);
        double worst = 0.0;
        for (int k = 0; k < D; ++k) {
            const double mean = center[k] + b[k] * t;
            const double lo = mean / sigma;
            const double hi = (L - mean) / sigma;
            worst = std::max(worst, 0.5 * std::erfc(lo / std::sqrt(2.0)));
            worst = std::max(worst, 0.5 * std::erfc(hi / std::sqrt(2.0)));
        }
        return worst;
    }
};

/// L1 distance between a density field and an exact density, node cells.
template <std::size_t D>
double l1_distance(const GridSpec<D>& grid, const std::vector<double>& values,
                   const std::function<double(const Vec<D>&)>& exact) {
    double s = 0.0;
    for (std::size_t lin = 0; lin < grid.node_count(); ++lin)
        s += std::abs(values[lin] - exact(grid.position(lin)));
    return s * grid.cell_volume();
}

// ---------------------------------------------------------------------------
// Particle oracle
// ---------------------------------------------------------------------------

struct ParticleOracleResult {
    std::vector<double> histogram;      // node occupation counts (alive particles)
    std::vector<long> absorbed_counts;  // per exit
    long alive = 0;
};

/**
 * Monte Carlo realization of the discrete random walk behind the FP scheme:
 * a particle at node j picks one of the 2d axis branches uniformly, follows
 * the drift-plus-axis-displacement step under the same exit truncation and
 * reflection rules as fp_step, and finally samples its landing node from the
 * P1 weights (the transition probabilities of the node chain).  Streams are
 * counter-based per particle, so runs are bit-reproducible and independent of
 * execution order.
 */
template <std::size_t D>
class ParticleOracle {
public:
    ParticleOracle(const ClassifiedGrid<D>& cg, std::uint64_t seed, long n_particles)
        : cg_(cg), seed_(seed) {
        static_assert(D == 2, "the particle oracle covers the planar scheme");
        node_.assign(n_particles, 0);
        alive_.assign(n_particles, 1);
    }

    /// Draw initial nodes from the discrete density by inverse CDF.
    void init_from_density(const DensityField<D>& m) {
        const GridSpec<D>& grid = cg_.grid;
        std::vector<double> cdf(grid.node_count(), 0.0);
        double total = 0.0;
        for (std::size_t lin = 0; lin < grid.node_count(); ++lin) {
            total += m[lin];
            cdf[lin] = total;
        }
        if (total <= 0.0) throw ConfigError("particle oracle: empty initial density");
        for (long p = 0; p < particle_count(); ++p) {
            ParticleStream stream(seed_, static_cast<std::uint64_t>(p));
            const double u = stream.uniform(0xFFFFFFFFu, 0) * total;
            const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
            node_[p] = static_cast<std::uint32_t>(
                std::min<std::size_t>(it - cdf.begin(), grid.node_count() - 1));
            alive_[p] = 1;
        }
        step_ = 0;
        absorbed_.assign(cg_.exit_names.size(), 0);
    }

    /// Advance every particle one step under the frozen drift field.
    void step(const VectorField<D>& drift, double dt, double eps) {
        const GridSpec<D>& grid = cg_.grid;
        const double span_tol = grid.dx() / 100.0;
        for (long p = 0; p < particle_count(); ++p) {
            if (!alive_[p]) continue;
            ParticleStream stream(seed_, static_cast<std::uint64_t>(p));
            const auto words = stream.words(static_cast<std::uint32_t>(step_), 1);
            const int branch = static_cast<int>(words[0] & 3u);  // exact for 2d = 4
            const int axis = branch >> 1;
            const int sign = (branch & 1) ? -1 : +1;

            const std::size_t j = node_[p];
            const Vec<D> xj = grid.position(j);
            CharacteristicBranch<D> br{xj, drift[j], eps, axis, sign};
            const Truncation<D> tr = target_truncated_dt(br, cg_.exits, dt, span_tol);

            Vec<D> pos;
            if (tr.exit_index >= 0) {
                for (int k = 0; k < D; ++k)
                    pos[k] = std::min(std::max(tr.landing[k], 0.0), grid.length());
            } else {
                pos = reflect_classified<D>(cg_, tr.landing, xj);
            }

            const InterpWeights<D> w = interpolation_weights(grid, pos);
            double free_sum = 0.0;
            for (int q = 0; q < w.count; ++q) {
                const NodeType t = cg_.type[w.node[q]];
                if (t != NodeType::Ghost && t != NodeType::Obstacle) free_sum += w.weight[q];
            }
            const double u = Philox4x32::uniform(words[1], words[2]) * free_sum;
            double acc = 0.0;
            std::size_t landing = w.node[0];
            bool landed = false;
            for (int q = 0; q < w.count; ++q) {
                const NodeType t = cg_.type[w.node[q]];
                if (t == NodeType::Ghost || t == NodeType::Obstacle) continue;
                acc += w.weight[q];
                if (u < acc || q == w.count - 1) {
                    landing = w.node[q];
                    landed = true;
                    break;
                }
            }
            if (!landed) continue;

            if (cg_.type[landing] == NodeType::Target) {
                int e = cg_.exit_id[landing];
                if (tr.exit_index >= 0) e = tr.exit_index;
                ++absorbed_[static_cast<std::size_t>(e)];
                alive_[p] = 0;
            } else {
                node_[p] = static_cast<std::uint32_t>(landing);
            }
        }
        ++step_;
    }

    ParticleOracleResult result() const {
        ParticleOracleResult r;
        r.histogram.assign(cg_.grid.node_count(), 0.0);
        r.absorbed_counts = absorbed_;
        for (long p = 0; p < particle_count(); ++p) {
            if (!alive_[p]) continue;
            r.histogram[node_[p]] += 1.0;
            ++r.alive;
        }
        return r;
    }

    long particle_count() const { return static_cast<long>(node_.size()); }

private:
    const ClassifiedGrid<D>& cg_;
    std::uint64_t seed_;
    std::vector<std::uint32_t> node_;
    std::vector<std::uint8_t> alive_;
    std::vector<long> absorbed_;
    int step_ = 0;
};

// ---------------------------------------------------------------------------
// Convergence-order measurement
// ---------------------------------------------------------------------------

struct RefinementLevel {
    double parameter = 0.0;  // dx (or h) of the level
    double error = 0.0;
};

struct OracleReport {
    std::string name;
    std::vector<RefinementLevel> levels;
    double observed_order = 0.0;
    double expected_order = 0.0;
    bool order_ok = false;
    bool monotone_decreasing = false;

    /// Serialize into the flat metrics text format.
    std::string to_text() const {
        std::string s;
        s += "oracle = " + name + "\n";
        s += "expected_order = " + std::to_string(expected_order) + "\n";
        s += "observed_order = " + std::to_string(observed_order) + "\n";
        s += "order_ok = " + std::string(order_ok ? "1" : "0") + "\n";
        for (std::size_t i = 0; i < levels.size(); ++i) {
            s += "level." + std::to_string(i) + ".parameter = " +
                 std::to_string(levels[i].parameter) + "\n";
            s += "level." + std::to_string(i) + ".error = " + std::to_string(levels[i].error) +
                 "\n";
        }
        return s;
    }
};

/**
 * Least-squares slope of log(error) against log(parameter) over at least
 * three refinement levels.  Orders below half the expectation flag failure.
 */
inline OracleReport fit_convergence_order(const std::string& name,
                                          const std::vector<RefinementLevel>& levels,
                                          double expected_order) {
    if (levels.size() < 3)
        throw ConfigError("convergence study '" + name + "': need at least 3 refinement levels");
    OracleReport rep;
    rep.name = name;
    rep.levels = levels;
    rep.expected_order = expected_order;

    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    const double n = static_cast<double>(levels.size());
    for (const auto& l : levels) {
        if (!(l.error > 0.0) || !(l.parameter > 0.0))
            throw ConfigError("convergence study '" + name + "': nonpositive level data");
        const double x = std::log(l.parameter);
        const double y = std::log(l.error);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    rep.observed_order = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    rep.order_ok = rep.observed_order >= 0.5 * expected_order;
    rep.monotone_decreasing = true;
    for (std::size_t i = 1; i < levels.size(); ++i)
        if (levels[i].error >= levels[i - 1].error) rep.monotone_decreasing = false;
    return rep;
}

}  // namespace pedflow
