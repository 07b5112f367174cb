#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "pedflow/density.hpp"
#include "pedflow/fp_step.hpp"
#include "pedflow/hjb.hpp"

namespace pedflow {

/// Congestion function: f(m) = 1 - m, or (1 - m) / ell(x) with an
/// environmental running-cost field ell >= 1.  f is floored at zero: density
/// beyond the jam level is immobile, it does not regain mobility.
template <std::size_t D>
struct CongestionSpec {
    bool environmental = false;
    std::vector<double> ell;  // per node, used when environmental

    double f_squared(double m, std::size_t lin) const {
        const double crowd = std::max(1.0 - m, 0.0);
        const double f = environmental ? crowd / ell[lin] : crowd;
        return f * f;
    }
};

/// F(x_i) = 1 / (2 f^2(m_i) + delta); delta > 0 keeps the cost finite at f = 0.
template <std::size_t D>
std::vector<double> congestion_cost(const ClassifiedGrid<D>& cg, const DensityField<D>& m,
                                    const CongestionSpec<D>& f_spec, double delta) {
    if (delta <= 0.0) throw ConfigError("congestion cost: delta must be positive");
    std::vector<double> F(cg.grid.node_count(), 0.0);
    for (std::size_t lin = 0; lin < F.size(); ++lin)
        F[lin] = 1.0 / (2.0 * f_spec.f_squared(m[lin], lin) + delta);
    return F;
}

/// Drift b = -f^2(m) * Du; zero on Obstacle and Ghost nodes.
template <std::size_t D>
VectorField<D> drift_field(const ClassifiedGrid<D>& cg, const DensityField<D>& m,
                           const VectorField<D>& du, const CongestionSpec<D>& f_spec) {
    VectorField<D> b(cg.grid);
    for (std::size_t lin = 0; lin < b.size(); ++lin) {
        const NodeType t = cg.type[lin];
        if (t == NodeType::Ghost || t == NodeType::Obstacle) continue;
        const double f2 = f_spec.f_squared(m[lin], lin);
        for (int k = 0; k < D; ++k) b[lin][k] = -f2 * du[lin][k];
    }
    return b;
}

struct StepDiagnostics {
    int hjb_iterations = 0;
    long hjb_sweeps = 0;
    double hjb_residual = 0.0;
    int saturated_nodes = 0;
    double fold_fraction = 0.0;
};

template <std::size_t D>
struct RunParams {
    double dt = 0.0;
    double h = 0.0;
    double eps = 0.0;
    double delta = 1e-6;
    double evac_threshold = 1e-3;
    double wall_g = 1e3;
    double ghost_value = 1e4;
    int n_theta = 32;
    int n_rho = 4;
    double rho_step = 1.0;
    HjbSettings hjb;
};

/// Summary of a coupled run.
struct Metrics {
    bool evacuated = false;
    int evac_step = -1;
    double evac_time = -1.0;
    double evac_threshold = 0.0;
    double initial_mass = 0.0;
    double final_mass = 0.0;
    double max_density = 0.0;
    double worst_budget_error = 0.0;
    int steps_run = 0;
    long hjb_iterations_total = 0;
    int hjb_iterations_max = 0;
    long hjb_sweeps_total = 0;
    int saturated_nodes_max = 0;
    double fold_fraction_max = 0.0;
    std::vector<std::string> exit_names;
    std::vector<double> exit_mass;     // cumulative absorbed per exit
    std::vector<double> exit_percent;  // share of total absorbed, in percent

    void finalize_splits() {
        double total = 0.0;
        for (double v : exit_mass) total += v;
        exit_percent.assign(exit_mass.size(), 0.0);
        if (total > 0.0)
            for (std::size_t e = 0; e < exit_mass.size(); ++e)
                exit_percent[e] = 100.0 * exit_mass[e] / total;
    }
};

/**
 * The explicit coupled loop: from m_k build the congestion cost F, solve the
 * stationary HJB (warm-started with the previous policy), take the discrete
 * gradient, form the drift b = -f^2(m) Du and advance the FP step.  Agents
 * respond to the current density only, so each step is a plain forward pass.
 */
template <std::size_t D>
class HughesSim {
public:
    HughesSim(const ClassifiedGrid<D>& cg, const CongestionSpec<D>& f_spec, RunParams<D> params,
              DensityField<D> m0)
        : cg_(cg),
          f_spec_(f_spec),
          params_(params),
          m_(std::move(m0)),
          u_(cg.grid),
          drift_(cg.grid) {
        if (params_.dt <= 0.0) throw ConfigError("run: dt must be positive");
        if (params_.eps < 0.0) throw ConfigError("run: eps must be nonnegative");
        if (f_spec_.environmental) {
            if (f_spec_.ell.size() != cg.grid.node_count())
                throw ConfigError("run: ell field size does not match the grid");
            for (double v : f_spec_.ell)
                if (!(v >= 1.0)) throw ConfigError("run: ell must be >= 1 everywhere");
        }
        initial_mass_ = m_.total_mass(cg_.grid);
        ledger_.reset(initial_mass_, cg_.exit_names);
        max_density_ = m_.max_value();
    }

    HughesSim(const HughesSim&) = delete;
    HughesSim& operator=(const HughesSim&) = delete;

    const DensityField<D>& density() const { return m_; }
    const Field<D>& value() const { return u_; }
    const VectorField<D>& drift() const { return drift_; }
    const ExitLedger& ledger() const { return ledger_; }
    const ClassifiedGrid<D>& classified() const { return cg_; }
    int step_index() const { return k_; }
    double initial_mass() const { return initial_mass_; }
    double max_density() const { return max_density_; }

    /// Solve the HJB for the current density and refresh the drift field.
    StepDiagnostics solve_hjb() {
        if (!solver_) {
            HjbProblem<D> prob;
            prob.cg = &cg_;
            prob.cost = congestion_cost(cg_, m_, f_spec_, params_.delta);
            prob.wall_value.assign(cg_.grid.node_count(), params_.wall_g);
            prob.ghost_value = params_.ghost_value;
            prob.h = params_.h;
            prob.eps = params_.eps;
            solver_ = std::make_unique<HjbSolver<D>>(prob, control_set(), params_.hjb);
        } else {
            solver_->set_cost(congestion_cost(cg_, m_, f_spec_, params_.delta));
        }
        HjbResult<D> res =
            solver_->policy_iteration(policy_, have_value_ ? &u_.values : nullptr);
        u_ = res.value;
        policy_ = res.policy;
        have_value_ = true;

        const VectorField<D> du = discrete_gradient(cg_, u_.values);
        drift_ = drift_field(cg_, m_, du, f_spec_);

        StepDiagnostics diag;
        diag.hjb_iterations = res.iterations;
        diag.hjb_sweeps = res.total_sweeps;
        diag.hjb_residual = res.bellman_residual;
        diag.saturated_nodes = res.saturated_nodes;
        return diag;
    }

    /// One coupled step: HJB solve, drift, FP advance, ledger update.
    StepDiagnostics step() {
        StepDiagnostics diag = solve_hjb();
        FpStepResult<D> fp = fp_step(cg_, m_, drift_, params_.dt, params_.eps);
        m_ = std::move(fp.next);
        diag.fold_fraction = fp.fold_fraction;
        ledger_.record_step(fp.absorbed, m_.total_mass(cg_.grid));
        max_density_ = std::max(max_density_, m_.max_value());
        ++k_;
        return diag;
    }

    /// Control set shared by every step of the run; built lazily once.
    const ControlSet<D>& control_set() {
        if (!controls_) controls_ = std::make_unique<ControlSet<D>>(make_controls());
        return *controls_;
    }

    void set_controls(ControlSet<D> cs) { controls_ = std::make_unique<ControlSet<D>>(std::move(cs)); }

    /**
     * Iterate until the remaining mass falls below evac_threshold * initial
     * or the step count reaches the clock horizon.  The callback, when set,
     * observes every state after its step (and the initial state as step 0).
     */
    Metrics run(const SimulationClock& clock,
                const std::function<void(int, const HughesSim<D>&)>& observer = {},
                const std::function<void(int, const StepDiagnostics&)>& on_step = {}) {
        Metrics metrics;
        metrics.evac_threshold = params_.evac_threshold;
        metrics.initial_mass = initial_mass_;
        metrics.exit_names = cg_.exit_names;

        if (observer) observer(0, *this);

        const double target = params_.evac_threshold * initial_mass_;
        if (initial_mass_ <= 0.0 || initial_mass_ <= target) {
            metrics.evacuated = true;
            metrics.evac_step = 0;
            metrics.evac_time = 0.0;
        } else {
            while (k_ < clock.steps()) {
                StepDiagnostics diag = step();
                if (on_step) on_step(k_, diag);
                if (observer) observer(k_, *this);
                metrics.hjb_iterations_total += diag.hjb_iterations;
                metrics.hjb_iterations_max = std::max(metrics.hjb_iterations_max, diag.hjb_iterations);
                metrics.hjb_sweeps_total += diag.hjb_sweeps;
                metrics.saturated_nodes_max =
                    std::max(metrics.saturated_nodes_max, diag.saturated_nodes);
                metrics.fold_fraction_max = std::max(metrics.fold_fraction_max, diag.fold_fraction);
                if (ledger_.remaining.back() <= target) {
                    metrics.evacuated = true;
                    metrics.evac_step = k_;
                    metrics.evac_time = clock.time_at(k_);
                    break;
                }
            }
        }

        metrics.steps_run = k_;
        metrics.final_mass = m_.total_mass(cg_.grid);
        metrics.max_density = max_density_;
        metrics.worst_budget_error = ledger_.worst_budget_error();
        metrics.exit_mass.assign(cg_.exit_names.size(), 0.0);
        for (std::size_t e = 0; e < cg_.exit_names.size(); ++e)
            metrics.exit_mass[e] = ledger_.cumulative_absorbed(e);
        metrics.finalize_splits();
        return metrics;
    }

private:
    ControlSet<D> make_controls() const {
        if constexpr (D == 2)
            return ControlSet<D>::polar(params_.n_theta, params_.n_rho, params_.rho_step);
        else
            return ControlSet<D>::line(params_.n_rho, params_.rho_step);
    }

    ClassifiedGrid<D> cg_;
    CongestionSpec<D> f_spec_;
    RunParams<D> params_;
    DensityField<D> m_;
    Field<D> u_;
    VectorField<D> drift_;
    ExitLedger ledger_;
    std::unique_ptr<ControlSet<D>> controls_;
    std::unique_ptr<HjbSolver<D>> solver_;
    std::vector<int> policy_;
    bool have_value_ = false;
    int k_ = 0;
    double initial_mass_ = 0.0;
    double max_density_ = 0.0;
};

}  // namespace pedflow
