#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "pedflow/oracles.hpp"
#include "pedflow/scenario.hpp"

namespace pedflow {

struct ValidationCheck {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct ValidationReport {
    std::vector<ValidationCheck> checks;
    std::vector<OracleReport> oracles;

    bool all_passed() const {
        for (const auto& c : checks)
            if (!c.passed) return false;
        return true;
    }
};

namespace valdetail {

inline double lcg(std::uint64_t& s) {
    s = s * 6364136223846793005ull + 1442695040888963407ull;
    return static_cast<double>(s >> 11) * 0x1.0p-53;
}

inline void add(ValidationReport& rep, const std::string& name, bool ok,
                const std::string& detail) {
    rep.checks.push_back({name, ok, detail});
}

}  // namespace valdetail

/// Property suites: interpolation partition, conservation, mass budget,
/// monotone decay, transition-row sums, generator vectors.  Runs in seconds.
inline ValidationReport validate_fast() {
    using valdetail::add;
    ValidationReport rep;

    {  // interpolation partition of unity + affine reproduction
        GridSpec<2> g(1.0, 13);
        Field<2> affine(g);
        for (std::size_t lin = 0; lin < g.node_count(); ++lin) {
            const Vec<2> x = g.position(lin);
            affine[lin] = 2.0 * x[0] - 0.7 * x[1] + 0.1;
        }
        std::uint64_t rng = 11;
        double worst_sum = 0.0, worst_affine = 0.0;
        for (int i = 0; i < 100000; ++i) {
            Vec<2> x{valdetail::lcg(rng), valdetail::lcg(rng)};
            const auto w = interpolation_weights(g, x);
            double s = 0.0;
            for (int j = 0; j < w.count; ++j) s += w.weight[j];
            worst_sum = std::max(worst_sum, std::abs(s - 1.0));
            worst_affine = std::max(
                worst_affine,
                std::abs(p1_interpolate(g, affine, x) - (2.0 * x[0] - 0.7 * x[1] + 0.1)));
        }
        add(rep, "interpolation_partition", worst_sum <= 1e-14,
            "max |1 - sum w| = " + std::to_string(worst_sum));
        add(rep, "interpolation_affine", worst_affine <= 1e-13,
            "max affine error = " + std::to_string(worst_affine));
    }

    {  // closed-room conservation through the coupled loop
        auto cfg = builtin_two_doors();
        cfg.exits.clear();
        auto rt = build_scenario(cfg);
        HughesSim<2> sim(rt.cg, rt.f_spec, rt.params, rt.m0);
        const double mass0 = sim.initial_mass();
        double worst = 0.0;
        for (int k = 0; k < 50; ++k) {
            sim.step();
            worst = std::max(worst, std::abs(sim.ledger().remaining.back() - mass0) / mass0);
        }
        add(rep, "closed_room_conservation", worst <= 1e-12,
            "relative drift = " + std::to_string(worst));
    }

    {  // budget, nonnegativity, monotone decay with exits
        auto cfg = builtin_two_doors();
        cfg.T = 1.5;
        auto rt = build_scenario(cfg);
        HughesSim<2> sim(rt.cg, rt.f_spec, rt.params, rt.m0);
        bool nonneg = true, monotone = true;
        double prev = sim.initial_mass();
        for (int k = 0; k < rt.clock.steps(); ++k) {
            sim.step();
            nonneg = nonneg && sim.density().min_value() >= 0.0;
            const double rem = sim.ledger().remaining.back();
            monotone = monotone && rem <= prev + 1e-14;
            prev = rem;
        }
        const double budget = sim.ledger().worst_budget_error();
        add(rep, "mass_budget", budget <= 1e-10, "worst budget error = " + std::to_string(budget));
        add(rep, "density_nonnegative", nonneg, nonneg ? "min >= 0" : "negative value seen");
        add(rep, "monotone_decay", monotone,
            monotone ? "remaining mass non-increasing" : "remaining mass increased");
    }

    {  // transition row sums on the two-door grid
        auto cfg = builtin_two_doors();
        auto rt = build_scenario(cfg);
        HjbProblem<2> p;
        p.cg = &rt.cg;
        p.cost.assign(rt.grid.node_count(), 0.5);
        p.wall_value.assign(rt.grid.node_count(), cfg.wall_g);
        p.ghost_value = cfg.ghost_value;
        p.h = cfg.h;
        p.eps = cfg.epsilon;
        const auto cs = ControlSet<2>::polar(cfg.n_theta, cfg.n_rho);
        HjbSolver<2> solver(p, cs);
        std::uint64_t rng = 4242;
        double worst = 0.0;
        const auto& interior = solver.interior_nodes();
        for (int i = 0; i < 200; ++i) {
            const auto node = interior[static_cast<std::size_t>(valdetail::lcg(rng) * interior.size())];
            const auto control = static_cast<std::size_t>(valdetail::lcg(rng) * cs.size());
            const auto row = solver.row(node, control);
            double s = row.w_self;
            for (int e = 0; e < row.n; ++e) s += row.w[e];
            worst = std::max(worst, std::abs(s - 1.0));
        }
        add(rep, "transition_row_sums", worst <= 1e-13, "max row-sum error = " + std::to_string(worst));
    }

    {  // counter-based generator known answers
        const auto out = Philox4x32::block({0, 0, 0, 0}, {0, 0});
        const bool ok = out == Philox4x32::Counter{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u};
        add(rep, "philox_vectors", ok, ok ? "known-answer block matches" : "mismatch");
    }

    return rep;
}

/// Adds the convergence studies and the million-particle comparison.
inline ValidationReport validate_full() {
    using valdetail::add;
    ValidationReport rep = validate_fast();

    {  // heat-kernel transport order in dx (dt refined proportionally)
        const double eps = 0.01;
        const double L = 5.0;
        const Vec<2> bvec{0.5, 0.0};
        const GaussianPulse<2> pulse{{L / 2 - 0.25, L / 2}, 0.3};
        const double t_end = 0.5;
        if (pulse.boundary_tail(L, bvec, eps, t_end) >= 1e-12)
            throw ConfigError("heat-kernel study: boundary leak precondition violated");
        std::vector<RefinementLevel> levels;
        for (int M : {125, 250, 500}) {
            GridSpec<2> g(L, M);
            auto cg = classify_nodes(g, SceneGeometry<2>{}, 1);
            DensityField<2> m(g);
            for (std::size_t lin = 0; lin < g.node_count(); ++lin)
                if (cg.carries_density(lin))
                    m[lin] = pulse.density(g.position(lin), bvec, eps, 0.0);
            VectorField<2> b(g);
            for (std::size_t lin = 0; lin < b.size(); ++lin) b[lin] = bvec;
            const double dt = 0.02 * 125 / M;
            const int steps = static_cast<int>(std::nearbyint(t_end / dt));
            for (int k = 0; k < steps; ++k) m = fp_step(cg, m, b, dt, eps).next;
            levels.push_back({L / M, l1_distance<2>(g, m.values, [&](const Vec<2>& x) {
                                  return pulse.density(x, bvec, eps, t_end);
                              })});
        }
        auto fp_rep = fit_convergence_order("fp_heat_kernel_L1", levels, 1.0);
        add(rep, "fp_weak_order", fp_rep.observed_order >= 0.8,
            "observed order " + std::to_string(fp_rep.observed_order));
        rep.oracles.push_back(std::move(fp_rep));
    }

    {  // HJB slab errors halve at least 1.5x per refinement
        const double eps = 0.05, F_const = 1.0;
        ColeHopfSlab exact(eps, F_const);
        std::vector<RefinementLevel> levels;
        for (int M : {8, 16, 32}) {
            GridSpec<2> g(1.0, M);
            SceneGeometry<2> scene;
            scene.exits.push_back(ExitPatch<2>{"x0", 0, 0.0, {0.0, -0.1}, {0.0, 1.1}, -1});
            scene.exits.push_back(ExitPatch<2>{"x1", 0, 1.0, {0.0, -0.1}, {0.0, 1.1}, +1});
            auto cg = classify_nodes(g, scene, 1);
            HjbProblem<2> p;
            p.cg = &cg;
            p.cost.assign(g.node_count(), F_const);
            p.wall_value.assign(g.node_count(), 1.0);
            for (std::size_t lin = 0; lin < g.node_count(); ++lin)
                if (cg.type[lin] == NodeType::Wall)
                    p.wall_value[lin] = std::max(exact.value(g.position(lin)[0]), 1e-12);
            p.ghost_value = 1e4;
            p.h = 1.0 / M;
            p.eps = eps;
            HjbSettings settings;
            settings.pi_tol = 1e-10;
            HjbSolver<2> solver(p, ControlSet<2>::polar(32, 16, 0.125), settings);
            const auto res = solver.policy_iteration({});
            double err = 0.0;
            for (std::size_t lin = 0; lin < g.node_count(); ++lin)
                if (cg.type[lin] == NodeType::Interior)
                    err = std::max(err,
                                   std::abs(res.value[lin] - exact.value(g.position(lin)[0])));
            levels.push_back({1.0 / M, err});
        }
        auto hjb_rep = fit_convergence_order("hjb_cole_hopf_Linf", levels, 1.0);
        add(rep, "hjb_slab_order", hjb_rep.order_ok && hjb_rep.monotone_decreasing,
            "errors " + std::to_string(levels[0].error) + " / " + std::to_string(levels[1].error) +
                " / " + std::to_string(levels[2].error) + ", observed order " +
                std::to_string(hjb_rep.observed_order));
        rep.oracles.push_back(std::move(hjb_rep));
    }

    {  // million-particle agreement on the first coupled step, plus no
       // degradation against a smaller sample
        auto rt = build_scenario(builtin_two_doors());
        HughesSim<2> sim(rt.cg, rt.f_spec, rt.params, rt.m0);
        sim.solve_hjb();
        const auto det = fp_step(rt.cg, sim.density(), sim.drift(), rt.params.dt, rt.params.eps);
        const double mass0 = sim.density().total_mass(rt.grid);

        auto l1_for = [&](long n) {
            ParticleOracle<2> oracle(rt.cg, 90210, n);
            oracle.init_from_density(rt.m0);
            oracle.step(sim.drift(), rt.params.dt, rt.params.eps);
            const auto res = oracle.result();
            double l1 = 0.0;
            for (std::size_t lin = 0; lin < res.histogram.size(); ++lin) {
                const double p_det = det.next[lin] * rt.grid.cell_volume() / mass0;
                l1 += std::abs(p_det - res.histogram[lin] / static_cast<double>(n));
            }
            return l1;
        };
        const double l1_small = l1_for(10000);
        const double l1_big = l1_for(1000000);
        const double bound = 3.0 * std::sqrt(static_cast<double>(rt.grid.node_count()) / 1e6);
        add(rep, "particle_oracle_clt", l1_big <= bound,
            "L1 " + std::to_string(l1_big) + " vs bound " + std::to_string(bound));
        // 2-sigma slack on the smaller sample's own band
        const double slack = 2.0 * std::sqrt(static_cast<double>(rt.grid.node_count()) / 1e4);
        add(rep, "particle_oracle_no_degradation", l1_big <= l1_small + slack,
            "L1(1e6) " + std::to_string(l1_big) + " vs L1(1e4) " + std::to_string(l1_small));
    }

    return rep;
}

inline ValidationReport validate(const std::string& level) {
    if (level == "fast") return validate_fast();
    if (level == "full") return validate_full();
    throw ConfigError("unknown validation level '" + level + "' (expected fast or full)");
}

}  // namespace pedflow
