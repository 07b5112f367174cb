#include <catch2/catch_amalgamated.hpp>

#include "pedflow/oracles.hpp"
#include "pedflow/philox.hpp"
#include "pedflow/scenario.hpp"
#include "support/test_oracles.hpp"

using namespace pedflow;

TEST_CASE("philox4x32-10 known-answer vectors") {
    using C = Philox4x32::Counter;
    using K = Philox4x32::Key;
    CHECK(Philox4x32::block(C{0, 0, 0, 0}, K{0, 0}) ==
          C{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
    CHECK(Philox4x32::block(C{0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                            K{0xffffffffu, 0xffffffffu}) ==
          C{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
    CHECK(Philox4x32::block(C{0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                            K{0xa4093822u, 0x299f31d0u}) ==
          C{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("particle substreams are reproducible and distinct") {
    ParticleStream a(12345, 7), a2(12345, 7), b(12345, 8);
    CHECK(a.words(3, 0) == a2.words(3, 0));
    CHECK(a.words(3, 0) != b.words(3, 0));
    CHECK(a.words(3, 0) != a.words(4, 0));
    const double u = a.uniform(0, 0);
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
}

TEST_CASE("cole-hopf slab: trivial and symmetric structure") {
    ColeHopfSlab zero(0.05, 0.0);
    CHECK(zero.value(0.3) == 0.0);

    ColeHopfSlab u(0.05, 1.0);
    CHECK(u.value(0.0) == Catch::Approx(0.0).margin(1e-14));
    CHECK(u.value(1.0) == Catch::Approx(0.0).margin(1e-14));
    CHECK(u.value(0.5) == Catch::Approx(u.value(0.5)));
    CHECK(u.value(0.3) == Catch::Approx(u.value(0.7)).margin(1e-14));
    CHECK(u.value(0.5) > u.value(0.25));  // interior maximum
}

TEST_CASE("cole-hopf slab: residual of the closed form is tiny") {
    ColeHopfSlab u(0.05, 1.0);
    for (int i = 1; i < 1000; ++i) {
        const double x = i / 1000.0;
        CHECK(std::abs(u.residual(x)) < 1e-10);
    }
}

TEST_CASE("cole-hopf midpoint value against the shooting oracle") {
    const double eps = 0.05, F = 1.0;
    ColeHopfSlab u(eps, F);
    // frozen from the closed form, cross-checked by RK4 shooting below
    CHECK(u.value(0.5) == Catch::Approx(0.63779213526594214).margin(1e-12));

    const double slope = testsupport::bisect(
        [&](double s) { return testsupport::shoot_slab(eps, F, s, 1.0, 20000); }, 1.0, 1.5);
    const double mid = testsupport::shoot_slab(eps, F, slope, 0.5, 10000);
    CHECK(u.value(0.5) == Catch::Approx(mid).margin(1e-6));
    CHECK(u.derivative(0.0) == Catch::Approx(slope).margin(1e-6));
}

TEST_CASE("heat kernel pulse: moments and trivial cases") {
    GaussianPulse<2> pulse{{0.25, 0.5}, 0.05};
    const Vec<2> b{0.5, 0.0};
    const double eps = 0.01, t = 0.5;
    // mean shifts by b t, per-axis variance grows to sigma0^2 + 2 eps t
    const double var = 0.05 * 0.05 + 2.0 * eps * t;
    CHECK(var == Catch::Approx(0.0125));
    const Vec<2> mean{0.25 + 0.25, 0.5};
    const double peak = pulse.density(mean, b, eps, t);
    const double off = pulse.density(Vec<2>{mean[0] + std::sqrt(var), mean[1]}, b, eps, t);
    CHECK(off / peak == Catch::Approx(std::exp(-0.5)).epsilon(1e-12));
    // t = 0 reproduces the initial pulse
    CHECK(pulse.density(Vec<2>{0.25, 0.5}, b, eps, 0.0) ==
          Catch::Approx(1.0 / (2.0 * M_PI * 0.0025)).epsilon(1e-12));
    // b = 0, eps = 0: frozen profile
    CHECK(pulse.density(Vec<2>{0.3, 0.5}, Vec<2>{0.0, 0.0}, 0.0, 5.0) ==
          Catch::Approx(pulse.density(Vec<2>{0.3, 0.5}, b, eps, 0.0)).epsilon(1e-12));
}

TEST_CASE("particle oracle: frozen dynamics reproduce the initial histogram") {
    auto cfg = builtin_two_doors();
    auto rt = build_scenario(cfg);
    ParticleOracle<2> oracle(rt.cg, 99, 20000);
    oracle.init_from_density(rt.m0);
    const auto before = oracle.result();
    VectorField<2> zero_drift(rt.grid);
    oracle.step(zero_drift, 0.05, 0.0);  // eps = 0, b = 0: nobody moves
    const auto after = oracle.result();
    CHECK(before.alive == after.alive);
    for (std::size_t lin = 0; lin < before.histogram.size(); ++lin)
        CHECK(before.histogram[lin] == after.histogram[lin]);
}

TEST_CASE("particle oracle: closed room preserves the particle count") {
    auto cfg = builtin_two_doors();
    cfg.exits.clear();
    auto rt = build_scenario(cfg);
    ParticleOracle<2> oracle(rt.cg, 7, 5000);
    DensityField<2> m0 = rt.m0;
    oracle.init_from_density(m0);
    VectorField<2> drift(rt.grid);
    for (std::size_t lin = 0; lin < drift.size(); ++lin) drift[lin] = {1.0, -0.5};
    for (int k = 0; k < 10; ++k) oracle.step(drift, 0.05, 1e-3);
    CHECK(oracle.result().alive == 5000);
}

TEST_CASE("particle oracle is bit-reproducible") {
    auto rt = build_scenario(builtin_two_doors());
    HughesSim<2> sim(rt.cg, rt.f_spec, rt.params, rt.m0);
    sim.solve_hjb();
    auto run = [&](long n) {
        ParticleOracle<2> oracle(rt.cg, 31337, n);
        oracle.init_from_density(rt.m0);
        for (int k = 0; k < 3; ++k) oracle.step(sim.drift(), rt.params.dt, rt.params.eps);
        return oracle.result();
    };
    const auto r1 = run(10000);
    const auto r2 = run(10000);
    CHECK(r1.histogram == r2.histogram);
    CHECK(r1.absorbed_counts == r2.absorbed_counts);
}

TEST_CASE("particle oracle tracks the deterministic step within the CLT band") {
    auto rt = build_scenario(builtin_two_doors());
    HughesSim<2> sim(rt.cg, rt.f_spec, rt.params, rt.m0);
    sim.solve_hjb();

    const long n = 200000;
    ParticleOracle<2> oracle(rt.cg, 2024, n);
    oracle.init_from_density(rt.m0);
    oracle.step(sim.drift(), rt.params.dt, rt.params.eps);
    const auto res = oracle.result();

    const auto fp = fp_step(rt.cg, sim.density(), sim.drift(), rt.params.dt, rt.params.eps);
    const double mass0 = sim.density().total_mass(rt.grid);

    double l1 = 0.0;
    std::size_t support = 0;
    for (std::size_t lin = 0; lin < res.histogram.size(); ++lin) {
        const double p_det = fp.next[lin] * rt.grid.cell_volume() / mass0;
        const double p_mc = res.histogram[lin] / static_cast<double>(n);
        l1 += std::abs(p_det - p_mc);
        if (p_det > 0.0) ++support;
    }
    CHECK(l1 <= 3.0 * std::sqrt(static_cast<double>(support) / n));
}

TEST_CASE("convergence fit: recovers synthetic orders and refuses degenerate input") {
    std::vector<RefinementLevel> levels{{0.1, 0.02}, {0.05, 0.01}, {0.025, 0.005}};
    const auto rep = fit_convergence_order("synthetic", levels, 1.0);
    CHECK(rep.observed_order == Catch::Approx(1.0).margin(1e-12));
    CHECK(rep.order_ok);
    CHECK(rep.monotone_decreasing);

    std::vector<RefinementLevel> second{{0.1, 0.01}, {0.05, 0.0025}, {0.025, 0.000625}};
    CHECK(fit_convergence_order("p2", second, 2.0).observed_order == Catch::Approx(2.0).margin(1e-12));

    std::vector<RefinementLevel> flat{{0.1, 0.01}, {0.05, 0.0099}, {0.025, 0.0098}};
    CHECK_FALSE(fit_convergence_order("flat", flat, 1.0).order_ok);

    CHECK_THROWS_AS(fit_convergence_order("one", {{0.1, 0.01}}, 1.0), ConfigError);
    CHECK_THROWS_AS(fit_convergence_order("two", {{0.1, 0.01}, {0.05, 0.005}}, 1.0), ConfigError);

    const std::string text = rep.to_text();
    CHECK(text.find("observed_order") != std::string::npos);
}

TEST_CASE("oracle report text serializes into the metrics format") {
    std::vector<RefinementLevel> levels{{0.1, 0.02}, {0.05, 0.01}, {0.025, 0.005}};
    const auto rep = fit_convergence_order("demo", levels, 1.0);
    const std::string text = rep.to_text();
    CHECK(text.find("oracle = demo") != std::string::npos);
    CHECK(text.find("level.0.parameter") != std::string::npos);
}
