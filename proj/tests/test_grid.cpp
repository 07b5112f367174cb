#include <catch2/catch_amalgamated.hpp>

#include "pedflow/geometry.hpp"
#include "pedflow/grid.hpp"
#include "pedflow/interpolate.hpp"
#include "support/test_oracles.hpp"

using namespace pedflow;

TEST_CASE("grid spec derives dx from L and M") {
    GridSpec<2> g(1.0, 12);
    CHECK(g.dx() == 1.0 / 12.0);
    CHECK(g.node_count() == 13 * 13);
    CHECK_THROWS_AS(GridSpec<2>(1.0, 1), ConfigError);
    CHECK_THROWS_AS(GridSpec<2>(-1.0, 10), ConfigError);
}

TEST_CASE("requested spacing rounds to the nearest cell count") {
    // 1/0.08 = 12.5 rounds half to even
    CHECK(GridSpec<2>::round_cells(1.0, 0.08) == 12);
    CHECK(GridSpec<2>::round_cells(1.0, 0.11) == 9);
    CHECK(GridSpec<2>::round_cells(1.0, 0.5) == 2);
    CHECK_THROWS_AS(GridSpec<2>::round_cells(1.0, -0.1), ConfigError);
}

TEST_CASE("cells are half-open with ties toward the lower index") {
    GridSpec<2> g(1.0, 10);
    // cell boundary at 0.05 belongs to node 0
    CHECK(g.cell_of(Vec<2>{0.05, 0.0})[0] == 0);
    CHECK(g.cell_of(Vec<2>{0.0500001, 0.0})[0] == 1);
    CHECK(g.cell_of(Vec<2>{0.149999, 0.0})[0] == 1);
    CHECK(g.cell_of(Vec<2>{1.0, 1.0})[0] == 10);
    CHECK(g.cell_of(Vec<2>{0.0, 0.0})[0] == 0);
}

TEST_CASE("linear indexing round-trips") {
    GridSpec<2> g(2.0, 7);
    for (std::size_t lin = 0; lin < g.node_count(); ++lin)
        CHECK(g.linear(g.unlinear(lin)) == lin);
}

TEST_CASE("clock holds N dt = T exactly") {
    SimulationClock c(0.08, 10.0);
    CHECK(c.steps() == 125);
    CHECK(c.steps() * c.dt() == c.horizon());
    CHECK_FALSE(c.horizon_adjusted());
    SimulationClock rounded(0.3, 1.0);
    CHECK(rounded.horizon_adjusted());
    CHECK(rounded.steps() == 3);
}

TEST_CASE("interpolation weights at nodes and edge midpoints") {
    GridSpec<2> g(1.0, 10);
    const auto at_node = interpolation_weights(g, Vec<2>{0.3, 0.7});
    double w_node = 0.0;
    for (int j = 0; j < at_node.count; ++j)
        if (at_node.node[j] == g.linear(NodeIndex<2>{3, 7})) w_node += at_node.weight[j];
    CHECK(w_node == Catch::Approx(1.0).margin(1e-15));

    const auto mid = interpolation_weights(g, Vec<2>{0.35, 0.7});
    double wa = 0.0, wb = 0.0;
    for (int j = 0; j < mid.count; ++j) {
        if (mid.node[j] == g.linear(NodeIndex<2>{3, 7})) wa += mid.weight[j];
        if (mid.node[j] == g.linear(NodeIndex<2>{4, 7})) wb += mid.weight[j];
    }
    CHECK(wa == Catch::Approx(0.5).margin(1e-15));
    CHECK(wb == Catch::Approx(0.5).margin(1e-15));
}

TEST_CASE("interpolation weights form a partition of unity") {
    GridSpec<2> g(1.0, 13);
    std::uint64_t rng = 42;
    for (int trial = 0; trial < 100000; ++trial) {
        Vec<2> x{testsupport::lcg_uniform(rng), testsupport::lcg_uniform(rng)};
        const auto w = interpolation_weights(g, x);
        REQUIRE(w.count <= 3);
        double sum = 0.0;
        for (int j = 0; j < w.count; ++j) {
            REQUIRE(w.weight[j] >= 0.0);
            REQUIRE(w.weight[j] <= 1.0 + 1e-15);
            sum += w.weight[j];
        }
        REQUIRE(std::abs(sum - 1.0) <= 1e-14);
    }
}

TEST_CASE("interpolation reproduces constants and affine functions") {
    GridSpec<2> g(1.0, 9);
    Field<2> constant(g, 7.0);
    Field<2> affine(g);
    for (std::size_t lin = 0; lin < g.node_count(); ++lin) {
        const Vec<2> x = g.position(lin);
        affine[lin] = 2.0 * x[0] + 3.0 * x[1] - 1.0;
    }
    std::uint64_t rng = 7;
    for (int trial = 0; trial < 20000; ++trial) {
        Vec<2> x{testsupport::lcg_uniform(rng), testsupport::lcg_uniform(rng)};
        CHECK(p1_interpolate(g, constant, x) == Catch::Approx(7.0).margin(1e-13));
        const double expected = 2.0 * x[0] + 3.0 * x[1] - 1.0;
        CHECK(p1_interpolate(g, affine, x) == Catch::Approx(expected).margin(1e-13));
    }
    CHECK_THROWS_AS(interpolation_weights(g, Vec<2>{1.5, 0.2}), std::domain_error);
    CHECK_THROWS_AS(interpolation_weights(g, Vec<2>{0.2, -0.1}), std::domain_error);
}

TEST_CASE("one-dimensional section of the hat basis") {
    // u(x) = x^2 sampled on a dx = 0.1 grid; query midway between 0 and 0.1
    GridSpec<1> g(1.0, 10);
    Field<1> u(g);
    for (std::size_t lin = 0; lin < g.node_count(); ++lin) {
        const double x = g.position(lin)[0];
        u[lin] = x * x;
    }
    CHECK(p1_interpolate(g, u, Vec<1>{0.05}) == Catch::Approx(0.005).margin(1e-15));
}

TEST_CASE("classify: two-door boundary partition") {
    GridSpec<2> g(1.0, 24);
    SceneGeometry<2> scene;
    scene.exits.push_back(ExitPatch<2>{"left", 0, 0.0, {0.0, 0.13}, {0.0, 0.27}, -1});
    scene.exits.push_back(ExitPatch<2>{"right", 0, 1.0, {0.0, 0.49}, {0.0, 0.51}, +1});
    const auto cg = classify_nodes(g, scene, 2);

    CHECK(cg.count(NodeType::Target) == 4);  // 3 left + 1 right
    CHECK(cg.count(NodeType::Obstacle) == 0);
    CHECK(cg.count(NodeType::Ghost) == 0);
    // everything on the boundary that is not a target is a wall
    std::size_t boundary = 0;
    for (std::size_t lin = 0; lin < g.node_count(); ++lin)
        if (g.on_boundary(g.unlinear(lin))) ++boundary;
    CHECK(cg.count(NodeType::Wall) == boundary - 4);
    CHECK(cg.count(NodeType::Interior) == g.node_count() - boundary);

    // total partition
    for (std::size_t lin = 0; lin < g.node_count(); ++lin) {
        const NodeType t = cg.type[lin];
        const bool has_exit = cg.exit_id[lin] >= 0;
        CHECK(has_exit == (t == NodeType::Target));
    }
}

TEST_CASE("classify: closed room has walls only on the boundary") {
    GridSpec<2> g(1.0, 8);
    SceneGeometry<2> scene;
    const auto cg = classify_nodes(g, scene, 2);
    CHECK(cg.count(NodeType::Target) == 0);
    CHECK(cg.count(NodeType::Wall) == 4 * 8);
}

TEST_CASE("classify: obstacle interior nodes and ghost band") {
    GridSpec<2> g(1.0, 20);
    SceneGeometry<2> scene;
    scene.obstacles.push_back(Box<2>{{0.3, 0.3}, {0.7, 0.7}});
    const int layers = 2;
    const auto cg = classify_nodes(g, scene, layers);

    // brute-force oracle in index space: the snapped box spans nodes 6..14
    for (std::size_t lin = 0; lin < g.node_count(); ++lin) {
        const auto idx = g.unlinear(lin);
        const bool inside =
            idx[0] > 6 && idx[0] < 14 && idx[1] > 6 && idx[1] < 14;
        if (!inside) {
            CHECK(cg.type[lin] != NodeType::Obstacle);
            CHECK(cg.type[lin] != NodeType::Ghost);
            continue;
        }
        const int depth = std::min(std::min(idx[0] - 6, 14 - idx[0]),
                                   std::min(idx[1] - 6, 14 - idx[1]));
        if (depth <= layers)
            CHECK(cg.type[lin] == NodeType::Ghost);
        else
            CHECK(cg.type[lin] == NodeType::Obstacle);
    }
}

TEST_CASE("classify rejects overlapping exits with distinct ids") {
    GridSpec<2> g(1.0, 10);
    SceneGeometry<2> scene;
    scene.exits.push_back(ExitPatch<2>{"a", 0, 0.0, {0.0, 0.1}, {0.0, 0.4}, -1});
    scene.exits.push_back(ExitPatch<2>{"b", 0, 0.0, {0.0, 0.3}, {0.0, 0.6}, -1});
    CHECK_THROWS_AS(classify_nodes(g, scene, 1), ConfigError);
}

TEST_CASE("exit planes must lie on the rectangle or an obstacle face") {
    GridSpec<2> g(1.0, 10);
    SceneGeometry<2> scene;
    scene.exits.push_back(ExitPatch<2>{"floating", 0, 0.5, {0.0, 0.1}, {0.0, 0.4}, -1});
    CHECK_THROWS_AS(classify_nodes(g, scene, 1), ConfigError);
}

TEST_CASE("ghost band width rule scales with the characteristic reach") {
    CHECK(ghost_band_layers(0.1, 0.1, 0.1, 0.0, 0.0, 2) == 1);
    const int layers = ghost_band_layers(0.02, 0.08, 0.005, 1e-3, 4.0, 2);
    // reach = 4*0.08 + sqrt(4e-3*0.08) = 0.3379; 0.3379/0.02 -> 17 + 1
    CHECK(layers == 18);
}
