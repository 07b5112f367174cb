#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "pedflow/io.hpp"
#include "pedflow/scenario.hpp"

using namespace pedflow;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() : path(fs::temp_directory_path() / "pedflow_scenario_test") {
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("parse fills defaults for a minimal two-door config") {
    json j;
    j["builtin"] = "two_doors";
    const auto cfg = parse_config_json(j);
    CHECK(cfg.delta == 1e-6);
    CHECK(cfg.n_theta == 32);
    CHECK(cfg.n_rho == 4);
    CHECK(cfg.rho_step == 1.0);
    CHECK(cfg.evac_threshold == 1e-3);
    CHECK(cfg.exits.size() == 2);
}

TEST_CASE("parse rejects invalid physics and unknown keys with field paths") {
    json bad;
    bad["builtin"] = "two_doors";
    bad["physics"]["epsilon"] = -0.5;
    CHECK_THROWS_WITH(parse_config_json(bad), Catch::Matchers::ContainsSubstring("epsilon"));

    json unknown;
    unknown["builtin"] = "two_doors";
    unknown["physics"]["epsilonn"] = 0.5;
    CHECK_THROWS_WITH(parse_config_json(unknown),
                      Catch::Matchers::ContainsSubstring("physics.epsilonn"));

    json both;
    both["grid"]["M"] = 10;
    both["grid"]["dx"] = 0.1;
    CHECK_THROWS_WITH(parse_config_json(both), Catch::Matchers::ContainsSubstring("grid"));
}

TEST_CASE("missing files are reported by path") {
    CHECK_THROWS_WITH(parse_config("/nonexistent/pedflow.json"),
                      Catch::Matchers::ContainsSubstring("/nonexistent/pedflow.json"));
    auto cfg = builtin_two_doors();
    cfg.mask_file = "no_such.mask";
    CHECK_THROWS_WITH(build_scenario(cfg, "/nonexistent"),
                      Catch::Matchers::ContainsSubstring("no_such.mask"));
}

TEST_CASE("builtin two doors matches the published geometry") {
    const auto cfg = builtin_two_doors();
    REQUIRE(cfg.exits.size() == 2);
    CHECK(cfg.exits[0].side == "xmin");
    CHECK(cfg.exits[1].side == "xmax");
    CHECK(cfg.exits[0].to - cfg.exits[0].from == Catch::Approx(0.14));
    CHECK(cfg.exits[1].to - cfg.exits[1].from == Catch::Approx(0.02));
    CHECK(cfg.init_density == 0.7);
    CHECK(cfg.epsilon == 1e-3);

    const auto rt = build_scenario(cfg);
    // support area (1/3)^2 -> initial mass M0/9
    CHECK(rt.m0.total_mass(rt.grid) == Catch::Approx(0.7 / 9.0).epsilon(1e-13));
}

TEST_CASE("builtin turnstiles: slat geometry and counts") {
    const auto c01 = builtin_turnstiles(0.1);
    const auto c02 = builtin_turnstiles(0.2);
    const auto c03 = builtin_turnstiles(0.3);
    CHECK(c01.obstacles.size() == 9);
    CHECK(c02.obstacles.size() == 5);
    CHECK(c03.obstacles.size() == 3);
    for (const auto& slat : c01.obstacles) {
        CHECK(slat.lo[0] == Catch::Approx(0.4));
        CHECK(slat.hi[0] == Catch::Approx(0.6));
        CHECK(slat.hi[1] - slat.lo[1] == Catch::Approx(0.04).margin(1e-12));
    }
    // symmetric about mid-height
    CHECK(c01.obstacles[4].lo[1] == Catch::Approx(0.48));
    CHECK(c01.obstacles[4].hi[1] == Catch::Approx(0.52));
    CHECK_THROWS_AS(builtin_turnstiles(0.0), ConfigError);
    CHECK_THROWS_AS(builtin_turnstiles(-0.1), ConfigError);
}

TEST_CASE("resolved configs round-trip through their JSON form") {
    auto check_roundtrip = [](const ScenarioConfig& cfg) {
        const json j = config_json(cfg);
        const auto back = parse_config_json(j);
        CHECK(back == cfg);
    };
    check_roundtrip(builtin_two_doors());
    check_roundtrip(builtin_turnstiles(0.2));
    auto env = builtin_two_doors();
    env.env_cost = true;
    env.ell_default = 1.0;
    env.ell_patches.push_back(EllPatch{Box<2>{{0.1, 0.1}, {0.4, 0.4}}, 2.0});
    check_roundtrip(env);
}

TEST_CASE("override syntax: dotted paths with type coercion") {
    json j = config_json(builtin_two_doors());
    apply_override(j, "physics.epsilon=0.1");
    apply_override(j, "hjb.n_theta=16");
    apply_override(j, "name=custom_run");
    const auto cfg = parse_config_json(j);
    CHECK(cfg.epsilon == 0.1);
    CHECK(cfg.n_theta == 16);
    CHECK(cfg.name == "custom_run");

    CHECK_THROWS_WITH(apply_override(j, "physics.does_not_exist=1"),
                      Catch::Matchers::ContainsSubstring("physics.does_not_exist"));
    CHECK_THROWS_WITH(apply_override(j, "physics.epsilon"),
                      Catch::Matchers::ContainsSubstring("key=value"));
    CHECK_THROWS_WITH(apply_override(j, "hjb.n_theta=abc"),
                      Catch::Matchers::ContainsSubstring("cannot parse"));
}

TEST_CASE("density CSV round-trips exactly") {
    TempDir tmp;
    GridSpec<2> g(1.0, 6);
    std::vector<double> values(g.node_count());
    for (std::size_t lin = 0; lin < values.size(); ++lin)
        values[lin] = 0.1 * static_cast<double>(lin) / 3.0 + 1e-7;
    const std::string path = (tmp.path / "field.csv").string();
    write_density_csv(g, values, path);

    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    CHECK(header == "x,y,value");
    std::size_t rows = 0;
    std::string line;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == g.node_count());

    const auto back = read_density_csv(g, path);
    for (std::size_t lin = 0; lin < values.size(); ++lin) CHECK(back[lin] == values[lin]);
}

TEST_CASE("PGM writer: header, size, and zero field payload") {
    TempDir tmp;
    GridSpec<2> g(1.0, 4);
    std::vector<double> zeros(g.node_count(), 0.0);
    const std::string path = (tmp.path / "zeros.pgm").string();
    write_pgm(g, zeros, path);
    std::ifstream in(path, std::ios::binary);
    std::string magic;
    int w = 0, hgt = 0, maxval = 0;
    in >> magic >> w >> hgt >> maxval;
    CHECK(magic == "P5");
    CHECK(w == 5);
    CHECK(hgt == 5);
    CHECK(maxval == 65535);
    in.get();  // single whitespace after the header
    std::vector<char> payload(static_cast<std::size_t>(w) * hgt * 2);
    in.read(payload.data(), static_cast<std::streamsize>(payload.size()));
    CHECK(in.gcount() == static_cast<std::streamsize>(payload.size()));
    for (char b : payload) CHECK(b == 0);
}

TEST_CASE("metrics file round-trips through the parser") {
    TempDir tmp;
    Metrics m;
    m.evacuated = true;
    m.evac_step = 54;
    m.evac_time = 4.32;
    m.evac_threshold = 1e-3;
    m.initial_mass = 0.7 / 9.0;
    m.final_mass = 1e-5;
    m.max_density = 0.93;
    m.exit_names = {"left", "right"};
    m.exit_mass = {0.04, 0.037};
    m.finalize_splits();
    const std::string path = (tmp.path / "metrics.txt").string();
    write_metrics(m, {{"config.name", "two_doors"}}, path);
    const auto kv = parse_metrics(path);
    CHECK(kv.at("evacuated") == "1");
    CHECK(kv.at("evac_step") == "54");
    CHECK(std::stod(kv.at("evac_time")) == 4.32);
    CHECK(std::stod(kv.at("exit_percent.left")) ==
          Catch::Approx(100.0 * 0.04 / 0.077).epsilon(1e-12));
    CHECK(kv.at("config.name") == "two_doors");
}

TEST_CASE("mask files load into classified grids") {
    TempDir tmp;
    const std::string path = (tmp.path / "room.mask").string();
    {
        std::ofstream out(path);
        out << "pedflow-mask v1\n";
        out << "width 5\nheight 5\n";
        out << "#000#\n";  // top row: exit id 0 on the upper boundary
        out << "#...#\n";
        out << "#.O.#\n";
        out << "#...#\n";
        out << "#####\n";
    }
    GridSpec<2> g(1.0, 4);
    const auto cg = load_mask(g, path, 1, {"door"});
    CHECK(cg.mask_mode);
    CHECK(cg.exit_names == std::vector<std::string>{"door"});
    CHECK(cg.count(NodeType::Target) == 3);
    // the single obstacle node is within one layer of free space: ghost
    CHECK(cg.count(NodeType::Ghost) == 1);
    CHECK(cg.count(NodeType::Obstacle) == 0);
    CHECK(cg.type[g.linear(NodeIndex<2>{2, 2})] == NodeType::Ghost);
    // top row maps to iy = 4
    CHECK(cg.type[g.linear(NodeIndex<2>{1, 4})] == NodeType::Target);
    CHECK(cg.exit_id[g.linear(NodeIndex<2>{1, 4})] == 0);

    GridSpec<2> wrong(1.0, 6);
    CHECK_THROWS_WITH(load_mask(wrong, path, 1), Catch::Matchers::ContainsSubstring("dimensions"));
}

TEST_CASE("mask rejects interior nodes on the outer boundary") {
    TempDir tmp;
    const std::string path = (tmp.path / "bad.mask").string();
    {
        std::ofstream out(path);
        out << "pedflow-mask v1\nwidth 3\nheight 3\n";
        out << "###\n#.#\n#.#\n";  // bottom middle is '.', on the boundary
    }
    GridSpec<2> g(1.0, 2);
    CHECK_THROWS_WITH(load_mask(g, path, 1),
                      Catch::Matchers::ContainsSubstring("boundary"));
}

TEST_CASE("ghost band derivation in mask mode keeps deep obstacle nodes") {
    TempDir tmp;
    const std::string path = (tmp.path / "deep.mask").string();
    {
        std::ofstream out(path);
        out << "pedflow-mask v1\nwidth 9\nheight 9\n";
        for (int r = 0; r < 9; ++r) {
            std::string row(9, '.');
            if (r == 0 || r == 8) row.assign(9, '#');
            if (r >= 2 && r <= 6) {
                for (int c = 2; c <= 6; ++c) row[c] = 'O';
            }
            row[0] = '#';
            row[8] = '#';
            out << row << "\n";
        }
    }
    GridSpec<2> g(1.0, 8);
    const auto cg = load_mask(g, path, 1);
    // 5x5 obstacle block: the outer ring becomes ghost, the 3x3 core stays obstacle
    CHECK(cg.count(NodeType::Ghost) == 16);
    CHECK(cg.count(NodeType::Obstacle) == 9);
}

TEST_CASE("built-in geometries are frozen by fingerprint") {
    const auto two_doors = build_scenario(builtin_two_doors());
    const auto turnstiles = build_scenario(builtin_turnstiles(0.1));
    // pinned values; regenerate deliberately when geometry defaults change
    CHECK(two_doors.cg.fingerprint() == 0x9e6d180ba7b6c7c5ull);
    CHECK(turnstiles.cg.fingerprint() == 0xc92ec6bd23061e88ull);
}

TEST_CASE("scenario runtime warnings surface grid rounding") {
    auto cfg = builtin_two_doors();
    cfg.M = 0;
    cfg.dx_request = 0.08;  // 12.5 cells round to 12
    const auto rt = build_scenario(cfg);
    CHECK(rt.resolved.M == 12);
    bool warned = false;
    for (const auto& w : rt.warnings)
        if (w.find("rounded") != std::string::npos) warned = true;
    CHECK(warned);
}
