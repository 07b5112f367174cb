#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "pedflow/coupling.hpp"
#include "pedflow/density.hpp"
#include "pedflow/geometry.hpp"
#include "pedflow/io.hpp"

namespace pedflow {

using json = nlohmann::json;

struct ExitConfig {
    std::string id;
    std::string side;  // xmin | xmax | ymin | ymax
    double from = 0.0;
    double to = 0.0;
};

struct EllPatch {
    Box<2> rect;
    double value = 1.0;
};

/**
 * Declarative scenario description, d = 2.  Every solver parameter lives
 * here; parse_config resolves defaults so the solver modules never contain
 * magic numbers.  The JSON grammar is documented in docs/formats.md.
 */
struct ScenarioConfig {
    std::string name = "custom";

    // grid
    double L = 1.0;
    int M = 0;               // nodes-per-side minus one; 0 = derive from dx_request
    double dx_request = 0.0; // used when M == 0

    // clock
    double dt = 0.08;
    double T = 10.0;

    // hjb
    double h = 0.08;
    int n_theta = 32;
    int n_rho = 4;
    double rho_step = 1.0;
    double wall_g = 1e3;
    double ghost_value = 1e4;
    double pi_tol = 1e-9;
    double lin_tol = 1e-12;
    int pi_max_iters = 200;
    long eval_sweep_cap = 0;  // 0 = solver default

    // physics
    double epsilon = 1e-3;
    double delta = 1e-6;
    bool env_cost = false;
    double ell_default = 1.0;
    std::vector<EllPatch> ell_patches;

    // geometry
    std::vector<ExitConfig> exits;
    std::vector<Box<2>> obstacles;
    std::string mask_file;

    // initial density
    Box<2> init_rect{{0.0, 0.0}, {1.0, 1.0}};
    double init_density = 0.0;
    std::string init_csv;

    // output
    int snapshot_every = 0;
    bool write_csv = true;
    bool write_pgm = true;

    double evac_threshold = 1e-3;
    std::uint64_t seed = 20200521;

    bool operator==(const ScenarioConfig&) const = default;
};

inline bool operator==(const Box<2>& a, const Box<2>& b) { return a.lo == b.lo && a.hi == b.hi; }
inline bool operator==(const ExitConfig& a, const ExitConfig& b) {
    return a.id == b.id && a.side == b.side && a.from == b.from && a.to == b.to;
}
inline bool operator==(const EllPatch& a, const EllPatch& b) {
    return a.rect == b.rect && a.value == b.value;
}

namespace cfgdetail {

inline void require_keys(const json& j, const std::string& path,
                         std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw ConfigError(path + ": expected an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* k : allowed)
            if (it.key() == k) ok = true;
        if (!ok) throw ConfigError(path + "." + it.key() + ": unknown key");
    }
}

inline double get_num(const json& j, const std::string& path, const char* key, double fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_number()) throw ConfigError(path + "." + key + ": expected a number");
    return j[key].get<double>();
}

inline long get_int(const json& j, const std::string& path, const char* key, long fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_number_integer()) throw ConfigError(path + "." + key + ": expected an integer");
    return j[key].get<long>();
}

inline std::string get_str(const json& j, const std::string& path, const char* key,
                           const std::string& fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_string()) throw ConfigError(path + "." + key + ": expected a string");
    return j[key].get<std::string>();
}

inline Box<2> get_rect(const json& j, const std::string& path) {
    if (!j.is_array() || j.size() != 4 || !j[0].is_number())
        throw ConfigError(path + ": expected [xlo, ylo, xhi, yhi]");
    Box<2> b;
    b.lo = {j[0].get<double>(), j[1].get<double>()};
    b.hi = {j[2].get<double>(), j[3].get<double>()};
    if (!b.valid()) throw ConfigError(path + ": rectangle has empty extent");
    return b;
}

inline json rect_json(const Box<2>& b) { return json::array({b.lo[0], b.lo[1], b.hi[0], b.hi[1]}); }

}  // namespace cfgdetail

ScenarioConfig builtin_two_doors();
ScenarioConfig builtin_turnstiles(double c);

/// Builtin lookup by name; turnstile variants accept a trailing _c01/_c02/_c03.
inline ScenarioConfig builtin_scenario(const std::string& name) {
    if (name == "two_doors") return builtin_two_doors();
    if (name == "turnstiles" || name == "turnstiles_c01") return builtin_turnstiles(0.1);
    if (name == "turnstiles_c02") return builtin_turnstiles(0.2);
    if (name == "turnstiles_c03") return builtin_turnstiles(0.3);
    throw ConfigError("unknown builtin scenario '" + name + "'");
}

inline std::vector<std::string> builtin_scenario_names() {
    return {"two_doors", "turnstiles_c01", "turnstiles_c02", "turnstiles_c03"};
}

/// Parse a scenario from its JSON form, filling defaults; strict about keys.
inline ScenarioConfig parse_config_json(const json& root) {
    using namespace cfgdetail;
    ScenarioConfig base;
    if (root.contains("builtin")) {
        if (!root["builtin"].is_string()) throw ConfigError("builtin: expected a string");
        base = builtin_scenario(root["builtin"].get<std::string>());
    }
    ScenarioConfig c = base;

    require_keys(root, "config",
                 {"builtin", "name", "grid", "clock", "hjb", "physics", "geometry", "initial",
                  "output", "evac_threshold", "seed"});
    c.name = get_str(root, "config", "name", c.name);

    if (root.contains("grid")) {
        const json& g = root["grid"];
        require_keys(g, "grid", {"L", "M", "dx"});
        c.L = get_num(g, "grid", "L", c.L);
        if (g.contains("M") && g.contains("dx"))
            throw ConfigError("grid: specify either M or dx, not both");
        if (g.contains("M")) {
            c.M = static_cast<int>(get_int(g, "grid", "M", c.M));
            c.dx_request = 0.0;
        } else if (g.contains("dx")) {
            c.dx_request = get_num(g, "grid", "dx", 0.0);
            c.M = 0;
        }
    }
    if (root.contains("clock")) {
        const json& g = root["clock"];
        require_keys(g, "clock", {"dt", "T"});
        c.dt = get_num(g, "clock", "dt", c.dt);
        c.T = get_num(g, "clock", "T", c.T);
    }
    if (root.contains("hjb")) {
        const json& g = root["hjb"];
        require_keys(g, "hjb",
                     {"h", "n_theta", "n_rho", "rho_step", "wall_g", "ghost_value", "pi_tol",
                      "lin_tol", "pi_max_iters", "eval_sweep_cap"});
        c.h = get_num(g, "hjb", "h", c.h);
        c.n_theta = static_cast<int>(get_int(g, "hjb", "n_theta", c.n_theta));
        c.n_rho = static_cast<int>(get_int(g, "hjb", "n_rho", c.n_rho));
        c.rho_step = get_num(g, "hjb", "rho_step", c.rho_step);
        c.wall_g = get_num(g, "hjb", "wall_g", c.wall_g);
        c.ghost_value = get_num(g, "hjb", "ghost_value", c.ghost_value);
        c.pi_tol = get_num(g, "hjb", "pi_tol", c.pi_tol);
        c.lin_tol = get_num(g, "hjb", "lin_tol", c.lin_tol);
        c.pi_max_iters = static_cast<int>(get_int(g, "hjb", "pi_max_iters", c.pi_max_iters));
        c.eval_sweep_cap = get_int(g, "hjb", "eval_sweep_cap", c.eval_sweep_cap);
    }
    if (root.contains("physics")) {
        const json& g = root["physics"];
        require_keys(g, "physics", {"epsilon", "delta", "congestion"});
        c.epsilon = get_num(g, "physics", "epsilon", c.epsilon);
        c.delta = get_num(g, "physics", "delta", c.delta);
        if (g.contains("congestion")) {
            const json& f = g["congestion"];
            require_keys(f, "physics.congestion", {"type", "ell_default", "ell_patches"});
            const std::string type = get_str(f, "physics.congestion", "type", "linear");
            if (type == "linear") {
                c.env_cost = false;
                c.ell_patches.clear();
                c.ell_default = 1.0;
            } else if (type == "environmental") {
                c.env_cost = true;
                c.ell_default = get_num(f, "physics.congestion", "ell_default", 1.0);
                c.ell_patches.clear();
                if (f.contains("ell_patches")) {
                    for (std::size_t i = 0; i < f["ell_patches"].size(); ++i) {
                        const json& p = f["ell_patches"][i];
                        const std::string path =
                            "physics.congestion.ell_patches[" + std::to_string(i) + "]";
                        require_keys(p, path, {"rect", "value"});
                        EllPatch patch;
                        patch.rect = get_rect(p.at("rect"), path + ".rect");
                        patch.value = get_num(p, path, "value", 1.0);
                        c.ell_patches.push_back(patch);
                    }
                }
            } else {
                throw ConfigError("physics.congestion.type: must be 'linear' or 'environmental'");
            }
        }
    }
    if (root.contains("geometry")) {
        const json& g = root["geometry"];
        require_keys(g, "geometry", {"exits", "obstacles", "mask_file"});
        if (g.contains("exits")) {
            c.exits.clear();
            if (!g["exits"].is_array()) throw ConfigError("geometry.exits: expected an array");
            for (std::size_t i = 0; i < g["exits"].size(); ++i) {
                const json& e = g["exits"][i];
                const std::string path = "geometry.exits[" + std::to_string(i) + "]";
                require_keys(e, path, {"id", "side", "from", "to"});
                ExitConfig ec;
                ec.id = get_str(e, path, "id", "exit" + std::to_string(i));
                ec.side = get_str(e, path, "side", "");
                ec.from = get_num(e, path, "from", 0.0);
                ec.to = get_num(e, path, "to", 0.0);
                if (ec.side != "xmin" && ec.side != "xmax" && ec.side != "ymin" &&
                    ec.side != "ymax")
                    throw ConfigError(path + ".side: must be one of xmin, xmax, ymin, ymax");
                if (!(ec.from < ec.to)) throw ConfigError(path + ": 'from' must be below 'to'");
                c.exits.push_back(ec);
            }
        }
        if (g.contains("obstacles")) {
            c.obstacles.clear();
            if (!g["obstacles"].is_array())
                throw ConfigError("geometry.obstacles: expected an array");
            for (std::size_t i = 0; i < g["obstacles"].size(); ++i)
                c.obstacles.push_back(cfgdetail::get_rect(
                    g["obstacles"][i], "geometry.obstacles[" + std::to_string(i) + "]"));
        }
        c.mask_file = get_str(g, "geometry", "mask_file", c.mask_file);
    }
    if (root.contains("initial")) {
        const json& g = root["initial"];
        require_keys(g, "initial", {"rect", "density", "csv_file"});
        if (g.contains("rect")) c.init_rect = get_rect(g["rect"], "initial.rect");
        c.init_density = get_num(g, "initial", "density", c.init_density);
        c.init_csv = get_str(g, "initial", "csv_file", c.init_csv);
    }
    if (root.contains("output")) {
        const json& g = root["output"];
        require_keys(g, "output", {"snapshot_every", "formats"});
        c.snapshot_every = static_cast<int>(get_int(g, "output", "snapshot_every", c.snapshot_every));
        if (g.contains("formats")) {
            c.write_csv = false;
            c.write_pgm = false;
            for (const auto& f : g["formats"]) {
                const std::string s = f.get<std::string>();
                if (s == "csv")
                    c.write_csv = true;
                else if (s == "pgm")
                    c.write_pgm = true;
                else
                    throw ConfigError("output.formats: unknown format '" + s + "'");
            }
        }
    }
    c.evac_threshold = get_num(root, "config", "evac_threshold", c.evac_threshold);
    if (root.contains("seed")) c.seed = root["seed"].get<std::uint64_t>();

    // Validation of resolved values.
    if (c.L <= 0.0) throw ConfigError("grid.L: must be positive");
    if (c.M == 0 && c.dx_request <= 0.0) throw ConfigError("grid: provide M or a positive dx");
    if (c.M != 0 && c.M < 2) throw ConfigError("grid.M: must be at least 2");
    if (c.dt <= 0.0) throw ConfigError("clock.dt: must be positive");
    if (c.T < c.dt) throw ConfigError("clock.T: must cover at least one step");
    if (c.h <= 0.0) throw ConfigError("hjb.h: must be positive");
    if (c.n_theta < 1) throw ConfigError("hjb.n_theta: must be at least 1");
    if (c.n_rho < 0) throw ConfigError("hjb.n_rho: must be nonnegative");
    if (c.rho_step <= 0.0) throw ConfigError("hjb.rho_step: must be positive");
    if (c.wall_g <= 0.0) throw ConfigError("hjb.wall_g: must be positive");
    if (c.ghost_value <= c.wall_g) throw ConfigError("hjb.ghost_value: must exceed wall_g");
    if (c.epsilon < 0.0) throw ConfigError("physics.epsilon: must be nonnegative");
    if (c.delta <= 0.0) throw ConfigError("physics.delta: must be positive");
    if (c.ell_default < 1.0) throw ConfigError("physics.congestion.ell_default: must be >= 1");
    for (const auto& p : c.ell_patches)
        if (p.value < 1.0) throw ConfigError("physics.congestion.ell_patches: value must be >= 1");
    if (c.init_density < 0.0) throw ConfigError("initial.density: must be nonnegative");
    if (c.evac_threshold <= 0.0 || c.evac_threshold >= 1.0)
        throw ConfigError("evac_threshold: must lie in (0, 1)");
    if (c.snapshot_every < 0) throw ConfigError("output.snapshot_every: must be nonnegative");
    return c;
}

/// Serialize a resolved config; parse_config_json(config_json(c)) == c.
inline json config_json(const ScenarioConfig& c) {
    using cfgdetail::rect_json;
    json j;
    j["name"] = c.name;
    j["grid"]["L"] = c.L;
    if (c.M != 0)
        j["grid"]["M"] = c.M;
    else
        j["grid"]["dx"] = c.dx_request;
    j["clock"]["dt"] = c.dt;
    j["clock"]["T"] = c.T;
    json& h = j["hjb"];
    h["h"] = c.h;
    h["n_theta"] = c.n_theta;
    h["n_rho"] = c.n_rho;
    h["rho_step"] = c.rho_step;
    h["wall_g"] = c.wall_g;
    h["ghost_value"] = c.ghost_value;
    h["pi_tol"] = c.pi_tol;
    h["lin_tol"] = c.lin_tol;
    h["pi_max_iters"] = c.pi_max_iters;
    h["eval_sweep_cap"] = c.eval_sweep_cap;
    j["physics"]["epsilon"] = c.epsilon;
    j["physics"]["delta"] = c.delta;
    if (c.env_cost) {
        json f;
        f["type"] = "environmental";
        f["ell_default"] = c.ell_default;
        f["ell_patches"] = json::array();
        for (const auto& p : c.ell_patches)
            f["ell_patches"].push_back({{"rect", rect_json(p.rect)}, {"value", p.value}});
        j["physics"]["congestion"] = f;
    } else {
        j["physics"]["congestion"] = {{"type", "linear"}};
    }
    j["geometry"]["exits"] = json::array();
    for (const auto& e : c.exits)
        j["geometry"]["exits"].push_back(
            {{"id", e.id}, {"side", e.side}, {"from", e.from}, {"to", e.to}});
    j["geometry"]["obstacles"] = json::array();
    for (const auto& b : c.obstacles) j["geometry"]["obstacles"].push_back(rect_json(b));
    if (!c.mask_file.empty()) j["geometry"]["mask_file"] = c.mask_file;
    j["initial"]["rect"] = rect_json(c.init_rect);
    j["initial"]["density"] = c.init_density;
    if (!c.init_csv.empty()) j["initial"]["csv_file"] = c.init_csv;
    j["output"]["snapshot_every"] = c.snapshot_every;
    j["output"]["formats"] = json::array();
    if (c.write_csv) j["output"]["formats"].push_back("csv");
    if (c.write_pgm) j["output"]["formats"].push_back("pgm");
    j["evac_threshold"] = c.evac_threshold;
    j["seed"] = c.seed;
    return j;
}

/// Parse a config file; errors name the offending field path.
inline ScenarioConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    json root;
    try {
        in >> root;
    } catch (const json::exception& e) {
        throw ConfigError("config '" + path + "': " + e.what());
    }
    return parse_config_json(root);
}

/**
 * Apply a --set style override "dotted.path=value" onto a config JSON tree.
 * The path must already exist in the schema-resolved tree; the value is
 * coerced to the type of the field it replaces.
 */
inline void apply_override(json& root, const std::string& spec) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos)
        throw ConfigError("override '" + spec + "': expected key=value");
    const std::string path = spec.substr(0, eq);
    const std::string value = spec.substr(eq + 1);

    std::vector<std::string> parts;
    std::stringstream ss(path);
    std::string part;
    while (std::getline(ss, part, '.')) parts.push_back(part);
    if (parts.empty()) throw ConfigError("override '" + spec + "': empty key");

    json* node = &root;
    for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
        if (!node->is_object()) throw ConfigError("override key '" + path + "' not found");
        node = &(*node)[parts[i]];
    }
    if (!node->is_object() || !node->contains(parts.back()))
        throw ConfigError("override key '" + path + "' does not name a config field");
    json& leaf = (*node)[parts.back()];
    try {
        if (leaf.is_string())
            leaf = value;
        else if (leaf.is_boolean())
            leaf = (value == "true" || value == "1");
        else if (leaf.is_number_integer())
            leaf = std::stol(value);
        else if (leaf.is_number())
            leaf = std::stod(value);
        else
            leaf = json::parse(value);
    } catch (const std::exception&) {
        throw ConfigError("override '" + spec + "': cannot parse value");
    }
}

// ---------------------------------------------------------------------------
// Built-in scenarios
// ---------------------------------------------------------------------------

/// Square room, uniform crowd at the center, a wide door on the left wall and
/// a narrow one on the right.  The grid must place a node inside the narrow
/// right door, which restricts M to even values; M = 24 resolves the door
/// pair at 2:1 node width while keeping the published domain and density.
inline ScenarioConfig builtin_two_doors() {
    ScenarioConfig c;
    c.name = "two_doors";
    c.L = 1.0;
    c.M = 24;
    c.dt = 0.015;
    c.T = 20.0;
    c.h = 0.04;
    c.epsilon = 1e-3;
    c.delta = 1e-6;
    c.wall_g = 2.0;
    c.ghost_value = 2e5;
    c.exits = {{"left", "xmin", 0.13, 0.27}, {"right", "xmax", 0.49, 0.51}};
    c.init_rect = {{1.0 / 3.0, 1.0 / 3.0}, {2.0 / 3.0, 2.0 / 3.0}};
    c.init_density = 0.7;
    return c;
}

/**
 * Turnstile corridor: slats of half-height 0.02 spanning x in [0.4, 0.6],
 * stacked symmetrically about mid-height with center spacing c, clipped to
 * the square; a single exit on the right wall.  The discretization resolves
 * the slat thickness and keeps characteristic hops shorter than a slat, so
 * neither solver steps across a barrier unnoticed.
 */
inline ScenarioConfig builtin_turnstiles(double c_spacing) {
    if (c_spacing <= 0.0) throw ConfigError("turnstiles: spacing c must be positive");
    ScenarioConfig c;
    c.name = "turnstiles";
    c.L = 1.0;
    c.M = 50;
    c.dt = 0.08;
    c.T = 16.0;
    c.h = 0.005;
    c.epsilon = 1e-3;
    c.delta = 1e-6;
    c.wall_g = 2.0;
    c.ghost_value = 2e5;
    c.eval_sweep_cap = 400000;  // cold-start diffusion solves at small eps are slow
    c.exits = {{"exit", "xmax", 0.45, 0.55}};
    for (int s = -4; s <= 4; ++s) {
        const double yc = 0.5 + c_spacing * s;
        const double lo = std::max(yc - 0.02, 0.0);
        const double hi = std::min(yc + 0.02, 1.0);
        if (hi - lo > 1e-12) c.obstacles.push_back(Box<2>{{0.4, lo}, {0.6, hi}});
    }
    c.init_rect = {{0.15, 0.2}, {0.35, 0.8}};
    c.init_density = 0.7;
    return c;
}

// ---------------------------------------------------------------------------
// Mask files
// ---------------------------------------------------------------------------

/**
 * Load node classes from a mask file.
 *
 * Format (docs/formats.md): header "pedflow-mask v1", then "width W" and
 * "height H", then H rows of W characters, top row first:
 *   '.' interior, '#' wall, digits 0-9 exit ids, 'O' obstacle, 'G' ghost.
 * Ghost bands are derived around obstacle regions when the file does not
 * provide them.
 */
template <std::size_t D = 2>
ClassifiedGrid<2> load_mask(const GridSpec<2>& grid, const std::string& path, int ghost_layers,
                            const std::vector<std::string>& exit_names_hint = {}) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open mask file '" + path + "'");
    std::string magic, version;
    in >> magic >> version;
    if (magic != "pedflow-mask" || version != "v1")
        throw ConfigError("mask '" + path + "': not a pedflow-mask v1 file");
    std::string key;
    int width = 0, height = 0;
    in >> key >> width;
    if (key != "width") throw ConfigError("mask '" + path + "': expected 'width'");
    in >> key >> height;
    if (key != "height") throw ConfigError("mask '" + path + "': expected 'height'");
    const int side = grid.nodes_per_side();
    if (width != side || height != side)
        throw ConfigError("mask '" + path + "': dimensions " + std::to_string(width) + "x" +
                          std::to_string(height) + " do not match the (M+1)^2 grid of " +
                          std::to_string(side));

    ClassifiedGrid<2> cg(grid);
    cg.mask_mode = true;
    int max_exit = -1;
    std::string row;
    std::getline(in, row);  // consume end of header line
    for (int r = 0; r < height; ++r) {
        if (!std::getline(in, row) || static_cast<int>(row.size()) < width)
            throw ConfigError("mask '" + path + "': row " + std::to_string(r) + " too short");
        const int iy = side - 1 - r;  // top row first
        for (int ix = 0; ix < width; ++ix) {
            const std::size_t lin = grid.linear(NodeIndex<2>{ix, iy});
            const char ch = row[ix];
            switch (ch) {
                case '.': cg.type[lin] = NodeType::Interior; break;
                case '#': cg.type[lin] = NodeType::Wall; break;
                case 'O': cg.type[lin] = NodeType::Obstacle; break;
                case 'G': cg.type[lin] = NodeType::Ghost; break;
                default:
                    if (ch >= '0' && ch <= '9') {
                        cg.type[lin] = NodeType::Target;
                        cg.exit_id[lin] = static_cast<std::int16_t>(ch - '0');
                        max_exit = std::max(max_exit, ch - '0');
                    } else {
                        throw ConfigError("mask '" + path + "': unknown code '" +
                                          std::string(1, ch) + "' at row " + std::to_string(r));
                    }
            }
        }
    }

    // Boundary nodes must not be interior (the walk would step outside).
    for (std::size_t lin = 0; lin < grid.node_count(); ++lin)
        if (cg.type[lin] == NodeType::Interior && grid.on_boundary(grid.unlinear(lin)))
            throw ConfigError("mask '" + path + "': interior node on the domain boundary");

    for (int e = 0; e <= max_exit; ++e)
        cg.exit_names.push_back(e < static_cast<int>(exit_names_hint.size())
                                    ? exit_names_hint[e]
                                    : "exit" + std::to_string(e));

    // Derive the ghost band: obstacle nodes within ghost_layers (Chebyshev) of
    // a non-obstacle node become Ghost.
    std::vector<int> dist(grid.node_count(), -1);
    std::vector<std::size_t> frontier;
    for (std::size_t lin = 0; lin < grid.node_count(); ++lin) {
        const NodeType t = cg.type[lin];
        if (t != NodeType::Obstacle && t != NodeType::Ghost) {
            dist[lin] = 0;
            frontier.push_back(lin);
        }
    }
    int level = 0;
    while (!frontier.empty() && level < ghost_layers) {
        ++level;
        std::vector<std::size_t> next;
        for (std::size_t lin : frontier) {
            const NodeIndex<2> idx = grid.unlinear(lin);
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    if (dx == 0 && dy == 0) continue;
                    NodeIndex<2> n{idx[0] + dx, idx[1] + dy};
                    if (!grid.contains_index(n)) continue;
                    const std::size_t nl = grid.linear(n);
                    if (dist[nl] != -1) continue;
                    dist[nl] = level;
                    if (cg.type[nl] == NodeType::Obstacle) cg.type[nl] = NodeType::Ghost;
                    next.push_back(nl);
                }
            }
        }
        frontier = std::move(next);
    }
    return cg;
}

// ---------------------------------------------------------------------------
// Runtime assembly
// ---------------------------------------------------------------------------

inline ExitPatch<2> exit_patch_from_config(const ExitConfig& e, double L) {
    ExitPatch<2> p;
    p.id = e.id;
    if (e.side == "xmin" || e.side == "xmax") {
        p.axis = 0;
        p.coord = (e.side == "xmin") ? 0.0 : L;
        p.outward_sign = (e.side == "xmin") ? -1 : +1;
        p.span_lo = {0.0, e.from};
        p.span_hi = {0.0, e.to};
    } else {
        p.axis = 1;
        p.coord = (e.side == "ymin") ? 0.0 : L;
        p.outward_sign = (e.side == "ymin") ? -1 : +1;
        p.span_lo = {e.from, 0.0};
        p.span_hi = {e.to, 0.0};
    }
    return p;
}

/// Everything a run needs, resolved from a ScenarioConfig.
struct ScenarioRuntime {
    GridSpec<2> grid;
    SimulationClock clock;
    ClassifiedGrid<2> cg;
    CongestionSpec<2> f_spec;
    RunParams<2> params;
    DensityField<2> m0;
    ScenarioConfig resolved;  // config with M and T rounding applied
    std::vector<std::string> warnings;
};

inline std::string join_path(const std::string& base, const std::string& rel) {
    if (rel.empty() || rel.front() == '/' || base.empty()) return rel;
    return base + "/" + rel;
}

/**
 * Resolve a config into runtime objects: grid (rounding a requested dx to the
 * nearest whole cell count with a warning), clock, classified geometry with
 * the ghost band sized by the characteristic reach, congestion field, and the
 * initial density.  Relative file paths resolve against base_dir.
 */
inline ScenarioRuntime build_scenario(ScenarioConfig cfg, const std::string& base_dir = "") {
    std::vector<std::string> warnings;

    int M = cfg.M;
    if (M == 0) {
        M = GridSpec<2>::round_cells(cfg.L, cfg.dx_request);
        const double dx = cfg.L / M;
        if (std::abs(dx - cfg.dx_request) > 1e-12)
            warnings.push_back("grid: requested dx " + std::to_string(cfg.dx_request) +
                               " rounded to " + std::to_string(dx) + " (M = " + std::to_string(M) +
                               ")");
        cfg.M = M;
        cfg.dx_request = 0.0;
    }
    GridSpec<2> grid(cfg.L, M);
    SimulationClock clock(cfg.dt, cfg.T);
    if (clock.horizon_adjusted()) {
        warnings.push_back("clock: horizon rounded to " + std::to_string(clock.horizon()) + " (" +
                           std::to_string(clock.steps()) + " steps)");
        cfg.T = clock.horizon();
    }

    const double alpha_max = cfg.rho_step * cfg.n_rho;
    const int layers = ghost_band_layers(grid.dx(), cfg.dt, cfg.h, cfg.epsilon, alpha_max, 2);

    ClassifiedGrid<2> cg(grid);
    if (!cfg.mask_file.empty()) {
        std::vector<std::string> names;
        for (const auto& e : cfg.exits) names.push_back(e.id);
        cg = load_mask(grid, join_path(base_dir, cfg.mask_file), layers, names);
    } else {
        SceneGeometry<2> scene;
        for (const auto& e : cfg.exits) scene.exits.push_back(exit_patch_from_config(e, cfg.L));
        scene.obstacles = cfg.obstacles;
        cg = classify_nodes(grid, scene, layers, &warnings);
    }

    CongestionSpec<2> f_spec;
    f_spec.environmental = cfg.env_cost;
    if (cfg.env_cost) {
        f_spec.ell.assign(grid.node_count(), cfg.ell_default);
        for (const auto& patch : cfg.ell_patches)
            for (std::size_t lin = 0; lin < grid.node_count(); ++lin)
                if (patch.rect.contains(grid.position(lin))) f_spec.ell[lin] = patch.value;
    }

    RunParams<2> params;
    params.dt = cfg.dt;
    params.h = cfg.h;
    params.eps = cfg.epsilon;
    params.delta = cfg.delta;
    params.evac_threshold = cfg.evac_threshold;
    params.wall_g = cfg.wall_g;
    params.ghost_value = cfg.ghost_value;
    params.n_theta = cfg.n_theta;
    params.n_rho = cfg.n_rho;
    params.rho_step = cfg.rho_step;
    params.hjb.lin_tol = cfg.lin_tol;
    params.hjb.pi_tol = cfg.pi_tol;
    params.hjb.pi_max_iters = cfg.pi_max_iters;
    params.hjb.eval_sweep_cap = cfg.eval_sweep_cap;

    DensityField<2> m0(grid);
    if (!cfg.init_csv.empty()) {
        m0 = init_density_values(cg, read_density_csv(grid, join_path(base_dir, cfg.init_csv)));
    } else if (cfg.init_density > 0.0) {
        m0 = init_density(cg, InitialRectDensity<2>{cfg.init_rect, cfg.init_density});
    }

    return ScenarioRuntime{std::move(grid), clock,         std::move(cg), std::move(f_spec),
                           params,          std::move(m0), std::move(cfg), std::move(warnings)};
}

}  // namespace pedflow
