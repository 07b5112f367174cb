// pedflow command line: run scenarios, sweep parameters, validate the solver.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "pedflow/pedflow.hpp"
#include "pedflow/validate.hpp"

namespace fs = std::filesystem;
using namespace pedflow;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

json load_config_tree(const std::string& scenario, const std::string& config_path,
                      std::string* base_dir) {
    if (!config_path.empty()) {
        std::ifstream in(config_path);
        if (!in) throw ConfigError("cannot open config file '" + config_path + "'");
        json tree;
        try {
            in >> tree;
        } catch (const json::exception& e) {
            throw ConfigError("config '" + config_path + "': " + e.what());
        }
        *base_dir = fs::path(config_path).parent_path().string();
        return tree;
    }
    if (scenario.empty()) throw ConfigError("provide --scenario or --config");
    *base_dir = "";
    return config_json(builtin_scenario(scenario));
}

std::map<std::string, std::string> config_echo(const json& j, const std::string& prefix = "config") {
    std::map<std::string, std::string> out;
    for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string key = prefix + "." + it.key();
        if (it->is_object()) {
            auto sub = config_echo(*it, key);
            out.insert(sub.begin(), sub.end());
        } else {
            out[key] = it->is_string() ? it->get<std::string>() : it->dump();
        }
    }
    return out;
}

struct RunOutput {
    Metrics metrics;
    json resolved;
};

RunOutput execute_run(const json& tree, const std::string& base_dir, const fs::path& out_dir,
                      bool quiet = false) {
    const ScenarioConfig cfg = parse_config_json(tree);
    ScenarioRuntime rt = build_scenario(cfg, base_dir);

    fs::create_directories(out_dir);
    RunLog log;
    log.to_file((out_dir / "run.log").string());
    log.echo_stdout(!quiet);

    const json resolved = config_json(rt.resolved);
    {
        std::ofstream cfg_out(out_dir / "resolved_config.json", std::ios::binary);
        cfg_out << resolved.dump(2) << "\n";
    }
    log.line("scenario " + rt.resolved.name);
    log.line("grid: L = " + std::to_string(rt.resolved.L) + ", M = " + std::to_string(rt.resolved.M) +
             ", dx = " + std::to_string(rt.grid.dx()));
    log.line("clock: dt = " + std::to_string(rt.resolved.dt) + ", T = " + std::to_string(rt.clock.horizon()) +
             " (" + std::to_string(rt.clock.steps()) + " steps)");
    for (const auto& [k, v] : config_echo(resolved)) log.line(k + " = " + v);
    for (const auto& w : rt.warnings) log.line("warning: " + w);

    const int cadence = rt.resolved.snapshot_every;
    fs::path snap_dir = out_dir / "snapshots";
    if (cadence > 0) fs::create_directories(snap_dir);

    HughesSim<2> sim(rt.cg, rt.f_spec, rt.params, rt.m0);
    auto observer = [&](int step, const HughesSim<2>& s) {
        if (cadence <= 0 || step % cadence != 0) return;
        char name[64];
        std::snprintf(name, sizeof(name), "density_%06d", step);
        if (rt.resolved.write_csv)
            write_density_csv(rt.grid, s.density().values,
                              (snap_dir / (std::string(name) + ".csv")).string());
        if (rt.resolved.write_pgm)
            write_pgm(rt.grid, s.density().values,
                      (snap_dir / (std::string(name) + ".pgm")).string());
    };
    auto on_step = [&](int step, const StepDiagnostics& d) {
        if (d.saturated_nodes > 0)
            log.line("step " + std::to_string(step) + ": argmin saturated at the control bound on " +
                     std::to_string(d.saturated_nodes) + " nodes");
    };

    Metrics metrics = sim.run(rt.clock, observer, on_step);

    auto echo = config_echo(resolved);
    write_metrics(metrics, echo, (out_dir / "metrics.txt").string());
    if (rt.resolved.write_csv)
        write_density_csv(rt.grid, sim.density().values, (out_dir / "density_final.csv").string());
    if (rt.resolved.write_pgm)
        write_pgm(rt.grid, sim.density().values, (out_dir / "density_final.pgm").string());

    log.line(metrics.evacuated
                 ? "evacuated at step " + std::to_string(metrics.evac_step) + ", t = " +
                       std::to_string(metrics.evac_time)
                 : "horizon reached with remaining mass " + std::to_string(metrics.final_mass));
    for (std::size_t e = 0; e < metrics.exit_names.size(); ++e)
        log.line("exit " + metrics.exit_names[e] + ": " + std::to_string(metrics.exit_percent[e]) +
                 "% (" + std::to_string(metrics.exit_mass[e]) + " mass)");
    log.line("max density " + std::to_string(metrics.max_density));
    return RunOutput{std::move(metrics), resolved};
}

int cmd_run(const std::string& scenario, const std::string& config_path,
            const std::vector<std::string>& overrides, const std::string& out) {
    std::string base_dir;
    json tree = load_config_tree(scenario, config_path, &base_dir);
    for (const auto& o : overrides) apply_override(tree, o);
    execute_run(tree, base_dir, fs::path(out));
    return kExitOk;
}

int cmd_sweep(const std::string& scenario, const std::string& config_path,
              const std::string& parameter, const std::vector<std::string>& values,
              const std::vector<std::string>& overrides, const std::string& out) {
    if (values.empty()) throw ConfigError("sweep: provide at least one value");
    std::string base_dir;
    const fs::path out_dir(out);
    fs::create_directories(out_dir);

    std::ofstream table(out_dir / "sweep.csv", std::ios::binary);
    if (!table) throw ConfigError("cannot write sweep table");
    bool header_written = false;

    for (const auto& value : values) {
        json tree;
        if (parameter == "c") {
            // turnstile spacing: rebuild the builtin geometry per value
            if (value == "none" || value == "0") {
                auto cfg = builtin_turnstiles(0.1);
                cfg.obstacles.clear();
                cfg.name = "turnstiles_none";
                tree = config_json(cfg);
            } else {
                tree = config_json(builtin_turnstiles(std::stod(value)));
            }
        } else {
            tree = load_config_tree(scenario, config_path, &base_dir);
            std::string param = parameter;
            if (param == "epsilon") param = "physics.epsilon";
            if (param == "M0") param = "initial.density";
            apply_override(tree, param + "=" + value);
        }
        for (const auto& o : overrides) apply_override(tree, o);

        const fs::path run_dir = out_dir / (parameter + "_" + value);
        std::printf("sweep %s = %s\n", parameter.c_str(), value.c_str());
        const RunOutput run = execute_run(tree, base_dir, run_dir, /*quiet=*/true);

        if (!header_written) {
            table << "value,evacuated,evac_time,evac_step,max_density";
            for (const auto& name : run.metrics.exit_names) table << ",percent_" << name;
            table << "\n";
            header_written = true;
        }
        table << value << ',' << (run.metrics.evacuated ? 1 : 0) << ','
              << iodetail::fmt17(run.metrics.evac_time) << ',' << run.metrics.evac_step << ','
              << iodetail::fmt17(run.metrics.max_density);
        for (double p : run.metrics.exit_percent) table << ',' << iodetail::fmt17(p);
        table << "\n";
        table.flush();
        std::printf("  evac_time = %.4f, evacuated = %d\n", run.metrics.evac_time,
                    run.metrics.evacuated ? 1 : 0);
    }
    std::printf("table written to %s\n", (out_dir / "sweep.csv").string().c_str());
    return kExitOk;
}

int cmd_validate(const std::string& level, const std::string& out) {
    const ValidationReport rep = validate(level);
    for (const auto& c : rep.checks)
        std::printf("[%s] %s: %s\n", c.passed ? "pass" : "FAIL", c.name.c_str(),
                    c.detail.c_str());
    for (const auto& o : rep.oracles)
        std::printf("oracle %s: observed order %.3f (expected %.1f)\n", o.name.c_str(),
                    o.observed_order, o.expected_order);
    if (!out.empty()) {
        fs::create_directories(out);
        std::ofstream f(fs::path(out) / "validation.txt", std::ios::binary);
        for (const auto& c : rep.checks)
            f << c.name << " = " << (c.passed ? 1 : 0) << "\n" << c.name << ".detail = " << c.detail
              << "\n";
        for (const auto& o : rep.oracles) f << o.to_text();
    }
    std::printf("%s\n", rep.all_passed() ? "validation passed" : "validation FAILED");
    return rep.all_passed() ? kExitOk : kExitRuntime;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"pedflow: semi-Lagrangian solver for the regularized Hughes crowd model"};
    app.require_subcommand(1);

    std::string scenario, config_path, out_dir = "out", parameter, level = "fast";
    std::vector<std::string> overrides, values;

    auto* run = app.add_subcommand("run", "run one scenario");
    run->add_option("--scenario", scenario, "builtin scenario name");
    run->add_option("--config", config_path, "scenario config file (JSON)");
    run->add_option("--set", overrides, "override config fields, dotted.path=value")
        ->take_all();
    run->add_option("--out", out_dir, "output directory");

    auto* sweep = app.add_subcommand("sweep", "run a parameter sweep");
    sweep->add_option("--scenario", scenario, "builtin scenario name");
    sweep->add_option("--config", config_path, "scenario config file (JSON)");
    sweep->add_option("--param", parameter, "parameter: epsilon, c, M0, or a dotted path")
        ->required();
    sweep->add_option("--values", values, "comma separated values")->required()->delimiter(',');
    sweep->add_option("--set", overrides, "extra overrides applied to every run")->take_all();
    sweep->add_option("--out", out_dir, "output directory");

    auto* val = app.add_subcommand("validate", "run the validation oracles");
    val->add_option("--level", level, "fast or full");
    val->add_option("--out", out_dir, "optional report directory");

    auto* scenarios = app.add_subcommand("scenarios", "list builtin scenarios");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        std::fflush(stdout);
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*run) return cmd_run(scenario, config_path, overrides, out_dir);
        if (*sweep) return cmd_sweep(scenario, config_path, parameter, values, overrides, out_dir);
        if (*val) return cmd_validate(level, val->count("--out") > 0 ? out_dir : "");
        if (*scenarios) {
            for (const auto& name : builtin_scenario_names()) std::printf("%s\n", name.c_str());
            return kExitOk;
        }
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitUsage;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitRuntime;
    }
    return kExitUsage;
}
