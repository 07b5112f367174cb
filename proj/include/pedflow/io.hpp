#pragma once

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "pedflow/coupling.hpp"
#include "pedflow/grid.hpp"

namespace pedflow {

namespace iodetail {

inline std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline void must_open(const std::ofstream& f, const std::string& path) {
    if (!f) throw ConfigError("cannot write '" + path + "'");
}

}  // namespace iodetail

/**
 * Node values as CSV: header "x,y,value", then one row per node in row-major
 * order (x fastest), 17 significant digits.
 */
inline void write_density_csv(const GridSpec<2>& grid, const std::vector<double>& values,
                              const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    iodetail::must_open(out, path);
    out << "x,y,value\n";
    const int side = grid.nodes_per_side();
    for (int iy = 0; iy < side; ++iy) {
        for (int ix = 0; ix < side; ++ix) {
            const std::size_t lin = grid.linear(NodeIndex<2>{ix, iy});
            const Vec<2> x = grid.position(NodeIndex<2>{ix, iy});
            out << iodetail::fmt17(x[0]) << ',' << iodetail::fmt17(x[1]) << ','
                << iodetail::fmt17(values[lin]) << '\n';
        }
    }
}

/// Read a density CSV produced by write_density_csv back into node values.
inline std::vector<double> read_density_csv(const GridSpec<2>& grid, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open csv file '" + path + "'");
    std::string line;
    if (!std::getline(in, line) || line.rfind("x,y,value", 0) != 0)
        throw ConfigError("csv '" + path + "': missing x,y,value header");
    std::vector<double> values(grid.node_count(), 0.0);
    const int side = grid.nodes_per_side();
    for (int iy = 0; iy < side; ++iy) {
        for (int ix = 0; ix < side; ++ix) {
            if (!std::getline(in, line))
                throw ConfigError("csv '" + path + "': unexpected end of file");
            const auto c1 = line.find(',');
            const auto c2 = line.find(',', c1 + 1);
            if (c1 == std::string::npos || c2 == std::string::npos)
                throw ConfigError("csv '" + path + "': malformed row");
            values[grid.linear(NodeIndex<2>{ix, iy})] = std::stod(line.substr(c2 + 1));
        }
    }
    return values;
}

/**
 * Binary PGM (P5), 16-bit big-endian.  Values map linearly from
 * [0, max(field maximum, 1)] onto [0, 65535]; image rows run top-to-bottom,
 * i.e. the first row is the y = L node line.
 */
inline void write_pgm(const GridSpec<2>& grid, const std::vector<double>& values,
                      const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    iodetail::must_open(out, path);
    double vmax = 1.0;
    for (double v : values) vmax = std::max(vmax, v);
    const int side = grid.nodes_per_side();
    out << "P5\n" << side << " " << side << "\n65535\n";
    for (int iy = side - 1; iy >= 0; --iy) {
        for (int ix = 0; ix < side; ++ix) {
            const double v = values[grid.linear(NodeIndex<2>{ix, iy})];
            const double scaled = std::min(std::max(v / vmax, 0.0), 1.0) * 65535.0;
            const std::uint16_t q = static_cast<std::uint16_t>(scaled + 0.5);
            out.put(static_cast<char>(q >> 8));
            out.put(static_cast<char>(q & 0xff));
        }
    }
}

/// Flat "key = value" metrics text; round-trips through parse_metrics.
inline void write_metrics(const Metrics& m, const std::map<std::string, std::string>& extra,
                          const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    iodetail::must_open(out, path);
    using iodetail::fmt17;
    out << "evacuated = " << (m.evacuated ? 1 : 0) << "\n";
    out << "evac_step = " << m.evac_step << "\n";
    out << "evac_time = " << fmt17(m.evac_time) << "\n";
    out << "evac_threshold = " << fmt17(m.evac_threshold) << "\n";
    out << "initial_mass = " << fmt17(m.initial_mass) << "\n";
    out << "final_mass = " << fmt17(m.final_mass) << "\n";
    out << "max_density = " << fmt17(m.max_density) << "\n";
    out << "worst_budget_error = " << fmt17(m.worst_budget_error) << "\n";
    out << "steps_run = " << m.steps_run << "\n";
    out << "hjb_iterations_total = " << m.hjb_iterations_total << "\n";
    out << "hjb_iterations_max = " << m.hjb_iterations_max << "\n";
    out << "hjb_sweeps_total = " << m.hjb_sweeps_total << "\n";
    out << "saturated_nodes_max = " << m.saturated_nodes_max << "\n";
    out << "fold_fraction_max = " << fmt17(m.fold_fraction_max) << "\n";
    for (std::size_t e = 0; e < m.exit_names.size(); ++e) {
        out << "exit_mass." << m.exit_names[e] << " = " << fmt17(m.exit_mass[e]) << "\n";
        out << "exit_percent." << m.exit_names[e] << " = " << fmt17(m.exit_percent[e]) << "\n";
    }
    for (const auto& [k, v] : extra) out << k << " = " << v << "\n";
}

inline std::map<std::string, std::string> parse_metrics(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open metrics file '" + path + "'");
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto eq = line.find(" = ");
        if (eq == std::string::npos) throw ConfigError("metrics '" + path + "': malformed line");
        kv[line.substr(0, eq)] = line.substr(eq + 3);
    }
    return kv;
}

/// Deterministic run log: no timestamps, content depends on the run only.
class RunLog {
public:
    void to_file(const std::string& path) {
        file_.open(path, std::ios::binary);
        if (!file_) throw ConfigError("cannot write log '" + path + "'");
    }
    void echo_stdout(bool on) { echo_ = on; }

    void line(const std::string& s) {
        if (file_.is_open()) file_ << s << "\n";
        if (echo_) std::fputs((s + "\n").c_str(), stdout);
    }

private:
    std::ofstream file_;
    bool echo_ = false;
};

}  // namespace pedflow
