#include "ifp/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include "ifp/csv.hpp"
#include "ifp/special.hpp"

namespace ifp {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t");
    return s.substr(a, b - a + 1);
}

using KeyMap = std::map<std::string, std::string>; // "section.key" -> value

KeyMap parse_ini(const std::string& text) {
    KeyMap out;
    std::istringstream in(text);
    std::string line, section;
    long row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::string s = trim(line);
        if (s.empty() || s[0] == '#' || s[0] == ';') continue;
        if (s.front() == '[') {
            if (s.back() != ']')
                throw SolverError(Errc::config_error,
                                  "bad section header at line " + std::to_string(row));
            section = trim(s.substr(1, s.size() - 2));
            continue;
        }
        auto eq = s.find('=');
        if (eq == std::string::npos)
            throw SolverError(Errc::config_error,
                              "expected key = value at line " + std::to_string(row));
        std::string key = trim(s.substr(0, eq));
        std::string val = trim(s.substr(eq + 1));
        if (section.empty() || key.empty())
            throw SolverError(Errc::config_error,
                              "key outside a section at line " + std::to_string(row));
        out[section + "." + key] = val;
    }
    return out;
}

double to_double(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        double d = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw SolverError(Errc::config_error, "bad number for " + key + ": '" + v + "'");
    }
}

std::vector<double> to_list(const std::string& key, const std::string& v) {
    std::vector<double> out;
    if (trim(v).empty()) return out;
    std::stringstream ss(v);
    std::string tok;
    while (std::getline(ss, tok, ','))
        out.push_back(to_double(key, trim(tok)));
    return out;
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw SolverError(Errc::config_error, "bad boolean for " + key + ": '" + v + "'");
}

std::string list_str(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ",";
        s += io::fmt(v[i]);
    }
    return s;
}

// single registry drives parse, unknown-key rejection and the echo
struct Entry {
    const char* key;
    std::function<void(RunConfig&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

const std::vector<Entry>& registry() {
    static const std::vector<Entry> reg = {
        {"process.kind",
         [](RunConfig& c, const std::string& v) { c.process_kind = v; },
         [](const RunConfig& c) { return c.process_kind; }},
        {"process.mu",
         [](RunConfig& c, const std::string& v) { c.mu = to_double("process.mu", v); },
         [](const RunConfig& c) { return io::fmt(c.mu); }},
        {"process.sigma",
         [](RunConfig& c, const std::string& v) { c.sigma = to_double("process.sigma", v); },
         [](const RunConfig& c) { return io::fmt(c.sigma); }},
        {"process.ou_rate",
         [](RunConfig& c, const std::string& v) { c.ou_rate = to_double("process.ou_rate", v); },
         [](const RunConfig& c) { return io::fmt(c.ou_rate); }},
        {"process.ou_level",
         [](RunConfig& c, const std::string& v) { c.ou_level = to_double("process.ou_level", v); },
         [](const RunConfig& c) { return io::fmt(c.ou_level); }},
        {"process.ou_sigma",
         [](RunConfig& c, const std::string& v) { c.ou_sigma = to_double("process.ou_sigma", v); },
         [](const RunConfig& c) { return io::fmt(c.ou_sigma); }},
        {"process.tab_x",
         [](RunConfig& c, const std::string& v) { c.tab_x = to_list("process.tab_x", v); },
         [](const RunConfig& c) { return list_str(c.tab_x); }},
        {"process.tab_mu",
         [](RunConfig& c, const std::string& v) { c.tab_mu = to_list("process.tab_mu", v); },
         [](const RunConfig& c) { return list_str(c.tab_mu); }},
        {"process.tab_sigma",
         [](RunConfig& c, const std::string& v) { c.tab_sigma = to_list("process.tab_sigma", v); },
         [](const RunConfig& c) { return list_str(c.tab_sigma); }},
        {"process.x_lo",
         [](RunConfig& c, const std::string& v) { c.x_lo_hint = to_double("process.x_lo", v); },
         [](const RunConfig& c) { return io::fmt(c.x_lo_hint); }},
        {"process.x_hi",
         [](RunConfig& c, const std::string& v) { c.x_hi_hint = to_double("process.x_hi", v); },
         [](const RunConfig& c) { return io::fmt(c.x_hi_hint); }},

        {"density.kind",
         [](RunConfig& c, const std::string& v) { c.density_kind = v; },
         [](const RunConfig& c) { return c.density_kind; }},
        {"density.x0",
         [](RunConfig& c, const std::string& v) { c.density_x0 = to_double("density.x0", v); },
         [](const RunConfig& c) { return io::fmt(c.density_x0); }},
        {"density.rate",
         [](RunConfig& c, const std::string& v) { c.density_rate = to_double("density.rate", v); },
         [](const RunConfig& c) { return io::fmt(c.density_rate); }},
        {"density.mean",
         [](RunConfig& c, const std::string& v) { c.density_mean = to_double("density.mean", v); },
         [](const RunConfig& c) { return io::fmt(c.density_mean); }},
        {"density.sd",
         [](RunConfig& c, const std::string& v) { c.density_sd = to_double("density.sd", v); },
         [](const RunConfig& c) { return io::fmt(c.density_sd); }},
        {"density.knots",
         [](RunConfig& c, const std::string& v) { c.density_knots = to_list("density.knots", v); },
         [](const RunConfig& c) { return list_str(c.density_knots); }},
        {"density.values",
         [](RunConfig& c, const std::string& v) { c.density_values = to_list("density.values", v); },
         [](const RunConfig& c) { return list_str(c.density_values); }},

        {"grid.x_min",
         [](RunConfig& c, const std::string& v) {
             if (v == "auto") c.grid_x_min.reset();
             else c.grid_x_min = to_double("grid.x_min", v);
         },
         [](const RunConfig& c) { return c.grid_x_min ? io::fmt(*c.grid_x_min) : "auto"; }},
        {"grid.x_max",
         [](RunConfig& c, const std::string& v) {
             if (v == "auto") c.grid_x_max.reset();
             else c.grid_x_max = to_double("grid.x_max", v);
         },
         [](const RunConfig& c) { return c.grid_x_max ? io::fmt(*c.grid_x_max) : "auto"; }},
        {"grid.nx",
         [](RunConfig& c, const std::string& v) { c.nx = int(to_double("grid.nx", v)); },
         [](const RunConfig& c) { return std::to_string(c.nx); }},
        {"grid.t0",
         [](RunConfig& c, const std::string& v) {
             if (v == "auto") c.grid_t0.reset();
             else c.grid_t0 = to_double("grid.t0", v);
         },
         [](const RunConfig& c) { return c.grid_t0 ? io::fmt(*c.grid_t0) : "auto"; }},
        {"grid.t_end",
         [](RunConfig& c, const std::string& v) { c.t_end = to_double("grid.t_end", v); },
         [](const RunConfig& c) { return io::fmt(c.t_end); }},
        {"grid.nt",
         [](RunConfig& c, const std::string& v) { c.nt = int(to_double("grid.nt", v)); },
         [](const RunConfig& c) { return std::to_string(c.nt); }},

        {"inverse.eps0",
         [](RunConfig& c, const std::string& v) { c.eps0 = to_double("inverse.eps0", v); },
         [](const RunConfig& c) { return io::fmt(c.eps0); }},
        {"inverse.eps_ratio",
         [](RunConfig& c, const std::string& v) { c.eps_ratio = to_double("inverse.eps_ratio", v); },
         [](const RunConfig& c) { return io::fmt(c.eps_ratio); }},
        {"inverse.eps_min",
         [](RunConfig& c, const std::string& v) { c.eps_min = to_double("inverse.eps_min", v); },
         [](const RunConfig& c) { return io::fmt(c.eps_min); }},
        {"inverse.newton_tol",
         [](RunConfig& c, const std::string& v) { c.newton_tol = to_double("inverse.newton_tol", v); },
         [](const RunConfig& c) { return io::fmt(c.newton_tol); }},
        {"inverse.max_newton",
         [](RunConfig& c, const std::string& v) { c.max_newton = int(to_double("inverse.max_newton", v)); },
         [](const RunConfig& c) { return std::to_string(c.max_newton); }},
        {"inverse.cont_tol",
         [](RunConfig& c, const std::string& v) { c.cont_tol = to_double("inverse.cont_tol", v); },
         [](const RunConfig& c) { return io::fmt(c.cont_tol); }},
        {"inverse.theta",
         [](RunConfig& c, const std::string& v) {
             if (v == "auto") c.theta.reset();
             else c.theta = to_double("inverse.theta", v);
         },
         [](const RunConfig& c) { return c.theta ? io::fmt(*c.theta) : "auto"; }},

        {"forward.method",
         [](RunConfig& c, const std::string& v) { c.forward_method = v; },
         [](const RunConfig& c) { return c.forward_method; }},
        {"forward.barrier_csv",
         [](RunConfig& c, const std::string& v) { c.barrier_csv = v; },
         [](const RunConfig& c) { return c.barrier_csv; }},
        {"forward.store_field",
         [](RunConfig& c, const std::string& v) { c.store_field = to_bool("forward.store_field", v); },
         [](const RunConfig& c) { return c.store_field ? "true" : "false"; }},

        {"mc.n_paths",
         [](RunConfig& c, const std::string& v) { c.n_paths = long(to_double("mc.n_paths", v)); },
         [](const RunConfig& c) { return std::to_string(c.n_paths); }},
        {"mc.n_steps",
         [](RunConfig& c, const std::string& v) { c.n_steps = int(to_double("mc.n_steps", v)); },
         [](const RunConfig& c) { return std::to_string(c.n_steps); }},
        {"mc.chunk",
         [](RunConfig& c, const std::string& v) { c.chunk = int(to_double("mc.chunk", v)); },
         [](const RunConfig& c) { return std::to_string(c.chunk); }},
        {"mc.threads",
         [](RunConfig& c, const std::string& v) { c.threads = int(to_double("mc.threads", v)); },
         [](const RunConfig& c) { return std::to_string(c.threads); }},

        {"hodograph.enabled",
         [](RunConfig& c, const std::string& v) { c.hodograph_enabled = to_bool("hodograph.enabled", v); },
         [](const RunConfig& c) { return c.hodograph_enabled ? "true" : "false"; }},
        {"hodograph.z_eps",
         [](RunConfig& c, const std::string& v) {
             if (v == "auto") c.z_eps.reset();
             else c.z_eps = to_double("hodograph.z_eps", v);
         },
         [](const RunConfig& c) { return c.z_eps ? io::fmt(*c.z_eps) : "auto"; }},
        {"hodograph.nz",
         [](RunConfig& c, const std::string& v) { c.nz = int(to_double("hodograph.nz", v)); },
         [](const RunConfig& c) { return std::to_string(c.nz); }},
        {"hodograph.h_values",
         [](RunConfig& c, const std::string& v) { c.h_values = to_list("hodograph.h_values", v); },
         [](const RunConfig& c) { return list_str(c.h_values); }},
        {"hodograph.window_lo",
         [](RunConfig& c, const std::string& v) { c.hod_window_lo = to_double("hodograph.window_lo", v); },
         [](const RunConfig& c) { return io::fmt(c.hod_window_lo); }},
        {"hodograph.window_hi",
         [](RunConfig& c, const std::string& v) {
             if (v == "auto") c.hod_window_hi.reset();
             else c.hod_window_hi = to_double("hodograph.window_hi", v);
         },
         [](const RunConfig& c) { return c.hod_window_hi ? io::fmt(*c.hod_window_hi) : "auto"; }},

        {"diagnostics.window_lo",
         [](RunConfig& c, const std::string& v) { c.diag_window_lo = to_double("diagnostics.window_lo", v); },
         [](const RunConfig& c) { return io::fmt(c.diag_window_lo); }},
        {"diagnostics.tol_roundtrip",
         [](RunConfig& c, const std::string& v) { c.tol_roundtrip = to_double("diagnostics.tol_roundtrip", v); },
         [](const RunConfig& c) { return io::fmt(c.tol_roundtrip); }},
        {"diagnostics.tol_fb_median",
         [](RunConfig& c, const std::string& v) { c.tol_fb_median = to_double("diagnostics.tol_fb_median", v); },
         [](const RunConfig& c) { return io::fmt(c.tol_fb_median); }},
        {"diagnostics.tol_holder",
         [](RunConfig& c, const std::string& v) { c.tol_holder = to_double("diagnostics.tol_holder", v); },
         [](const RunConfig& c) { return io::fmt(c.tol_holder); }},
        {"diagnostics.run_mc",
         [](RunConfig& c, const std::string& v) { c.run_mc = to_bool("diagnostics.run_mc", v); },
         [](const RunConfig& c) { return c.run_mc ? "true" : "false"; }},

        {"io.survival_csv",
         [](RunConfig& c, const std::string& v) { c.survival_csv = v; },
         [](const RunConfig& c) { return c.survival_csv; }},

        {"output.dir",
         [](RunConfig& c, const std::string& v) { c.output_dir = v; },
         [](const RunConfig& c) { return c.output_dir; }},

        {"run.seed",
         [](RunConfig& c, const std::string& v) { c.seed = std::uint64_t(to_double("run.seed", v)); },
         [](const RunConfig& c) { return std::to_string(c.seed); }},
    };
    return reg;
}

} // namespace

RunConfig RunConfig::parse_text(const std::string& text,
                                const std::vector<std::string>& overrides,
                                const std::filesystem::path& base) {
    KeyMap raw = parse_ini(text);
    for (const auto& ov : overrides) {
        auto eq = ov.find('=');
        if (eq == std::string::npos)
            throw SolverError(Errc::config_error, "override must be section.key=value: " + ov);
        raw[trim(ov.substr(0, eq))] = trim(ov.substr(eq + 1));
    }

    RunConfig cfg;
    cfg.base_dir = base;
    std::map<std::string, bool> seen;
    for (auto& [k, v] : raw) seen[k] = false;
    for (const auto& e : registry()) {
        auto it = raw.find(e.key);
        if (it != raw.end()) {
            e.set(cfg, it->second);
            seen[e.key] = true;
        }
    }
    for (auto& [k, used] : seen)
        if (!used)
            throw SolverError(Errc::config_error, "unknown config key: " + k);
    return cfg;
}

RunConfig RunConfig::parse_file(const std::filesystem::path& path,
                                const std::vector<std::string>& overrides) {
    std::ifstream in(path);
    if (!in)
        throw SolverError(Errc::config_error, "cannot open config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_text(ss.str(), overrides, path.parent_path());
}

std::string RunConfig::canonical() const {
    std::string out;
    std::string section;
    for (const auto& e : registry()) {
        std::string key = e.key;
        auto dot = key.find('.');
        std::string sec = key.substr(0, dot);
        if (sec != section) {
            if (!out.empty()) out += "\n";
            out += "[" + sec + "]\n";
            section = sec;
        }
        out += key.substr(dot + 1) + " = " + e.get(*this) + "\n";
    }
    return out;
}

std::string RunConfig::hash() const {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(canonical())));
    return buf;
}

} // namespace ifp
