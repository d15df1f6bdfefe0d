#pragma once

#include <fstream>
#include <map>
#include <sstream>

#include "minlag/common.hpp"

namespace minlag {

/// Run description assembled from a `[section] / key = value` config file
/// plus command-line overrides.
struct RunConfig {
    std::string command;  // analyze | construct | classify | export | roundtrip
    double x0 = -1.0, x1 = 1.0, y0 = -1.0, y1 = 1.0;
    int nx = 61, ny = 61;
    std::string catalog;        // catalog entry name
    std::string potential_file; // JSON potential (construct/roundtrip)
    int lambda_samples = 8;
    std::string chart = "graph_theta";  // export chart
    std::string out_dir = "out";
    unsigned long seed = 1;
    int threads = 1;
    // tolerance overrides
    double complex_point = default_tol().complex_point;
    double tail_budget = default_tol().tail_budget;
    double classifier = default_tol().classifier;
    int loop_N = default_tol().loop_trunc;

    Tolerances tolerances() const {
        Tolerances t = default_tol();
        t.complex_point = complex_point;
        t.tail_budget = tail_budget;
        t.classifier = classifier;
        t.loop_trunc = loop_N;
        return t;
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    size_t b = s.find_last_not_of(" \t\r");
    return (a == std::string::npos) ? "" : s.substr(a, b - a + 1);
}

}  // namespace detail

/// Parse `key = value` lines with `[section]` headers. Unknown keys and
/// malformed lines raise ConfigError with the line number.
inline std::map<std::string, std::string> parse_ini(std::istream& in) {
    std::map<std::string, std::string> kv;
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string t = detail::trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[') {
            if (t.back() != ']')
                throw ConfigError("line " + std::to_string(lineno) + ": unterminated section");
            section = detail::trim(t.substr(1, t.size() - 2));
            continue;
        }
        size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        std::string key = detail::trim(t.substr(0, eq));
        std::string val = detail::trim(t.substr(eq + 1));
        if (key.empty())
            throw ConfigError("line " + std::to_string(lineno) + ": empty key");
        kv[section.empty() ? key : section + "." + key] = val;
    }
    return kv;
}

inline void apply_kv(RunConfig& cfg, const std::string& rawkey, const std::string& val) {
    // Accept both plain and section-qualified keys.
    std::string key = rawkey;
    size_t dot = key.rfind('.');
    if (dot != std::string::npos) key = key.substr(dot + 1);

    auto as_double = [&](double& dst) {
        try {
            size_t used = 0;
            dst = std::stod(val, &used);
            if (used != val.size()) throw std::invalid_argument(val);
        } catch (...) {
            throw ConfigError("bad numeric value for " + rawkey + ": " + val);
        }
    };
    auto as_int = [&](int& dst) {
        try {
            size_t used = 0;
            dst = std::stoi(val, &used);
            if (used != val.size()) throw std::invalid_argument(val);
        } catch (...) {
            throw ConfigError("bad integer value for " + rawkey + ": " + val);
        }
    };

    if (key == "command") cfg.command = val;
    else if (key == "x0") as_double(cfg.x0);
    else if (key == "x1") as_double(cfg.x1);
    else if (key == "y0") as_double(cfg.y0);
    else if (key == "y1") as_double(cfg.y1);
    else if (key == "nx") as_int(cfg.nx);
    else if (key == "ny") as_int(cfg.ny);
    else if (key == "catalog") cfg.catalog = val;
    else if (key == "potential") cfg.potential_file = val;
    else if (key == "lambda_samples") as_int(cfg.lambda_samples);
    else if (key == "chart") cfg.chart = val;
    else if (key == "out") cfg.out_dir = val;
    else if (key == "seed") {
        try {
            cfg.seed = std::stoul(val);
        } catch (...) {
            throw ConfigError("bad integer value for " + rawkey + ": " + val);
        }
    }
    else if (key == "threads") as_int(cfg.threads);
    else if (key == "complex_point") as_double(cfg.complex_point);
    else if (key == "tail_budget") as_double(cfg.tail_budget);
    else if (key == "classifier") as_double(cfg.classifier);
    else if (key == "loop_N") as_int(cfg.loop_N);
    else throw ConfigError("unknown key: " + rawkey);
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    RunConfig cfg;
    for (auto& [k, v] : parse_ini(in)) apply_kv(cfg, k, v);
    return cfg;
}

inline void validate_config(const RunConfig& cfg) {
    static const char* commands[] = {"analyze", "construct", "classify", "export",
                                     "roundtrip"};
    bool known = false;
    for (auto* c : commands) known = known || cfg.command == c;
    if (!known) throw ConfigError("unknown command: " + cfg.command);
    if (cfg.nx < 5 || cfg.ny < 5) throw ConfigError("resolution must be >= 5");
    if (cfg.lambda_samples < 1) throw ConfigError("lambda_samples must be >= 1");
    if (cfg.catalog.empty() && cfg.potential_file.empty())
        throw ConfigError("need a catalog entry or a potential file");
}

}  // namespace minlag
