// Batch front end: catalog analysis, DPW construction, classification,
// exports and round-trip reports.
//
//   minlag <command> [--config FILE] [--out DIR] [--threads N] [--seed N]
//                    [key=value ...]
//
// Commands: analyze, construct, classify, export, roundtrip.
// Inline key=value pairs override config-file entries (e.g. `nx=101`,
// `catalog=clifford`). Exit codes: 0 success, 2 config error, 3 numerical
// failure.

#include <cstring>
#include <iostream>

#include "minlag/runner.hpp"

namespace {

void usage() {
    std::cout <<
        "usage: minlag <analyze|construct|classify|export|roundtrip>\n"
        "              [--config FILE] [--out DIR] [--threads N] [--seed N]\n"
        "              [key=value ...]\n"
        "\n"
        "keys: x0 x1 y0 y1 nx ny catalog potential lambda_samples chart out\n"
        "      seed threads complex_point tail_budget classifier loop_N\n"
        "\n"
        "catalog entries:\n";
    for (const auto& e : minlag::catalog::entries())
        std::cout << "  " << e.name << " - " << e.description << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    using namespace minlag;
    if (argc < 2 || !std::strcmp(argv[1], "--help") || !std::strcmp(argv[1], "-h")) {
        usage();
        return argc < 2 ? 2 : 0;
    }

    RunConfig cfg;
    try {
        cfg.command = argv[1];
        // A --config file loads first so that inline pairs override it.
        for (int i = 2; i < argc; ++i) {
            if (!std::strcmp(argv[i], "--config")) {
                if (i + 1 >= argc) throw ConfigError("--config needs a path");
                std::string cmd = cfg.command;
                cfg = load_config(argv[++i]);
                if (!cmd.empty()) cfg.command = cmd;
            }
        }
        for (int i = 2; i < argc; ++i) {
            std::string arg = argv[i];
            if (arg == "--config") {
                ++i;
            } else if (arg == "--out") {
                if (i + 1 >= argc) throw ConfigError("--out needs a directory");
                cfg.out_dir = argv[++i];
            } else if (arg == "--threads") {
                if (i + 1 >= argc) throw ConfigError("--threads needs a count");
                apply_kv(cfg, "threads", argv[++i]);
            } else if (arg == "--seed") {
                if (i + 1 >= argc) throw ConfigError("--seed needs a value");
                apply_kv(cfg, "seed", argv[++i]);
            } else {
                size_t eq = arg.find('=');
                if (eq == std::string::npos)
                    throw ConfigError("expected key=value, got: " + arg);
                apply_kv(cfg, arg.substr(0, eq), arg.substr(eq + 1));
            }
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    }
    return run(cfg);
}
