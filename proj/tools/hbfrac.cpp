#include "hbfrac/cli.hpp"
#include "hbfrac/errors.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

int main(int argc, char** argv) {
    CLI::App app{"hbfrac: degenerate diffusion with a hyper-Bessel time derivative"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> extra;
    const std::vector<std::string> names{"beta", "alpha", "theta", "a", "T", "modes", "out", "format", "oracle", "tol"};

    std::map<std::string, std::string> values;
    for (const char* name : {"eigen", "solve", "verify", "convergence"}) {
        CLI::App* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "flat key = value file");
        for (const auto& n : names) sub->add_option("--" + n, values[n]);
        sub->add_option("--set", extra, "KEY=VALUE override, repeatable");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : hbfrac::cli::usage;
    }

    hbfrac::cli::RunConfig cfg;
    try {
        if (!config_path.empty()) cfg = hbfrac::cli::load_config(config_path);
        for (const auto& kv : extra) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos) throw hbfrac::ConfigError("--set expects KEY=VALUE");
            hbfrac::cli::set_key(cfg, kv.substr(0, eq), kv.substr(eq + 1));
        }
        for (const auto& n : names) {
            if (app.get_subcommands().front()->count("--" + n)) hbfrac::cli::set_key(cfg, n, values[n]);
        }
    } catch (const hbfrac::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return hbfrac::cli::usage;
    }
    return hbfrac::cli::run(app.get_subcommands().front()->get_name(), cfg, std::cout, std::cerr);
}
