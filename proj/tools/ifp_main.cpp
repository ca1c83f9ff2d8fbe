#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ifp/pipeline.hpp"

int main(int argc, char** argv) {
    CLI::App app{"inverse first-passage solver suite"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> overrides;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("-c,--config", config_path, "run configuration (INI)")->required();
        sub->add_option("-s,--set", overrides,
                        "override a config entry, section.key=value (repeatable)");
    };

    const char* commands[] = {"forward", "inverse", "hodograph", "diagnose", "verify"};
    const char* blurbs[] = {
        "survival probability of a given barrier (PDE and/or Monte Carlo)",
        "barrier calibration from a survival curve",
        "level-set and quasilinear consistency run on the calibrated barrier",
        "full round trip with residual and regularity diagnostics",
        "diagnose with pass/fail gating on every tolerance",
    };
    for (int i = 0; i < 5; ++i)
        add_common(app.add_subcommand(commands[i], blurbs[i]));

    CLI11_PARSE(app, argc, argv);

    std::string cmd = app.get_subcommands().front()->get_name();
    return ifp::run_command(cmd, config_path, overrides, std::cerr);
}
