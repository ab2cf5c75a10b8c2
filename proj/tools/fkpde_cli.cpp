// fkpde: command-line front end. See README for verbs and config keys.
#include <cstdint>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "fkpde/config.hpp"
#include "fkpde/run.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Monte Carlo Feynman-Kac solver for semilinear parabolic PDEs, with a finite-difference oracle"};
    app.require_subcommand(1);

    std::string config_path;
    std::uint64_t seed = 0;
    std::size_t particles = 0;
    std::string out_dir;
    double gate = 0.0;

    const char* verbs[][2] = {{"solve-mc", "Picard / Feynman-Kac Monte Carlo solve"},
                              {"solve-fd", "finite-difference reference solve"},
                              {"compare", "both solvers plus an error table; exit 0 iff within the gate"},
                              {"diagnose", "probe the standing assumptions on the lattice"},
                              {"kpz", "exponential-transform solve of the KPZ-type system"}};
    for (auto& v : verbs) {
        CLI::App* sub = app.add_subcommand(v[0], v[1]);
        sub->add_option("--config", config_path, "config file")->required();
        sub->add_option("--seed", seed, "override the config seed");
        sub->add_option("--out-dir", out_dir, "output directory");
        sub->add_option("--particles", particles, "particles per node")->check(CLI::PositiveNumber);
        sub->add_option("--gate", gate, "compare gate in percent")->check(CLI::PositiveNumber);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : fkpde::kExitConfig;
    }

    const CLI::App* sub = app.get_subcommands().front();
    fkpde::ConfigOverrides ov;
    if (sub->count("--seed")) ov.seed = seed;
    if (sub->count("--particles")) ov.particles = particles;
    if (sub->count("--out-dir")) ov.output_dir = out_dir;
    if (sub->count("--gate")) ov.gate_pct = gate;

    fkpde::RunConfig cfg;
    try {
        cfg = fkpde::load_config(config_path, ov);
    } catch (const fkpde::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return fkpde::kExitConfig;
    }
    return fkpde::run_verb(sub->get_name(), cfg, std::cerr);
}
