#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fkpde/catalog.hpp"
#include "fkpde/fd_oracle.hpp"
#include "fkpde/feynman_kac.hpp"

namespace fkpde {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Everything a run needs. load_config fills every field, so the manifest echo is complete.
struct RunConfig {
    std::string problem = "heat";
    CatalogOptions coefficients;

    int nodes = 64;
    int n_steps = 200;
    int slices = 21;

    std::size_t particles = 10000;
    std::size_t block = 64;
    int workers = 1;
    bool common_nodes = true;
    std::optional<std::uint64_t> seed;
    GradientMode gradient_mode = GradientMode::GridDifference;

    double lambda = -1.0;  ///< < 0: 4/T
    double tol = 1e-3;
    int max_iter = 25;

    std::optional<double> truncation_level;
    double alpha_threshold = 0.1;

    FdScheme fd_scheme = FdScheme::ExplicitRk4;
    double fd_dt = 0.0;
    double fd_cfl = 0.4;

    std::string kpz_backend = "both";  ///< mc | fd | both

    double gate_pct = 5.0;
    std::string output_dir = "out";
    bool write_dat = false;

    SolverConfig solver() const;
    FdOptions fd_options() const;
};

/// Command-line overrides, applied before validation.
struct ConfigOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> particles;
    std::optional<std::string> output_dir;
    std::optional<double> gate_pct;
};

/// `key = value` lines, `#` comments, `[section]` headers and/or dotted keys.
/// `source` names the input in error messages.
RunConfig parse_config(const std::string& text, const std::string& source = "<config>",
                       const ConfigOverrides& ov = {});
RunConfig load_config(const std::string& path, const ConfigOverrides& ov = {});

/// Canonical `key = value` echo of every field; parse_config(echo) round-trips.
std::string echo_config(const RunConfig& cfg);

/// Recognized keys in echo order.
std::vector<std::string> config_keys();

}  // namespace fkpde
