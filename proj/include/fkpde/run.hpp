#pragma once

#include <iosfwd>
#include <string>

#include "fkpde/config.hpp"
#include "fkpde/problem.hpp"

namespace fkpde {

/// Process exit codes. GateFailed is a completed run whose difference exceeded the gate.
enum ExitCode : int {
    kExitPass = 0,
    kExitGateFailed = 1,
    kExitConfig = 2,
    kExitBlowUp = 3,
    kExitNonConvergence = 4,
    kExitInternal = 5,
};

/// Catalog problem for the config; "kpz" yields the transformed problem.
ProblemSpec problem_from_config(const RunConfig& cfg);

/// solve-mc, solve-fd, compare, diagnose or kpz. Creates cfg.output_dir, writes reports there,
/// logs progress to `log`. Never throws.
int run_verb(const std::string& verb, const RunConfig& cfg, std::ostream& log);

}  // namespace fkpde
