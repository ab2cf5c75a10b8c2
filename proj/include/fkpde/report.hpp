#pragma once

#include <string>
#include <utility>
#include <vector>

#include "fkpde/config.hpp"
#include "fkpde/fixed_point.hpp"

namespace fkpde {

/// Shortest round-trip decimal, dot separator regardless of locale.
std::string fmt(double v);

/// Rows are written verbatim, comma separated, "\n" line ends.
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

/// One row per (slice, node, component): slice, t, x[, y[, z]], c, value[, stderr].
/// `stderr_values` follows the series layout or is empty.
void write_field_csv(const std::string& path, const GridSeries& u, const std::vector<double>& stderr_values = {});

/// gnuplot blocks: one per slice, separated by two blank lines.
void write_dat(const std::string& path, const GridSeries& u);

struct ErrorRow {
    int slice = 0;
    double t = 0.0;
    double sup_diff = 0.0;
    double l2_diff = 0.0;
    double mc_max_stderr = 0.0;
    double fd_max_abs = 0.0;
};

struct ErrorTable {
    std::vector<ErrorRow> rows;
    double sup_diff = 0.0;  ///< over all slices
    double fd_max_abs = 0.0;
    double rel_sup() const { return fd_max_abs > 0.0 ? sup_diff / fd_max_abs : sup_diff; }
};

/// Slice-by-slice comparison; both series must share times (to 1e-12) and lattice.
ErrorTable compare_series(const GridSeries& mc, const std::vector<double>& mc_stderr, const GridSeries& fd);
void write_error_table(const std::string& path, const ErrorTable& e);

/// iteration, distance, ratio, field_sup, particle_sup, max_stderr, k_bound. Outer solves
/// add one block per frozen problem, keyed by the outer index.
void write_diagnostics(const std::string& path, const PicardState& s);

/// Config echo followed by `# key = value` notes. No timestamps.
void write_manifest(const std::string& path, const std::string& verb, const RunConfig& cfg,
                    const std::vector<std::pair<std::string, std::string>>& notes);

void write_timings(const std::string& path, const std::vector<std::pair<std::string, double>>& entries);

/// Build identifier recorded in manifests.
std::string build_id();

}  // namespace fkpde
