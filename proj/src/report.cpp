#include "fkpde/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "fkpde/kernels.hpp"

#ifndef FKPDE_VERSION
#define FKPDE_VERSION "dev"
#endif

namespace fkpde {

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + path);
    return f;
}

void put_row(std::ostream& os, const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) os << ',';
        os << cells[i];
    }
    os << '\n';
}

}  // namespace

std::string fmt(double v) {
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
    auto f = open_out(path);
    put_row(f, header);
    for (const auto& r : rows) put_row(f, r);
}

void write_field_csv(const std::string& path, const GridSeries& u, const std::vector<double>& se) {
    const int d = u.lattice.dim;
    const std::size_t n = u.nodes();
    std::vector<std::string> header = {"slice", "t"};
    const char* axes[] = {"x", "y", "z"};
    for (int a = 0; a < d; ++a) header.push_back(axes[a]);
    header.push_back("c");
    header.push_back("value");
    if (!se.empty()) header.push_back("stderr");
    auto f = open_out(path);
    put_row(f, header);
    std::vector<std::string> row;
    for (std::size_t s = 0; s < u.times.size(); ++s)
        for (std::size_t node = 0; node < n; ++node)
            for (int c = 0; c < u.m; ++c) {
                row.assign({std::to_string(s), fmt(u.times[s])});
                for (int a = 0; a < d; ++a) row.push_back(fmt(u.lattice.coord(node, a)));
                row.push_back(std::to_string(c));
                const std::size_t q = (s * n + node) * u.m + c;
                row.push_back(fmt(u.values[q]));
                if (!se.empty()) row.push_back(fmt(se[q]));
                put_row(f, row);
            }
}

void write_dat(const std::string& path, const GridSeries& u) {
    const int d = u.lattice.dim;
    const std::size_t n = u.nodes();
    auto f = open_out(path);
    for (std::size_t s = 0; s < u.times.size(); ++s) {
        if (s) f << "\n\n";
        f << "# t = " << fmt(u.times[s]) << "\n";
        for (std::size_t node = 0; node < n; ++node) {
            for (int a = 0; a < d; ++a) f << fmt(u.lattice.coord(node, a)) << ' ';
            for (int c = 0; c < u.m; ++c) f << (c ? " " : "") << fmt(u.at(s, node, c));
            f << '\n';
        }
    }
}

ErrorTable compare_series(const GridSeries& mc, const std::vector<double>& se, const GridSeries& fd) {
    if (mc.times.size() != fd.times.size() || !(mc.lattice == fd.lattice) || mc.m != fd.m)
        throw std::runtime_error("compare_series: series shapes differ");
    ErrorTable e;
    const std::size_t n = mc.nodes();
    const std::size_t per = n * mc.m;
    for (std::size_t s = 0; s < mc.times.size(); ++s) {
        if (std::abs(mc.times[s] - fd.times[s]) > 1e-12) throw std::runtime_error("compare_series: slice times differ");
        ErrorRow r;
        r.slice = static_cast<int>(s);
        r.t = fd.times[s];
        double sq = 0.0;
        for (std::size_t q = s * per; q < (s + 1) * per; ++q) {
            const double diff = std::abs(mc.values[q] - fd.values[q]);
            r.sup_diff = std::max(r.sup_diff, diff);
            sq += diff * diff;
            r.fd_max_abs = std::max(r.fd_max_abs, std::abs(fd.values[q]));
            if (!se.empty()) r.mc_max_stderr = std::max(r.mc_max_stderr, se[q]);
        }
        // L2 over the unit torus: the lattice cell volume is 1/n
        r.l2_diff = std::sqrt(sq / static_cast<double>(n));
        e.sup_diff = std::max(e.sup_diff, r.sup_diff);
        e.fd_max_abs = std::max(e.fd_max_abs, r.fd_max_abs);
        e.rows.push_back(r);
    }
    return e;
}

void write_error_table(const std::string& path, const ErrorTable& e) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& r : e.rows)
        rows.push_back({std::to_string(r.slice), fmt(r.t), fmt(r.sup_diff), fmt(r.l2_diff),
                        fmt(r.fd_max_abs > 0.0 ? r.sup_diff / r.fd_max_abs : r.sup_diff), fmt(r.mc_max_stderr),
                        fmt(r.fd_max_abs)});
    write_csv(path, {"slice", "t", "sup_diff", "l2_diff", "rel_sup_diff", "mc_max_stderr", "fd_max_abs"}, rows);
}

void write_diagnostics(const std::string& path, const PicardState& s) {
    std::vector<std::vector<std::string>> rows;
    auto emit = [&rows](const PicardState& st, int outer) {
        for (std::size_t i = 0; i < st.field_sup.size(); ++i) {
            // distance_history[i-1] compares iterate i with iterate i-1
            const std::string dist = i >= 1 && i - 1 < st.distance_history.size() ? fmt(st.distance_history[i - 1]) : "";
            const std::string ratio =
                i >= 2 && i - 2 < st.contraction_ratios.size() ? fmt(st.contraction_ratios[i - 2]) : "";
            rows.push_back({std::to_string(outer), std::to_string(i), dist, ratio, fmt(st.field_sup[i]),
                            fmt(st.particle_sup[i]), fmt(st.max_stderr[i]), fmt(st.k_bound)});
        }
    };
    if (s.inner.empty()) {
        emit(s, 0);
    } else {
        for (std::size_t k = 0; k < s.inner.size(); ++k) emit(s.inner[k], static_cast<int>(k));
    }
    write_csv(path, {"outer", "iteration", "distance", "ratio", "field_sup", "particle_sup", "max_stderr", "k_bound"},
              rows);
}

std::string build_id() {
    std::ostringstream os;
    os << "fkpde " << FKPDE_VERSION << " / " << __VERSION__ << " / kernels " << kernels::active().name;
    return os.str();
}

void write_manifest(const std::string& path, const std::string& verb, const RunConfig& cfg,
                    const std::vector<std::pair<std::string, std::string>>& notes) {
    auto f = open_out(path);
    f << "# build = " << build_id() << "\n";
    f << "# verb = " << verb << "\n";
    f << "# rerun: fkpde " << verb << " --config manifest.txt\n";
    f << echo_config(cfg);
    if (!notes.empty()) f << "\n";
    for (const auto& [k, v] : notes) f << "# " << k << " = " << v << "\n";
}

void write_timings(const std::string& path, const std::vector<std::pair<std::string, double>>& entries) {
    auto f = open_out(path);
    for (const auto& [k, v] : entries) f << k << " " << fmt(v) << "\n";
}

}  // namespace fkpde
