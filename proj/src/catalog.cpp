#include "fkpde/catalog.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <numbers>
#include <sstream>

#include "fkpde/kernels.hpp"

namespace fkpde {

namespace {

thread_local std::vector<double> tl_u, tl_s, tl_c;

void sincos_of(std::span<const double> u, std::size_t n) {
    if (tl_s.size() < n) {
        tl_s.resize(n);
        tl_c.resize(n);
    }
    kernels::active().sincos2pi(u.data(), n, tl_s.data(), tl_c.data());
}

void scaled_axis(const Points& x, int axis, double freq, std::size_t n) {
    if (tl_u.size() < n) tl_u.resize(n);
    const auto ax = x.axis(axis);
    for (std::size_t i = 0; i < n; ++i) tl_u[i] = ax[i] * freq;
    sincos_of(tl_u, n);
}

MatrixCoef isotropic(int d, double diffusion) {
    return [d, diffusion](double, const Points& x, std::span<double> out) {
        const std::size_t n = x.count;
        std::fill(out.begin(), out.end(), 0.0);
        for (int i = 0; i < d; ++i) std::fill_n(out.begin() + (i * d + i) * n, n, diffusion);
    };
}

InitialCoef sine_initial(int m, double amp, int mode) {
    return [m, amp, mode](const Points& x, std::span<double> out) {
        const std::size_t n = x.count;
        sin2pi_axis(x, 0, mode, amp, out.subspan(0, n));
        for (int j = 1; j < m; ++j) std::copy_n(out.begin(), n, out.begin() + j * n);
    };
}

ScalarCoef cosine_scalar(double amp) {
    return [amp](double, const Points& x, std::span<double> out) { cos2pi_axis(x, 0, 1.0, amp, out); };
}

SourceCoef cosine_source(int m, double amp) {
    return [m, amp](double, const Points& x, std::span<const double>, std::span<const double>,
                    std::span<const double>, std::span<double> out) {
        const std::size_t n = x.count;
        cos2pi_axis(x, 0, 1.0, amp, out.subspan(0, n));
        for (int j = 1; j < m; ++j) std::copy_n(out.begin(), n, out.begin() + j * n);
    };
}

ProblemSpec heat_base(const CatalogOptions& o, const std::string& name) {
    ProblemSpec s;
    s.name = name;
    s.dim_d = o.d;
    s.dim_m = 1;
    s.horizon_T = o.T;
    s.diffusion_a = isotropic(o.d, o.diffusion);
    s.diffusion_constant = true;
    s.initial_u0 = sine_initial(1, o.amplitude, o.mode);
    return s;
}

void apply_tabulated(ProblemSpec& s, const CatalogOptions& o) {
    if (!o.V_csv.empty()) {
        auto f = std::make_shared<TabulatedField>(TabulatedField::from_csv(o.V_csv, s.dim_d));
        s.potential_V = [f](double, const Points& x, std::span<double> out) { f->evaluate(x, out); };
    }
    if (!o.g_csv.empty()) {
        if (s.dim_m != 1) throw InvalidInput("tabulated g needs m = 1");
        auto f = std::make_shared<TabulatedField>(TabulatedField::from_csv(o.g_csv, s.dim_d));
        s.source_g = [f](double, const Points& x, std::span<const double>, std::span<const double>,
                         std::span<const double>, std::span<double> out) { f->evaluate(x, out); };
        s.g_spatial_only = true;
    }
    if (!o.u0_csv.empty()) {
        if (s.dim_m != 1) throw InvalidInput("tabulated u0 needs m = 1");
        auto f = std::make_shared<TabulatedField>(TabulatedField::from_csv(o.u0_csv, s.dim_d));
        s.initial_u0 = [f](const Points& x, std::span<double> out) { f->evaluate(x, out); };
    }
}

}  // namespace

void cos2pi_axis(const Points& x, int axis, double freq, double amp, std::span<double> out) {
    const std::size_t n = x.count;
    scaled_axis(x, axis, freq, n);
    for (std::size_t i = 0; i < n; ++i) out[i] = amp * tl_c[i];
}

void sin2pi_axis(const Points& x, int axis, double freq, double amp, std::span<double> out) {
    const std::size_t n = x.count;
    scaled_axis(x, axis, freq, n);
    for (std::size_t i = 0; i < n; ++i) out[i] = amp * tl_s[i];
}

void sin_batch(std::span<const double> r, double amp, std::span<double> out) {
    const std::size_t n = r.size();
    if (tl_u.size() < n) tl_u.resize(n);
    constexpr double inv2pi = 1.0 / (2.0 * std::numbers::pi);
    for (std::size_t i = 0; i < n; ++i) tl_u[i] = r[i] * inv2pi;
    sincos_of(tl_u, n);
    for (std::size_t i = 0; i < n; ++i) out[i] = amp * tl_s[i];
}

std::vector<std::string> catalog_names() {
    return {"heat", "constant-potential", "nonlinear-test", "outer-test", "navier-stokes", "factored-F",
            "blowup-demo"};
}

ProblemSpec make_problem(const std::string& name, const CatalogOptions& o) {
    if (o.d < 1 || o.d > 3) throw InvalidInput("problem.d must be 1..3");
    if (!(o.T > 0.0)) throw InvalidInput("problem.T must be positive");
    if (!(o.diffusion > 0.0)) throw InvalidInput("problem.diffusion must be positive");
    ProblemSpec s;
    const int d = o.d;
    if (name == "heat") {
        s = heat_base(o, name);
    } else if (name == "constant-potential") {
        s = heat_base(o, name);
        const double c = o.potential;
        s.potential_V = [c](double, const Points& x, std::span<double> out) {
            std::fill_n(out.begin(), x.count, c);
        };
    } else if (name == "nonlinear-test") {
        // F = F_amp sin(r1) e_0, V = V_amp cos(2 pi x_0), g = g_amp cos(2 pi x_0)
        s = heat_base(o, name);
        const double fa = o.F_amp;
        s.nonlinearity_F = [fa, d](double, const Points& x, std::span<const double> r1, std::span<const double>,
                                   std::span<double> out) {
            const std::size_t n = x.count;
            sin_batch(r1.subspan(0, n), fa, out.subspan(0, n));
            std::fill(out.begin() + n, out.begin() + d * n, 0.0);
        };
        s.potential_V = cosine_scalar(o.V_amp);
        s.source_g = cosine_source(1, o.g_amp);
    } else if (name == "outer-test") {
        // g = g_amp cos(2 pi x_0) + alpha tr(r3)
        s = heat_base(o, name);
        const double ga = o.g_amp, al = o.alpha;
        s.source_g = [ga, al, d](double, const Points& x, std::span<const double>, std::span<const double>,
                                 std::span<const double> r3, std::span<double> out) {
            const std::size_t n = x.count;
            cos2pi_axis(x, 0, 1.0, ga, out.subspan(0, n));
            if (r3.empty()) return;
            for (int i = 0; i < d; ++i) {
                const auto r = r3.subspan(static_cast<std::size_t>(i * d + i) * n, n);
                for (std::size_t p = 0; p < n; ++p) out[p] = out[p] + al * r[p];
            }
        };
        s.g_spatial_only = false;
    } else if (name == "navier-stokes") {
        // Vector field u in R^d transported by itself: F(r1) = -F_amp r1, forced by g = g_amp cos(2 pi x_0).
        s = heat_base(o, name);
        s.dim_m = d;
        s.initial_u0 = sine_initial(d, o.amplitude, o.mode);
        const double fa = o.F_amp;
        s.nonlinearity_F = [fa, d](double, const Points& x, std::span<const double> r1, std::span<const double>,
                                   std::span<double> out) {
            const std::size_t n = x.count;
            for (std::size_t q = 0; q < static_cast<std::size_t>(d) * n; ++q) out[q] = -fa * r1[q];
        };
        s.source_g = cosine_source(d, o.g_amp);
    } else if (name == "factored-F") {
        // F = cos(2 pi x_0) * F_amp * r1^2 e_0
        s = heat_base(o, name);
        const double fa = o.F_amp;
        s.nonlinearity_F = [fa, d](double, const Points& x, std::span<const double> r1, std::span<const double>,
                                   std::span<double> out) {
            const std::size_t n = x.count;
            cos2pi_axis(x, 0, 1.0, 1.0, out.subspan(0, n));
            for (std::size_t p = 0; p < n; ++p) out[p] = out[p] * (fa * (r1[p] * r1[p]));
            std::fill(out.begin() + n, out.begin() + d * n, 0.0);
        };
    } else if (name == "blowup-demo") {
        // Steep Burgers-type transport F = F_amp r1 e_0; meant to be run with a small truncation level.
        s = heat_base(o, name);
        const double fa = o.F_amp;
        s.nonlinearity_F = [fa, d](double, const Points& x, std::span<const double> r1, std::span<const double>,
                                   std::span<double> out) {
            const std::size_t n = x.count;
            for (std::size_t p = 0; p < n; ++p) out[p] = fa * r1[p];
            std::fill(out.begin() + n, out.begin() + d * n, 0.0);
        };
    } else {
        throw InvalidInput("unknown problem '" + name + "'");
    }
    apply_tabulated(s, o);
    return s;
}

TabulatedField::TabulatedField(Lattice lat, std::vector<double> values) : lat_(lat), values_(std::move(values)) {
    if (values_.size() != lat_.size()) throw InvalidInput("tabulated field size mismatch");
}

TabulatedField TabulatedField::from_csv(const std::string& path, int d) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open tabulated field '" + path + "'");
    std::vector<std::vector<double>> rows;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        bool numeric = true;
        while (std::getline(ss, cell, ',')) {
            try {
                std::size_t used = 0;
                row.push_back(std::stod(cell, &used));
            } catch (const std::exception&) {
                numeric = false;
                break;
            }
        }
        if (!numeric) {
            if (rows.empty()) continue;  // header
            throw InvalidInput(path + ":" + std::to_string(lineno) + ": non-numeric row");
        }
        if (static_cast<int>(row.size()) != d + 1)
            throw InvalidInput(path + ":" + std::to_string(lineno) + ": expected " + std::to_string(d + 1) +
                               " columns");
        rows.push_back(std::move(row));
    }
    const int per_axis = static_cast<int>(std::lround(std::pow(static_cast<double>(rows.size()), 1.0 / d)));
    Lattice lat(d, std::max(per_axis, 1));
    if (lat.size() != rows.size()) throw InvalidInput(path + ": rows do not form a regular lattice");
    std::vector<double> values(rows.size(), 0.0);
    std::vector<char> seen(rows.size(), 0);
    for (const auto& r : rows) {
        std::array<int, 3> idx{0, 0, 0};
        for (int a = 0; a < d; ++a) {
            const double p = r[a] * per_axis;
            idx[a] = static_cast<int>(std::lround(p));
            if (std::abs(p - idx[a]) > 1e-6 || idx[a] < 0 || idx[a] >= per_axis)
                throw InvalidInput(path + ": coordinate off the lattice");
        }
        const auto node = lat.linear(idx);
        if (seen[node]) throw InvalidInput(path + ": duplicate node");
        seen[node] = 1;
        values[node] = r[d];
    }
    return TabulatedField(lat, std::move(values));
}

void TabulatedField::evaluate(const Points& x, std::span<double> out) const {
    const int d = lat_.dim;
    for (std::size_t p = 0; p < x.count; ++p) {
        std::array<int, 3> lo{0, 0, 0};
        std::array<double, 3> fr{0, 0, 0};
        for (int a = 0; a < d; ++a) {
            const int n = lat_.per_axis[a];
            double w = x(a, p) - std::floor(x(a, p));
            const double q = w * n;
            double fl = std::floor(q);
            if (fl >= n) fl -= n;
            lo[a] = static_cast<int>(fl);
            fr[a] = q - fl;
        }
        double acc = 0.0;
        for (int corner = 0; corner < (1 << d); ++corner) {
            std::array<int, 3> idx{0, 0, 0};
            double w = 1.0;
            for (int a = 0; a < d; ++a) {
                const bool up = (corner >> a) & 1;
                idx[a] = (lo[a] + (up ? 1 : 0)) % lat_.per_axis[a];
                w *= up ? fr[a] : 1.0 - fr[a];
            }
            acc += w * values_[lat_.linear(idx)];
        }
        out[p] = acc;
    }
}

}  // namespace fkpde
