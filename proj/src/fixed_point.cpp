#include "fkpde/fixed_point.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <memory>

namespace fkpde {

const char* to_string(PicardStatus s) {
    switch (s) {
        case PicardStatus::Running: return "running";
        case PicardStatus::Converged: return "converged";
        case PicardStatus::MaxIterations: return "max-iterations";
        case PicardStatus::BlowUp: return "blow-up";
    }
    return "?";
}

PsiField estimate_field(const ProblemSpec& spec, const DriftExtra& drift, const SolverConfig& cfg,
                        const RngStream& rng) {
    cfg.check();
    const Lattice lat = cfg.lattice(spec.dim_d);
    const int m = spec.dim_m, d = spec.dim_d;
    const std::size_t n = lat.size();
    PsiField f = make_field(cfg.slice_times(spec.horizon_T), lat, m);
    const bool bismut = cfg.gradient_mode == GradientMode::Bismut;
    std::vector<std::vector<double>> bgrad(f.slices());
    for (int j = 0; j < cfg.slices; ++j) {
        const auto est = estimate_psi_slice(spec, drift, j, cfg, rng, bismut);
        std::copy(est.values.begin(), est.values.end(), f.values.begin() + j * n * m);
        std::copy(est.stderr_values.begin(), est.stderr_values.end(), f.stderr_values.begin() + j * n * m);
        f.particle_sup = std::max(f.particle_sup, est.particle_sup);
        if (bismut) bgrad[j] = est.gradients;
    }
    f = gradient_of_field(std::move(f), GradientMode::GridDifference);
    if (bismut) {
        for (std::size_t j = 0; j + 1 < f.slices(); ++j)
            std::copy(bgrad[j].begin(), bgrad[j].end(), f.gradients.begin() + j * n * d * m);
        f.provenance = GradientMode::Bismut;
    }
    return f;
}

DriftExtra drift_from_field(const ProblemSpec& spec, const PsiField& psi, const SolverConfig& cfg) {
    if (!spec.nonlinearity_F) return {};
    if (psi.gradients.empty()) throw InvalidInput("phi_map needs a field with gradients");
    const int d = spec.dim_d, m = spec.dim_m;
    const std::size_t n = psi.nodes();
    const int stride = cfg.stride();
    const int steps = cfg.n_steps;
    // Node tables per step: m value rows then d*m gradient rows (i*m + c).
    const std::size_t rows = m + static_cast<std::size_t>(d) * m;
    auto tables = std::make_shared<std::vector<double>>(steps * rows * n);
    FieldSampler fs{&psi, stride};
    for (int k = 0; k < steps; ++k) {
        double* base = tables->data() + k * rows * n;
        for (int c = 0; c < m; ++c) fs.node_table(k, -1, c, std::span<double>(base + c * n, n));
        for (int i = 0; i < d; ++i)
            for (int c = 0; c < m; ++c)
                fs.node_table(k, i, c, std::span<double>(base + (m + i * m + c) * n, n));
    }
    const ProblemSpec* sp = &spec;
    const Lattice lat = psi.lattice;
    const TimeGrid grid{spec.horizon_T, steps};
    const kernels::Table* kt = cfg.kernels;
    return [sp, tables, lat, grid, rows, n, m, d, kt](int k, const Points& xw, std::span<double> out) {
        thread_local std::vector<double> r1, r2;
        const std::size_t cnt = xw.count;
        r1.resize(m * cnt);
        r2.resize(static_cast<std::size_t>(d) * m * cnt);
        const auto& kk = kt ? *kt : kernels::active();
        const double* base = tables->data() + k * rows * n;
        for (int c = 0; c < m; ++c)
            interp_lattice(lat, std::span<const double>(base + c * n, n), xw,
                           std::span<double>(r1.data() + c * cnt, cnt), kk);
        for (std::size_t q = 0; q < static_cast<std::size_t>(d) * m; ++q)
            interp_lattice(lat, std::span<const double>(base + (m + q) * n, n), xw,
                           std::span<double>(r2.data() + q * cnt, cnt), kk);
        sp->nonlinearity_F(grid.horizon - grid.knot(k), xw, std::span<const double>(r1.data(), m * cnt),
                           std::span<const double>(r2.data(), d * m * cnt), out.subspan(0, d * cnt));
    };
}

PsiField phi_map(const ProblemSpec& spec, const PsiField& psi_in, const SolverConfig& cfg, const RngStream& rng) {
    const DriftExtra drift = drift_from_field(spec, psi_in, cfg);
    return estimate_field(spec, drift, cfg, rng);
}

double rho_proxy_distance(const PsiField& a, const PsiField& b, double lambda, bool with_hessian) {
    if (a.lattice != b.lattice || a.m != b.m || a.times != b.times) throw InvalidInput("psi fields live on different lattices");
    if (a.gradients.empty() != b.gradients.empty()) throw InvalidInput("only one field carries gradients");
    if (!(lambda >= 0.0)) throw InvalidInput("lambda must be nonnegative");
    const std::size_t n = a.nodes();
    const int m = a.m, d = a.dim();
    const double T = a.times.back();
    double dist = 0.0;
    std::vector<double> diff(n * m);
    for (std::size_t s = 0; s < a.slices(); ++s) {
        double dv = 0.0, dg = 0.0, dh = 0.0;
        for (std::size_t q = 0; q < n * m; ++q) {
            diff[q] = a.values[s * n * m + q] - b.values[s * n * m + q];
            dv = std::max(dv, std::abs(diff[q]));
        }
        if (!a.gradients.empty())
            for (std::size_t q = 0; q < n * d * m; ++q)
                dg = std::max(dg, std::abs(a.gradients[s * n * d * m + q] - b.gradients[s * n * d * m + q]));
        if (with_hessian)
            for (double h : grid_hessian(a.lattice, diff, m)) dh = std::max(dh, std::abs(h));
        dist = std::max(dist, std::exp(-lambda * (T - a.times[s])) * (dv + dg + dh));
    }
    return dist;
}

double fk_bound(const ProblemSpec& spec, const SolverConfig& cfg) {
    ProbeGrid pg;
    pg.nodes = cfg.nodes;
    pg.time_slices = cfg.slices;
    const auto k = k_constant(spec, pg);
    return k.value;
}

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void record(PicardState& st, const PsiField& f, std::chrono::steady_clock::time_point t0) {
    st.field_sup.push_back(f.max_abs());
    st.particle_sup.push_back(f.particle_sup);
    st.max_stderr.push_back(f.max_stderr());
    st.wall_seconds.push_back(seconds_since(t0));
}

void push_distance(PicardState& st, double dist) {
    if (!st.distance_history.empty()) {
        const double prev = st.distance_history.back();
        st.contraction_ratios.push_back(prev > 0.0 ? dist / prev : 0.0);
    }
    st.distance_history.push_back(dist);
}

void check_truncation(const ProblemSpec& spec, const SolverConfig& cfg, const PsiField& psi, PicardState& st) {
    if (!cfg.truncation) return;
    const auto u = as_pde_solution(psi);
    const auto trace = cb1_trace(u);
    if (auto tn = detect_blowup(u.times, trace, *cfg.truncation)) {
        st.status = PicardStatus::BlowUp;
        st.blowup_time = *tn;
    }
    (void)spec;
}

}  // namespace

SolveResult picard_solve(const ProblemSpec& spec_in, const SolverConfig& cfg, const RngStream& rng) {
    validate(spec_in);
    cfg.check();
    if (spec_in.source_g && !spec_in.g_spatial_only)
        throw InvalidInput("picard_solve needs a spatial-only source; use the outer solve");
    const ProblemSpec spec = cfg.truncation ? truncate_coefficients(spec_in, *cfg.truncation) : spec_in;
    SolveResult res;
    PicardState& st = res.state;
    st.lambda_weight = cfg.lambda >= 0.0 ? cfg.lambda : 4.0 / spec.horizon_T;
    st.k_bound = fk_bound(spec, cfg);
    const auto t0 = std::chrono::steady_clock::now();
    try {
        res.psi = estimate_field(spec, {}, cfg, rng);
        record(st, res.psi, t0);
        if (!spec.nonlinearity_F) {
            // phi_map ignores its input when F vanishes, so the first image is the fixed point.
            st.iterate_index = 1;
            push_distance(st, 0.0);
            st.status = PicardStatus::Converged;
            check_truncation(spec, cfg, res.psi, st);
            return res;
        }
        for (int it = 1; it <= cfg.max_iter; ++it) {
            PsiField next = phi_map(spec, res.psi, cfg, rng);
            const double dist = rho_proxy_distance(next, res.psi, st.lambda_weight);
            res.psi = std::move(next);
            st.iterate_index = it;
            push_distance(st, dist);
            record(st, res.psi, t0);
            if (dist < cfg.tol) {
                st.status = PicardStatus::Converged;
                break;
            }
        }
        if (st.status == PicardStatus::Running) st.status = PicardStatus::MaxIterations;
    } catch (const BlowUp& e) {
        st.status = PicardStatus::BlowUp;
        st.blowup_time = e.time;
        return res;
    }
    check_truncation(spec, cfg, res.psi, st);
    return res;
}

ProblemSpec freeze_source(const ProblemSpec& spec, const PsiField& h, const SolverConfig& cfg) {
    if (!spec.source_g) return spec;
    const int d = spec.dim_d, m = spec.dim_m;
    const std::size_t n = h.nodes();
    const std::size_t S = h.slices();
    // Per slice: m value rows, d*m gradient rows, d*d*m Hessian rows, each n long.
    const std::size_t r1n = m, r2n = static_cast<std::size_t>(d) * m, r3n = static_cast<std::size_t>(d) * d * m;
    const std::size_t rows = r1n + r2n + r3n;
    auto tab = std::make_shared<std::vector<double>>(S * rows * n);
    for (std::size_t s = 0; s < S; ++s) {
        const auto vals = std::span<const double>(h.values).subspan(s * n * m, n * m);
        const auto g = grid_gradient(h.lattice, vals, m);
        const auto hs = grid_hessian(h.lattice, vals, m);
        double* base = tab->data() + s * rows * n;
        for (std::size_t node = 0; node < n; ++node) {
            for (int c = 0; c < m; ++c) base[c * n + node] = vals[node * m + c];
            for (std::size_t q = 0; q < r2n; ++q) base[(r1n + q) * n + node] = g[node * r2n + q];
            for (std::size_t q = 0; q < r3n; ++q) base[(r1n + r2n + q) * n + node] = hs[node * r3n + q];
        }
    }
    ProblemSpec out = spec;
    out.g_spatial_only = true;
    const SourceCoef g = spec.source_g;
    const double T = spec.horizon_T;
    const double ds = T / static_cast<double>(S - 1);
    const Lattice lat = h.lattice;
    const kernels::Table* kt = cfg.kernels;
    out.source_g = [g, tab, lat, T, ds, S, rows, n, r1n, r2n, r3n, kt](
                       double t, const Points& x, std::span<const double>, std::span<const double>,
                       std::span<const double>, std::span<double> res) {
        thread_local std::vector<double> node, r;
        const std::size_t cnt = x.count;
        const auto& kk = kt ? *kt : kernels::active();
        // SDE time of this PDE time, then linear interpolation between slices.
        const double q = std::clamp((T - t) / ds, 0.0, static_cast<double>(S - 1));
        std::size_t j = static_cast<std::size_t>(std::floor(q));
        if (j >= S - 1) j = S - 1;
        const double fr = (j == S - 1) ? 0.0 : q - static_cast<double>(j);
        node.resize(n);
        r.resize(rows * cnt);
        for (std::size_t row = 0; row < rows; ++row) {
            const double* a = tab->data() + (j * rows + row) * n;
            if (fr == 0.0) {
                std::copy_n(a, n, node.begin());
            } else {
                const double* b = tab->data() + ((j + 1) * rows + row) * n;
                for (std::size_t k = 0; k < n; ++k) node[k] = (1.0 - fr) * a[k] + fr * b[k];
            }
            interp_lattice(lat, node, x, std::span<double>(r.data() + row * cnt, cnt), kk);
        }
        g(t, x, std::span<const double>(r.data(), r1n * cnt), std::span<const double>(r.data() + r1n * cnt, r2n * cnt),
          std::span<const double>(r.data() + (r1n + r2n) * cnt, r3n * cnt), res);
    };
    return out;
}

SolveResult outer_psi_solve(const ProblemSpec& spec, const SolverConfig& cfg, const RngStream& rng) {
    validate(spec);
    cfg.check();
    if (!spec.source_g || spec.g_spatial_only) return picard_solve(spec, cfg, rng);
    SolveResult res;
    PicardState& st = res.state;
    st.lambda_weight = cfg.lambda >= 0.0 ? cfg.lambda : 4.0 / spec.horizon_T;
    const auto t0 = std::chrono::steady_clock::now();
    PsiField h = make_field(cfg.slice_times(spec.horizon_T), cfg.lattice(spec.dim_d), spec.dim_m);
    h = gradient_of_field(std::move(h), GradientMode::GridDifference);
    for (int it = 1; it <= cfg.max_iter; ++it) {
        const ProblemSpec frozen = freeze_source(spec, h, cfg);
        SolveResult inner = picard_solve(frozen, cfg, rng);
        st.inner.push_back(inner.state);
        if (inner.state.status == PicardStatus::BlowUp) {
            st.status = PicardStatus::BlowUp;
            st.blowup_time = inner.state.blowup_time;
            res.psi = std::move(inner.psi);
            return res;
        }
        if (it == 1) st.k_bound = inner.state.k_bound;
        const double dist = rho_proxy_distance(inner.psi, h, st.lambda_weight, true);
        h = std::move(inner.psi);
        st.iterate_index = it;
        push_distance(st, dist);
        record(st, h, t0);
        if (inner.state.status != PicardStatus::Converged) {
            st.status = PicardStatus::MaxIterations;
            break;
        }
        if (it > 1 && dist < cfg.tol) {
            st.status = PicardStatus::Converged;
            break;
        }
    }
    if (st.status == PicardStatus::Running) st.status = PicardStatus::MaxIterations;
    res.psi = std::move(h);
    return res;
}

void clamp_radial(std::span<double> r, double n) {
    double s = 0.0;
    for (double v : r) s += v * v;
    const double norm = std::sqrt(s);
    if (norm <= n) return;
    const double scale = n / norm;
    for (double& v : r) v = v * scale;
}

namespace {

/// Clamps every point of a batch argument laid out as (entry*cnt + p).
void clamp_batch(std::span<const double> in, std::vector<double>& out, std::size_t entries, std::size_t cnt,
                 double level) {
    out.assign(in.begin(), in.end());
    if (in.empty()) return;
    std::vector<double> v(entries);
    for (std::size_t p = 0; p < cnt; ++p) {
        double s = 0.0;
        for (std::size_t e = 0; e < entries; ++e) s += in[e * cnt + p] * in[e * cnt + p];
        if (std::sqrt(s) <= level) continue;
        for (std::size_t e = 0; e < entries; ++e) v[e] = in[e * cnt + p];
        clamp_radial(v, level);
        for (std::size_t e = 0; e < entries; ++e) out[e * cnt + p] = v[e];
    }
}

}  // namespace

ProblemSpec truncate_coefficients(const ProblemSpec& spec, double level) {
    if (!(level >= 1.0)) throw InvalidInput("truncation level must be at least 1");
    ProblemSpec out = spec;
    const std::size_t m = spec.dim_m, dm = static_cast<std::size_t>(spec.dim_d) * spec.dim_m;
    if (spec.nonlinearity_F) {
        const NonlinearityCoef F = spec.nonlinearity_F;
        out.nonlinearity_F = [F, level, m, dm](double t, const Points& x, std::span<const double> r1,
                                               std::span<const double> r2, std::span<double> res) {
            thread_local std::vector<double> a, b;
            clamp_batch(r1, a, m, x.count, level);
            clamp_batch(r2, b, dm, x.count, level);
            F(t, x, a, b, res);
        };
    }
    if (spec.source_g) {
        const SourceCoef g = spec.source_g;
        out.source_g = [g, level, m, dm](double t, const Points& x, std::span<const double> r1,
                                         std::span<const double> r2, std::span<const double> r3,
                                         std::span<double> res) {
            thread_local std::vector<double> a, b;
            clamp_batch(r1, a, m, x.count, level);
            clamp_batch(r2, b, dm, x.count, level);
            g(t, x, std::span<const double>(a), std::span<const double>(b), r3, res);
        };
    }
    return out;
}

std::optional<double> detect_blowup(std::span<const double> times, std::span<const double> norms, double n) {
    const std::size_t cnt = std::min(times.size(), norms.size());
    for (std::size_t i = 0; i < cnt; ++i)
        if (!(norms[i] < n)) return times[i];
    return std::nullopt;
}

GridSeries as_pde_solution(const PsiField& psi) {
    GridSeries u;
    u.lattice = psi.lattice;
    u.m = psi.m;
    const std::size_t S = psi.slices(), n = psi.nodes(), m = psi.m;
    const double T = psi.times.back();
    u.times.resize(S);
    u.values.resize(psi.values.size());
    for (std::size_t i = 0; i < S; ++i) {
        const std::size_t s = S - 1 - i;
        u.times[i] = T - psi.times[s];
        std::copy_n(psi.values.begin() + s * n * m, n * m, u.values.begin() + i * n * m);
    }
    return u;
}

std::vector<double> cb1_trace(const GridSeries& u) {
    const std::size_t n = u.nodes(), m = u.m;
    std::vector<double> out(u.times.size());
    for (std::size_t i = 0; i < u.times.size(); ++i)
        out[i] = cb1_norm(u.lattice, std::span<const double>(u.values).subspan(i * n * m, n * m), u.m);
    return out;
}

}  // namespace fkpde
