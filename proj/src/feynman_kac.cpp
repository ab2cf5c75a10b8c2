#include "fkpde/feynman_kac.hpp"

#include <algorithm>
#include <cmath>

namespace fkpde {

const char* to_string(GradientMode m) { return m == GradientMode::Bismut ? "bismut" : "grid-difference"; }

GradientMode gradient_mode_from(const std::string& s) {
    if (s == "grid-difference" || s == "grid") return GradientMode::GridDifference;
    if (s == "bismut") return GradientMode::Bismut;
    throw InvalidInput("unknown gradient mode '" + s + "'");
}

double PsiField::max_stderr() const {
    double m = 0.0;
    for (double v : stderr_values) m = std::max(m, v);
    return m;
}

double PsiField::max_abs() const {
    double m = 0.0;
    for (double v : values) m = std::max(m, std::abs(v));
    return m;
}

PsiField make_field(std::vector<double> times, const Lattice& lat, int m) {
    PsiField f;
    f.times = std::move(times);
    f.lattice = lat;
    f.m = m;
    f.values.assign(f.times.size() * lat.size() * m, 0.0);
    f.stderr_values.assign(f.values.size(), 0.0);
    return f;
}

EngineConfig SolverConfig::engine(double T) const {
    EngineConfig e;
    e.grid = TimeGrid{T, n_steps};
    e.block = block;
    e.common_nodes = common_nodes;
    e.workers = workers;
    e.kernels = kernels;
    return e;
}

void SolverConfig::check() const {
    if (nodes < 3) throw InvalidInput("lattice.nodes must be at least 3");
    if (n_steps < 1) throw InvalidInput("lattice.n_steps must be at least 1");
    if (slices < 2) throw InvalidInput("lattice.slices must be at least 2");
    if (n_steps % (slices - 1) != 0) throw InvalidInput("lattice.n_steps must be a multiple of lattice.slices - 1");
    if (particles < 1) throw InvalidInput("particles must be at least 1");
    if (block < 1) throw InvalidInput("mc.block must be at least 1");
    if (!(tol > 0.0)) throw InvalidInput("picard.tol must be positive");
    if (max_iter < 1) throw InvalidInput("picard.max_iter must be at least 1");
    if (workers < 1) throw InvalidInput("workers must be at least 1");
}

int SolverConfig::stride() const {
    check();
    return n_steps / (slices - 1);
}

std::vector<double> SolverConfig::slice_times(double T) const {
    const TimeGrid g{T, n_steps};
    const int st = stride();
    std::vector<double> t(slices);
    for (int j = 0; j < slices; ++j) t[j] = g.knot(j * st);
    return t;
}

// ---------------------------------------------------------------- lattice helpers

std::vector<double> grid_gradient(const Lattice& lat, std::span<const double> values, int m) {
    const int d = lat.dim;
    for (int a = 0; a < d; ++a)
        if (lat.per_axis[a] < 3) throw InvalidInput("lattice too coarse for differencing");
    const std::size_t n = lat.size();
    std::vector<double> g(n * d * m);
    for (std::size_t node = 0; node < n; ++node)
        for (int a = 0; a < d; ++a) {
            const std::size_t up = lat.shifted(node, a, 1), dn = lat.shifted(node, a, -1);
            const double inv2h = 0.5 * lat.per_axis[a];
            for (int c = 0; c < m; ++c)
                g[(node * d + a) * m + c] = (values[up * m + c] - values[dn * m + c]) * inv2h;
        }
    return g;
}

std::vector<double> grid_hessian(const Lattice& lat, std::span<const double> values, int m) {
    const int d = lat.dim;
    for (int a = 0; a < d; ++a)
        if (lat.per_axis[a] < 3) throw InvalidInput("lattice too coarse for differencing");
    const std::size_t n = lat.size();
    std::vector<double> h(n * d * d * m);
    for (std::size_t node = 0; node < n; ++node)
        for (int i = 0; i < d; ++i)
            for (int k = 0; k < d; ++k)
                for (int c = 0; c < m; ++c) {
                    double v;
                    if (i == k) {
                        const double n2 = static_cast<double>(lat.per_axis[i]) * lat.per_axis[i];
                        v = (values[lat.shifted(node, i, 1) * m + c] - 2.0 * values[node * m + c] +
                             values[lat.shifted(node, i, -1) * m + c]) *
                            n2;
                    } else {
                        const std::size_t pp = lat.shifted(lat.shifted(node, i, 1), k, 1);
                        const std::size_t pm = lat.shifted(lat.shifted(node, i, 1), k, -1);
                        const std::size_t mp = lat.shifted(lat.shifted(node, i, -1), k, 1);
                        const std::size_t mm = lat.shifted(lat.shifted(node, i, -1), k, -1);
                        v = (values[pp * m + c] - values[pm * m + c] - values[mp * m + c] + values[mm * m + c]) *
                            (0.25 * lat.per_axis[i] * lat.per_axis[k]);
                    }
                    h[((node * d + i) * d + k) * m + c] = v;
                }
    return h;
}

void interp_lattice(const Lattice& lat, std::span<const double> table, const Points& xw, std::span<double> out,
                    const kernels::Table& k) {
    const int d = lat.dim;
    if (d == 1) {
        k.interp_periodic(table.data(), lat.per_axis[0], xw.axis(0).data(), xw.count, out.data());
        return;
    }
    for (std::size_t p = 0; p < xw.count; ++p) {
        std::array<int, 3> lo{0, 0, 0};
        std::array<double, 3> fr{0, 0, 0};
        for (int a = 0; a < d; ++a) {
            const double nd = lat.per_axis[a];
            const double q = xw(a, p) * nd;
            double fl = std::floor(q);
            fl = (fl >= nd) ? fl - nd : fl;
            fl = (fl >= 0.0 && fl < nd) ? fl : 0.0;
            lo[a] = static_cast<int>(fl);
            fr[a] = q - fl;
        }
        double acc = 0.0;
        for (int corner = 0; corner < (1 << d); ++corner) {
            std::array<int, 3> idx{0, 0, 0};
            double w = 1.0;
            for (int a = 0; a < d; ++a) {
                const bool up = (corner >> a) & 1;
                idx[a] = up ? (lo[a] + 1) % lat.per_axis[a] : lo[a];
                w = w * (up ? fr[a] : 1.0 - fr[a]);
            }
            acc = acc + w * table[lat.linear(idx)];
        }
        out[p] = acc;
    }
}

void FieldSampler::node_table(int step, int axis, int c, std::span<double> out) const {
    const PsiField& f = *field;
    const std::size_t n = f.nodes();
    const int d = f.dim();
    const int m = f.m;
    const std::size_t last = f.slices() - 1;
    const std::size_t j = std::min<std::size_t>(static_cast<std::size_t>(step / stride), last);
    const int rem = step - static_cast<int>(j) * stride;
    const bool grad = axis >= 0;
    if (grad && f.gradients.empty()) throw InvalidInput("field has no gradients");
    auto at = [&](std::size_t s, std::size_t node) {
        return grad ? f.gradients[((s * n + node) * d + axis) * m + c] : f.values[(s * n + node) * m + c];
    };
    if (rem == 0 || j == last) {
        for (std::size_t node = 0; node < n; ++node) out[node] = at(j, node);
        return;
    }
    const double fr = static_cast<double>(rem) / stride;
    for (std::size_t node = 0; node < n; ++node) out[node] = (1.0 - fr) * at(j, node) + fr * at(j + 1, node);
}

// ---------------------------------------------------------------- estimators

namespace {

/// (e^z - 1)/z, exactly 1 at z = 0.
inline double phi1(double z) {
    if (z == 0.0) return 1.0;
    if (std::abs(z) < 1e-2) {
        double r = 1.0 / 5040.0;
        r = 1.0 / 720.0 + z * r;
        r = 1.0 / 120.0 + z * r;
        r = 1.0 / 24.0 + z * r;
        r = 1.0 / 6.0 + z * r;
        r = 0.5 + z * r;
        return 1.0 + z * r;
    }
    return std::expm1(z) / z;
}

struct FunctionalObserver : StepObserver {
    const Functional& f;
    const TimeGrid& grid;
    const kernels::Table& k;
    int m, d, start;
    bool have_V;
    std::vector<double>& out;        // (lane-major per component) c*lanes + l
    std::vector<double>& grad_out;   // (j*m + c)*lanes + l
    std::vector<double> acc, gacc, r, w, efk;

    FunctionalObserver(const Functional& fn, const TimeGrid& g, const kernels::Table& kt, int mm, int dd, int st,
                       bool hv, std::size_t lanes, std::vector<double>& o, std::vector<double>& go)
        : f(fn), grid(g), k(kt), m(mm), d(dd), start(st), have_V(hv), out(o), grad_out(go) {
        acc.assign(m * lanes, 0.0);
        if (f.bismut) gacc.assign(d * m * lanes, 0.0);
        r.resize(m * lanes);
        w.resize(lanes);
        efk.resize(lanes);
    }

    void at_step(int step, const Batch& b) override {
        if (!f.running) return;
        const std::size_t n = b.lanes;
        f.running(step, b.wrapped(), r);
        const double dt = grid.step_size();
        k.exp(b.fk.data(), n, efk.data());
        for (std::size_t l = 0; l < n; ++l) w[l] = efk[l] * (have_V ? phi1(b.v[l] * dt) : 1.0);
        for (int c = 0; c < m; ++c) k.axpy_prod(acc.data() + c * n, r.data() + c * n, w.data(), dt, n);
        if (f.bismut && step > start) {
            const double inv = 1.0 / (grid.knot(step) - grid.knot(start));
            for (int j = 0; j < d; ++j)
                for (int c = 0; c < m; ++c)
                    for (std::size_t l = 0; l < n; ++l)
                        gacc[(j * m + c) * n + l] =
                            gacc[(j * m + c) * n + l] + ((r[c * n + l] * w[l]) * dt) * (b.bis[j * n + l] * inv);
        }
    }

    void at_end(int step, const Batch& b) override {
        const std::size_t n = b.lanes;
        out.assign(m * n, 0.0);
        if (f.terminal)
            f.terminal(b.wrapped(), r);
        else
            std::fill(r.begin(), r.end(), 0.0);
        k.exp(b.fk.data(), n, efk.data());
        for (int c = 0; c < m; ++c)
            for (std::size_t l = 0; l < n; ++l) out[c * n + l] = r[c * n + l] * efk[l] + acc[c * n + l];
        if (f.bismut) {
            grad_out.assign(d * m * n, 0.0);
            const double span = grid.knot(step) - grid.knot(start);
            const double inv = span > 0.0 ? 1.0 / span : 0.0;
            for (int j = 0; j < d; ++j)
                for (int c = 0; c < m; ++c)
                    for (std::size_t l = 0; l < n; ++l)
                        grad_out[(j * m + c) * n + l] =
                            (r[c * n + l] * efk[l]) * (b.bis[j * n + l] * inv) + gacc[(j * m + c) * n + l];
        }
    }
};

struct Moments {
    double count = 0.0, mean = 0.0, m2 = 0.0;
};

/// Chan merge; fixed order keeps the result independent of scheduling.
void merge(Moments& a, const Moments& b) {
    if (b.count == 0.0) return;
    if (a.count == 0.0) {
        a = b;
        return;
    }
    const double n = a.count + b.count;
    const double delta = b.mean - a.mean;
    a.mean = a.mean + delta * (b.count / n);
    a.m2 = a.m2 + b.m2 + delta * delta * (a.count * b.count / n);
    a.count = n;
}

Moments block_moments(const kernels::Table& k, const double* x, std::size_t n) {
    Moments mo;
    mo.count = static_cast<double>(n);
    mo.mean = k.sum(x, n) / mo.count;
    mo.m2 = k.centered_sumsq(x, mo.mean, n);
    return mo;
}

}  // namespace

SliceEstimate estimate_functional(const ProblemSpec& spec, const DriftExtra& drift, const SolverConfig& cfg,
                                  const RngStream& rng, std::uint32_t slice_key, int start_step, int end_step,
                                  const Functional& f) {
    validate(spec);
    cfg.check();
    const EngineConfig ec = cfg.engine(spec.horizon_T);
    const auto& k = ec.table();
    const Lattice lat = cfg.lattice(spec.dim_d);
    const int d = spec.dim_d, m = spec.dim_m;
    const std::size_t nodes = lat.size();
    const std::size_t N = cfg.particles;
    const std::size_t pb = std::min(cfg.block, N);
    const std::size_t nblocks = (N + pb - 1) / pb;
    const std::size_t group = std::max<std::size_t>(1, 4096 / pb);
    const std::size_t ngroups = (nodes + group - 1) / group;
    const std::size_t G = f.bismut ? static_cast<std::size_t>(d) * m : 0;

    // Per (node, entry, block) moments; entry = component c, then gradient (j*m + c).
    const std::size_t entries = m + G;
    std::vector<Moments> mom(nodes * entries * nblocks);
    std::vector<double> sup(ngroups * nblocks, 0.0);

    parallel_for(cfg.workers, ngroups * nblocks, [&](std::size_t item) {
        const std::size_t gi = item / nblocks, bi = item % nblocks;
        const std::size_t node0 = gi * group;
        const std::size_t gn = std::min(group, nodes - node0);
        const std::size_t first = bi * pb;
        const std::size_t cnt = std::min(pb, N - first);
        std::vector<std::array<double, 3>> start(gn);
        std::vector<std::uint32_t> keys(gn);
        for (std::size_t q = 0; q < gn; ++q) {
            start[q] = {0, 0, 0};
            for (int a = 0; a < d; ++a) start[q][a] = lat.coord(node0 + q, a);
            keys[q] = static_cast<std::uint32_t>(node0 + q);
        }
        Batch b;
        init_batch(b, d, start, keys, static_cast<std::uint32_t>(first), cnt, f.bismut);
        std::vector<double> vals, gvals;
        FunctionalObserver obs(f, ec.grid, k, m, d, start_step, static_cast<bool>(spec.potential_V), b.lanes, vals,
                               gvals);
        run_batch(spec, drift, ec, rng, RunRequest{slice_key, start_step, end_step, f.bismut}, b, obs);
        double s = 0.0;
        for (double v : vals) s = std::max(s, std::abs(v));
        sup[item] = s;
        for (std::size_t q = 0; q < gn; ++q) {
            const std::size_t node = node0 + q;
            for (int c = 0; c < m; ++c)
                mom[(node * entries + c) * nblocks + bi] = block_moments(k, vals.data() + c * b.lanes + q * cnt, cnt);
            for (std::size_t e = 0; e < G; ++e)
                mom[(node * entries + m + e) * nblocks + bi] =
                    block_moments(k, gvals.data() + e * b.lanes + q * cnt, cnt);
        }
    });

    SliceEstimate out;
    out.values.resize(nodes * m);
    out.stderr_values.resize(nodes * m);
    if (G) {
        out.gradients.resize(nodes * G);
        out.gradient_stderr.resize(nodes * G);
    }
    const double Nd = static_cast<double>(N);
    for (std::size_t node = 0; node < nodes; ++node)
        for (std::size_t e = 0; e < entries; ++e) {
            Moments tot;
            for (std::size_t bi = 0; bi < nblocks; ++bi) merge(tot, mom[(node * entries + e) * nblocks + bi]);
            const double se = N > 1 ? std::sqrt(tot.m2 / (Nd - 1.0) / Nd) : 0.0;
            if (e < static_cast<std::size_t>(m)) {
                out.values[node * m + e] = tot.mean;
                out.stderr_values[node * m + e] = se;
            } else {
                // stored as (node*d + j)*m + c
                const std::size_t g = e - m;
                out.gradients[node * G + g] = tot.mean;
                out.gradient_stderr[node * G + g] = se;
            }
        }
    for (double s : sup) out.particle_sup = std::max(out.particle_sup, s);
    for (double v : out.values)
        if (!std::isfinite(v)) throw BlowUp("non-finite Feynman-Kac estimate", spec.horizon_T - ec.grid.knot(start_step));
    return out;
}

SliceEstimate estimate_psi_slice(const ProblemSpec& spec, const DriftExtra& drift, int slice_index,
                                 const SolverConfig& cfg, const RngStream& rng, bool bismut) {
    if (spec.source_g && !spec.g_spatial_only) throw InvalidInput("estimate_psi_slice needs a spatial-only source");
    if (slice_index < 0 || slice_index >= cfg.slices) throw InvalidInput("slice index outside the psi lattice");
    const TimeGrid grid{spec.horizon_T, cfg.n_steps};
    const int start = slice_index * cfg.stride();
    const int m = spec.dim_m;
    Functional fn;
    fn.bismut = bismut && start < cfg.n_steps;
    fn.terminal = [&spec](const Points& x, std::span<double> out) { spec.initial_u0(x, out); };
    if (spec.source_g)
        fn.running = [&spec, grid, m](int step, const Points& x, std::span<double> out) {
            spec.source_g(grid.horizon - grid.knot(step), x, {}, {}, {}, out.subspan(0, m * x.count));
        };
    return estimate_functional(spec, drift, cfg, rng, static_cast<std::uint32_t>(slice_index), start, cfg.n_steps, fn);
}

SliceEstimate semigroup_apply(const ProblemSpec& spec, const DriftExtra& drift, int t_step, int s_step,
                              const TerminalTerm& f, const SolverConfig& cfg, const RngStream& rng) {
    if (t_step > s_step) throw InvalidInput("semigroup_apply needs t <= s");
    if (t_step < 0 || s_step > cfg.n_steps) throw InvalidInput("semigroup_apply: step outside the grid");
    Functional fn;
    fn.terminal = f;
    return estimate_functional(spec, drift, cfg, rng, static_cast<std::uint32_t>(t_step), t_step, s_step, fn);
}

SliceEstimate u_v_functional(const ProblemSpec& spec, const DriftExtra& drift, int t_step, const PsiField& f,
                             const SolverConfig& cfg, const RngStream& rng) {
    if (t_step < 0 || t_step > cfg.n_steps) throw InvalidInput("u_v_functional: step outside the grid");
    if (f.slices() != static_cast<std::size_t>(cfg.slices) || f.lattice != cfg.lattice(spec.dim_d) ||
        f.m != spec.dim_m)
        throw InvalidInput("u_v_functional: integrand not on the solver lattice");
    const int stride = cfg.stride();
    const auto& k = cfg.engine(spec.horizon_T).table();
    Functional fn;
    fn.running = [&f, stride, &k](int step, const Points& x, std::span<double> out) {
        FieldSampler fs{&f, stride};
        std::vector<double> table(f.nodes());
        for (int c = 0; c < f.m; ++c) {
            fs.node_table(step, -1, c, table);
            interp_lattice(f.lattice, table, x, out.subspan(c * x.count, x.count), k);
        }
    };
    return estimate_functional(spec, drift, cfg, rng, static_cast<std::uint32_t>(t_step), t_step, cfg.n_steps, fn);
}

GradientEstimate bismut_gradient(const PathEnsemble& e, std::size_t r, const TerminalTerm& f, int m,
                                 std::span<const double> v, const TimeGrid& grid, bool weighted) {
    if (!e.has_derivatives) throw InvalidInput("bismut_gradient needs derivative data");
    if (r >= e.retained_steps.size()) throw InvalidInput("retained slice out of range");
    const double span = grid.knot(e.retained_steps[r]) - grid.knot(e.start_step);
    if (!(span > 0.0)) throw InvalidInput("bismut_gradient needs s > t");
    const int d = e.dim;
    const std::size_t N = e.particles;
    std::vector<double> xw(d * N);
    const auto& k = kernels::active();
    k.wrap_unit(e.states[r].data(), d * N, xw.data());
    std::vector<double> fx(m * N);
    f(Points{xw, N, d}, fx);
    std::vector<double> w(N), z(N), ef;
    if (weighted) {
        ef.resize(N);
        k.exp(e.fk_exponent[r].data(), N, ef.data());
    }
    for (std::size_t p = 0; p < N; ++p) {
        double s = 0.0;
        for (int j = 0; j < d; ++j) s = s + e.bismut_integral[r][j * N + p] * v[j];
        w[p] = s / span;
        if (weighted) w[p] = w[p] * ef[p];
    }
    GradientEstimate out;
    for (int c = 0; c < m; ++c) {
        for (std::size_t p = 0; p < N; ++p) z[p] = fx[c * N + p] * w[p];
        const double mean = k.sum(z.data(), N) / static_cast<double>(N);
        const double m2 = k.centered_sumsq(z.data(), mean, N);
        out.value.push_back(mean);
        out.stderr_values.push_back(N > 1 ? std::sqrt(m2 / (N - 1.0) / N) : 0.0);
    }
    return out;
}

PsiField gradient_of_field(PsiField field, GradientMode mode, const BismutContext* ctx) {
    const int d = field.dim(), m = field.m;
    const std::size_t n = field.nodes();
    field.gradients.assign(field.slices() * n * d * m, 0.0);
    for (std::size_t s = 0; s < field.slices(); ++s) {
        const auto g = grid_gradient(field.lattice, std::span<const double>(field.values).subspan(s * n * m, n * m), m);
        std::copy(g.begin(), g.end(), field.gradients.begin() + s * n * d * m);
    }
    field.provenance = mode;
    if (mode == GradientMode::GridDifference) return field;
    if (!ctx || !ctx->spec || !ctx->cfg || !ctx->rng) throw InvalidInput("bismut gradients need a solver context");
    static const DriftExtra none;
    const DriftExtra& drift = ctx->drift ? *ctx->drift : none;
    for (std::size_t s = 0; s + 1 < field.slices(); ++s) {
        const auto est = estimate_psi_slice(*ctx->spec, drift, static_cast<int>(s), *ctx->cfg, *ctx->rng, true);
        // est.gradients is (node*d + j)*m + c, same as the field layout.
        std::copy(est.gradients.begin(), est.gradients.end(), field.gradients.begin() + s * n * d * m);
    }
    return field;
}

}  // namespace fkpde
