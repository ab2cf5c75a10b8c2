#include "fkpde/problem.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace fkpde {

void validate(const ProblemSpec& s) {
    if (s.dim_d < 1 || s.dim_d > 3) throw InvalidInput("dim_d must be 1..3");
    if (s.dim_m < 1) throw InvalidInput("dim_m must be >= 1");
    if (!(s.horizon_T > 0.0) || !std::isfinite(s.horizon_T)) throw InvalidInput("horizon_T must be positive");
    if (!s.diffusion_a) throw InvalidInput("diffusion_a is required");
    if (!s.initial_u0) throw InvalidInput("initial_u0 is required");
}

std::vector<double> eval_a(const ProblemSpec& s, double t, const Points& x) {
    std::vector<double> out(static_cast<std::size_t>(s.dim_d * s.dim_d) * x.count, 0.0);
    s.diffusion_a(t, x, out);
    return out;
}

std::vector<double> eval_b(const ProblemSpec& s, double t, const Points& x) {
    std::vector<double> out(static_cast<std::size_t>(s.dim_d) * x.count, 0.0);
    if (s.drift_b) s.drift_b(t, x, out);
    return out;
}

std::vector<double> eval_V(const ProblemSpec& s, double t, const Points& x) {
    std::vector<double> out(x.count, 0.0);
    if (s.potential_V) s.potential_V(t, x, out);
    return out;
}

std::vector<double> eval_F(const ProblemSpec& s, double t, const Points& x, std::span<const double> r1,
                           std::span<const double> r2) {
    std::vector<double> out(static_cast<std::size_t>(s.dim_d) * x.count, 0.0);
    if (s.nonlinearity_F) s.nonlinearity_F(t, x, r1, r2, out);
    return out;
}

std::vector<double> eval_g(const ProblemSpec& s, double t, const Points& x, std::span<const double> r1,
                           std::span<const double> r2, std::span<const double> r3) {
    std::vector<double> out(static_cast<std::size_t>(s.dim_m) * x.count, 0.0);
    if (s.source_g) s.source_g(t, x, r1, r2, r3, out);
    return out;
}

std::vector<double> eval_u0(const ProblemSpec& s, const Points& x) {
    std::vector<double> out(static_cast<std::size_t>(s.dim_m) * x.count, 0.0);
    s.initial_u0(x, out);
    return out;
}

bool kato_class_check(int d, const KatoPair& pair) {
    return pair.p > 2.0 && pair.q > 2.0 && (d / pair.p + 2.0 / pair.q) < 1.0;
}

namespace {

// Trapezoid integral of the piecewise-linear interpolant of g over [t0, t1].
double trapezoid_window(const std::vector<double>& times, const std::vector<double>& g, double t0, double t1) {
    double total = 0.0;
    for (std::size_t j = 0; j + 1 < times.size(); ++j) {
        const double a = std::max(times[j], t0), b = std::min(times[j + 1], t1);
        if (!(b > a)) continue;
        const double len = times[j + 1] - times[j];
        const double ga = g[j] + (g[j + 1] - g[j]) * ((a - times[j]) / len);
        const double gb = g[j] + (g[j + 1] - g[j]) * ((b - times[j]) / len);
        total += 0.5 * (b - a) * (ga + gb);
    }
    return total;
}

std::string where_string(double t, const Points& x, std::size_t p) {
    std::ostringstream os;
    os << "t=" << t << " x=(";
    for (int a = 0; a < x.dim; ++a) os << (a ? "," : "") << x(a, p);
    os << ")";
    return os.str();
}

double vec_norm(std::span<const double> v, std::size_t comps, std::size_t stride, std::size_t p) {
    double s = 0.0;
    for (std::size_t j = 0; j < comps; ++j) s += v[j * stride + p] * v[j * stride + p];
    return std::sqrt(s);
}

std::vector<double> probe_times(double T, int slices) {
    std::vector<double> t(std::max(slices, 2));
    for (std::size_t j = 0; j < t.size(); ++j) t[j] = T * static_cast<double>(j) / (t.size() - 1);
    return t;
}

double radical_inverse(std::uint64_t i, unsigned base) {
    double f = 1.0, r = 0.0;
    while (i > 0) {
        f /= base;
        r += f * static_cast<double>(i % base);
        i /= base;
    }
    return r;
}

constexpr unsigned kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73,
                                79, 83, 89, 97, 101, 103, 107, 109, 113, 127, 131, 137, 139, 149, 151, 157, 163};

// Halton point in [0,1)^dims, skipping the origin.
std::vector<double> halton(std::uint64_t index, std::size_t dims) {
    std::vector<double> h(dims);
    for (std::size_t k = 0; k < dims; ++k) h[k] = radical_inverse(index + 1, kPrimes[k % std::size(kPrimes)]);
    return h;
}

}  // namespace

double tilde_Lpq_norm(const SpaceTimeField& f, const KatoPair& pair, double t0, double t1, DomainMode domain) {
    const std::size_t nodes = f.lattice.size();
    if (f.times.size() < 2 || nodes == 0 || f.values.size() != f.times.size() * nodes)
        throw InvalidInput("tilde_Lpq_norm: empty or inconsistent grid");
    if (!(t0 < t1) || t0 < f.times.front() - 1e-12 || t1 > f.times.back() + 1e-12)
        throw InvalidInput("tilde_Lpq_norm: window outside the horizon");
    const int d = f.lattice.dim;
    double cell = 1.0;
    for (int a = 0; a < d; ++a) cell *= f.lattice.spacing(a);

    auto time_norm = [&](const std::vector<double>& spatial_p) {
        // spatial_p[j] = sum |f|^p h^d at slice j
        std::vector<double> g(spatial_p.size());
        for (std::size_t j = 0; j < g.size(); ++j) g[j] = std::pow(std::pow(spatial_p[j], 1.0 / pair.p), pair.q);
        return std::pow(trapezoid_window(f.times, g, t0, t1), 1.0 / pair.q);
    };

    if (domain == DomainMode::Torus) {
        std::vector<double> sp(f.times.size(), 0.0);
        for (std::size_t j = 0; j < f.times.size(); ++j)
            for (std::size_t i = 0; i < nodes; ++i) sp[j] += std::pow(std::abs(f.at(j, i)), pair.p) * cell;
        return time_norm(sp);
    }

    // Periodic extension: localize to unit balls around each lattice node, sup over centres.
    double best = 0.0;
    for (std::size_t z = 0; z < nodes; ++z) {
        std::vector<double> weight(nodes, 0.0);  // number of periodic copies of node i inside B(z,1)
        for (std::size_t i = 0; i < nodes; ++i) {
            std::array<int, 3> shift{0, 0, 0};
            const int lo = -2, hi = 2;
            int copies = 0;
            std::array<int, 3> lim{d > 0 ? hi : 0, d > 1 ? hi : 0, d > 2 ? hi : 0};
            for (shift[0] = (d > 0 ? lo : 0); shift[0] <= lim[0]; ++shift[0])
                for (shift[1] = (d > 1 ? lo : 0); shift[1] <= lim[1]; ++shift[1])
                    for (shift[2] = (d > 2 ? lo : 0); shift[2] <= lim[2]; ++shift[2]) {
                        double r2 = 0.0;
                        for (int a = 0; a < d; ++a) {
                            const double dx = f.lattice.coord(i, a) + shift[a] - f.lattice.coord(z, a);
                            r2 += dx * dx;
                        }
                        if (r2 < 1.0) ++copies;
                    }
            weight[i] = copies;
        }
        std::vector<double> sp(f.times.size(), 0.0);
        for (std::size_t j = 0; j < f.times.size(); ++j)
            for (std::size_t i = 0; i < nodes; ++i)
                sp[j] += weight[i] * std::pow(std::abs(f.at(j, i)), pair.p) * cell;
        best = std::max(best, time_norm(sp));
    }
    return best;
}

double cb1_norm(const Lattice& lat, std::span<const double> values, int m) {
    const std::size_t n = lat.size();
    for (int a = 0; a < lat.dim; ++a)
        if (lat.per_axis[a] < 3) throw InvalidInput("cb1_norm: need at least 3 nodes per axis");
    if (values.size() != n * static_cast<std::size_t>(m)) throw InvalidInput("cb1_norm: size mismatch");
    double sup = 0.0, grad = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double g2 = 0.0;
        for (int j = 0; j < m; ++j) {
            sup = std::max(sup, std::abs(values[i * m + j]));
            for (int a = 0; a < lat.dim; ++a) {
                const double dv = (values[lat.shifted(i, a, 1) * m + j] - values[lat.shifted(i, a, -1) * m + j]) /
                                  (2.0 * lat.spacing(a));
                g2 += dv * dv;
            }
        }
        grad = std::max(grad, std::sqrt(g2));
    }
    return sup + grad;
}

KResult k_constant(const ProblemSpec& spec, const ProbeGrid& probe) {
    validate(spec);
    const Lattice lat(spec.dim_d, probe.nodes);
    const auto coords = lat.coordinates();
    const std::size_t n = lat.size();
    const Points pts{coords, n, spec.dim_d};
    const auto times = probe_times(spec.horizon_T, probe.time_slices);
    const std::size_t m = spec.dim_m;
    const std::vector<double> r1(m * n, 0.0), r2(spec.dim_d * m * n, 0.0),
        r3(static_cast<std::size_t>(spec.dim_d * spec.dim_d) * m * n, 0.0);

    KResult res;
    auto fail = [&](double t, std::size_t p) {
        res.value = std::numeric_limits<double>::infinity();
        res.finite = false;
        res.where = where_string(t, pts, p);
        return res;
    };

    const auto u0 = eval_u0(spec, pts);
    double u0sup = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
        const double v = vec_norm(u0, m, n, p);
        if (!std::isfinite(v)) return fail(0.0, p);
        u0sup = std::max(u0sup, v);
    }
    std::vector<double> vsup(times.size(), 0.0), gsup(times.size(), 0.0);
    for (std::size_t j = 0; j < times.size(); ++j) {
        const auto V = eval_V(spec, times[j], pts);
        const auto g = eval_g(spec, times[j], pts, r1, r2, r3);
        for (std::size_t p = 0; p < n; ++p) {
            if (!std::isfinite(V[p])) return fail(times[j], p);
            vsup[j] = std::max(vsup[j], std::abs(V[p]));
            const double gn = vec_norm(g, m, n, p);
            if (!std::isfinite(gn)) return fail(times[j], p);
            gsup[j] = std::max(gsup[j], gn);
        }
    }
    const double T = spec.horizon_T;
    res.value = std::exp(trapezoid_window(times, vsup, 0.0, T)) * (u0sup + trapezoid_window(times, gsup, 0.0, T));
    if (!std::isfinite(res.value)) {
        res.finite = false;
        res.where = "overflow in exp of the integrated potential";
    }
    return res;
}

namespace {

// r1 probe set in the ball of radius k; always contains 0 and the axis points +-k.
std::vector<std::vector<double>> r1_probes(int m, double k) {
    std::vector<std::vector<double>> out;
    if (m == 1) {
        const int half = 16;
        for (int i = -half; i <= half; ++i) out.push_back({k * i / half});
        return out;
    }
    out.push_back(std::vector<double>(m, 0.0));
    for (int j = 0; j < m; ++j)
        for (double s : {-1.0, -0.5, 0.5, 1.0}) {
            std::vector<double> r(m, 0.0);
            r[j] = s * k;
            out.push_back(r);
        }
    for (int i = 0; i < 64; ++i) {
        auto h = halton(i, m);
        std::vector<double> r(m);
        double nr = 0.0;
        for (int j = 0; j < m; ++j) {
            r[j] = (2.0 * h[j] - 1.0) * k;
            nr += r[j] * r[j];
        }
        nr = std::sqrt(nr);
        if (nr > k && nr > 0.0)
            for (double& v : r) v *= k / nr;
        out.push_back(r);
    }
    return out;
}

std::vector<std::vector<double>> box_probes(std::size_t dims, double box) {
    std::vector<std::vector<double>> out;
    out.push_back(std::vector<double>(dims, 0.0));
    for (std::size_t j = 0; j < dims; ++j)
        for (double s : {-1.0, 1.0}) {
            std::vector<double> r(dims, 0.0);
            r[j] = s * box;
            out.push_back(r);
        }
    for (int i = 0; i < 16; ++i) {
        auto h = halton(i + 7, dims);
        std::vector<double> r(dims);
        for (std::size_t j = 0; j < dims; ++j) r[j] = (2.0 * h[j] - 1.0) * box;
        out.push_back(r);
    }
    return out;
}

}  // namespace

SpaceTimeField fbar_field(const ProblemSpec& spec, double k, const ProbeGrid& probe) {
    validate(spec);
    SpaceTimeField f;
    f.lattice = Lattice(spec.dim_d, probe.nodes);
    f.times = probe_times(spec.horizon_T, probe.time_slices);
    const std::size_t n = f.lattice.size();
    f.values.assign(f.times.size() * n, 0.0);
    if (!spec.nonlinearity_F) return f;

    const int d = spec.dim_d, m = spec.dim_m;
    const auto p1 = r1_probes(m, k);
    const auto p2 = box_probes(static_cast<std::size_t>(d * m), probe.box);
    const std::size_t combos = p1.size() * p2.size();
    const std::size_t total = combos * n;
    const auto base = f.lattice.coordinates();
    std::vector<double> coords(d * total), r1(m * total), r2(d * m * total);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < combos; ++c) {
            const std::size_t p = i * combos + c;
            for (int a = 0; a < d; ++a) coords[a * total + p] = base[a * n + i];
            const auto& a1 = p1[c / p2.size()];
            const auto& a2 = p2[c % p2.size()];
            for (int j = 0; j < m; ++j) r1[j * total + p] = a1[j];
            for (int q = 0; q < d * m; ++q) r2[q * total + p] = a2[q];
        }
    const Points pts{coords, total, d};
    for (std::size_t j = 0; j < f.times.size(); ++j) {
        const auto F = eval_F(spec, f.times[j], pts, r1, r2);
        for (std::size_t i = 0; i < n; ++i) {
            double best = 0.0;
            for (std::size_t c = 0; c < combos; ++c) {
                const double v = vec_norm(F, d, total, i * combos + c);
                if (!std::isfinite(v)) {
                    best = std::numeric_limits<double>::infinity();
                    break;
                }
                best = std::max(best, v);
            }
            f.values[j * n + i] = best;
        }
    }
    return f;
}

std::vector<double> symmetric_eigenvalues(std::span<const double> a, int d) {
    Eigen::MatrixXd M(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) M(i, j) = a[i * d + j];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M, Eigen::EigenvaluesOnly);
    std::vector<double> ev(d);
    for (int i = 0; i < d; ++i) ev[i] = es.eigenvalues()(i);
    return ev;
}

AssumptionReport probe_assumptions(const ProblemSpec& spec, const KatoPair& pair, int budget,
                                   const ProbeOptions& opts) {
    if (budget < 100) throw InvalidInput("probe_assumptions: budget must be >= 100");
    validate(spec);
    AssumptionReport rep;
    const int d = spec.dim_d, m = spec.dim_m;
    const double T = spec.horizon_T;
    const double inf = std::numeric_limits<double>::infinity();

    auto note_failure = [&](const std::string& what) {
        if (!rep.failure) rep.failure = what;
    };

    // Lattice-based quantities.
    const Lattice lat(d, opts.grid.nodes);
    const std::size_t n = lat.size();
    const auto coords = lat.coordinates();
    const Points pts{coords, n, d};
    const auto times = probe_times(T, opts.grid.time_slices);

    const auto kres = k_constant(spec, opts.grid);
    rep.k_constant = kres.value;
    if (!kres.finite) note_failure("k constant: " + kres.where);

    {
        const auto u0 = eval_u0(spec, pts);
        std::vector<double> node_major(n * m);
        for (std::size_t i = 0; i < n; ++i)
            for (int j = 0; j < m; ++j) node_major[i * m + j] = u0[j * n + i];
        rep.u0_cb1 = lat.per_axis[0] >= 3 ? cb1_norm(lat, node_major, m) : inf;
        if (!std::isfinite(rep.u0_cb1)) note_failure("initial_u0 not finite");
    }

    SpaceTimeField Vf{times, lat, std::vector<double>(times.size() * n)};
    SpaceTimeField gf{times, lat, std::vector<double>(times.size() * n)};
    rep.ellipticity_min = inf;
    rep.ellipticity_max = 0.0;
    bool symmetric = true;
    const std::vector<double> z1(m * n, 0.0), z2(d * m * n, 0.0), z3(d * d * m * n, 0.0);
    for (std::size_t j = 0; j < times.size(); ++j) {
        const double t = times[j];
        const auto V = eval_V(spec, t, pts);
        const auto g = eval_g(spec, t, pts, z1, z2, z3);
        const auto A = eval_a(spec, t, pts);
        const auto B = eval_b(spec, t, pts);
        for (std::size_t i = 0; i < n; ++i) {
            Vf.values[j * n + i] = std::abs(V[i]);
            gf.values[j * n + i] = vec_norm(g, m, n, i);
            if (!std::isfinite(V[i])) note_failure("potential_V non-finite at " + where_string(t, pts, i));
            std::vector<double> ai(d * d);
            double amax = 0.0;
            for (int q = 0; q < d * d; ++q) {
                ai[q] = A[q * n + i];
                amax = std::max(amax, std::abs(ai[q]));
                if (!std::isfinite(ai[q])) note_failure("diffusion_a non-finite at " + where_string(t, pts, i));
            }
            for (int r = 0; r < d; ++r)
                for (int c = 0; c < d; ++c)
                    if (std::abs(ai[r * d + c] - ai[c * d + r]) > 1e-9 * std::max(1.0, amax)) symmetric = false;
            if (std::isfinite(amax)) {
                const auto ev = symmetric_eigenvalues(ai, d);
                rep.ellipticity_min = std::min(rep.ellipticity_min, ev.front());
                rep.ellipticity_max = std::max(rep.ellipticity_max, ev.back());
            }
            // one-sided lattice differences of a and b
            for (int ax = 0; ax < d; ++ax) {
                const std::size_t nb = lat.shifted(i, ax, 1);
                const double h = lat.spacing(ax);
                for (int q = 0; q < d * d; ++q)
                    rep.grad_a_probe = std::max(rep.grad_a_probe, std::abs(A[q * n + nb] - A[q * n + i]) / h);
                double db = 0.0;
                for (int q = 0; q < d; ++q) db += (B[q * n + nb] - B[q * n + i]) * (B[q * n + nb] - B[q * n + i]);
                rep.lipschitz_b_probe = std::max(rep.lipschitz_b_probe, std::sqrt(db) / h);
            }
        }
    }
    rep.kato_norm_V = tilde_Lpq_norm(Vf, pair, 0.0, T, spec.domain);
    rep.kato_norm_gbar = tilde_Lpq_norm(gf, pair, 0.0, T, spec.domain);
    if (std::isfinite(rep.k_constant)) {
        const auto fb = fbar_field(spec, rep.k_constant, opts.grid);
        rep.kato_norm_Fbar = tilde_Lpq_norm(fb, pair, 0.0, T, spec.domain);
    } else {
        rep.kato_norm_Fbar = inf;
    }

    // Quasi-random slope probes in (t, x, r1, r2, r3).
    const double kball = std::isfinite(rep.k_constant) && rep.k_constant > 0.0 ? rep.k_constant : 1.0;
    const std::size_t n1 = m, n2 = static_cast<std::size_t>(d) * m, n3 = static_cast<std::size_t>(d) * d * m;
    const std::size_t dims = 1 + d + n1 + n2 + n3;
    const double delta = 1e-4;
    std::vector<double> prevF;
    for (int s = 0; s < budget; ++s) {
        const auto h = halton(s, dims);
        const double t = h[0] * T;
        std::vector<double> x(d), r1(n1), r2(n2), r3(n3);
        for (int a = 0; a < d; ++a) x[a] = h[1 + a];
        double nr = 0.0;
        for (std::size_t j = 0; j < n1; ++j) {
            r1[j] = (2.0 * h[1 + d + j] - 1.0) * kball;
            nr += r1[j] * r1[j];
        }
        nr = std::sqrt(nr);
        if (nr > kball)
            for (double& v : r1) v *= kball / nr;
        for (std::size_t j = 0; j < n2; ++j) r2[j] = (2.0 * h[1 + d + n1 + j] - 1.0) * opts.grid.box;
        for (std::size_t j = 0; j < n3; ++j) r3[j] = (2.0 * h[1 + d + n1 + n2 + j] - 1.0) * opts.grid.box;
        const Points p{x, 1, d};

        const auto F0 = eval_F(spec, t, p, r1, r2);
        const auto G0 = eval_g(spec, t, p, r1, r2, r3);
        auto finite_all = [](const std::vector<double>& v) {
            return std::all_of(v.begin(), v.end(), [](double q) { return std::isfinite(q); });
        };
        if (!finite_all(F0)) note_failure("nonlinearity_F non-finite at " + where_string(t, p, 0));
        if (!finite_all(G0)) note_failure("source_g non-finite at " + where_string(t, p, 0));

        auto diff_norm = [](const std::vector<double>& a, const std::vector<double>& b) {
            double s2 = 0.0;
            for (std::size_t q = 0; q < a.size(); ++q) s2 += (a[q] - b[q]) * (a[q] - b[q]);
            return std::sqrt(s2);
        };
        for (std::size_t j = 0; j < n1 + n2; ++j) {
            auto q1 = r1;
            auto q2 = r2;
            if (j < n1)
                q1[j] += delta;
            else
                q2[j - n1] += delta;
            rep.lipschitz_F_probe = std::max(rep.lipschitz_F_probe, diff_norm(eval_F(spec, t, p, q1, q2), F0) / delta);
        }
        for (std::size_t j = 0; j < n3; ++j) {
            auto q3 = r3;
            q3[j] += delta;
            rep.alpha_probe = std::max(rep.alpha_probe, diff_norm(eval_g(spec, t, p, r1, r2, q3), G0) / delta);
        }
        if (!prevF.empty()) rep.oscillation_F_probe = std::max(rep.oscillation_F_probe, diff_norm(F0, prevF));
        prevF = F0;
    }

    // Growth exponent of g in (r1, r2): fit log(G/(e+R)) = log C + theta log log(e+R) over large radii.
    if (spec.source_g && !spec.g_spatial_only) {
        std::vector<double> zs, ys;
        for (int r = 0; r <= 8; ++r) {
            const double R = std::pow(10.0, 2.0 + 0.5 * r);
            double G = 0.0;
            for (int s = 0; s < 16; ++s) {
                const auto h = halton(s + 101, 1 + d + n1 + n2);
                const double t = h[0] * T;
                std::vector<double> x(d), dir(n1 + n2);
                for (int a = 0; a < d; ++a) x[a] = h[1 + a];
                double nd = 0.0;
                for (std::size_t j = 0; j < n1 + n2; ++j) {
                    dir[j] = 2.0 * h[1 + d + j] - 1.0;
                    nd += std::abs(dir[j]);
                }
                if (nd == 0.0) continue;
                std::vector<double> r1(n1), r2(n2), r3(n3, 0.0);
                for (std::size_t j = 0; j < n1; ++j) r1[j] = dir[j] / nd * R;
                for (std::size_t j = 0; j < n2; ++j) r2[j] = dir[n1 + j] / nd * R;
                const Points p{x, 1, d};
                const auto gr = eval_g(spec, t, p, r1, r2, r3);
                const auto g0 = eval_g(spec, t, p, std::vector<double>(n1, 0.0), std::vector<double>(n2, 0.0), r3);
                double s2 = 0.0;
                for (std::size_t q = 0; q < gr.size(); ++q) s2 += (gr[q] - g0[q]) * (gr[q] - g0[q]);
                G = std::max(G, std::sqrt(s2));
            }
            if (G > 0.0 && std::isfinite(G)) {
                zs.push_back(std::log(std::log(std::numbers::e + R)));
                ys.push_back(std::log(G / (std::numbers::e + R)));
            }
        }
        if (zs.size() >= 3) {
            double mz = 0.0, my = 0.0;
            for (std::size_t i = 0; i < zs.size(); ++i) {
                mz += zs[i];
                my += ys[i];
            }
            mz /= zs.size();
            my /= zs.size();
            double num = 0.0, den = 0.0;
            for (std::size_t i = 0; i < zs.size(); ++i) {
                num += (zs[i] - mz) * (ys[i] - my);
                den += (zs[i] - mz) * (zs[i] - mz);
            }
            rep.log_growth_probe = den > 0.0 ? num / den : 0.0;
        }
    }

    const double headroom = 1.1;
    const bool ok_eval = !rep.failure.has_value();
    auto fin = [](double v) { return std::isfinite(v); };
    rep.pass_flags["kato_pair"] = kato_class_check(d, pair);
    rep.pass_flags["H_a_b"] = ok_eval && symmetric && rep.ellipticity_min > 0.0 && fin(rep.ellipticity_max) &&
                              fin(rep.lipschitz_b_probe) && fin(rep.grad_a_probe);
    rep.pass_flags["H_V_u0"] = ok_eval && rep.pass_flags["kato_pair"] && fin(rep.kato_norm_V) && fin(rep.u0_cb1);
    rep.pass_flags["H0_F_g"] = ok_eval && spec.g_spatial_only && fin(rep.k_constant) && fin(rep.kato_norm_Fbar) &&
                               fin(rep.kato_norm_gbar) && fin(rep.lipschitz_F_probe) && fin(rep.oscillation_F_probe);
    rep.pass_flags["H_F_g"] = ok_eval && rep.pass_flags["kato_pair"] && fin(rep.kato_norm_Fbar) &&
                              fin(rep.kato_norm_gbar) && fin(rep.lipschitz_F_probe) && fin(rep.alpha_probe);
    rep.pass_flags["Hprime_F_g"] = ok_eval && rep.log_growth_probe * headroom < 0.5;
    rep.pass_flags["alpha_small"] = rep.alpha_probe * headroom <= opts.alpha_threshold;
    return rep;
}

}  // namespace fkpde
