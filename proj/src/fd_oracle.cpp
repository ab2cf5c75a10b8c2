#include "fkpde/fd_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fkpde {

const char* to_string(FdScheme s) { return s == FdScheme::ImexEuler ? "imex-euler" : "explicit-rk4"; }

FdScheme fd_scheme_from(const std::string& s) {
    if (s == "imex-euler" || s == "imex") return FdScheme::ImexEuler;
    if (s == "explicit-rk4" || s == "rk4") return FdScheme::ExplicitRk4;
    throw InvalidInput("unknown fd scheme '" + s + "'");
}

namespace {

void require_lattice(const Lattice& lat, int min_nodes) {
    for (int a = 0; a < lat.dim; ++a)
        if (lat.per_axis[a] < min_nodes) throw InvalidInput("lattice too small for the difference operator");
}

struct NodeSet {
    std::vector<double> coords;
    std::size_t n;
    int d;
    Points pts() const { return Points{coords, n, d}; }
};

NodeSet nodes_of(const Lattice& lat) { return NodeSet{lat.coordinates(), lat.size(), lat.dim}; }

/// Node-major (node*m + c) <-> entry-major (c*n + node).
std::vector<double> to_entry_major(std::span<const double> v, std::size_t n, int m) {
    std::vector<double> out(v.size());
    for (std::size_t node = 0; node < n; ++node)
        for (int c = 0; c < m; ++c) out[c * n + node] = v[node * m + c];
    return out;
}

std::vector<double> to_node_major(std::span<const double> v, std::size_t n, int m) {
    std::vector<double> out(v.size());
    for (std::size_t node = 0; node < n; ++node)
        for (int c = 0; c < m; ++c) out[node * m + c] = v[c * n + node];
    return out;
}

}  // namespace

FdDerivatives fd_derivatives(const Lattice& lat, int m, std::span<const double> u) {
    require_lattice(lat, 4);
    const int d = lat.dim;
    const std::size_t n = lat.size();
    FdDerivatives D;
    D.grad.assign(static_cast<std::size_t>(d) * m * n, 0.0);
    D.hess.assign(static_cast<std::size_t>(d) * d * m * n, 0.0);
    for (std::size_t node = 0; node < n; ++node) {
        for (int i = 0; i < d; ++i) {
            const double hi = 1.0 / lat.per_axis[i];
            const std::size_t ip = lat.shifted(node, i, 1), im = lat.shifted(node, i, -1);
            for (int c = 0; c < m; ++c) {
                const double up = u[c * n + ip], dn = u[c * n + im], mid = u[c * n + node];
                D.grad[(i * m + c) * n + node] = (up - dn) / (2.0 * hi);
                D.hess[((i * d + i) * m + c) * n + node] = (up - 2.0 * mid + dn) / (hi * hi);
            }
            for (int k = 0; k < d; ++k) {
                if (k == i) continue;
                const double hk = 1.0 / lat.per_axis[k];
                const std::size_t pp = lat.shifted(ip, k, 1), pm = lat.shifted(ip, k, -1);
                const std::size_t mp = lat.shifted(im, k, 1), mm = lat.shifted(im, k, -1);
                for (int c = 0; c < m; ++c)
                    D.hess[((i * d + k) * m + c) * n + node] =
                        (u[c * n + pp] - u[c * n + pm] - u[c * n + mp] + u[c * n + mm]) / (4.0 * hi * hk);
            }
        }
    }
    return D;
}

std::vector<double> discrete_operator(const ProblemSpec& spec, double t, const Lattice& lat,
                                      std::span<const double> u, std::span<const double> grad,
                                      std::span<const double> hess) {
    require_lattice(lat, 4);
    const int d = lat.dim, m = spec.dim_m;
    const std::size_t n = lat.size();
    const auto ns = nodes_of(lat);
    std::vector<double> out(m * n, 0.0);
    const auto a = eval_a(spec, t, ns.pts());
    for (int c = 0; c < m; ++c)
        for (std::size_t node = 0; node < n; ++node) {
            double s = 0.0;
            for (int i = 0; i < d; ++i)
                for (int k = 0; k < d; ++k) s += a[(i * d + k) * n + node] * hess[((i * d + k) * m + c) * n + node];
            out[c * n + node] = s;
        }
    auto add_transport = [&](const std::vector<double>& vec) {
        for (int c = 0; c < m; ++c)
            for (std::size_t node = 0; node < n; ++node) {
                double s = 0.0;
                for (int i = 0; i < d; ++i) s += vec[i * n + node] * grad[(i * m + c) * n + node];
                out[c * n + node] += s;
            }
    };
    if (spec.drift_b) add_transport(eval_b(spec, t, ns.pts()));
    if (spec.nonlinearity_F) add_transport(eval_F(spec, t, ns.pts(), u, grad));
    if (spec.potential_V) {
        const auto V = eval_V(spec, t, ns.pts());
        for (int c = 0; c < m; ++c)
            for (std::size_t node = 0; node < n; ++node) out[c * n + node] += V[node] * u[c * n + node];
    }
    if (spec.source_g) {
        const auto g = eval_g(spec, t, ns.pts(), u, grad, hess);
        for (std::size_t q = 0; q < m * n; ++q) out[q] += g[q];
    }
    return out;
}

std::vector<double> discrete_operator(const ProblemSpec& spec, double t, const Lattice& lat,
                                      std::span<const double> u) {
    const auto D = fd_derivatives(lat, spec.dim_m, u);
    return discrete_operator(spec, t, lat, u, D.grad, D.hess);
}

std::vector<double> sample_initial(const ProblemSpec& spec, const Lattice& lat) {
    const auto ns = nodes_of(lat);
    const auto u0 = eval_u0(spec, ns.pts());
    return to_node_major(u0, lat.size(), spec.dim_m);
}

double problem_scale(const ProblemSpec& spec, const Lattice& lat) {
    const auto ns = nodes_of(lat);
    const auto u0 = eval_u0(spec, ns.pts());
    const auto D = discrete_operator(spec, 0.0, lat, u0);
    double a = 0.0, b = 0.0;
    for (double v : D) a = std::max(a, std::abs(v));
    for (double v : u0) b = std::max(b, std::abs(v));
    return a + b;
}

namespace {

/// Periodic tridiagonal solve: sub[i] x[i-1] + diag[i] x[i] + sup[i] x[i+1] = r[i], indices mod n.
/// Thomas on the Sherman-Morrison-corrected system.
void solve_cyclic(const std::vector<double>& sub, const std::vector<double>& diag, const std::vector<double>& sup,
                  std::vector<double>& x) {
    const std::size_t n = diag.size();
    const double alpha = sup[n - 1];  // A[n-1][0]
    const double beta = sub[0];       // A[0][n-1]
    const double gamma = -diag[0];
    std::vector<double> bb(diag);
    bb[0] = diag[0] - gamma;
    bb[n - 1] = diag[n - 1] - alpha * beta / gamma;
    auto thomas = [&](std::vector<double> r) {
        std::vector<double> c(n), y(n);
        double den = bb[0];
        y[0] = r[0] / den;
        for (std::size_t i = 1; i < n; ++i) {
            c[i] = sup[i - 1] / den;
            den = bb[i] - sub[i] * c[i];
            y[i] = (r[i] - sub[i] * y[i - 1]) / den;
        }
        for (std::size_t i = n - 1; i-- > 0;) y[i] -= c[i + 1] * y[i + 1];
        return y;
    };
    const auto y = thomas(x);
    std::vector<double> u(n, 0.0);
    u[0] = gamma;
    u[n - 1] = alpha;
    const auto z = thomas(u);
    const double fact = (y[0] + beta * y[n - 1] / gamma) / (1.0 + z[0] + beta * z[n - 1] / gamma);
    for (std::size_t i = 0; i < n; ++i) x[i] = y[i] - fact * z[i];
}

double max_eigen_a(const ProblemSpec& spec, const Lattice& lat, bool& off_diagonal) {
    const auto ns = nodes_of(lat);
    const int d = lat.dim;
    const std::size_t n = lat.size();
    double best = 0.0;
    off_diagonal = false;
    for (int j = 0; j <= 8; ++j) {
        const double t = spec.horizon_T * j / 8.0;
        const auto a = eval_a(spec, t, ns.pts());
        std::vector<double> mtx(d * d);
        for (std::size_t node = 0; node < n; ++node) {
            for (int q = 0; q < d * d; ++q) mtx[q] = a[q * n + node];
            for (int i = 0; i < d; ++i)
                for (int k = 0; k < d; ++k)
                    if (i != k && mtx[i * d + k] != 0.0) off_diagonal = true;
            const auto ev = symmetric_eigenvalues(mtx, d);
            best = std::max(best, ev.back());
        }
    }
    return best;
}

double max_abs(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

}  // namespace

FdSolution fd_solve(const ProblemSpec& spec, const Lattice& lat, const FdOptions& opts) {
    validate(spec);
    require_lattice(lat, 4);
    if (lat.dim != spec.dim_d) throw InvalidInput("fd lattice dimension differs from the problem");
    if (!(opts.cfl > 0.0)) throw InvalidInput("fd.cfl must be positive");
    if (opts.out_slices < 2 && !opts.every_step) throw InvalidInput("fd needs at least two output slices");
    const int d = lat.dim, m = spec.dim_m;
    const std::size_t n = lat.size();
    double h = 1.0;
    for (int a = 0; a < d; ++a) h = std::min(h, lat.spacing(a));
    bool offdiag = false;
    const double lmax = max_eigen_a(spec, lat, offdiag);
    if (!(lmax > 0.0)) throw InvalidInput("diffusion must be positive definite");

    FdSolution sol;
    sol.scheme = opts.scheme;
    const double explicit_bound = opts.cfl * h * h / (2.0 * lmax * d);
    if (opts.scheme == FdScheme::ImexEuler) {
        if (d > 2) throw InvalidInput("imex-euler supports d <= 2; use explicit-rk4");
        if (offdiag) throw InvalidInput("imex-euler needs a diagonal diffusion matrix; use explicit-rk4");
        sol.cfl.max_stable = std::numeric_limits<double>::infinity();
    } else {
        sol.cfl.max_stable = explicit_bound;
    }
    const double T = spec.horizon_T;
    double target = opts.dt > 0.0 ? opts.dt : (opts.scheme == FdScheme::ImexEuler ? 1e-4 : explicit_bound);
    if (opts.scheme == FdScheme::ExplicitRk4 && target > explicit_bound)
        throw InvalidInput("requested fd.dt exceeds the explicit stability bound");
    int per_out, intervals;
    if (opts.every_step) {
        intervals = std::max(1, static_cast<int>(std::ceil(T / target - 1e-9)));
        per_out = 1;
    } else {
        intervals = opts.out_slices - 1;
        per_out = std::max(1, static_cast<int>(std::ceil(T / intervals / target - 1e-9)));
    }
    const int steps = intervals * per_out;
    const double dt = T / steps;
    sol.dt = dt;
    sol.steps = steps;
    sol.cfl.used = dt;

    const auto ns = nodes_of(lat);
    std::vector<double> u = eval_u0(spec, ns.pts());  // entry-major
    const double scale0 = max_abs(u) + 1.0;
    sol.u.lattice = lat;
    sol.u.m = m;
    sol.u.times.push_back(0.0);
    {
        const auto nm = to_node_major(u, n, m);
        sol.u.values.insert(sol.u.values.end(), nm.begin(), nm.end());
    }

    auto rhs = [&](double t, const std::vector<double>& v) { return discrete_operator(spec, t, lat, v); };

    for (int k = 0; k < steps; ++k) {
        const double t = T * k / steps;
        const double t1 = (k + 1 == steps) ? T : T * (k + 1) / steps;
        if (opts.scheme == FdScheme::ExplicitRk4) {
            const auto k1 = rhs(t, u);
            std::vector<double> tmp(u.size());
            for (std::size_t q = 0; q < u.size(); ++q) tmp[q] = u[q] + 0.5 * dt * k1[q];
            const auto k2 = rhs(t + 0.5 * dt, tmp);
            for (std::size_t q = 0; q < u.size(); ++q) tmp[q] = u[q] + 0.5 * dt * k2[q];
            const auto k3 = rhs(t + 0.5 * dt, tmp);
            for (std::size_t q = 0; q < u.size(); ++q) tmp[q] = u[q] + dt * k3[q];
            const auto k4 = rhs(t1, tmp);
            for (std::size_t q = 0; q < u.size(); ++q) u[q] += dt / 6.0 * (k1[q] + 2.0 * k2[q] + 2.0 * k3[q] + k4[q]);
        } else {
            // Explicit part: everything except the diagonal second-order terms.
            const auto D = fd_derivatives(lat, m, u);
            auto full = discrete_operator(spec, t, lat, u, D.grad, D.hess);
            const auto a_now = eval_a(spec, t, ns.pts());
            for (int c = 0; c < m; ++c)
                for (std::size_t node = 0; node < n; ++node)
                    for (int i = 0; i < d; ++i)
                        full[c * n + node] -= a_now[(i * d + i) * n + node] * D.hess[((i * d + i) * m + c) * n + node];
            for (std::size_t q = 0; q < u.size(); ++q) u[q] += dt * full[q];
            // Implicit diffusion, one axis at a time.
            const auto a1 = eval_a(spec, t1, ns.pts());
            for (int axis = 0; axis < d; ++axis) {
                const int len = lat.per_axis[axis];
                const double inv_h2 = static_cast<double>(len) * len;
                std::vector<double> sub(len), dia(len), sup(len), x(len);
                std::vector<std::size_t> line(len);
                for (std::size_t start = 0; start < n; ++start) {
                    if (lat.multi_index(start)[axis] != 0) continue;
                    for (int i = 0; i < len; ++i) line[i] = (i == 0) ? start : lat.shifted(line[i - 1], axis, 1);
                    for (int i = 0; i < len; ++i) {
                        const double r = dt * a1[(axis * d + axis) * n + line[i]] * inv_h2;
                        sub[i] = -r;
                        sup[i] = -r;
                        dia[i] = 1.0 + 2.0 * r;
                    }
                    for (int c = 0; c < m; ++c) {
                        for (int i = 0; i < len; ++i) x[i] = u[c * n + line[i]];
                        solve_cyclic(sub, dia, sup, x);
                        for (int i = 0; i < len; ++i) u[c * n + line[i]] = x[i];
                    }
                }
            }
        }
        for (double v : u)
            if (!std::isfinite(v)) throw BlowUp("non-finite finite-difference state", t1);
        if (max_abs(u) > 1e6 * scale0) throw BlowUp("finite-difference instability (norm growth above 1e6)", t1);
        if ((k + 1) % per_out == 0) {
            sol.u.times.push_back(t1);
            const auto nm = to_node_major(u, n, m);
            sol.u.values.insert(sol.u.values.end(), nm.begin(), nm.end());
        }
    }
    return sol;
}

double residual_of(const GridSeries& u, const ProblemSpec& spec) {
    const std::size_t n = u.nodes();
    const int m = u.m;
    const std::size_t S = u.times.size();
    if (S == 0) return 0.0;
    std::vector<std::vector<double>> D(S);
    for (std::size_t s = 0; s < S; ++s) {
        const auto em = to_entry_major(std::span<const double>(u.values).subspan(s * n * m, n * m), n, m);
        D[s] = to_node_major(discrete_operator(spec, u.times[s], u.lattice, em), n, m);
    }
    std::vector<double> integral(n * m, 0.0);
    double worst = 0.0;
    for (std::size_t s = 1; s < S; ++s) {
        const double dt = u.times[s] - u.times[s - 1];
        for (std::size_t q = 0; q < n * m; ++q) {
            integral[q] += 0.5 * dt * (D[s - 1][q] + D[s][q]);
            const double r = u.values[s * n * m + q] - u.values[q] - integral[q];
            worst = std::max(worst, std::abs(r));
        }
    }
    return worst;
}

}  // namespace fkpde
