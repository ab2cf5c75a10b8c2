#include "fkpde/transforms.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>

namespace fkpde {

double phi_beta(double u, double beta) {
    if (beta == 0.0) return u;
    const double z = std::clamp(-beta * u, -700.0, 700.0);
    return -std::expm1(z) / beta;
}

std::vector<double> phi_beta(std::span<const double> u, double beta) {
    std::vector<double> out(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) out[i] = phi_beta(u[i], beta);
    return out;
}

ProblemSpec build_transformed_problem(const KpzProblem& kpz) {
    if (kpz.beta == 0.0) throw InvalidInput("the transform needs beta != 0; solve the base problem directly");
    if (!std::isfinite(kpz.beta)) throw InvalidInput("beta must be finite");
    validate(kpz.base);
    const double beta = kpz.beta;
    ProblemSpec s = kpz.base;
    s.name = kpz.base.name + "-transformed";
    s.source_g = {};
    s.g_spatial_only = true;
    s.potential_V = {};
    if (kpz.V_bar) {
        const ScalarCoef V = kpz.V_bar;
        s.potential_V = [V, beta](double t, const Points& x, std::span<double> out) {
            V(t, x, out);
            for (std::size_t p = 0; p < x.count; ++p) out[p] = -beta * out[p];
        };
    }
    s.nonlinearity_F = {};
    if (kpz.F) {
        const KpzNonlinearity F = kpz.F;
        s.nonlinearity_F = [F, beta](double t, const Points& x, std::span<const double> r1, std::span<const double>,
                                     std::span<double> out) {
            thread_local std::vector<double> w;
            w.resize(r1.size());
            for (std::size_t q = 0; q < r1.size(); ++q) w[q] = (1.0 - r1[q]) / beta;
            F(t, x, w, out);
        };
    }
    const InitialCoef u0 = kpz.base.initial_u0;
    s.initial_u0 = [u0, beta](const Points& x, std::span<double> out) {
        u0(x, out);
        for (double& v : out) v = std::exp(std::clamp(-beta * v, -700.0, 700.0));
    };
    return s;
}

ProblemSpec build_direct_problem(const KpzProblem& kpz) {
    validate(kpz.base);
    if (kpz.base.dim_m != 1) throw InvalidInput("the direct KPZ form needs m = 1");
    const double beta = kpz.beta;
    const int d = kpz.base.dim_d;
    ProblemSpec s = kpz.base;
    s.name = kpz.base.name + "-direct";
    s.potential_V = {};
    s.source_g = {};
    s.g_spatial_only = true;
    if (kpz.V_bar) {
        const ScalarCoef V = kpz.V_bar;
        s.source_g = [V](double t, const Points& x, std::span<const double>, std::span<const double>,
                         std::span<const double>, std::span<double> out) { V(t, x, out.subspan(0, x.count)); };
    }
    const KpzNonlinearity F = kpz.F;
    const MatrixCoef a = kpz.base.diffusion_a;
    s.nonlinearity_F = [F, a, beta, d](double t, const Points& x, std::span<const double> r1,
                                       std::span<const double> r2, std::span<double> out) {
        const std::size_t n = x.count;
        thread_local std::vector<double> am, w;
        if (F) {
            w.resize(r1.size());
            for (std::size_t q = 0; q < r1.size(); ++q) w[q] = phi_beta(r1[q], beta);
            F(t, x, w, out);
        } else {
            std::fill_n(out.begin(), d * n, 0.0);
        }
        if (beta == 0.0 || r2.empty()) return;
        am.resize(static_cast<std::size_t>(d) * d * n);
        a(t, x, am);
        for (int i = 0; i < d; ++i)
            for (std::size_t p = 0; p < n; ++p) {
                double s = 0.0;
                for (int k = 0; k < d; ++k) s += am[(i * d + k) * n + p] * r2[k * n + p];
                out[i * n + p] -= beta * s;
            }
    };
    return s;
}

namespace {

double invert_one(double v, double beta, std::size_t where) {
    if (!(v > 0.0)) {
        std::ostringstream os;
        os << "nonpositive transformed value " << v << " at entry " << where << " (positivity lost)";
        throw InvalidInput(os.str());
    }
    return -std::log(v) / beta;
}

}  // namespace

GridSeries invert_solution(const GridSeries& v, double beta) {
    if (beta == 0.0) throw InvalidInput("inverse transform needs beta != 0");
    GridSeries u = v;
    for (std::size_t q = 0; q < u.values.size(); ++q) u.values[q] = invert_one(v.values[q], beta, q);
    return u;
}

PsiField invert_solution(const PsiField& v, double beta) {
    if (beta == 0.0) throw InvalidInput("inverse transform needs beta != 0");
    PsiField u = v;
    for (std::size_t q = 0; q < u.values.size(); ++q) {
        u.values[q] = invert_one(v.values[q], beta, q);
        // first-order propagation of the Monte Carlo error through -log(v)/beta
        u.stderr_values[q] = v.stderr_values[q] / (std::abs(beta) * v.values[q]);
    }
    if (!u.gradients.empty()) u = gradient_of_field(std::move(u), GradientMode::GridDifference);
    return u;
}

KpzProblem make_kpz_problem(const CatalogOptions& o) {
    CatalogOptions base = o;
    KpzProblem k;
    k.base = make_problem("heat", base);
    k.base.name = "kpz";
    k.beta = o.beta;
    const double va = o.V_amp;
    if (va != 0.0) k.V_bar = [va](double, const Points& x, std::span<double> out) { cos2pi_axis(x, 0, 1.0, va, out); };
    const double fa = o.F_amp;
    const int d = o.d;
    if (fa != 0.0)
        k.F = [fa, d](double, const Points& x, std::span<const double> r1, std::span<double> out) {
            const std::size_t n = x.count;
            sin_batch(r1.subspan(0, n), fa, out.subspan(0, n));
            std::fill(out.begin() + n, out.begin() + d * n, 0.0);
        };
    if (!o.V_csv.empty()) {
        auto f = std::make_shared<TabulatedField>(TabulatedField::from_csv(o.V_csv, o.d));
        k.V_bar = [f](double, const Points& x, std::span<double> out) { f->evaluate(x, out); };
    }
    return k;
}

}  // namespace fkpde
