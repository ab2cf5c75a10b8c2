#pragma once

#include <functional>
#include <span>
#include <vector>

#include "fkpde/catalog.hpp"
#include "fkpde/feynman_kac.hpp"
#include "fkpde/fd_oracle.hpp"
#include "fkpde/problem.hpp"

namespace fkpde {

/// F of the KPZ-type system; depends on (t, x, r1) only. out[i*n + p].
using KpzNonlinearity =
    std::function<void(double t, const Points& x, std::span<const double> r1, std::span<double> out)>;

/// du = L u - beta <a grad u, grad u> + F(phi_beta(u)) . grad u + Vbar, componentwise in u.
/// `base` supplies d, m, T, a, b and u0; its V, F and g are ignored.
struct KpzProblem {
    ProblemSpec base;
    double beta = 1.0;
    KpzNonlinearity F;  ///< empty = 0
    ScalarCoef V_bar;   ///< empty = 0
};

/// (1 - e^{-beta u_i}) / beta per component; u itself at beta = 0. Exponent clamped to +-700.
std::vector<double> phi_beta(std::span<const double> u, double beta);
double phi_beta(double u, double beta);

/// v = e^{-beta u}: potential -beta V, F(beta^{-1}(1 - r1)), no source, v0 = e^{-beta u0}.
ProblemSpec build_transformed_problem(const KpzProblem& kpz);

/// The untransformed equation in the library's form: F_total = F(phi_beta(r1)) - beta a r2,
/// g = Vbar. Only m = 1, since the quadratic term is not a common transport for m > 1.
ProblemSpec build_direct_problem(const KpzProblem& kpz);

/// u = -log(v) / beta; throws InvalidInput naming the first nonpositive value.
GridSeries invert_solution(const GridSeries& v, double beta);
PsiField invert_solution(const PsiField& v, double beta);

/// Catalog entry: a = diffusion I, u0 = amplitude sin(2 pi mode x_0), Vbar = V_amp cos(2 pi x_0),
/// F = F_amp sin(r1) e_0.
KpzProblem make_kpz_problem(const CatalogOptions& opts);

}  // namespace fkpde
