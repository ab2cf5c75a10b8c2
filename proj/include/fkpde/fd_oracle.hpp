#pragma once

#include <string>
#include <vector>

#include "fkpde/lattice.hpp"
#include "fkpde/problem.hpp"

// Method-of-lines finite differences for the PDE side. Shares only lattice and
// problem types with the Monte Carlo code.
namespace fkpde {

enum class FdScheme { ImexEuler, ExplicitRk4 };
const char* to_string(FdScheme s);
FdScheme fd_scheme_from(const std::string& s);

struct CflReport {
    double max_stable = 0.0;  ///< explicit bound; +inf for the implicit scheme
    double used = 0.0;
};

struct FdOptions {
    FdScheme scheme = FdScheme::ExplicitRk4;
    double dt = 0.0;        ///< requested step; 0 picks the largest admissible one
    double cfl = 0.4;
    int out_slices = 21;    ///< output times i*T/(out_slices-1)
    bool every_step = false;  ///< output every time step instead
};

struct FdSolution {
    GridSeries u;
    CflReport cfl;
    FdScheme scheme = FdScheme::ExplicitRk4;
    double dt = 0.0;
    int steps = 0;
};

/// Node arrays use entry-major layout: u[c*n + node], grad[(i*m + c)*n + node],
/// hess[((i*d + k)*m + c)*n + node].
struct FdDerivatives {
    std::vector<double> grad, hess;
};
FdDerivatives fd_derivatives(const Lattice& lat, int m, std::span<const double> u);

/// tr(a hess u) + b.grad u + V u + F(u, grad u).grad u + g(u, grad u, hess u) at every node.
std::vector<double> discrete_operator(const ProblemSpec& spec, double t, const Lattice& lat,
                                      std::span<const double> u, std::span<const double> grad,
                                      std::span<const double> hess);
std::vector<double> discrete_operator(const ProblemSpec& spec, double t, const Lattice& lat,
                                      std::span<const double> u);

FdSolution fd_solve(const ProblemSpec& spec, const Lattice& lat, const FdOptions& opts = {});

/// max |u_t - u_0 - int_0^t D(s, u_s) ds| with trapezoid quadrature over the series times.
double residual_of(const GridSeries& u, const ProblemSpec& spec);

/// ||D(0, u0)||_inf + ||u0||_inf on the lattice.
double problem_scale(const ProblemSpec& spec, const Lattice& lat);

/// u0 sampled on the lattice, node-major (node*m + c).
std::vector<double> sample_initial(const ProblemSpec& spec, const Lattice& lat);

}  // namespace fkpde
