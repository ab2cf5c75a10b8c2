#pragma once

#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fkpde/lattice.hpp"

namespace fkpde {

// Coefficient maps are evaluated on batches of points. Layouts (p = point index, n = count):
//   scalar          out[p]
//   vector (d)      out[i*n + p]
//   matrix (d x d)  out[(i*d + j)*n + p]
//   r1 (m)          r1[j*n + p]
//   r2 (d x m)      r2[(i*m + j)*n + p]          entry (axis i, component j)
//   r3 (d x d x m)  r3[((i*d + k)*m + j)*n + p]
// Time arguments are PDE times t in [0,T].
using ScalarCoef = std::function<void(double t, const Points& x, std::span<double> out)>;
using VectorCoef = ScalarCoef;
using MatrixCoef = ScalarCoef;
using NonlinearityCoef = std::function<void(double t, const Points& x, std::span<const double> r1,
                                            std::span<const double> r2, std::span<double> out)>;
using SourceCoef = std::function<void(double t, const Points& x, std::span<const double> r1, std::span<const double> r2,
                                      std::span<const double> r3, std::span<double> out)>;
using InitialCoef = std::function<void(const Points& x, std::span<double> out)>;

enum class DomainMode { Torus, PeriodicExtension };

/// du/dt = (L + V) u + F(x,u,grad u) . grad u + g,  L = tr(a hess) + b . grad.
/// An empty std::function means the coefficient is identically zero.
struct ProblemSpec {
    std::string name = "custom";
    int dim_d = 1;
    int dim_m = 1;
    double horizon_T = 1.0;
    DomainMode domain = DomainMode::Torus;

    MatrixCoef diffusion_a;
    bool diffusion_constant = false;  ///< a independent of (t,x); lets the engine factor sigma once
    VectorCoef drift_b;
    ScalarCoef potential_V;
    NonlinearityCoef nonlinearity_F;
    SourceCoef source_g;
    bool g_spatial_only = true;
    InitialCoef initial_u0;
};

/// Throws InvalidInput on missing required maps or bad dimensions.
void validate(const ProblemSpec& spec);

// Convenience evaluators; zero-fill for absent coefficients.
std::vector<double> eval_a(const ProblemSpec& s, double t, const Points& x);
std::vector<double> eval_b(const ProblemSpec& s, double t, const Points& x);
std::vector<double> eval_V(const ProblemSpec& s, double t, const Points& x);
std::vector<double> eval_F(const ProblemSpec& s, double t, const Points& x, std::span<const double> r1,
                           std::span<const double> r2);
std::vector<double> eval_g(const ProblemSpec& s, double t, const Points& x, std::span<const double> r1,
                           std::span<const double> r2, std::span<const double> r3);
std::vector<double> eval_u0(const ProblemSpec& s, const Points& x);

struct KatoPair {
    double p = 3.0;
    double q = 5.0;
};

/// p > 2, q > 2 and d/p + 2/q < 1.
bool kato_class_check(int d, const KatoPair& pair);

/// Scalar field sampled on (time slice x lattice node); values[slice*nodes + node].
struct SpaceTimeField {
    std::vector<double> times;
    Lattice lattice;
    std::vector<double> values;

    double at(std::size_t slice, std::size_t node) const { return values[slice * lattice.size() + node]; }
};

/// Localized mixed norm over the time window [t0, t1].
/// On the torus this is the plain L^p-in-space, L^q-in-time norm.
double tilde_Lpq_norm(const SpaceTimeField& f, const KatoPair& pair, double t0, double t1,
                      DomainMode domain = DomainMode::Torus);

/// sup |f| + sup |central-difference gradient|; values[node*m + component].
double cb1_norm(const Lattice& lat, std::span<const double> values, int m);

struct ProbeGrid {
    int nodes = 64;
    int time_slices = 21;
    double box = 10.0;  ///< half-width of the r2 / r3 probe box
};

struct KResult {
    double value = 0.0;
    bool finite = true;
    std::string where;  ///< offending (t,x) when not finite
};

KResult k_constant(const ProblemSpec& spec, const ProbeGrid& probe = {});

/// Pointwise sup of |F_t(x, r1, r2)| over |r1| <= k and r2 in the probe box.
SpaceTimeField fbar_field(const ProblemSpec& spec, double k, const ProbeGrid& probe = {});

struct AssumptionReport {
    double kato_norm_V = 0.0;
    double kato_norm_Fbar = 0.0;
    double kato_norm_gbar = 0.0;
    double k_constant = 0.0;
    double lipschitz_F_probe = 0.0;  ///< max sampled slope of F (and of g in r1, r2)
    double oscillation_F_probe = 0.0;
    double alpha_probe = 0.0;
    double log_growth_probe = 0.0;
    double lipschitz_b_probe = 0.0;
    double grad_a_probe = 0.0;
    double ellipticity_min = 0.0;
    double ellipticity_max = 0.0;
    double u0_cb1 = 0.0;
    std::map<std::string, bool> pass_flags;
    std::optional<std::string> failure;
};

struct ProbeOptions {
    ProbeGrid grid{};
    double alpha_threshold = 0.1;
};

AssumptionReport probe_assumptions(const ProblemSpec& spec, const KatoPair& pair, int budget,
                                   const ProbeOptions& opts = {});

/// Symmetric eigenvalues of a d x d matrix (row-major), ascending.
std::vector<double> symmetric_eigenvalues(std::span<const double> a, int d);

}  // namespace fkpde
