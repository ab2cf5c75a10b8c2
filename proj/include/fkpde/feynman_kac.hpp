#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fkpde/sde_engine.hpp"

namespace fkpde {

enum class GradientMode { GridDifference, Bismut };
const char* to_string(GradientMode m);
GradientMode gradient_mode_from(const std::string& s);

/// Discretized psi on (slice x node). Times are SDE times s in [0,T]; PDE time is T - s.
/// values[(slice*nodes + node)*m + c], gradients[((slice*nodes + node)*d + axis)*m + c].
struct PsiField {
    std::vector<double> times;
    Lattice lattice{};
    int m = 1;
    std::vector<double> values;
    std::vector<double> gradients;  ///< empty until filled
    std::vector<double> stderr_values;
    GradientMode provenance = GradientMode::GridDifference;
    double particle_sup = 0.0;  ///< max |per-particle functional| over everything estimated

    int dim() const { return lattice.dim; }
    std::size_t slices() const { return times.size(); }
    std::size_t nodes() const { return lattice.size(); }
    double value(std::size_t s, std::size_t node, int c = 0) const { return values[(s * nodes() + node) * m + c]; }
    double gradient(std::size_t s, std::size_t node, int axis, int c = 0) const {
        return gradients[((s * nodes() + node) * dim() + axis) * m + c];
    }
    double max_stderr() const;
    double max_abs() const;
};

PsiField make_field(std::vector<double> times, const Lattice& lat, int m);

struct SolverConfig {
    int nodes = 64;
    int n_steps = 200;
    int slices = 21;  ///< psi time slices; n_steps must be a multiple of slices-1
    std::size_t particles = 10000;
    std::size_t block = 64;
    bool common_nodes = true;
    int workers = 1;
    GradientMode gradient_mode = GradientMode::GridDifference;
    double lambda = -1.0;  ///< < 0: 4/T
    double tol = 1e-3;
    int max_iter = 25;
    std::optional<double> truncation;
    const kernels::Table* kernels = nullptr;

    EngineConfig engine(double T) const;
    Lattice lattice(int d) const { return Lattice(d, nodes); }
    int stride() const;
    std::vector<double> slice_times(double T) const;
    void check() const;
};

struct SliceEstimate {
    std::vector<double> values;  ///< node*m + c
    std::vector<double> stderr_values;
    std::vector<double> gradients;  ///< (node*d + axis)*m + c, Bismut runs only
    std::vector<double> gradient_stderr;
    double particle_sup = 0.0;
};

/// Space-time integrand at step k (SDE time), m values per point; empty = none.
using RunningTerm = std::function<void(int step, const Points& xw, std::span<double> out)>;
using TerminalTerm = std::function<void(const Points& xw, std::span<double> out)>;

struct Functional {
    RunningTerm running;
    TerminalTerm terminal;
    bool bismut = false;  ///< also estimate the gradient in the launch point
};

/// Launches `particles` paths from every lattice node at start_step and averages
///   terminal(X_end) e^{int V} + sum_k running_k(X_k) e^{int_0^{s_k} V} w_k,
/// with w_k the exact integral of e^{V_k (s - s_k)} over the step (left-point V and integrand).
SliceEstimate estimate_functional(const ProblemSpec& spec, const DriftExtra& drift, const SolverConfig& cfg,
                                  const RngStream& rng, std::uint32_t slice_key, int start_step, int end_step,
                                  const Functional& f);

/// psi at one slice (g must be spatial-only).
SliceEstimate estimate_psi_slice(const ProblemSpec& spec, const DriftExtra& drift, int slice_index,
                                 const SolverConfig& cfg, const RngStream& rng, bool bismut = false);

/// P_{t,s} f at every node; t_step <= s_step are time-grid steps.
SliceEstimate semigroup_apply(const ProblemSpec& spec, const DriftExtra& drift, int t_step, int s_step,
                              const TerminalTerm& f, const SolverConfig& cfg, const RngStream& rng);

/// int_t^T P_{t,s} f_s ds at every node, f given on the psi slices (interpolated).
SliceEstimate u_v_functional(const ProblemSpec& spec, const DriftExtra& drift, int t_step, const PsiField& f,
                             const SolverConfig& cfg, const RngStream& rng);

struct GradientEstimate {
    std::vector<double> value;   ///< m
    std::vector<double> stderr_values;
};

/// (s - t)^{-1} E[f(X_s) <B_s, v>] at retained slice r; `weighted` multiplies by e^{int V}.
GradientEstimate bismut_gradient(const PathEnsemble& e, std::size_t r, const TerminalTerm& f, int m,
                                 std::span<const double> v, const TimeGrid& grid, bool weighted = false);

struct BismutContext {
    const ProblemSpec* spec = nullptr;
    const DriftExtra* drift = nullptr;
    const SolverConfig* cfg = nullptr;
    const RngStream* rng = nullptr;
};

/// Fills gradients. Grid mode: central differences with periodic wrap.
/// Bismut mode re-simulates every slice except the terminal one (which has no paths and uses differences).
PsiField gradient_of_field(PsiField field, GradientMode mode, const BismutContext* ctx = nullptr);

/// Central-difference gradient of node values (node*m + c) -> (node*d + axis)*m + c.
std::vector<double> grid_gradient(const Lattice& lat, std::span<const double> values, int m);
/// Second differences (node*d*d + i*d + k)*m + c.
std::vector<double> grid_hessian(const Lattice& lat, std::span<const double> values, int m);

/// Multilinear periodic interpolation of node values (one component) at wrapped points.
void interp_lattice(const Lattice& lat, std::span<const double> table, const Points& xw, std::span<double> out,
                    const kernels::Table& k);

/// Time-then-space interpolation of field component c (values or gradient entry) at step k.
struct FieldSampler {
    const PsiField* field = nullptr;
    int stride = 1;
    /// Node table at step k for values (entry < 0 -> value c) or gradient (axis, c).
    void node_table(int step, int axis, int c, std::span<double> out) const;
};

}  // namespace fkpde
