#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fkpde/feynman_kac.hpp"

namespace fkpde {

enum class PicardStatus { Running, Converged, MaxIterations, BlowUp };
const char* to_string(PicardStatus s);

struct PicardState {
    int iterate_index = 0;
    std::vector<double> distance_history;
    std::vector<double> contraction_ratios;  ///< distance[i] / distance[i-1], from the second iterate on
    double lambda_weight = 0.0;
    PicardStatus status = PicardStatus::Running;
    std::optional<double> blowup_time;  ///< PDE time T_n when status is BlowUp

    // Per iterate, starting with the initial field:
    std::vector<double> field_sup;      ///< max |psi|
    std::vector<double> particle_sup;   ///< max |per-particle functional|
    std::vector<double> max_stderr;
    std::vector<double> wall_seconds;
    double k_bound = 0.0;               ///< k(u0, g, V) on the solver lattice

    std::vector<PicardState> inner;     ///< outer solves: one state per frozen problem
};

struct SolveResult {
    PsiField psi;
    PicardState state;
};

/// psi at every slice for the given drift; gradients by cfg.gradient_mode.
PsiField estimate_field(const ProblemSpec& spec, const DriftExtra& drift, const SolverConfig& cfg,
                        const RngStream& rng);

/// drift_extra(s, x) = F_{T-s}(x, psi_s(x), grad psi_s(x)), psi interpolated in time and space.
DriftExtra drift_from_field(const ProblemSpec& spec, const PsiField& psi, const SolverConfig& cfg);

PsiField phi_map(const ProblemSpec& spec, const PsiField& psi_in, const SolverConfig& cfg, const RngStream& rng);

/// sup_j e^{-lambda (T - s_j)} (max|a - b| + max|grad a - grad b| [+ max|hess a - hess b|]).
double rho_proxy_distance(const PsiField& a, const PsiField& b, double lambda, bool with_hessian = false);

SolveResult picard_solve(const ProblemSpec& spec, const SolverConfig& cfg, const RngStream& rng);

/// Spatial-source problem with g frozen at h: g_t(x, h, grad h, hess h).
ProblemSpec freeze_source(const ProblemSpec& spec, const PsiField& h, const SolverConfig& cfg);

SolveResult outer_psi_solve(const ProblemSpec& spec, const SolverConfig& cfg, const RngStream& rng);

/// Radial clamp: r unchanged when |r| <= n, else n r / |r|.
void clamp_radial(std::span<double> r, double n);
ProblemSpec truncate_coefficients(const ProblemSpec& spec, double level);

/// First time with norm >= n, else none. times/norms in PDE-time order.
std::optional<double> detect_blowup(std::span<const double> times, std::span<const double> norms, double n);

/// u_t = psi_{T-t}: slices reversed into PDE-time order.
GridSeries as_pde_solution(const PsiField& psi);

/// C^1_b norm of every slice of a PDE-time series.
std::vector<double> cb1_trace(const GridSeries& u);

/// k(u0, g, V) probed on the solver lattice and psi slices.
double fk_bound(const ProblemSpec& spec, const SolverConfig& cfg);

}  // namespace fkpde
