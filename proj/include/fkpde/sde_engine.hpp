#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "fkpde/kernels.hpp"
#include "fkpde/lattice.hpp"
#include "fkpde/problem.hpp"
#include "fkpde/rng.hpp"

namespace fkpde {

/// Extra drift added to b at step k, evaluated at wrapped points; out[i*n + p]. Empty means zero.
using DriftExtra = std::function<void(int step, const Points& xw, std::span<double> out)>;

struct EngineConfig {
    TimeGrid grid{};
    std::size_t block = 64;     ///< particles per launch block
    bool common_nodes = true;   ///< all launch nodes of a slice share one noise stream
    int workers = 1;
    const kernels::Table* kernels = nullptr;  ///< nullptr: kernels::active()
    double h_jac = 1e-4;        ///< Jacobian step is h_jac * (1 + |x|)

    const kernels::Table& table() const { return kernels ? *kernels : kernels::active(); }
};

/// Symmetric positive-definite square root of 2a (a row-major, d x d).
std::vector<double> sigma_from_a(std::span<const double> a, int d);

/// Lanes of one simulation batch. `blocks` launch points, each with `per_block`
/// particles (rng indices first..first+per_block-1). Lane l = block*per_block + i.
/// Arrays are structure-of-arrays over lanes.
struct Batch {
    int d = 1;
    std::size_t blocks = 0, per_block = 0, lanes = 0;
    std::uint32_t first = 0;
    std::vector<std::uint32_t> block_node;  ///< rng node key of each block

    std::vector<double> x;    ///< unwrapped state, d*lanes
    std::vector<double> xw;   ///< wrapped copy, refreshed every step
    std::vector<double> fk;   ///< running integral of V
    std::vector<double> v;    ///< V at the current step (zero when V is absent)
    std::vector<double> J;    ///< flow, (i*d + j)*lanes: dX_i / dx_j
    std::vector<double> bis;  ///< Bismut integral per unit direction e_j, j*lanes

    std::vector<double> xi;   ///< normals of the current step, d*lanes

    Points wrapped() const { return Points{xw, lanes, d}; }
};

/// Callbacks during a batch run. at_step(k) sees the wrapped state, V at step k and the
/// exponent before step k is applied; at_end sees the state at the stop step.
struct StepObserver {
    virtual ~StepObserver() = default;
    virtual void at_step(int /*k*/, const Batch& /*b*/) {}
    virtual void at_end(int /*k_end*/, const Batch& /*b*/) {}
};

struct RunRequest {
    std::uint32_t slice_key = 0;  ///< launch slice, part of the rng key
    int start_step = 0;
    int end_step = 0;             ///< exclusive stop; state at end_step is reported to at_end
    bool derivatives = false;
};

/// Sets up lanes from launch points (start[block][axis]) and particle range.
void init_batch(Batch& b, int d, std::span<const std::array<double, 3>> start, std::span<const std::uint32_t> nodes,
                std::uint32_t first, std::size_t per_block, bool derivatives);

/// Euler-Maruyama run of one batch. Throws BlowUp on a non-finite state.
void run_batch(const ProblemSpec& spec, const DriftExtra& drift, const EngineConfig& cfg, const RngStream& rng,
               const RunRequest& req, Batch& b, StepObserver& obs);

/// Runs fn(i) for i in [0, count) on cfg.workers threads with a static partition.
void parallel_for(int workers, std::size_t count, const std::function<void(std::size_t)>& fn);

struct PathEnsemble {
    int dim = 1;
    int start_step = 0;
    std::array<double, 3> start_point{0, 0, 0};
    std::size_t particles = 0;
    std::vector<int> retained_steps;
    // Per retained slice r:
    std::vector<std::vector<double>> states;   ///< [r][axis*N + p], unwrapped
    std::vector<std::vector<double>> flows;    ///< [r][(i*d + j)*N + p]
    std::vector<std::vector<double>> fk_exponent;      ///< [r][p]
    std::vector<std::vector<double>> bismut_integral;  ///< [r][j*N + p]
    /// Normals per step when logged: [k - start_step][axis*N + p].
    std::vector<std::vector<double>> xi_log;
    bool has_derivatives = false;
};

struct EnsembleOptions {
    std::vector<int> retain;  ///< steps to keep; empty = every step from launch to T
    bool derivatives = false;
    bool log_noise = false;
    std::uint32_t node_key = 0;
};

PathEnsemble simulate_ensemble(const ProblemSpec& spec, const DriftExtra& drift, int start_step,
                               std::array<double, 3> x, const EngineConfig& cfg, std::size_t particles,
                               const RngStream& rng, const EnsembleOptions& opts = {});

/// Rebuilds the flow of one particle from its logged states and normals.
/// Needs an ensemble retaining every step with log_noise on.
std::vector<std::vector<double>> replay_flow(const ProblemSpec& spec, const DriftExtra& drift, const EngineConfig& cfg,
                                             const PathEnsemble& e, std::size_t particle);

struct ScalingReport {
    bool bitwise = false;
    double moment_ratio = 0.0;  ///< sup over slices of mean |J v|^p / |v|^p
};

ScalingReport derivative_scaling_check(const PathEnsemble& e, std::span<const double> v, double c, double p = 2.0);

/// J v for particle p at retained slice r.
std::vector<double> directional_flow(const PathEnsemble& e, std::size_t r, std::size_t p, std::span<const double> v);

}  // namespace fkpde
