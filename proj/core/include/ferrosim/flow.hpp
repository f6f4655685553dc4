// flow.hpp
// L2 gradient flow of the ferronematic energy on the unit square with
// Dirichlet data, integrated by a second-order implicit scheme.

#pragma once

#include "ferrosim/fields.hpp"
#include "ferrosim/potential.hpp"

#include <array>
#include <functional>
#include <vector>

namespace ferrosim {

struct FlowConfig {
    ModelParams params;
    int grid_n = 50;
    double tau = 1e-3;
    double t_end = 1.0;
    std::vector<double> snapshot_times;
    double picard_tol = 1e-10;
    int picard_max = 50;
    double linsolve_tol = 1e-10;
    double steady_tol = 1e-8;
    int max_halvings = 3;

    void validate() const;
};

struct StepReport {
    double time = 0.0;
    double energy_total = 0.0;
    double energy_delta = 0.0;
    int picard_iters = 0;
    double max_update = 0.0;
    int halvings = 0; // how many times tau was halved to complete the step
};

/// Time derivatives of (q11, q12, m1, m2); zero on boundary nodes.
struct FieldRates {
    std::vector<double> q11, q12, m1, m2;
};

/// Right-hand side of the gradient flow: (c Lap_h u - eps^-2 grad f) / w with
/// c = 2, w = 2 eta1 for the Q components and c = eps, w = eta2 for M.
FieldRates rhs(const FieldState& state, const ModelParams& params);

/// One step of length config.tau. The reaction is averaged exactly along the
/// segment between the old and new states (Simpson's rule is exact for the
/// cubic gradient), which makes the discrete energy decrease by exactly
/// sum w |u1 - u0|^2 h^2 / tau. The implicit system is solved by Newton's
/// method, each linear solve by block-Jacobi preconditioned CG; where the
/// exact Jacobian loses definiteness the iteration continues with the
/// potential Hessian clipped to PSD. Boundary nodes are never modified.
/// Throws SolverError when the iteration fails even after halving tau
/// config.max_halvings times.
StepReport step(FieldState& state, const FlowConfig& config, const PotentialConstants& consts);

struct Snapshot {
    double requested_time = 0.0;
    FieldState state;
};

struct RunResult {
    FieldState final_state;
    std::vector<Snapshot> snapshots;
    std::vector<StepReport> reports;
    bool steady = false;
};

using StepObserver = std::function<void(const StepReport&)>;

/// Integrates from `initial` until t_end or until max_update / tau falls
/// below steady_tol. Each snapshot is the state at the step whose time is
/// nearest the requested time; requests beyond an early steady stop get the
/// final state.
RunResult run(const FlowConfig& config, const FieldState& initial, const StepObserver& observer = {});

} // namespace ferrosim
