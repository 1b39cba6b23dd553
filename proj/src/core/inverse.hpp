#pragma once

#include <optional>
#include <string>
#include <vector>

#include "core/forward.hpp"
#include "core/grid.hpp"
#include "core/survival.hpp"

namespace kbm {

/// Per-iteration metrics of the monotone fixed-point iteration. The
/// density iterates must decrease and the barrier iterates increase;
/// the violation columns record the worst excess in the wrong direction
/// (zero when the monotone structure holds exactly).
struct IterationRecord {
    int k = 0;
    double sup_barrier_change = 0.0;
    double max_u_violation = 0.0;
    double max_b_violation = 0.0;
    double mass_residual = 0.0;       // sup_t |mass(t) - G(t)|
    double constraint_residual = 0.0; // sup_t |lambda*pm(u,b) + G'(t)|
};

struct IterationDiagnostics {
    std::vector<IterationRecord> records;
    bool converged = false;
    int iterations = 0;
    /// Targets -G'(t)/lambda nudged back into the admissible open interval
    /// (float-level excursions only; larger ones abort the solve).
    int clamp_warnings = 0;
    bool monotone = true; // all violations <= 1e-10
};

struct InverseConfig {
    int max_iterations = 50;
    double barrier_tol = 1e-6; // sup-norm stopping rule, state units
    /// Time stepping used inside the iteration. Implicit Euler keeps the
    /// implicit solves M-matrices, so the discrete iterates inherit the
    /// monotonicity of the exact scheme; Crank-Nicolson is available but
    /// can ring near the indicator edge when dt > 2 dx^2.
    ForwardConfig forward{Scheme::implicit_euler, 0, 1.0};
    bool check_compatibility = true;
};

class NonConvergence : public Error {
public:
    NonConvergence(const std::string& what, IterationDiagnostics diagnostics)
        : Error(what), diagnostics(std::move(diagnostics)) {}
    IterationDiagnostics diagnostics;
};

/// The unique alpha with lambda * partial_mass(u, alpha) = -gprime.
/// Requires 0 < -gprime < lambda * mass(u); ties on zero-density plateaus
/// resolve to the smallest alpha.
double barrier_from_constraint(const DensityField& u, double gprime,
                               double lambda);

struct InverseSolution {
    DensityHistory history;
    Barrier barrier;
    IterationDiagnostics diagnostics;
};

/// Monotone fixed-point iteration recovering the barrier from (G, u0):
/// u_1 solves the free heat equation, b_k inverts the killed-mass
/// constraint on u_k at every mesh time, u_{k+1} re-solves the killed
/// equation under b_k; stops when the barrier sup-change drops below
/// cfg.barrier_tol. Throws CompatibilityError on inadmissible data and
/// NonConvergence when max_iterations is exhausted.
InverseSolution iterate(const DensityField& u0, const SurvivalSpec& g,
                        MeshPtr mesh, const InverseConfig& cfg);

/// Variable-coefficient variant. mass_weight is the per-node multiplier in
/// the constraint and the mass identity: empty for the base problem
/// (G = int u dx), the speed density m for the diffusion extension
/// (G = int u m dx). The kernel's own node weight is a discretization
/// parameter and plays no role in the mass accounting.
InverseSolution iterate_operator(const FluxOperator& op, const DensityField& u0,
                                 const SurvivalSpec& g, MeshPtr mesh,
                                 const InverseConfig& cfg,
                                 std::span<const double> mass_weight = {});

struct ConsistencyReport {
    double mass_residual = 0.0;        // sup_t |mass(t) - G(t)|
    double constraint_residual = 0.0;  // sup_t |lambda*pm(u(t), b(t)) + G'(t)|
    double integrated_residual = 0.0;  // sup_t |int_0^t lambda*pm ds - (G(0)-G(t))|
    double mass_lower_margin = 0.0;    // min_t (mass(t) - G(t)), signed
};

/// Residuals of the constrained-system identities on a solved pair (u, b).
ConsistencyReport consistency_report(const DensityHistory& h, const Barrier& b,
                                     const SurvivalSpec& g);
ConsistencyReport consistency_report_weighted(const DensityHistory& h,
                                              const Barrier& b,
                                              const SurvivalSpec& g,
                                              std::span<const double> node_weight);

/// sup over mesh times of the discrete-L1 distance between two histories
/// on the same grid and mesh.
double l1_distance(const DensityHistory& a, const DensityHistory& b);

} // namespace kbm
