#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "core/grid.hpp"
#include "core/kernel.hpp"
#include "core/survival.hpp"

namespace kbm {

/// Cell-averaged indicator of (-inf, b]: weight 1 for fully covered node
/// cells [x_i - dx/2, x_i + dx/2], 0 for uncovered, and the exact covered
/// fraction for the single straddling cell. Keeps the map b -> mass flux
/// continuous and monotone, which the inverse iteration's root-finder
/// relies on.
class KillingWeights {
public:
    KillingWeights(GridPtr grid, double b);

    const SpatialGrid& grid() const { return *grid_; }
    std::span<const double> weights() const { return weights_; }
    double barrier() const { return b_; }

private:
    GridPtr grid_;
    double b_;
    std::vector<double> weights_;
};

inline KillingWeights killing_weights(GridPtr grid, double b) {
    return KillingWeights(std::move(grid), b);
}

enum class Scheme { crank_nicolson, implicit_euler };

struct ForwardConfig {
    Scheme scheme = Scheme::crank_nicolson;
    /// Number of leading time steps replaced by two implicit-Euler
    /// half-steps each (Rannacher start-up, damps the indicator kink).
    int rannacher_steps = 2;
    double lambda = 1.0;
};

/// Clipping audit: negative undershoot is clipped to zero, never ignored.
struct ForwardAudit {
    double clipped_mass_total = 0.0;
    double clipped_mass_max_step = 0.0;
};

/// Advance du/dt = (1/2) u'' - lambda*kappa(b) u by one step. Crank-Nicolson
/// evaluates kappa at both barrier endpoints; implicit Euler only at the end.
DensityField step(const DensityField& u, double b_start, double b_end,
                  double dt, const ForwardConfig& cfg,
                  double* clipped_mass = nullptr);

/// Compose steps over the mesh; snapshot 0 equals u0. The first
/// cfg.rannacher_steps steps run as damped implicit-Euler half-step pairs.
DensityHistory solve_forward(const DensityField& u0, const Barrier& b,
                             MeshPtr mesh, const ForwardConfig& cfg,
                             ForwardAudit* audit = nullptr);

/// Variable-coefficient variant used by the diffusion extension; the base
/// solver is the Brownian special case of the same kernel.
DensityHistory solve_forward_operator(const FluxOperator& op,
                                      const DensityField& u0, const Barrier& b,
                                      MeshPtr mesh, const ForwardConfig& cfg,
                                      ForwardAudit* audit = nullptr);

struct SurvivalCurve {
    std::vector<double> times;
    std::vector<double> masses;
};

/// Per-time trapezoid masses of the history; for the killed equation this
/// is the survival function of the killing time.
SurvivalCurve survival_curve(const DensityHistory& h);
SurvivalCurve survival_curve_weighted(const DensityHistory& h,
                                      std::span<const double> node_weight);

/// Tabulated SurvivalSpec built from a solved history.
SurvivalSpec survival_spec_from_history(const DensityHistory& h, double lambda);

/// Damped heat envelope f_d(t,x) = e^{-lambda t} (K_t * u0)(x), a pointwise
/// lower bound for any solution; evaluated by direct quadrature on the grid.
DensityField lower_bound_field(const DensityField& u0, double t, double lambda);

/// Heat envelope f_h(t,x) = (K_t * u0)(x), a mass-preserving upper bound.
DensityField upper_bound_field(const DensityField& u0, double t);

/// Smooth compactly supported bump phi(t,x) used as a weak-form test
/// function, with exact time derivative and spatial second derivative.
struct BumpTestFunction {
    double x0;
    double rx;
    double t0;
    double rt;

    double phi(double t, double x) const;
    double dphi_dt(double t, double x) const;
    double d2phi_dx2(double t, double x) const;
};

std::vector<BumpTestFunction> default_bump_battery(const SpatialGrid& grid,
                                                   const TimeMesh& mesh);

/// Maximum absolute mismatch of the discrete weak-form identity over the
/// battery: trapezoid quadrature in x and t of
///   int u dphi/dt  vs  [u phi]_0^T - (1/2) int u d2phi/dx2
///                      + lambda int kappa(b) u phi.
/// Consistency diagnostic only; decays under mesh refinement.
double weak_residual(const DensityHistory& h, const Barrier& b, double lambda,
                     std::span<const BumpTestFunction> battery);

} // namespace kbm
