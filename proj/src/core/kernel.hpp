#pragma once

#include <span>
#include <vector>

#include "core/grid.hpp"

namespace kbm {

/// Spatial operator in conservative flux form with homogeneous Dirichlet
/// boundary values:
///
///   (L u)_i = [ p_{i+1/2}(u_{i+1}-u_i) - p_{i-1/2}(u_i-u_{i-1}) ] / (m_i dx^2)
///             - r_i u_i
///
/// With p = exp(int 2 mu/sigma^2) and m the speed density this discretizes
/// (1/m) d/dx (p du/dx) = (sigma^2/2) u'' + mu u'. The Brownian case is
/// p == 1, m == 2, reproducing the standard (1/2) second-difference stencil
/// bit-for-bit. Off-diagonal entries are non-negative, so the implicit
/// solve is an M-matrix system for any dt > 0.
class FluxOperator {
public:
    /// General coefficients: face values p (size n-1), node weights m (size n).
    FluxOperator(GridPtr grid, std::vector<double> face_coeff,
                 std::vector<double> node_weight);

    /// Brownian motion operator (1/2) d^2/dx^2 on the given grid.
    static FluxOperator brownian(GridPtr grid);

    const SpatialGrid& grid() const { return *grid_; }
    const GridPtr& grid_ptr() const { return grid_; }
    std::span<const double> node_weight() const { return node_weight_; }

    /// Coupling coefficients p_{i-1/2}/(m_i dx^2) and p_{i+1/2}/(m_i dx^2)
    /// for interior nodes i = 1..n-2 (index 0 of the spans is node 1).
    std::span<const double> couple_left() const { return cl_; }
    std::span<const double> couple_right() const { return cr_; }

private:
    GridPtr grid_;
    std::vector<double> face_coeff_;
    std::vector<double> node_weight_;
    std::vector<double> cl_;
    std::vector<double> cr_;
};

/// Scratch buffers for the theta-step so repeated stepping does not allocate.
struct StepWorkspace {
    std::vector<double> rhs;
    std::vector<double> diag;
    std::vector<double> upper;
};

/// One theta-step of du/dt = L u - lambda*kappa u:
///
///   (I - theta dt A_end) u_out = (I + (1-theta) dt A_start) u_in
///
/// where A_* = L - lambda*diag(kappa_*). theta = 1/2 is Crank-Nicolson,
/// theta = 1 implicit Euler (kappa_start unused then). Boundary nodes of
/// u_out are set to zero. No clipping is applied here.
void kernel_theta_step(const FluxOperator& op, std::span<const double> kappa_start,
                       std::span<const double> kappa_end, double lambda,
                       double dt, double theta, std::span<const double> u_in,
                       std::span<double> u_out, StepWorkspace& ws);

} // namespace kbm
