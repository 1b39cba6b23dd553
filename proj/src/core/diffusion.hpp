#pragma once

#include <functional>
#include <string>
#include <vector>

#include "core/forward.hpp"
#include "core/inverse.hpp"

namespace kbm {

/// Coefficients of dY = mu(Y) dt + sigma(Y) dB sampled on a grid, with the
/// derived scale and speed densities
///   s(x) = exp(-int_0^x 2 mu/sigma^2),  m(x) = (2/sigma^2(x)) / s(x),
/// anchored at the node nearest 0 (a constant factor that cancels in every
/// weighted identity). The solver uses the conservative form
///   du/dt = (1/m) d/dx( p du/dx ),  p = 1/s,
/// whose fluxes keep the implicit solves M-matrices for any coefficients
/// and conserve the weighted mass int u m dx exactly up to boundary flux.
class DiffusionCoefficients {
public:
    DiffusionCoefficients(GridPtr grid, std::function<double(double)> mu,
                          std::function<double(double)> sigma);
    /// Tabulated variant: per-node mu and sigma samples.
    DiffusionCoefficients(GridPtr grid, std::vector<double> mu,
                          std::vector<double> sigma);

    static DiffusionCoefficients brownian(GridPtr grid);
    /// Ornstein-Uhlenbeck mu(x) = -rate * x, sigma = 1.
    static DiffusionCoefficients ornstein_uhlenbeck(GridPtr grid, double rate);
    /// Log-coordinate GBM: constant drift mu - sigma^2/2, constant sigma.
    static DiffusionCoefficients gbm_log(GridPtr grid, double mu, double sigma);

    const SpatialGrid& grid() const { return *grid_; }
    const GridPtr& grid_ptr() const { return grid_; }
    std::span<const double> mu() const { return mu_; }
    std::span<const double> sigma() const { return sigma_; }
    std::span<const double> speed_density() const { return m_; }
    std::span<const double> scale_density() const { return s_; }

    /// Flux operator (1/m) d/dx(p d/dx) on this grid.
    FluxOperator make_operator() const;

private:
    void derive();

    GridPtr grid_;
    std::vector<double> mu_;
    std::vector<double> sigma_;
    std::vector<double> m_;
    std::vector<double> s_;
    std::vector<double> theta_;      // int_0^x 2 mu/sigma^2, node values
};

/// Speed and scale densities of the coefficients (m, s).
std::pair<std::vector<double>, std::vector<double>>
speed_scale(const DiffusionCoefficients& coeffs);

/// Inverse problem data in the diffusion setting: initial law f (> 0, unit
/// mass), transformed initial state u0 = f/m, and the target survival G
/// with the weighted identities G = int u m dx.
struct DiffusionProblem {
    DiffusionProblem(DiffusionCoefficients coefficients, DensityField f,
                     SurvivalSpec survival);

    DiffusionCoefficients coefficients;
    DensityField f;
    DensityField u0; // f/m
    SurvivalSpec survival;
};

/// Killed forward solve du/dt = (sigma^2/2) u'' + mu u' - lambda kappa(b) u.
DensityHistory solve_forward_diffusion(const DiffusionCoefficients& coeffs,
                                       const DensityField& u0, const Barrier& b,
                                       MeshPtr mesh, const ForwardConfig& cfg,
                                       ForwardAudit* audit = nullptr);

/// Monotone inverse iteration with the weighted constraint
/// lambda int_{-inf}^{b} u m dx = -G'. Monotonicity of the iterates is
/// conjecture territory here: violations are recorded in the diagnostics
/// (diagnostics.monotone), never thrown.
InverseSolution iterate_diffusion(const DiffusionProblem& problem, MeshPtr mesh,
                                  const InverseConfig& cfg);

} // namespace kbm
