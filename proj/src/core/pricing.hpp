#pragma once

#include <functional>
#include <string>
#include <vector>

#include "core/forward.hpp"
#include "core/grid.hpp"

namespace kbm {

enum class PayoffKind { call, put, digital, identity };

std::function<double(double)> make_payoff(PayoffKind kind, double strike);
PayoffKind payoff_kind_from_string(const std::string& name);

/// Claim F(X_T) 1{tau > T} on a GBM asset X correlated (rho) with the
/// credit index driving the killing time tau. The asset axis lives in log
/// coordinates, so the standard GBM generator has constant coefficients.
/// literal_generator switches the diffusion and mixed coefficients to the
/// unscaled form (1/2) d_xx + rho sigma d_x d_y in price coordinates for
/// comparison (see README).
struct PricingSpec {
    double drift = 0.0;        // mu
    double volatility = 0.2;   // sigma > 0
    double correlation = 0.0;  // rho in [-1, 1]
    std::function<double(double)> payoff;
    Barrier barrier;
    double lambda = 1.0;
    GridPtr log_asset_grid; // xi = ln(asset)
    GridPtr credit_grid;    // y
    MeshPtr mesh;
    bool literal_generator = false;
    double theta = 0.5;      // Craig-Sneyd implicitness
    int rannacher_steps = 2; // leading fully implicit Douglas steps
};

/// Backward-solved value surface w(t, x, y); the terminal slice equals the
/// payoff exactly. Values are stored per mesh time, row-major in (x, y).
class ValueSurface {
public:
    ValueSurface(GridPtr log_asset_grid, GridPtr credit_grid, MeshPtr mesh,
                 std::vector<std::vector<double>> slices);

    const SpatialGrid& log_asset_grid() const { return *xg_; }
    const SpatialGrid& credit_grid() const { return *yg_; }
    const TimeMesh& mesh() const { return *mesh_; }
    std::span<const double> slice(int j) const { return slices_[j]; }
    double value(int j, int ix, int iy) const {
        return slices_[j][static_cast<std::size_t>(ix) * yg_->n_nodes() + iy];
    }
    double asset_node(int ix) const { return std::exp(xg_->node(ix)); }

private:
    GridPtr xg_;
    GridPtr yg_;
    MeshPtr mesh_;
    std::vector<std::vector<double>> slices_;
};

/// Craig-Sneyd ADI solve of the backward pricing equation
///   dw/dt + a_xx w_xx + a_x w_x + (1/2) w_yy + a_xy w_xy
///         - lambda 1(y <= b(t)) w = 0,  w(T) = F,
/// implicit sweeps per direction, explicit mixed term, cell-fraction
/// killing weights on the credit axis. Throws StabilityError when the
/// explicit stage blows up.
ValueSurface solve_price_surface(const PricingSpec& spec);

/// Price at time t and asset level x for a random credit start with
/// density f: trapezoid of w(t, x, .) f(.) over the credit axis.
double price(const ValueSurface& surface, double t, double asset,
             const DensityField& f_credit);

} // namespace kbm
