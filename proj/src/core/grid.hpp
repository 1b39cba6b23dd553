#pragma once

#include <cmath>
#include <memory>
#include <span>
#include <vector>

#include "core/errors.hpp"

namespace kbm {

/// Uniform 1D discretization of a truncated spatial window [x_min, x_max].
class SpatialGrid {
public:
    SpatialGrid(double x_min, double x_max, int n_nodes);

    double x_min() const { return x_min_; }
    double x_max() const { return x_max_; }
    int n_nodes() const { return n_nodes_; }
    double dx() const { return dx_; }
    double node(int i) const { return x_min_ + i * dx_; }

    bool same_as(const SpatialGrid& other) const {
        return x_min_ == other.x_min_ && x_max_ == other.x_max_ &&
               n_nodes_ == other.n_nodes_;
    }

private:
    double x_min_;
    double x_max_;
    int n_nodes_;
    double dx_;
};

/// Uniform time mesh on [0, T] with t_j = j*dt.
class TimeMesh {
public:
    TimeMesh(double horizon, int n_steps);

    double horizon() const { return horizon_; }
    int n_steps() const { return n_steps_; }
    double dt() const { return dt_; }
    double time(int j) const { return (j == n_steps_) ? horizon_ : j * dt_; }

    bool same_as(const TimeMesh& other) const {
        return horizon_ == other.horizon_ && n_steps_ == other.n_steps_;
    }

private:
    double horizon_;
    int n_steps_;
    double dt_;
};

using GridPtr = std::shared_ptr<const SpatialGrid>;
using MeshPtr = std::shared_ptr<const TimeMesh>;

/// Non-negative sub-probability density sampled on a SpatialGrid.
/// Values are per unit state; integrals are trapezoid sums.
class DensityField {
public:
    DensityField(GridPtr grid, std::vector<double> values);

    const SpatialGrid& grid() const { return *grid_; }
    const GridPtr& grid_ptr() const { return grid_; }
    std::span<const double> values() const { return values_; }
    double value(int i) const { return values_[i]; }
    int size() const { return static_cast<int>(values_.size()); }

    /// Linear interpolation; zero outside the grid window.
    double interpolate(double x) const;

private:
    GridPtr grid_;
    std::vector<double> values_;
};

/// One DensityField per mesh time; snapshot 0 is the initial condition.
class DensityHistory {
public:
    DensityHistory(MeshPtr mesh, std::vector<DensityField> snapshots);

    const TimeMesh& mesh() const { return *mesh_; }
    const MeshPtr& mesh_ptr() const { return mesh_; }
    const DensityField& snapshot(int j) const { return snapshots_[j]; }
    int n_snapshots() const { return static_cast<int>(snapshots_.size()); }

private:
    MeshPtr mesh_;
    std::vector<DensityField> snapshots_;
};

/// Continuous piecewise-linear barrier b(t) sampled on a TimeMesh.
/// Values must be finite; +/-infinite barriers are expressed with the
/// sentinel levels below, which lie far outside any sane state window.
class Barrier {
public:
    static constexpr double kMinusInfinity = -1e30;
    static constexpr double kPlusInfinity = 1e30;

    Barrier(MeshPtr mesh, std::vector<double> values);

    const TimeMesh& mesh() const { return *mesh_; }
    const MeshPtr& mesh_ptr() const { return mesh_; }
    std::span<const double> values() const { return values_; }
    double value(int j) const { return values_[j]; }

    /// Linear interpolation on [0, T]; mesh points reproduce stored values.
    double at(double t) const;

private:
    MeshPtr mesh_;
    std::vector<double> values_;
};

/// Trapezoid approximation of the total mass over [x_min, x_max].
double trapezoid_mass(const DensityField& u);

/// Trapezoid approximation of the mass over [x_min, alpha]; the final
/// partial cell uses the linear reconstruction of u. Non-decreasing in
/// alpha for non-negative u. alpha outside the window -> DomainError.
double partial_mass(const DensityField& u, double alpha);

struct DiscreteNorms {
    double l2;
    double h1;
};

/// Discrete L2 and H1 norms: trapezoid quadrature, central differences in
/// the interior and one-sided first-order differences at the two ends.
DiscreteNorms discrete_norms(const DensityField& u);

/// Cumulative trapezoid masses C_i = integral over [x_0, x_i], weighted by
/// the optional per-node multiplier (weighted partial masses re-use the
/// same accumulation as the unweighted case so inversions stay exact).
std::vector<double> prefix_mass(const SpatialGrid& grid,
                                std::span<const double> values,
                                std::span<const double> node_weight = {});

/// Partial mass over [x_min, alpha] from a prefix computed by prefix_mass.
double partial_mass_from_prefix(const SpatialGrid& grid,
                                std::span<const double> values,
                                std::span<const double> prefix, double alpha,
                                std::span<const double> node_weight = {});

/// Smallest alpha with partial mass equal to target, by exact inversion of
/// the piecewise-quadratic cumulative (per-cell quadratic solve on the
/// linear reconstruction). Requires 0 <= target <= total mass.
double invert_partial_mass(const SpatialGrid& grid,
                           std::span<const double> values,
                           std::span<const double> prefix, double target,
                           std::span<const double> node_weight = {});

} // namespace kbm
