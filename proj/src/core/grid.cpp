#include "core/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace kbm {

namespace {

void require(bool cond, const std::string& what) {
    if (!cond) throw DomainError(what);
}

bool all_finite(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(),
                       [](double x) { return std::isfinite(x); });
}

} // namespace

SpatialGrid::SpatialGrid(double x_min, double x_max, int n_nodes)
    : x_min_(x_min), x_max_(x_max), n_nodes_(n_nodes) {
    require(std::isfinite(x_min) && std::isfinite(x_max),
            "SpatialGrid: bounds must be finite");
    require(x_min < x_max, "SpatialGrid: x_min must be < x_max");
    require(n_nodes >= 3, "SpatialGrid: need at least 3 nodes");
    dx_ = (x_max - x_min) / (n_nodes - 1);
    require(dx_ > 0.0, "SpatialGrid: dx must be positive");
}

TimeMesh::TimeMesh(double horizon, int n_steps)
    : horizon_(horizon), n_steps_(n_steps) {
    require(std::isfinite(horizon) && horizon > 0.0,
            "TimeMesh: horizon must be positive");
    require(n_steps >= 1, "TimeMesh: need at least one step");
    dt_ = horizon / n_steps;
    require(dt_ > 0.0, "TimeMesh: dt must be positive");
}

DensityField::DensityField(GridPtr grid, std::vector<double> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
    if (!grid_) throw InvalidArgument("DensityField: null grid");
    if (static_cast<int>(values_.size()) != grid_->n_nodes())
        throw InvalidArgument("DensityField: size does not match grid");
    require(all_finite(values_), "DensityField: values must be finite");
    for (double v : values_)
        require(v >= 0.0, "DensityField: values must be non-negative");
}

double DensityField::interpolate(double x) const {
    const auto& g = *grid_;
    if (x <= g.x_min() || x >= g.x_max()) {
        if (x == g.x_min()) return values_.front();
        if (x == g.x_max()) return values_.back();
        return 0.0;
    }
    int i = static_cast<int>(std::floor((x - g.x_min()) / g.dx()));
    i = std::clamp(i, 0, g.n_nodes() - 2);
    double s = (x - g.node(i)) / g.dx();
    s = std::clamp(s, 0.0, 1.0);
    return values_[i] + s * (values_[i + 1] - values_[i]);
}

DensityHistory::DensityHistory(MeshPtr mesh, std::vector<DensityField> snapshots)
    : mesh_(std::move(mesh)), snapshots_(std::move(snapshots)) {
    if (!mesh_) throw InvalidArgument("DensityHistory: null mesh");
    if (static_cast<int>(snapshots_.size()) != mesh_->n_steps() + 1)
        throw InvalidArgument("DensityHistory: need n_steps + 1 snapshots");
    for (std::size_t j = 1; j < snapshots_.size(); ++j)
        if (!snapshots_[j].grid().same_as(snapshots_[0].grid()))
            throw InvalidArgument("DensityHistory: snapshots on mixed grids");
}

Barrier::Barrier(MeshPtr mesh, std::vector<double> values)
    : mesh_(std::move(mesh)), values_(std::move(values)) {
    if (!mesh_) throw InvalidArgument("Barrier: null mesh");
    if (static_cast<int>(values_.size()) != mesh_->n_steps() + 1)
        throw InvalidArgument("Barrier: need n_steps + 1 values");
    require(all_finite(values_), "Barrier: values must be finite");
}

double Barrier::at(double t) const {
    const auto& m = *mesh_;
    const double tol = 1e-9 * std::max(1.0, m.horizon());
    if (t < -tol || t > m.horizon() + tol)
        throw DomainError("Barrier::at: time outside [0, T]");
    if (t <= 0.0) return values_.front();
    if (t >= m.horizon()) return values_.back();
    int j = static_cast<int>(std::floor(t / m.dt()));
    j = std::clamp(j, 0, m.n_steps() - 1);
    double tj = m.time(j);
    if (t == tj) return values_[j]; // mesh points are exact
    double s = std::clamp((t - tj) / m.dt(), 0.0, 1.0);
    return values_[j] + s * (values_[j + 1] - values_[j]);
}

std::vector<double> prefix_mass(const SpatialGrid& grid,
                                std::span<const double> values,
                                std::span<const double> node_weight) {
    const int n = grid.n_nodes();
    const double dx = grid.dx();
    std::vector<double> prefix(static_cast<std::size_t>(n));
    prefix[0] = 0.0;
    double acc = 0.0;
    if (node_weight.empty()) {
        for (int i = 0; i + 1 < n; ++i) {
            acc += 0.5 * dx * (values[i] + values[i + 1]);
            prefix[i + 1] = acc;
        }
    } else {
        for (int i = 0; i + 1 < n; ++i) {
            acc += 0.5 * dx *
                   (values[i] * node_weight[i] + values[i + 1] * node_weight[i + 1]);
            prefix[i + 1] = acc;
        }
    }
    return prefix;
}

namespace {

double cell_integrand(std::span<const double> values,
                      std::span<const double> node_weight, int i) {
    return node_weight.empty() ? values[i] : values[i] * node_weight[i];
}

// Mass of the partial cell [x_i, x_i + s] under the linear reconstruction.
double partial_cell_mass(double vi, double vip1, double dx, double s) {
    return vi * s + 0.5 * (vip1 - vi) * s * s / dx;
}

} // namespace

double partial_mass_from_prefix(const SpatialGrid& grid,
                                std::span<const double> values,
                                std::span<const double> prefix, double alpha,
                                std::span<const double> node_weight) {
    const double tol = 1e-9 * std::max(1.0, grid.x_max() - grid.x_min());
    if (alpha < grid.x_min() - tol || alpha > grid.x_max() + tol)
        throw DomainError("partial_mass: alpha outside [x_min, x_max]");
    if (alpha <= grid.x_min()) return 0.0;
    if (alpha >= grid.x_max()) return prefix.back();
    int i = static_cast<int>(std::floor((alpha - grid.x_min()) / grid.dx()));
    i = std::clamp(i, 0, grid.n_nodes() - 2);
    double s = std::clamp(alpha - grid.node(i), 0.0, grid.dx());
    const double vi = cell_integrand(values, node_weight, i);
    const double vip1 = cell_integrand(values, node_weight, i + 1);
    return prefix[i] + partial_cell_mass(vi, vip1, grid.dx(), s);
}

double invert_partial_mass(const SpatialGrid& grid,
                           std::span<const double> values,
                           std::span<const double> prefix, double target,
                           std::span<const double> node_weight) {
    const double total = prefix.back();
    if (target <= 0.0) {
        if (target < 0.0) throw DomainError("invert_partial_mass: negative target");
        return grid.x_min();
    }
    if (target >= total) {
        if (target > total)
            throw DomainError("invert_partial_mass: target exceeds total mass");
        // smallest alpha on a potential trailing plateau
        auto it = std::lower_bound(prefix.begin(), prefix.end(), total);
        return grid.node(static_cast<int>(it - prefix.begin()));
    }
    // first index with prefix >= target; the root lies in cell (idx-1, idx]
    auto it = std::lower_bound(prefix.begin(), prefix.end(), target);
    int idx = static_cast<int>(it - prefix.begin());
    if (idx == 0) return grid.x_min();
    const int i = idx - 1;
    const double dx = grid.dx();
    const double vi = cell_integrand(values, node_weight, i);
    const double vip1 = cell_integrand(values, node_weight, i + 1);
    const double rhs = target - prefix[i];
    // solve a*s^2 + b*s = rhs with a = (v_{i+1}-v_i)/(2 dx), b = v_i
    const double a = 0.5 * (vip1 - vi) / dx;
    const double b = vi;
    double s;
    if (std::abs(a) * dx <= 1e-14 * std::max(b, 1e-300)) {
        s = (b > 0.0) ? rhs / b : 0.0;
    } else {
        const double disc = std::max(b * b + 4.0 * a * rhs, 0.0);
        const double denom = b + std::sqrt(disc);
        s = (denom > 0.0) ? 2.0 * rhs / denom : 0.0;
    }
    s = std::clamp(s, 0.0, dx);
    return grid.node(i) + s;
}

double trapezoid_mass(const DensityField& u) {
    // Same left-to-right accumulation as prefix_mass so that
    // partial_mass(u, x_max) == trapezoid_mass(u) exactly.
    const auto& g = u.grid();
    const double dx = g.dx();
    auto v = u.values();
    double acc = 0.0;
    for (int i = 0; i + 1 < g.n_nodes(); ++i)
        acc += 0.5 * dx * (v[i] + v[i + 1]);
    return acc;
}

double partial_mass(const DensityField& u, double alpha) {
    auto prefix = prefix_mass(u.grid(), u.values());
    return partial_mass_from_prefix(u.grid(), u.values(), prefix, alpha);
}

DiscreteNorms discrete_norms(const DensityField& u) {
    const auto& g = u.grid();
    const int n = g.n_nodes();
    const double dx = g.dx();
    auto v = u.values();
    std::vector<double> sq(static_cast<std::size_t>(n));
    std::vector<double> dsq(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) sq[i] = v[i] * v[i];
    dsq[0] = (v[1] - v[0]) / dx;
    dsq[n - 1] = (v[n - 1] - v[n - 2]) / dx;
    for (int i = 1; i + 1 < n; ++i) dsq[i] = (v[i + 1] - v[i - 1]) / (2.0 * dx);
    for (int i = 0; i < n; ++i) dsq[i] *= dsq[i];
    auto trapz = [&](const std::vector<double>& w) {
        double acc = 0.0;
        for (int i = 0; i + 1 < n; ++i) acc += 0.5 * dx * (w[i] + w[i + 1]);
        return acc;
    };
    const double l2sq = trapz(sq);
    const double h1sq = l2sq + trapz(dsq);
    return {std::sqrt(l2sq), std::sqrt(h1sq)};
}

} // namespace kbm
