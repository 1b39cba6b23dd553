#include "core/presets.hpp"

#include <cmath>
#include <numbers>

namespace kbm {

DensityField gaussian_density(GridPtr grid, double mean, double stddev) {
    if (!(stddev > 0.0)) throw DomainError("gaussian_density: stddev > 0");
    const int n = grid->n_nodes();
    std::vector<double> v(static_cast<std::size_t>(n));
    const double norm = 1.0 / (stddev * std::sqrt(2.0 * std::numbers::pi));
    for (int i = 0; i < n; ++i) {
        const double z = (grid->node(i) - mean) / stddev;
        v[i] = norm * std::exp(-0.5 * z * z);
    }
    return DensityField(std::move(grid), std::move(v));
}

SurvivalSpec exponential_survival(double rate, double lambda, double horizon) {
    if (!(rate > 0.0)) throw DomainError("exponential_survival: rate > 0");
    return SurvivalSpec::analytic(
        [rate](double t) { return std::exp(-rate * t); },
        [rate](double t) { return -rate * std::exp(-rate * t); }, lambda,
        horizon);
}

Barrier constant_barrier(MeshPtr mesh, double level) {
    const int n = mesh->n_steps() + 1;
    return Barrier(std::move(mesh), std::vector<double>(n, level));
}

Barrier linear_barrier(MeshPtr mesh, double intercept, double slope) {
    std::vector<double> v(mesh->n_steps() + 1);
    for (int j = 0; j <= mesh->n_steps(); ++j)
        v[j] = intercept + slope * mesh->time(j);
    return Barrier(std::move(mesh), std::move(v));
}

Barrier sinusoidal_barrier(MeshPtr mesh, double amplitude, double frequency,
                           double offset) {
    std::vector<double> v(mesh->n_steps() + 1);
    for (int j = 0; j <= mesh->n_steps(); ++j)
        v[j] = offset +
               amplitude *
                   std::sin(2.0 * std::numbers::pi * frequency * mesh->time(j));
    return Barrier(std::move(mesh), std::move(v));
}

Barrier minus_infinity_barrier(MeshPtr mesh) {
    return constant_barrier(std::move(mesh), Barrier::kMinusInfinity);
}

Barrier plus_infinity_barrier(MeshPtr mesh) {
    return constant_barrier(std::move(mesh), Barrier::kPlusInfinity);
}

std::pair<double, double> default_window(double mean, double stddev,
                                         double horizon) {
    const double half = 12.0 * stddev + 8.0 * std::sqrt(std::max(horizon, 0.0));
    return {mean - half, mean + half};
}

} // namespace kbm
