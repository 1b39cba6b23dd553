#pragma once

#include <string>
#include <vector>

#include "core/diffusion.hpp"
#include "core/grid.hpp"
#include "core/survival.hpp"

namespace kbm {

/// Gaussian density sampled on the grid; mass is 1 up to the window
/// truncation, which is the caller's responsibility to keep negligible.
DensityField gaussian_density(GridPtr grid, double mean, double stddev);

/// G(t) = exp(-rate t) with exact derivative.
SurvivalSpec exponential_survival(double rate, double lambda, double horizon);

Barrier constant_barrier(MeshPtr mesh, double level);
Barrier linear_barrier(MeshPtr mesh, double intercept, double slope);
/// b(t) = offset + amplitude * sin(2 pi frequency t)
Barrier sinusoidal_barrier(MeshPtr mesh, double amplitude, double frequency,
                           double offset);
Barrier minus_infinity_barrier(MeshPtr mesh);
Barrier plus_infinity_barrier(MeshPtr mesh);

/// Spatial window large enough that the heat envelope of u0 stays below
/// 1e-10 at the boundary over [0, T].
std::pair<double, double> default_window(double mean, double stddev,
                                         double horizon);

} // namespace kbm
