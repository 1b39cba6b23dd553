#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "core/grid.hpp"

namespace kbm {

struct PathConfig {
    long long n_paths = 1 << 16;
    double dt_sim = 1e-3;
    std::uint64_t seed = 0;
    bool antithetic = false;
    /// Sample the exponential clock and hard-kill instead of averaging
    /// exp(-lambda A_t); identical in law, higher variance. Kept for
    /// equivalence tests.
    bool hard_kill = false;
    /// Worker threads; 0 picks the hardware count. Estimates are
    /// bit-identical for any value.
    int threads = 0;
};

struct SurvivalEstimate {
    std::vector<double> times;
    std::vector<double> mean;
    std::vector<double> std_err;
    long long n_effective = 0; // independent samples behind each std_err
    std::uint64_t seed = 0;
};

/// Inverse-CDF sampler for the piecewise-linear reconstruction of a
/// tabulated density.
class DensitySampler {
public:
    explicit DensitySampler(const DensityField& density);
    double sample(double uniform01) const;
    double total_mass() const { return prefix_.back(); }

private:
    GridPtr grid_;
    std::vector<double> values_;
    std::vector<double> prefix_;
};

/// Monte-Carlo estimate of the survival function P{tau > t} for Brownian
/// paths started from u0 and killed at rate lambda below the barrier.
/// Occupation time uses exact Gaussian increments, the step-midpoint state
/// and the barrier interpolated at the step midpoint. The estimator is the
/// sample mean of exp(-lambda A_t) (or of kill indicators in hard_kill
/// mode); antithetic pairing negates the increments, mirrors the initial
/// quantile, and each pair counts as one independent sample in the
/// standard error.
SurvivalEstimate simulate_survival(const DensityField& u0, const Barrier& b,
                                   double lambda,
                                   std::vector<double> report_times,
                                   const PathConfig& cfg);

struct PointEstimate {
    double mean = 0.0;
    double std_err = 0.0;
};

/// Feynman-Kac estimate of the density u(t, x): forward increments with the
/// occupation integrand read against the time-reversed barrier index, and
/// the initial density evaluated by linear interpolation at the endpoint.
PointEstimate feynman_kac_density(double x, double t, const DensityField& u0,
                                  const Barrier& b, double lambda,
                                  const PathConfig& cfg);

/// Central-difference hazard -dG/dt / G at an interior reporting index.
double hazard_estimate(const SurvivalEstimate& est, int j);

} // namespace kbm
