#pragma once

#include <string>
#include <vector>

#include "core/forward.hpp"
#include "core/grid.hpp"
#include "core/inverse.hpp"
#include "core/monte_carlo.hpp"

namespace kbm {

/// CSV emission for the artifacts a run produces. Numbers are written with
/// 17 significant digits so files round-trip bit-exactly.
void write_barrier_csv(const std::string& path, const Barrier& b);
void write_survival_csv(const std::string& path, const SurvivalCurve& curve);
void write_estimate_csv(const std::string& path, const SurvivalEstimate& est);
/// Matrix layout: header row of node positions, then one row per time.
void write_history_csv(const std::string& path, const DensityHistory& h);
/// Per-time summary (t, mass, min, max, argmax).
void write_history_summary_csv(const std::string& path, const DensityHistory& h);
void write_diagnostics_csv(const std::string& path,
                           const IterationDiagnostics& diag);
void write_slice_csv(const std::string& path, std::span<const double> x,
                     std::span<const double> y, std::span<const double> values);

/// Two-column (x, value) table, e.g. tabulated barriers.
std::vector<std::pair<double, double>> read_two_column_csv(
    const std::string& path);

} // namespace kbm
