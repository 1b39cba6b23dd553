#include "core/inverse.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace kbm {

namespace {

constexpr double kClampExcursion = 1e-9;
constexpr double kMonotoneTol = 1e-10;

// Admissible open interval for the mass target is (0, total). Excursions
// at float-noise level are clamped and counted; larger ones abort.
double admissible_target(double target, double total, double t,
                         IterationDiagnostics* diag) {
    if (target > 0.0 && target < total) return target;
    const double excursion =
        (target <= 0.0) ? -target : target - total;
    if (excursion <= kClampExcursion) {
        if (diag) ++diag->clamp_warnings;
        const double margin = 1e-12 * std::max(total, 1.0);
        return std::clamp(target, margin, total - margin);
    }
    std::ostringstream msg;
    msg << "constraint target -G'(t)/lambda = " << target
        << " outside (0, " << total << ") at t = " << t;
    throw CompatibilityError(msg.str());
}

Barrier barrier_update(const DensityHistory& h, const SurvivalSpec& g,
                       std::span<const double> node_weight,
                       IterationDiagnostics* diag) {
    const auto& mesh = h.mesh();
    std::vector<double> levels(mesh.n_steps() + 1);
    for (int j = 0; j <= mesh.n_steps(); ++j) {
        const auto& u = h.snapshot(j);
        auto prefix = prefix_mass(u.grid(), u.values(), node_weight);
        const double t = mesh.time(j);
        const double raw = -g.derivative(t) / g.lambda();
        const double target = admissible_target(raw, prefix.back(), t, diag);
        levels[j] = invert_partial_mass(u.grid(), u.values(), prefix, target,
                                        node_weight);
    }
    return Barrier(h.mesh_ptr(), std::move(levels));
}

double sup_abs_diff(std::span<const double> a, std::span<const double> b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        worst = std::max(worst, std::abs(a[i] - b[i]));
    return worst;
}

IterationRecord make_record(int k, const DensityHistory& prev_h,
                            const DensityHistory& next_h, const Barrier& prev_b,
                            const Barrier& next_b, const SurvivalSpec& g,
                            std::span<const double> node_weight) {
    IterationRecord rec;
    rec.k = k;
    rec.sup_barrier_change = sup_abs_diff(prev_b.values(), next_b.values());
    const auto& mesh = next_h.mesh();
    for (int j = 0; j <= mesh.n_steps(); ++j) {
        const auto un = next_h.snapshot(j).values();
        const auto up = prev_h.snapshot(j).values();
        for (std::size_t i = 0; i < un.size(); ++i)
            rec.max_u_violation = std::max(rec.max_u_violation, un[i] - up[i]);
        rec.max_b_violation =
            std::max(rec.max_b_violation, prev_b.value(j) - next_b.value(j));

        const auto& u = next_h.snapshot(j);
        auto prefix = prefix_mass(u.grid(), u.values(), node_weight);
        const double t = mesh.time(j);
        rec.mass_residual =
            std::max(rec.mass_residual, std::abs(prefix.back() - g.value(t)));
        const double pm = partial_mass_from_prefix(u.grid(), u.values(), prefix,
                                                   std::clamp(next_b.value(j),
                                                              u.grid().x_min(),
                                                              u.grid().x_max()),
                                                   node_weight);
        rec.constraint_residual =
            std::max(rec.constraint_residual,
                     std::abs(g.lambda() * pm + g.derivative(t)));
    }
    return rec;
}

} // namespace

double barrier_from_constraint(const DensityField& u, double gprime,
                               double lambda) {
    if (!(lambda > 0.0)) throw DomainError("barrier_from_constraint: lambda > 0");
    auto prefix = prefix_mass(u.grid(), u.values());
    const double total = prefix.back();
    const double target = -gprime / lambda;
    if (!(target > 0.0) || !(target < total)) {
        std::ostringstream msg;
        msg << "barrier_from_constraint: -G'/lambda = " << target
            << " outside (0, " << total << ")";
        throw CompatibilityError(msg.str());
    }
    return invert_partial_mass(u.grid(), u.values(), prefix, target);
}

InverseSolution iterate_operator(const FluxOperator& op, const DensityField& u0,
                                 const SurvivalSpec& g, MeshPtr mesh,
                                 const InverseConfig& cfg,
                                 std::span<const double> mass_weight) {
    if (!mesh) throw InvalidArgument("iterate: null mesh");
    if (cfg.max_iterations < 1)
        throw InvalidArgument("iterate: max_iterations >= 1");
    if (!(cfg.barrier_tol > 0.0))
        throw InvalidArgument("iterate: barrier_tol > 0");
    if (std::abs(mesh->horizon() - g.horizon()) >
        1e-9 * std::max(1.0, g.horizon()))
        throw InvalidArgument("iterate: mesh horizon differs from G's");

    ForwardConfig fwd = cfg.forward;
    fwd.lambda = g.lambda();
    const std::span<const double> node_weight = mass_weight;

    if (cfg.check_compatibility) {
        CompatibilityReport report;
        if (node_weight.empty()) {
            report = check_compatibility(g, u0, mesh->n_steps() + 1);
        } else {
            // the weighted density u0*m is the physical initial law
            std::vector<double> f(u0.size());
            for (int i = 0; i < u0.size(); ++i)
                f[i] = u0.value(i) * node_weight[i];
            DensityField f_field(u0.grid_ptr(), std::move(f));
            report = check_compatibility(g, f_field, mesh->n_steps() + 1);
        }
        if (!report.ok)
            throw CompatibilityError("iterate: incompatible data (G, u0)",
                                     std::move(report));
    }

    IterationDiagnostics diag;

    // heat seed: solve with an empty killing region
    Barrier no_kill(mesh, std::vector<double>(mesh->n_steps() + 1,
                                              Barrier::kMinusInfinity));
    DensityHistory prev_h = solve_forward_operator(op, u0, no_kill, mesh, fwd);
    Barrier prev_b = barrier_update(prev_h, g, node_weight, &diag);

    for (int k = 1; k <= cfg.max_iterations; ++k) {
        DensityHistory next_h = solve_forward_operator(op, u0, prev_b, mesh, fwd);
        Barrier next_b = barrier_update(next_h, g, node_weight, &diag);
        auto rec =
            make_record(k, prev_h, next_h, prev_b, next_b, g, node_weight);
        diag.records.push_back(rec);
        diag.iterations = k;
        if (rec.max_u_violation > kMonotoneTol ||
            rec.max_b_violation > kMonotoneTol)
            diag.monotone = false;
        if (rec.sup_barrier_change < cfg.barrier_tol) {
            diag.converged = true;
            return InverseSolution{std::move(next_h), std::move(next_b),
                                   std::move(diag)};
        }
        prev_h = std::move(next_h);
        prev_b = std::move(next_b);
    }
    std::ostringstream msg;
    msg << "iterate: no convergence after " << cfg.max_iterations
        << " iterations (last sup barrier change = "
        << diag.records.back().sup_barrier_change << ")";
    throw NonConvergence(msg.str(), std::move(diag));
}

InverseSolution iterate(const DensityField& u0, const SurvivalSpec& g,
                        MeshPtr mesh, const InverseConfig& cfg) {
    auto op = FluxOperator::brownian(u0.grid_ptr());
    return iterate_operator(op, u0, g, std::move(mesh), cfg);
}

namespace {

ConsistencyReport report_impl(const DensityHistory& h, const Barrier& b,
                              const SurvivalSpec& g,
                              std::span<const double> node_weight) {
    ConsistencyReport rep;
    const auto& mesh = h.mesh();
    const double lambda = g.lambda();
    std::vector<double> killed_rate(mesh.n_steps() + 1);
    rep.mass_lower_margin = std::numeric_limits<double>::infinity();
    for (int j = 0; j <= mesh.n_steps(); ++j) {
        const auto& u = h.snapshot(j);
        auto prefix = prefix_mass(u.grid(), u.values(), node_weight);
        const double t = mesh.time(j);
        const double mass = prefix.back();
        rep.mass_residual =
            std::max(rep.mass_residual, std::abs(mass - g.value(t)));
        rep.mass_lower_margin =
            std::min(rep.mass_lower_margin, mass - g.value(t));
        const double level =
            std::clamp(b.value(j), u.grid().x_min(), u.grid().x_max());
        const double pm = partial_mass_from_prefix(u.grid(), u.values(), prefix,
                                                   level, node_weight);
        killed_rate[j] = lambda * pm;
        rep.constraint_residual = std::max(
            rep.constraint_residual, std::abs(killed_rate[j] + g.derivative(t)));
    }
    double integral = 0.0;
    for (int j = 0; j <= mesh.n_steps(); ++j) {
        if (j > 0)
            integral +=
                0.5 * mesh.dt() * (killed_rate[j - 1] + killed_rate[j]);
        const double expected = g.value(0.0) - g.value(mesh.time(j));
        rep.integrated_residual =
            std::max(rep.integrated_residual, std::abs(integral - expected));
    }
    return rep;
}

} // namespace

ConsistencyReport consistency_report(const DensityHistory& h, const Barrier& b,
                                     const SurvivalSpec& g) {
    return report_impl(h, b, g, {});
}

ConsistencyReport consistency_report_weighted(
    const DensityHistory& h, const Barrier& b, const SurvivalSpec& g,
    std::span<const double> node_weight) {
    return report_impl(h, b, g, node_weight);
}

double l1_distance(const DensityHistory& a, const DensityHistory& b) {
    if (a.n_snapshots() != b.n_snapshots())
        throw InvalidArgument("l1_distance: mismatched histories");
    if (!a.snapshot(0).grid().same_as(b.snapshot(0).grid()))
        throw InvalidArgument("l1_distance: mismatched grids");
    const auto& grid = a.snapshot(0).grid();
    const int n = grid.n_nodes();
    const double dx = grid.dx();
    double worst = 0.0;
    for (int j = 0; j < a.n_snapshots(); ++j) {
        const auto ua = a.snapshot(j).values();
        const auto ub = b.snapshot(j).values();
        double acc = 0.0;
        for (int i = 0; i < n; ++i) {
            const double w = (i == 0 || i == n - 1) ? 0.5 * dx : dx;
            acc += std::abs(ua[i] - ub[i]) * w;
        }
        worst = std::max(worst, acc);
    }
    return worst;
}

} // namespace kbm
