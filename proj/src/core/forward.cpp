#include "core/forward.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace kbm {

KillingWeights::KillingWeights(GridPtr grid, double b)
    : grid_(std::move(grid)), b_(b) {
    if (!grid_) throw InvalidArgument("KillingWeights: null grid");
    if (std::isnan(b)) throw DomainError("KillingWeights: barrier is NaN");
    const int n = grid_->n_nodes();
    const double dx = grid_->dx();
    weights_.assign(n, 0.0);
    for (int i = 0; i < n; ++i) {
        const double lo = grid_->node(i) - 0.5 * dx;
        const double hi = grid_->node(i) + 0.5 * dx;
        if (hi <= b_) {
            weights_[i] = 1.0;
        } else if (lo >= b_) {
            weights_[i] = 0.0;
        } else {
            weights_[i] = (b_ - lo) / dx;
        }
    }
}

namespace {

double clip_negative(std::span<double> v, const SpatialGrid& grid) {
    const double dx = grid.dx();
    const int n = grid.n_nodes();
    double clipped = 0.0;
    for (int i = 0; i < n; ++i) {
        if (v[i] < 0.0) {
            const double w = (i == 0 || i == n - 1) ? 0.5 * dx : dx;
            clipped += -v[i] * w;
            v[i] = 0.0;
        }
    }
    return clipped;
}

// One mesh step, possibly split into two damped implicit-Euler half-steps.
double advance(const FluxOperator& op, std::span<const double> u,
               std::span<double> out, double b_start, double b_mid,
               double b_end, double dt, double lambda, bool rannacher,
               Scheme scheme, StepWorkspace& ws, std::vector<double>& half) {
    const auto grid = op.grid_ptr();
    if (rannacher || scheme == Scheme::implicit_euler) {
        if (rannacher) {
            half.resize(u.size());
            KillingWeights km(grid, b_mid);
            KillingWeights ke(grid, b_end);
            kernel_theta_step(op, {}, km.weights(), lambda, 0.5 * dt, 1.0, u,
                              half, ws);
            double c = clip_negative(half, *grid);
            kernel_theta_step(op, {}, ke.weights(), lambda, 0.5 * dt, 1.0, half,
                              out, ws);
            return c + clip_negative(out, *grid);
        }
        KillingWeights ke(grid, b_end);
        kernel_theta_step(op, {}, ke.weights(), lambda, dt, 1.0, u, out, ws);
        return clip_negative(out, *grid);
    }
    KillingWeights ks(grid, b_start);
    KillingWeights ke(grid, b_end);
    kernel_theta_step(op, ks.weights(), ke.weights(), lambda, dt, 0.5, u, out, ws);
    return clip_negative(out, *grid);
}

} // namespace

DensityField step(const DensityField& u, double b_start, double b_end,
                  double dt, const ForwardConfig& cfg, double* clipped_mass) {
    if (!(dt > 0.0)) throw DomainError("step: dt must be positive");
    auto op = FluxOperator::brownian(u.grid_ptr());
    StepWorkspace ws;
    std::vector<double> half;
    std::vector<double> out(u.size());
    const double c = advance(op, u.values(), out, b_start,
                             0.5 * (b_start + b_end), b_end, dt, cfg.lambda,
                             /*rannacher=*/false, cfg.scheme, ws, half);
    if (clipped_mass) *clipped_mass = c;
    return DensityField(u.grid_ptr(), std::move(out));
}

DensityHistory solve_forward_operator(const FluxOperator& op,
                                      const DensityField& u0, const Barrier& b,
                                      MeshPtr mesh, const ForwardConfig& cfg,
                                      ForwardAudit* audit) {
    if (!mesh) throw InvalidArgument("solve_forward: null mesh");
    if (!op.grid().same_as(u0.grid()))
        throw InvalidArgument("solve_forward: operator and u0 grids differ");
    if (cfg.rannacher_steps < 0 || cfg.rannacher_steps > mesh->n_steps())
        throw DomainError("solve_forward: rannacher_steps outside [0, n_steps]");
    if (b.mesh().horizon() < mesh->horizon() - 1e-9 * mesh->horizon())
        throw InvalidArgument("solve_forward: barrier horizon too short");
    if (!(cfg.lambda > 0.0)) throw DomainError("solve_forward: lambda must be positive");

    ForwardAudit local;
    StepWorkspace ws;
    std::vector<double> half;
    std::vector<DensityField> snaps;
    snaps.reserve(mesh->n_steps() + 1);
    snaps.push_back(u0);
    std::vector<double> cur(u0.values().begin(), u0.values().end());
    std::vector<double> next(cur.size());
    for (int j = 0; j < mesh->n_steps(); ++j) {
        const double t0 = mesh->time(j);
        const double t1 = mesh->time(j + 1);
        const bool rann = (cfg.scheme == Scheme::crank_nicolson) &&
                          (j < cfg.rannacher_steps);
        const double c = advance(op, cur, next, b.at(t0), b.at(0.5 * (t0 + t1)),
                                 b.at(t1), mesh->dt(), cfg.lambda, rann,
                                 cfg.scheme, ws, half);
        local.clipped_mass_total += c;
        local.clipped_mass_max_step = std::max(local.clipped_mass_max_step, c);
        snaps.emplace_back(u0.grid_ptr(), next);
        std::swap(cur, next);
    }
    if (audit) *audit = local;
    return DensityHistory(std::move(mesh), std::move(snaps));
}

DensityHistory solve_forward(const DensityField& u0, const Barrier& b,
                             MeshPtr mesh, const ForwardConfig& cfg,
                             ForwardAudit* audit) {
    auto op = FluxOperator::brownian(u0.grid_ptr());
    return solve_forward_operator(op, u0, b, std::move(mesh), cfg, audit);
}

SurvivalCurve survival_curve(const DensityHistory& h) {
    SurvivalCurve out;
    out.times.reserve(h.n_snapshots());
    out.masses.reserve(h.n_snapshots());
    for (int j = 0; j < h.n_snapshots(); ++j) {
        out.times.push_back(h.mesh().time(j));
        out.masses.push_back(trapezoid_mass(h.snapshot(j)));
    }
    return out;
}

SurvivalCurve survival_curve_weighted(const DensityHistory& h,
                                      std::span<const double> node_weight) {
    SurvivalCurve out;
    out.times.reserve(h.n_snapshots());
    out.masses.reserve(h.n_snapshots());
    for (int j = 0; j < h.n_snapshots(); ++j) {
        const auto& u = h.snapshot(j);
        auto prefix = prefix_mass(u.grid(), u.values(), node_weight);
        out.times.push_back(h.mesh().time(j));
        out.masses.push_back(prefix.back());
    }
    return out;
}

SurvivalSpec survival_spec_from_history(const DensityHistory& h, double lambda) {
    auto curve = survival_curve(h);
    return SurvivalSpec::tabulated(h.mesh_ptr(), std::move(curve.masses), lambda);
}

namespace {

DensityField heat_convolution(const DensityField& u0, double t, double damping) {
    if (!(t > 0.0)) throw DomainError("bound field: t must be positive");
    const auto& g = u0.grid();
    const int n = g.n_nodes();
    const double dx = g.dx();
    auto v = u0.values();
    // kernel values by node distance; trapezoid weights in the convolution
    std::vector<double> kernel(static_cast<std::size_t>(n));
    const double norm = damping / std::sqrt(2.0 * std::numbers::pi * t);
    for (int k = 0; k < n; ++k) {
        const double d = k * dx;
        kernel[k] = norm * std::exp(-d * d / (2.0 * t));
    }
    std::vector<double> out(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) {
        double acc = 0.0;
        for (int j = 0; j < n; ++j) {
            const double w = (j == 0 || j == n - 1) ? 0.5 * dx : dx;
            acc += kernel[std::abs(i - j)] * v[j] * w;
        }
        out[i] = acc;
    }
    return DensityField(u0.grid_ptr(), std::move(out));
}

} // namespace

DensityField lower_bound_field(const DensityField& u0, double t, double lambda) {
    return heat_convolution(u0, t, std::exp(-lambda * t));
}

DensityField upper_bound_field(const DensityField& u0, double t) {
    return heat_convolution(u0, t, 1.0);
}

namespace {

// eta(z) = exp(-1/(1-z^2)) for |z| < 1, 0 otherwise
double eta(double z) {
    const double w = 1.0 - z * z;
    if (w <= 1e-12) return 0.0;
    return std::exp(-1.0 / w);
}

double eta_prime(double z) {
    const double w = 1.0 - z * z;
    if (w <= 1e-12) return 0.0;
    return eta(z) * (-2.0 * z / (w * w));
}

double eta_second(double z) {
    const double w = 1.0 - z * z;
    if (w <= 1e-12) return 0.0;
    const double a = -2.0 * z / (w * w);
    const double ap = -2.0 * (1.0 + 3.0 * z * z) / (w * w * w);
    return eta(z) * (a * a + ap);
}

} // namespace

double BumpTestFunction::phi(double t, double x) const {
    return eta((t - t0) / rt) * eta((x - x0) / rx);
}

double BumpTestFunction::dphi_dt(double t, double x) const {
    return eta_prime((t - t0) / rt) / rt * eta((x - x0) / rx);
}

double BumpTestFunction::d2phi_dx2(double t, double x) const {
    return eta((t - t0) / rt) * eta_second((x - x0) / rx) / (rx * rx);
}

std::vector<BumpTestFunction> default_bump_battery(const SpatialGrid& grid,
                                                   const TimeMesh& mesh) {
    const double mid = 0.5 * (grid.x_min() + grid.x_max());
    const double span = 0.5 * (grid.x_max() - grid.x_min());
    const double T = mesh.horizon();
    std::vector<BumpTestFunction> battery;
    for (double cx : {mid - 0.3 * span, mid, mid + 0.3 * span}) {
        battery.push_back({cx, 0.35 * span, 0.5 * T, 0.65 * T});
        battery.push_back({cx, 0.60 * span, 0.5 * T, 1.10 * T});
    }
    return battery;
}

double weak_residual(const DensityHistory& h, const Barrier& b, double lambda,
                     std::span<const BumpTestFunction> battery) {
    const auto& grid = h.snapshot(0).grid();
    const auto& mesh = h.mesh();
    const int n = grid.n_nodes();
    const double dx = grid.dx();
    const double dt = mesh.dt();
    auto xw = [&](int i) { return (i == 0 || i == n - 1) ? 0.5 * dx : dx; };
    auto tw = [&](int j) {
        return (j == 0 || j == mesh.n_steps()) ? 0.5 * dt : dt;
    };

    double worst = 0.0;
    for (const auto& bump : battery) {
        double lhs = 0.0;
        double diffusion = 0.0;
        double killing = 0.0;
        for (int j = 0; j <= mesh.n_steps(); ++j) {
            const double t = mesh.time(j);
            const auto u = h.snapshot(j).values();
            KillingWeights kw(h.snapshot(0).grid_ptr(), b.at(t));
            auto kap = kw.weights();
            double a_lhs = 0.0, a_diff = 0.0, a_kill = 0.0;
            for (int i = 0; i < n; ++i) {
                const double x = grid.node(i);
                const double w = xw(i);
                a_lhs += u[i] * bump.dphi_dt(t, x) * w;
                a_diff += u[i] * bump.d2phi_dx2(t, x) * w;
                a_kill += kap[i] * u[i] * bump.phi(t, x) * w;
            }
            lhs += a_lhs * tw(j);
            diffusion += a_diff * tw(j);
            killing += a_kill * tw(j);
        }
        double boundary = 0.0;
        {
            const auto uT = h.snapshot(mesh.n_steps()).values();
            const auto u0 = h.snapshot(0).values();
            for (int i = 0; i < n; ++i) {
                const double x = grid.node(i);
                boundary += (uT[i] * bump.phi(mesh.horizon(), x) -
                             u0[i] * bump.phi(0.0, x)) *
                            xw(i);
            }
        }
        const double rhs = boundary - 0.5 * diffusion + lambda * killing;
        worst = std::max(worst, std::abs(lhs - rhs));
    }
    return worst;
}

} // namespace kbm
