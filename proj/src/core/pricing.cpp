#include "core/pricing.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace kbm {

std::function<double(double)> make_payoff(PayoffKind kind, double strike) {
    switch (kind) {
        case PayoffKind::call:
            return [strike](double x) { return std::max(x - strike, 0.0); };
        case PayoffKind::put:
            return [strike](double x) { return std::max(strike - x, 0.0); };
        case PayoffKind::digital:
            return [strike](double x) { return x >= strike ? 1.0 : 0.0; };
        case PayoffKind::identity:
            return [](double x) { return x; };
    }
    throw InvalidArgument("make_payoff: unknown payoff kind");
}

PayoffKind payoff_kind_from_string(const std::string& name) {
    if (name == "call") return PayoffKind::call;
    if (name == "put") return PayoffKind::put;
    if (name == "digital") return PayoffKind::digital;
    if (name == "identity") return PayoffKind::identity;
    throw InvalidArgument("unknown payoff preset: " + name);
}

ValueSurface::ValueSurface(GridPtr log_asset_grid, GridPtr credit_grid,
                           MeshPtr mesh, std::vector<std::vector<double>> slices)
    : xg_(std::move(log_asset_grid)),
      yg_(std::move(credit_grid)),
      mesh_(std::move(mesh)),
      slices_(std::move(slices)) {
    if (!xg_ || !yg_ || !mesh_) throw InvalidArgument("ValueSurface: null input");
    if (static_cast<int>(slices_.size()) != mesh_->n_steps() + 1)
        throw InvalidArgument("ValueSurface: need n_steps + 1 slices");
    const std::size_t expect =
        static_cast<std::size_t>(xg_->n_nodes()) * yg_->n_nodes();
    for (const auto& s : slices_)
        if (s.size() != expect)
            throw InvalidArgument("ValueSurface: slice size mismatch");
}

namespace {

struct AdiWorkspace {
    // per-line tridiagonal buffers
    std::vector<double> diag, upper, rhs, sol;
};

// Solve (I - c_im * L1d) along one line, L1d u = a2*D2 u + a1*D1 u - r u,
// Dirichlet ends fixed at the stored boundary values of `target`.
void line_solve(std::span<double> target, std::span<const double> rhs_interior,
                int n, double h, double c_im, std::span<const double> a2,
                std::span<const double> a1, std::span<const double> rate,
                AdiWorkspace& ws) {
    const int m = n - 2;
    ws.diag.resize(m);
    ws.upper.resize(m);
    ws.rhs.assign(rhs_interior.begin(), rhs_interior.end());
    std::vector<double>& lower_cache = ws.sol; // reuse as lower diagonal
    lower_cache.resize(m);
    for (int i = 1; i + 1 < n; ++i) {
        const double d2 = a2[i] / (h * h);
        const double d1 = a1[i] / (2.0 * h);
        const double lo = -c_im * (d2 - d1);
        const double up = -c_im * (d2 + d1);
        const double dg = 1.0 + c_im * (2.0 * d2 + rate[i]);
        lower_cache[i - 1] = lo;
        ws.upper[i - 1] = up;
        ws.diag[i - 1] = dg;
    }
    // boundary contributions
    ws.rhs[0] -= lower_cache[0] * target[0];
    ws.rhs[m - 1] -= ws.upper[m - 1] * target[n - 1];
    for (int i = 1; i < m; ++i) {
        const double w = lower_cache[i] / ws.diag[i - 1];
        ws.diag[i] -= w * ws.upper[i - 1];
        ws.rhs[i] -= w * ws.rhs[i - 1];
    }
    target[m] = ws.rhs[m - 1] / ws.diag[m - 1];
    for (int i = m - 1; i >= 1; --i)
        target[i] = (ws.rhs[i - 1] - ws.upper[i - 1] * target[i + 1]) / ws.diag[i - 1];
}

} // namespace

ValueSurface solve_price_surface(const PricingSpec& spec) {
    if (!spec.log_asset_grid || !spec.credit_grid || !spec.mesh)
        throw InvalidArgument("solve_price_surface: null grid or mesh");
    if (!spec.payoff) throw InvalidArgument("solve_price_surface: null payoff");
    if (!(spec.volatility > 0.0))
        throw DomainError("solve_price_surface: sigma must be positive");
    if (std::abs(spec.correlation) > 1.0)
        throw DomainError("solve_price_surface: |rho| <= 1");
    if (!(spec.lambda > 0.0))
        throw DomainError("solve_price_surface: lambda must be positive");
    if (spec.theta <= 0.0 || spec.theta > 1.0)
        throw DomainError("solve_price_surface: theta in (0, 1]");

    const auto& xg = *spec.log_asset_grid;
    const auto& yg = *spec.credit_grid;
    const auto& mesh = *spec.mesh;
    const int nx = xg.n_nodes();
    const int ny = yg.n_nodes();
    const double hx = xg.dx();
    const double hy = yg.dx();
    const double dt = mesh.dt();
    const double sig = spec.volatility;
    const double mu = spec.drift;
    const double rho = spec.correlation;
    const std::size_t nn = static_cast<std::size_t>(nx) * ny;
    auto at = [ny](int ix, int iy) {
        return static_cast<std::size_t>(ix) * ny + iy;
    };

    // direction coefficients per x-node (constant in the standard form)
    std::vector<double> a_xx(nx), a_x(nx), a_xy(nx);
    for (int i = 0; i < nx; ++i) {
        if (spec.literal_generator) {
            const double inv_x2 = std::exp(-2.0 * xg.node(i));
            a_xx[i] = 0.5 * inv_x2;
            a_x[i] = mu - 0.5 * inv_x2;
            a_xy[i] = rho * sig * std::exp(-xg.node(i));
        } else {
            a_xx[i] = 0.5 * sig * sig;
            a_x[i] = mu - 0.5 * sig * sig;
            a_xy[i] = rho * sig;
        }
    }
    const std::vector<double> a_yy(ny, 0.5);
    const std::vector<double> a_y(ny, 0.0);
    const std::vector<double> zero_x(nx, 0.0);

    // terminal slice: payoff on asset nodes, constant along y
    std::vector<double> payoff_x(nx);
    double max_pay = 0.0;
    for (int i = 0; i < nx; ++i) {
        payoff_x[i] = spec.payoff(std::exp(xg.node(i)));
        if (!std::isfinite(payoff_x[i]))
            throw DomainError("solve_price_surface: payoff must be finite on the grid");
        max_pay = std::max(max_pay, std::abs(payoff_x[i]));
    }
    const double blow_bound =
        10.0 * std::max(max_pay, 1e-12) *
        std::exp((std::abs(mu) + 1.0) * mesh.horizon());

    std::vector<std::vector<double>> slices(mesh.n_steps() + 1);
    slices[mesh.n_steps()].resize(nn);
    for (int i = 0; i < nx; ++i)
        for (int j = 0; j < ny; ++j)
            slices[mesh.n_steps()][at(i, j)] = payoff_x[i];

    // stage buffers
    std::vector<double> y0(nn), y1(nn), y2(nn), f_full(nn), f1w(nn), f2w(nn),
        f0w(nn), f0y2(nn);
    AdiWorkspace ws;
    std::vector<double> line_rhs(std::max(nx, ny));

    auto apply_f1 = [&](const std::vector<double>& w, std::vector<double>& out) {
        std::fill(out.begin(), out.end(), 0.0);
        for (int i = 1; i + 1 < nx; ++i)
            for (int j = 1; j + 1 < ny; ++j) {
                const double dxx =
                    (w[at(i + 1, j)] - 2.0 * w[at(i, j)] + w[at(i - 1, j)]) /
                    (hx * hx);
                const double dx1 =
                    (w[at(i + 1, j)] - w[at(i - 1, j)]) / (2.0 * hx);
                out[at(i, j)] = a_xx[i] * dxx + a_x[i] * dx1;
            }
    };
    auto apply_f2 = [&](const std::vector<double>& w,
                        std::span<const double> kappa, std::vector<double>& out) {
        std::fill(out.begin(), out.end(), 0.0);
        for (int i = 1; i + 1 < nx; ++i)
            for (int j = 1; j + 1 < ny; ++j) {
                const double dyy =
                    (w[at(i, j + 1)] - 2.0 * w[at(i, j)] + w[at(i, j - 1)]) /
                    (hy * hy);
                out[at(i, j)] = 0.5 * dyy - spec.lambda * kappa[j] * w[at(i, j)];
            }
    };
    auto apply_f0 = [&](const std::vector<double>& w, std::vector<double>& out) {
        std::fill(out.begin(), out.end(), 0.0);
        if (rho == 0.0 && !spec.literal_generator) return;
        for (int i = 1; i + 1 < nx; ++i)
            for (int j = 1; j + 1 < ny; ++j) {
                const double dxy = (w[at(i + 1, j + 1)] - w[at(i + 1, j - 1)] -
                                    w[at(i - 1, j + 1)] + w[at(i - 1, j - 1)]) /
                                   (4.0 * hx * hy);
                out[at(i, j)] = a_xy[i] * dxy;
            }
    };

    for (int step = mesh.n_steps() - 1; step >= 0; --step) {
        const auto& w1 = slices[step + 1];
        const double t0 = mesh.time(step);
        const double t1 = mesh.time(step + 1);
        KillingWeights k_end(spec.credit_grid, spec.barrier.at(t1));
        KillingWeights k_start(spec.credit_grid, spec.barrier.at(t0));
        const bool damped = (mesh.n_steps() - 1 - step) < spec.rannacher_steps;
        const double th = damped ? 1.0 : spec.theta;

        apply_f1(w1, f1w);
        apply_f2(w1, k_end.weights(), f2w);
        apply_f0(w1, f0w);

        // explicit predictor with the full operator
        for (std::size_t idx = 0; idx < nn; ++idx)
            y0[idx] = w1[idx] + dt * (f0w[idx] + f1w[idx] + f2w[idx]);

        auto implicit_x = [&](const std::vector<double>& in,
                              std::vector<double>& out) {
            out = in;
            for (int j = 1; j + 1 < ny; ++j) {
                // gather the x-line at fixed y
                std::vector<double>& lr = line_rhs;
                lr.resize(nx);
                for (int i = 0; i < nx; ++i) lr[i] = in[at(i, j)];
                std::vector<double> tgt(nx);
                for (int i = 0; i < nx; ++i) tgt[i] = w1[at(i, j)]; // boundary values
                std::vector<double> rhs_int(nx - 2);
                for (int i = 1; i + 1 < nx; ++i)
                    rhs_int[i - 1] = lr[i] - th * dt * f1w[at(i, j)];
                line_solve(tgt, rhs_int, nx, hx, th * dt, a_xx, a_x, zero_x, ws);
                for (int i = 1; i + 1 < nx; ++i) out[at(i, j)] = tgt[i];
            }
        };
        auto implicit_y = [&](const std::vector<double>& in,
                              std::vector<double>& out) {
            out = in;
            std::vector<double> rate(ny);
            for (int j = 0; j < ny; ++j)
                rate[j] = spec.lambda * k_start.weights()[j];
            for (int i = 1; i + 1 < nx; ++i) {
                std::vector<double> tgt(ny);
                for (int j = 0; j < ny; ++j) tgt[j] = w1[at(i, j)];
                std::vector<double> rhs_int(ny - 2);
                for (int j = 1; j + 1 < ny; ++j)
                    rhs_int[j - 1] = in[at(i, j)] - th * dt * f2w[at(i, j)];
                line_solve(tgt, rhs_int, ny, hy, th * dt, a_yy, a_y, rate, ws);
                for (int j = 1; j + 1 < ny; ++j) out[at(i, j)] = tgt[j];
            }
        };

        implicit_x(y0, y1);
        implicit_y(y1, y2);
        if (!damped) {
            // Craig-Sneyd correction of the explicit mixed term
            apply_f0(y2, f0y2);
            for (std::size_t idx = 0; idx < nn; ++idx)
                y0[idx] += 0.5 * dt * (f0y2[idx] - f0w[idx]);
            implicit_x(y0, y1);
            implicit_y(y1, y2);
        }

        double worst = 0.0;
        for (std::size_t idx = 0; idx < nn; ++idx) {
            if (!std::isfinite(y2[idx])) {
                worst = std::numeric_limits<double>::infinity();
                break;
            }
            worst = std::max(worst, std::abs(y2[idx]));
        }
        if (worst > blow_bound) {
            std::ostringstream msg;
            msg << "solve_price_surface: explicit stage diverged at t = " << t0
                << " (|w| reached " << worst << "); retry with dt <= "
                << 0.25 * dt;
            throw StabilityError(msg.str(), 0.25 * dt);
        }
        slices[step] = y2;
    }

    return ValueSurface(spec.log_asset_grid, spec.credit_grid, spec.mesh,
                        std::move(slices));
}

double price(const ValueSurface& surface, double t, double asset,
             const DensityField& f_credit) {
    const auto& mesh = surface.mesh();
    const double jr = t / mesh.dt();
    const int j = static_cast<int>(std::llround(jr));
    if (j < 0 || j > mesh.n_steps() ||
        std::abs(jr - j) > 1e-9 * std::max(1.0, jr))
        throw DomainError("price: t must align with the surface mesh");
    if (!(asset > 0.0)) throw DomainError("price: asset must be positive");
    const auto& xg = surface.log_asset_grid();
    const double xi = std::log(asset);
    const double ir = (xi - xg.x_min()) / xg.dx();
    const int ix = static_cast<int>(std::llround(ir));
    if (ix < 0 || ix >= xg.n_nodes() || std::abs(ir - ix) > 1e-6)
        throw DomainError("price: asset level must sit on the grid");
    const auto& yg = surface.credit_grid();
    if (!f_credit.grid().same_as(yg))
        throw InvalidArgument("price: credit density grid mismatch");
    const int ny = yg.n_nodes();
    const double dy = yg.dx();
    double acc = 0.0;
    for (int iy = 0; iy + 1 < ny; ++iy) {
        acc += 0.5 * dy *
               (surface.value(j, ix, iy) * f_credit.value(iy) +
                surface.value(j, ix, iy + 1) * f_credit.value(iy + 1));
    }
    return acc;
}

} // namespace kbm
