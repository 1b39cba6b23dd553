#include "core/kernel.hpp"

#include <cmath>

namespace kbm {

FluxOperator::FluxOperator(GridPtr grid, std::vector<double> face_coeff,
                           std::vector<double> node_weight)
    : grid_(std::move(grid)),
      face_coeff_(std::move(face_coeff)),
      node_weight_(std::move(node_weight)) {
    if (!grid_) throw InvalidArgument("FluxOperator: null grid");
    const int n = grid_->n_nodes();
    if (static_cast<int>(face_coeff_.size()) != n - 1)
        throw InvalidArgument("FluxOperator: need n-1 face coefficients");
    if (static_cast<int>(node_weight_.size()) != n)
        throw InvalidArgument("FluxOperator: need n node weights");
    for (double p : face_coeff_)
        if (!(p > 0.0) || !std::isfinite(p))
            throw DomainError("FluxOperator: face coefficients must be positive");
    for (double m : node_weight_)
        if (!(m > 0.0) || !std::isfinite(m))
            throw DomainError("FluxOperator: node weights must be positive");
    const double dx2 = grid_->dx() * grid_->dx();
    cl_.resize(n - 2);
    cr_.resize(n - 2);
    for (int i = 1; i + 1 < n; ++i) {
        cl_[i - 1] = face_coeff_[i - 1] / (node_weight_[i] * dx2);
        cr_[i - 1] = face_coeff_[i] / (node_weight_[i] * dx2);
    }
}

FluxOperator FluxOperator::brownian(GridPtr grid) {
    const int n = grid->n_nodes();
    return FluxOperator(std::move(grid), std::vector<double>(n - 1, 1.0),
                        std::vector<double>(n, 2.0));
}

void kernel_theta_step(const FluxOperator& op, std::span<const double> kappa_start,
                       std::span<const double> kappa_end, double lambda,
                       double dt, double theta, std::span<const double> u_in,
                       std::span<double> u_out, StepWorkspace& ws) {
    const int n = op.grid().n_nodes();
    const int m = n - 2; // interior nodes
    auto cl = op.couple_left();
    auto cr = op.couple_right();
    ws.rhs.resize(m);
    ws.diag.resize(m);
    ws.upper.resize(m);

    const double ex = (1.0 - theta) * dt;
    const double im = theta * dt;
    if (ex != 0.0) {
        for (int i = 1; i + 1 < n; ++i) {
            const double lu = cl[i - 1] * u_in[i - 1] -
                              (cl[i - 1] + cr[i - 1] + lambda * kappa_start[i]) * u_in[i] +
                              cr[i - 1] * u_in[i + 1];
            ws.rhs[i - 1] = u_in[i] + ex * lu;
        }
    } else {
        for (int i = 1; i + 1 < n; ++i) ws.rhs[i - 1] = u_in[i];
    }
    for (int i = 1; i + 1 < n; ++i) {
        ws.diag[i - 1] = 1.0 + im * (cl[i - 1] + cr[i - 1] + lambda * kappa_end[i]);
        ws.upper[i - 1] = -im * cr[i - 1];
    }

    // Thomas sweep; the matrix is strictly diagonally dominant, no pivoting.
    for (int i = 1; i < m; ++i) {
        const double lower = -im * cl[i];
        const double pivot = ws.diag[i - 1];
        if (pivot == 0.0) throw InternalError("kernel_theta_step: zero pivot");
        const double w = lower / pivot;
        ws.diag[i] -= w * ws.upper[i - 1];
        ws.rhs[i] -= w * ws.rhs[i - 1];
    }
    if (ws.diag[m - 1] == 0.0) throw InternalError("kernel_theta_step: zero pivot");
    u_out[0] = 0.0;
    u_out[n - 1] = 0.0;
    u_out[m] = ws.rhs[m - 1] / ws.diag[m - 1];
    for (int i = m - 1; i >= 1; --i)
        u_out[i] = (ws.rhs[i - 1] - ws.upper[i - 1] * u_out[i + 1]) / ws.diag[i - 1];
}

} // namespace kbm
