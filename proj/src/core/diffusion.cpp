#include "core/diffusion.hpp"

#include <algorithm>
#include <cmath>

namespace kbm {

DiffusionCoefficients::DiffusionCoefficients(GridPtr grid,
                                             std::function<double(double)> mu,
                                             std::function<double(double)> sigma)
    : grid_(std::move(grid)) {
    if (!grid_) throw InvalidArgument("DiffusionCoefficients: null grid");
    if (!mu || !sigma) throw InvalidArgument("DiffusionCoefficients: null handle");
    const int n = grid_->n_nodes();
    mu_.resize(n);
    sigma_.resize(n);
    for (int i = 0; i < n; ++i) {
        mu_[i] = mu(grid_->node(i));
        sigma_[i] = sigma(grid_->node(i));
    }
    derive();
}

DiffusionCoefficients::DiffusionCoefficients(GridPtr grid,
                                             std::vector<double> mu,
                                             std::vector<double> sigma)
    : grid_(std::move(grid)), mu_(std::move(mu)), sigma_(std::move(sigma)) {
    if (!grid_) throw InvalidArgument("DiffusionCoefficients: null grid");
    if (static_cast<int>(mu_.size()) != grid_->n_nodes() ||
        static_cast<int>(sigma_.size()) != grid_->n_nodes())
        throw InvalidArgument("DiffusionCoefficients: arrays must match grid");
    derive();
}

void DiffusionCoefficients::derive() {
    const int n = grid_->n_nodes();
    const double dx = grid_->dx();
    for (int i = 0; i < n; ++i) {
        if (!(sigma_[i] > 0.0) || !std::isfinite(sigma_[i]))
            throw DomainError("DiffusionCoefficients: sigma must be positive");
        if (!std::isfinite(mu_[i]))
            throw DomainError("DiffusionCoefficients: mu must be finite");
    }
    // theta = int 2 mu / sigma^2, trapezoid from the node nearest zero
    std::vector<double> g(n);
    for (int i = 0; i < n; ++i) g[i] = 2.0 * mu_[i] / (sigma_[i] * sigma_[i]);
    int anchor = 0;
    for (int i = 1; i < n; ++i)
        if (std::abs(grid_->node(i)) < std::abs(grid_->node(anchor))) anchor = i;
    theta_.assign(n, 0.0);
    for (int i = anchor; i + 1 < n; ++i)
        theta_[i + 1] = theta_[i] + 0.5 * dx * (g[i] + g[i + 1]);
    for (int i = anchor; i > 0; --i)
        theta_[i - 1] = theta_[i] - 0.5 * dx * (g[i - 1] + g[i]);
    m_.resize(n);
    s_.resize(n);
    for (int i = 0; i < n; ++i) {
        s_[i] = std::exp(-theta_[i]);
        m_[i] = 2.0 / (sigma_[i] * sigma_[i]) * std::exp(theta_[i]);
        if (!std::isfinite(m_[i]) || !(m_[i] > 0.0) || !std::isfinite(s_[i]))
            throw DomainError(
                "DiffusionCoefficients: speed density over/underflows on this "
                "window; shrink the grid or rescale the coefficients");
    }
}

DiffusionCoefficients DiffusionCoefficients::brownian(GridPtr grid) {
    return DiffusionCoefficients(
        std::move(grid), [](double) { return 0.0; }, [](double) { return 1.0; });
}

DiffusionCoefficients DiffusionCoefficients::ornstein_uhlenbeck(GridPtr grid,
                                                                double rate) {
    if (!(rate > 0.0)) throw DomainError("ornstein_uhlenbeck: rate > 0");
    return DiffusionCoefficients(
        std::move(grid), [rate](double x) { return -rate * x; },
        [](double) { return 1.0; });
}

DiffusionCoefficients DiffusionCoefficients::gbm_log(GridPtr grid, double mu,
                                                     double sigma) {
    if (!(sigma > 0.0)) throw DomainError("gbm_log: sigma > 0");
    const double drift = mu - 0.5 * sigma * sigma;
    return DiffusionCoefficients(
        std::move(grid), [drift](double) { return drift; },
        [sigma](double) { return sigma; });
}

FluxOperator DiffusionCoefficients::make_operator() const {
    const int n = grid_->n_nodes();
    std::vector<double> faces(n - 1);
    for (int i = 0; i + 1 < n; ++i)
        faces[i] = std::exp(0.5 * (theta_[i] + theta_[i + 1]));
    return FluxOperator(grid_, std::move(faces), m_);
}

std::pair<std::vector<double>, std::vector<double>>
speed_scale(const DiffusionCoefficients& coeffs) {
    return {std::vector<double>(coeffs.speed_density().begin(),
                                coeffs.speed_density().end()),
            std::vector<double>(coeffs.scale_density().begin(),
                                coeffs.scale_density().end())};
}

namespace {

DensityField transformed_initial_state(const DiffusionCoefficients& coeffs,
                                       const DensityField& f) {
    if (!f.grid().same_as(coeffs.grid()))
        throw InvalidArgument("DiffusionProblem: f and coefficients grids differ");
    for (int i = 1; i + 1 < f.size(); ++i)
        if (!(f.value(i) > 0.0))
            throw DomainError("DiffusionProblem: f must be positive");
    auto m = coeffs.speed_density();
    std::vector<double> u0_values(f.size());
    for (int i = 0; i < f.size(); ++i) u0_values[i] = f.value(i) / m[i];
    return DensityField(f.grid_ptr(), std::move(u0_values));
}

} // namespace

DiffusionProblem::DiffusionProblem(DiffusionCoefficients coefficients_in,
                                   DensityField f_in, SurvivalSpec survival_in)
    : coefficients(std::move(coefficients_in)),
      f(std::move(f_in)),
      u0(transformed_initial_state(coefficients, f)),
      survival(std::move(survival_in)) {}

DensityHistory solve_forward_diffusion(const DiffusionCoefficients& coeffs,
                                       const DensityField& u0, const Barrier& b,
                                       MeshPtr mesh, const ForwardConfig& cfg,
                                       ForwardAudit* audit) {
    auto op = coeffs.make_operator();
    return solve_forward_operator(op, u0, b, std::move(mesh), cfg, audit);
}

InverseSolution iterate_diffusion(const DiffusionProblem& problem, MeshPtr mesh,
                                  const InverseConfig& cfg) {
    auto op = problem.coefficients.make_operator();
    return iterate_operator(op, problem.u0, problem.survival, std::move(mesh),
                            cfg, problem.coefficients.speed_density());
}

} // namespace kbm
