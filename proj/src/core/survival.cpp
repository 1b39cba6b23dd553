#include "core/survival.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

namespace kbm {

namespace {
constexpr double kUnitMassTol = 1e-6;
constexpr double kG0Tol = 1e-9;
} // namespace

SurvivalSpec SurvivalSpec::analytic(std::function<double(double)> g,
                                    std::function<double(double)> g_prime,
                                    double lambda, double horizon) {
    if (!g || !g_prime) throw InvalidArgument("SurvivalSpec: null handle");
    SurvivalSpec s;
    s.g_ = std::move(g);
    s.g_prime_ = std::move(g_prime);
    s.lambda_ = lambda;
    s.horizon_ = horizon;
    s.validate();
    return s;
}

SurvivalSpec SurvivalSpec::tabulated(MeshPtr mesh, std::vector<double> values,
                                     double lambda) {
    if (!mesh) throw InvalidArgument("SurvivalSpec: null mesh");
    if (static_cast<int>(values.size()) != mesh->n_steps() + 1)
        throw InvalidArgument("SurvivalSpec: need n_steps + 1 samples");
    SurvivalSpec s;
    s.tab_mesh_ = std::move(mesh);
    s.tab_values_ = std::move(values);
    s.lambda_ = lambda;
    s.horizon_ = s.tab_mesh_->horizon();
    const int n = s.tab_mesh_->n_steps();
    const double dt = s.tab_mesh_->dt();
    auto& v = s.tab_values_;
    auto& d = s.tab_derivs_;
    d.resize(v.size());
    if (n == 1) {
        d[0] = d[1] = (v[1] - v[0]) / dt;
    } else {
        d[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * dt);
        d[n] = (3.0 * v[n] - 4.0 * v[n - 1] + v[n - 2]) / (2.0 * dt);
        for (int j = 1; j < n; ++j) d[j] = (v[j + 1] - v[j - 1]) / (2.0 * dt);
    }
    s.validate();
    return s;
}

void SurvivalSpec::validate() const {
    if (!(lambda_ > 0.0) || !std::isfinite(lambda_))
        throw DomainError("SurvivalSpec: lambda must be positive");
    if (!(horizon_ > 0.0) || !std::isfinite(horizon_))
        throw DomainError("SurvivalSpec: horizon must be positive");
    if (std::abs(value(0.0) - 1.0) > kG0Tol)
        throw DomainError("SurvivalSpec: G(0) must equal 1");
    // monotonicity and positivity, on the table or on a coarse sample
    const int n = is_tabulated() ? tab_mesh_->n_steps() : 64;
    double prev = value(0.0);
    for (int j = 1; j <= n; ++j) {
        const double t = horizon_ * j / n;
        const double gt = value(t);
        if (!(gt > 0.0)) throw DomainError("SurvivalSpec: G must stay positive");
        if (gt > prev + kG0Tol)
            throw DomainError("SurvivalSpec: G must be non-increasing");
        prev = gt;
    }
}

void SurvivalSpec::check_time(double t) const {
    const double tol = 1e-9 * std::max(1.0, horizon_);
    if (t < -tol || t > horizon_ + tol)
        throw DomainError("SurvivalSpec: time outside [0, T]");
}

double SurvivalSpec::value(double t) const {
    check_time(t);
    if (!is_tabulated()) return g_(std::clamp(t, 0.0, horizon_));
    const auto& m = *tab_mesh_;
    if (t <= 0.0) return tab_values_.front();
    if (t >= m.horizon()) return tab_values_.back();
    int j = std::clamp(static_cast<int>(std::floor(t / m.dt())), 0, m.n_steps() - 1);
    const double tj = m.time(j);
    if (t == tj) return tab_values_[j];
    const double s = std::clamp((t - tj) / m.dt(), 0.0, 1.0);
    return tab_values_[j] + s * (tab_values_[j + 1] - tab_values_[j]);
}

double SurvivalSpec::derivative(double t) const {
    check_time(t);
    if (!is_tabulated()) return g_prime_(std::clamp(t, 0.0, horizon_));
    const auto& m = *tab_mesh_;
    if (t <= 0.0) return tab_derivs_.front();
    if (t >= m.horizon()) return tab_derivs_.back();
    int j = std::clamp(static_cast<int>(std::floor(t / m.dt())), 0, m.n_steps() - 1);
    const double tj = m.time(j);
    if (t == tj) return tab_derivs_[j];
    const double s = std::clamp((t - tj) / m.dt(), 0.0, 1.0);
    return tab_derivs_[j] + s * (tab_derivs_[j + 1] - tab_derivs_[j]);
}

double SurvivalSpec::hazard_rate(double t) const {
    const double gt = value(t);
    if (!(gt > 0.0)) throw DomainError("hazard_rate: G(t) must be positive");
    return -derivative(t) / gt;
}

SurvivalSpec survival_from_csv(std::istream& in, double lambda) {
    std::vector<double> times;
    std::vector<double> values;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream row(line);
        std::string a, b;
        if (!std::getline(row, a, ',') || !std::getline(row, b))
            throw DomainError("survival CSV: expected two columns (t, G)");
        char* end = nullptr;
        const double t = std::strtod(a.c_str(), &end);
        if (end == a.c_str()) {
            if (times.empty()) continue; // header line
            throw DomainError("survival CSV: malformed time value");
        }
        const double g = std::strtod(b.c_str(), &end);
        times.push_back(t);
        values.push_back(g);
    }
    if (times.size() < 2) throw DomainError("survival CSV: need at least 2 rows");
    if (std::abs(times.front()) > 1e-12)
        throw DomainError("survival CSV: table must start at t = 0");
    const int n_steps = static_cast<int>(times.size()) - 1;
    const double horizon = times.back();
    if (!(horizon > 0.0)) throw DomainError("survival CSV: horizon must be positive");
    const double dt = horizon / n_steps;
    for (int j = 0; j <= n_steps; ++j)
        if (std::abs(times[j] - j * dt) > 1e-9 * std::max(1.0, horizon))
            throw DomainError("survival CSV: times must be uniformly spaced");
    auto mesh = std::make_shared<const TimeMesh>(horizon, n_steps);
    return SurvivalSpec::tabulated(std::move(mesh), std::move(values), lambda);
}

SurvivalSpec survival_from_csv_file(const std::string& path, double lambda) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("survival CSV: cannot open " + path);
    return survival_from_csv(in, lambda);
}

CompatibilityReport check_compatibility(const SurvivalSpec& g,
                                        const DensityField& u0, int n_check) {
    if (n_check < 1) throw InvalidArgument("check_compatibility: n_check >= 1");
    CompatibilityReport report;
    auto& out = report.violations;

    // (i) strict positivity of u0 on interior nodes
    double min_interior = std::numeric_limits<double>::infinity();
    for (int i = 1; i + 1 < u0.size(); ++i)
        min_interior = std::min(min_interior, u0.value(i));
    if (!(min_interior > 0.0))
        out.push_back({0.0, "i_positivity", min_interior, 0.0});

    // (ii) hazard bound 0 < -G'(t) < lambda*G(t) at equispaced times
    const double T = g.horizon();
    const double lambda = g.lambda();
    for (int k = 0; k < n_check; ++k) {
        const double t = (n_check == 1) ? 0.0 : T * k / (n_check - 1);
        const double minus_gp = -g.derivative(t);
        const double cap = lambda * g.value(t);
        if (!(minus_gp > 0.0)) out.push_back({t, "ii_lower", minus_gp, 0.0});
        if (!(minus_gp < cap)) out.push_back({t, "ii_upper", minus_gp, cap});
    }

    // (iii) unit initial mass on the truncated window
    const double mass = trapezoid_mass(u0);
    if (std::abs(mass - 1.0) > kUnitMassTol)
        out.push_back({0.0, "iii_mass", mass, 1.0});

    // (iv) implied initial barrier level
    const double target = -g.derivative(0.0) / lambda;
    if (target > 0.0 && target < mass) {
        auto prefix = prefix_mass(u0.grid(), u0.values());
        report.initial_barrier =
            invert_partial_mass(u0.grid(), u0.values(), prefix, target);
    } else {
        report.initial_barrier = std::numeric_limits<double>::quiet_NaN();
    }

    report.ok = out.empty();
    return report;
}

} // namespace kbm
