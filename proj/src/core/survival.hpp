#pragma once

#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "core/grid.hpp"

namespace kbm {

/// Target survival function G on [0, T] with derivative access, together
/// with the killing rate lambda. Analytic mode wraps user handles; the
/// tabulated mode holds samples on a uniform TimeMesh, evaluates G by
/// linear interpolation and G' by second-order differences (one-sided at
/// the two endpoints), also interpolated linearly between mesh times.
class SurvivalSpec {
public:
    static SurvivalSpec analytic(std::function<double(double)> g,
                                 std::function<double(double)> g_prime,
                                 double lambda, double horizon);
    static SurvivalSpec tabulated(MeshPtr mesh, std::vector<double> values,
                                  double lambda);

    double value(double t) const;
    double derivative(double t) const;

    /// Hazard rate -G'(t)/G(t); G(t) <= 0 -> DomainError.
    double hazard_rate(double t) const;

    double lambda() const { return lambda_; }
    double horizon() const { return horizon_; }
    bool is_tabulated() const { return tab_mesh_ != nullptr; }
    const MeshPtr& mesh_ptr() const { return tab_mesh_; }

private:
    SurvivalSpec() = default;
    void check_time(double t) const;
    void validate() const;

    std::function<double(double)> g_;
    std::function<double(double)> g_prime_;
    MeshPtr tab_mesh_;
    std::vector<double> tab_values_;
    std::vector<double> tab_derivs_;
    double lambda_ = 1.0;
    double horizon_ = 0.0;
};

/// Load a tabulated survival function from two-column CSV (t, G) with
/// uniformly spaced, strictly increasing t starting at 0. Lines starting
/// with '#' and a single non-numeric header line are ignored.
SurvivalSpec survival_from_csv(std::istream& in, double lambda);
SurvivalSpec survival_from_csv_file(const std::string& path, double lambda);

/// One failed compatibility condition at one checked time.
struct CompatibilityViolationRecord {
    double time;
    std::string condition; // "i_positivity", "ii_lower", "ii_upper", "iii_mass"
    double lhs;
    double rhs;
};

struct CompatibilityReport {
    bool ok = false;
    std::vector<CompatibilityViolationRecord> violations;
    /// Barrier level implied by the initial data: the alpha with
    /// lambda * partial_mass(u0, alpha) = -G'(0). NaN when -G'(0) lies
    /// outside (0, lambda * mass(u0)).
    double initial_barrier = 0.0;
};

/// The data (G, u0) is solvable only if u0 > 0, mass(u0) = 1, and
/// 0 < -G'(t) < lambda*G(t). Checks the hazard bound at n_check equispaced
/// times in [0, T]; all failures are collected, never thrown.
CompatibilityReport check_compatibility(const SurvivalSpec& g,
                                        const DensityField& u0, int n_check);

/// Raised when a solve is attempted on incompatible data.
class CompatibilityError : public Error {
public:
    CompatibilityError(const std::string& what, CompatibilityReport report)
        : Error(what), report(std::move(report)) {}
    explicit CompatibilityError(const std::string& what) : Error(what) {}
    CompatibilityReport report;
};

} // namespace kbm
