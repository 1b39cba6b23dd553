#include "support/oracles.hpp"

#include <cmath>
#include <numbers>

#include "core/monte_carlo.hpp"
#include "core/rng.hpp"

namespace oracle {

double normal_pdf(double x, double mean, double stddev) {
    const double z = (x - mean) / stddev;
    return std::exp(-0.5 * z * z) /
           (stddev * std::sqrt(2.0 * std::numbers::pi));
}

double normal_cdf(double x, double mean, double stddev) {
    const double z = (x - mean) / (stddev * std::numbers::sqrt2);
    return 0.5 * std::erfc(-z);
}

namespace {

double simpson(double a, double b, double fa, double fm, double fb) {
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double adaptive(const std::function<double(double)>& f, double a, double b,
                double fa, double fm, double fb, double whole, double tol,
                int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = simpson(a, m, fa, flm, fm);
    const double right = simpson(m, b, fm, frm, fb);
    const double err = left + right - whole;
    if (depth <= 0 || std::abs(err) < 15.0 * tol)
        return left + right + err / 15.0;
    return adaptive(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           adaptive(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

} // namespace

double integrate(const std::function<double(double)>& f, double a, double b,
                 double tol, int depth) {
    const double fa = f(a);
    const double fb = f(b);
    const double fm = f(0.5 * (a + b));
    return adaptive(f, a, b, fa, fm, fb, simpson(a, b, fa, fm, fb), tol,
                    depth);
}

double bs_call_drifted(double spot, double strike, double mu, double sigma,
                       double maturity) {
    const double fwd = spot * std::exp(mu * maturity);
    const double sd = sigma * std::sqrt(maturity);
    const double d1 = (std::log(fwd / strike) + 0.5 * sd * sd) / sd;
    const double d2 = d1 - sd;
    return fwd * normal_cdf(d1) - strike * normal_cdf(d2);
}

namespace {

McResult moments_of(const std::vector<double>& v) {
    const double n = static_cast<double>(v.size());
    double sum = 0.0;
    for (double x : v) sum += x;
    const double mean = sum / n;
    double m2 = 0.0;
    for (double x : v) m2 += (x - mean) * (x - mean);
    const double se = v.size() > 1 ? std::sqrt(m2 / (n - 1.0) / n) : 0.0;
    return {mean, se};
}

} // namespace

McResult correlated_claim_mc(double spot, double mu, double sigma, double rho,
                             const std::function<double(double)>& payoff,
                             const kbm::Barrier& barrier, double lambda,
                             const kbm::DensityField& credit_density,
                             double maturity, double dt, long long n_paths,
                             std::uint64_t seed) {
    const long long n_steps = std::llround(maturity / dt);
    const double sdt = std::sqrt(dt);
    const double rho_c = std::sqrt(1.0 - rho * rho);
    kbm::DensitySampler sampler(credit_density);
    std::vector<double> bvals(static_cast<std::size_t>(n_steps));
    for (long long m = 0; m < n_steps; ++m)
        bvals[m] = barrier.at(std::min((m + 0.5) * dt, barrier.mesh().horizon()));
    std::vector<double> vals(static_cast<std::size_t>(n_paths));
    for (long long p = 0; p < n_paths; ++p) {
        kbm::CounterRng rng(seed, static_cast<std::uint64_t>(p));
        double y = sampler.sample(rng.next_uniform());
        double logx = std::log(spot);
        double occ = 0.0;
        for (long long m = 0; m < n_steps; ++m) {
            const double zw = rng.next_normal();
            const double zp = rng.next_normal();
            const double zb = rho * zw + rho_c * zp;
            const double y_new = y + sdt * zb;
            if (0.5 * (y + y_new) <= bvals[m]) occ += dt;
            y = y_new;
            logx += (mu - 0.5 * sigma * sigma) * dt + sigma * sdt * zw;
        }
        vals[p] = payoff(std::exp(logx)) * std::exp(-lambda * occ);
    }
    return moments_of(vals);
}

McResult diffusion_survival_mc(const std::function<double(double)>& mu,
                               const std::function<double(double)>& sigma,
                               const kbm::DensityField& initial_density,
                               const kbm::Barrier& barrier, double lambda,
                               double maturity, double dt, long long n_paths,
                               std::uint64_t seed) {
    const long long n_steps = std::llround(maturity / dt);
    const double sdt = std::sqrt(dt);
    kbm::DensitySampler sampler(initial_density);
    std::vector<double> bvals(static_cast<std::size_t>(n_steps));
    for (long long m = 0; m < n_steps; ++m)
        bvals[m] = barrier.at(std::min((m + 0.5) * dt, barrier.mesh().horizon()));
    std::vector<double> vals(static_cast<std::size_t>(n_paths));
    for (long long p = 0; p < n_paths; ++p) {
        kbm::CounterRng rng(seed, static_cast<std::uint64_t>(p));
        double y = sampler.sample(rng.next_uniform());
        double occ = 0.0;
        for (long long m = 0; m < n_steps; ++m) {
            const double y_new = y + mu(y) * dt + sigma(y) * sdt * rng.next_normal();
            if (0.5 * (y + y_new) <= bvals[m]) occ += dt;
            y = y_new;
        }
        vals[p] = std::exp(-lambda * occ);
    }
    return moments_of(vals);
}

} // namespace oracle
