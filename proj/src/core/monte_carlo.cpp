#include "core/monte_carlo.hpp"

#include <algorithm>
#include <cmath>

#include "core/parallel.hpp"
#include "core/rng.hpp"

namespace kbm {

namespace {

constexpr std::size_t kChunk = 4096;

long long as_step_index(double t, double dt_sim, const char* what) {
    const double ratio = t / dt_sim;
    const long long idx = std::llround(ratio);
    if (std::abs(ratio - static_cast<double>(idx)) > 1e-9 * std::max(1.0, ratio))
        throw DomainError(std::string(what) +
                          ": dt_sim must divide the reporting times");
    return idx;
}

void validate_cfg(const PathConfig& cfg) {
    if (cfg.n_paths < 1) throw DomainError("PathConfig: n_paths >= 1");
    if (!(cfg.dt_sim > 0.0)) throw DomainError("PathConfig: dt_sim > 0");
    if (cfg.antithetic && cfg.n_paths % 2 != 0)
        throw DomainError("PathConfig: antithetic runs need an even n_paths");
}

struct Moments {
    double mean;
    double std_err;
};

Moments reduce(std::span<const double> values) {
    const std::size_t n = values.size();
    const double mean = pairwise_sum(values) / static_cast<double>(n);
    if (n < 2) return {mean, 0.0};
    std::vector<double> sq(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double d = values[i] - mean;
        sq[i] = d * d;
    }
    const double m2 = pairwise_sum(sq);
    const double var = std::max(m2 / static_cast<double>(n - 1), 0.0);
    return {mean, std::sqrt(var / static_cast<double>(n))};
}

} // namespace

DensitySampler::DensitySampler(const DensityField& density)
    : grid_(density.grid_ptr()),
      values_(density.values().begin(), density.values().end()),
      prefix_(prefix_mass(density.grid(), density.values())) {
    if (!(prefix_.back() > 0.0))
        throw DomainError("DensitySampler: density has zero mass");
}

double DensitySampler::sample(double uniform01) const {
    const double target = uniform01 * prefix_.back();
    return invert_partial_mass(*grid_, values_, prefix_, target);
}

SurvivalEstimate simulate_survival(const DensityField& u0, const Barrier& b,
                                   double lambda,
                                   std::vector<double> report_times,
                                   const PathConfig& cfg) {
    validate_cfg(cfg);
    if (report_times.empty())
        throw DomainError("simulate_survival: empty report_times");
    if (!std::is_sorted(report_times.begin(), report_times.end()))
        throw DomainError("simulate_survival: report_times must be sorted");
    if (report_times.front() < 0.0)
        throw DomainError("simulate_survival: negative report time");
    const double t_max = report_times.back();
    if (t_max > b.mesh().horizon() + 1e-9 * std::max(1.0, t_max))
        throw DomainError("simulate_survival: report time beyond barrier horizon");
    if (!(lambda > 0.0)) throw DomainError("simulate_survival: lambda > 0");

    const std::size_t n_report = report_times.size();
    std::vector<long long> report_step(n_report);
    for (std::size_t k = 0; k < n_report; ++k)
        report_step[k] = as_step_index(report_times[k], cfg.dt_sim,
                                       "simulate_survival");
    const long long n_steps = report_step.back();

    // barrier at step midpoints, once
    std::vector<double> b_mid(static_cast<std::size_t>(n_steps));
    for (long long m = 0; m < n_steps; ++m)
        b_mid[m] = b.at(std::min((m + 0.5) * cfg.dt_sim, b.mesh().horizon()));

    const DensitySampler sampler(u0);
    const bool anti = cfg.antithetic;
    const std::size_t n_units =
        static_cast<std::size_t>(anti ? cfg.n_paths / 2 : cfg.n_paths);
    const double sqrt_dt = std::sqrt(cfg.dt_sim);

    std::vector<std::vector<double>> values(n_report);
    for (auto& v : values) v.resize(n_units);

    parallel_chunks(n_units, kChunk, cfg.threads, [&](std::size_t lo, std::size_t hi) {
        std::vector<double> occ_a, occ_b;
        for (std::size_t q = lo; q < hi; ++q) {
            CounterRng rng(cfg.seed, q);
            // the antithetic partner mirrors the initial quantile as well as
            // the increments, otherwise the shared starting point doubles
            // its variance contribution
            const double u_start = rng.next_uniform();
            const double x0_a = sampler.sample(u_start);
            const double x0_b = anti ? sampler.sample(1.0 - u_start) : x0_a;
            double clock_a = 0.0, clock_b = 0.0;
            if (cfg.hard_kill) {
                clock_a = -std::log(rng.next_uniform());
                if (anti) clock_b = -std::log(rng.next_uniform());
            }
            double pos_a = x0_a, pos_b = x0_b;
            double acc_a = 0.0, acc_b = 0.0;
            std::size_t next_report = 0;
            // t = 0 reports
            while (next_report < n_report && report_step[next_report] == 0) {
                values[next_report][q] = 1.0;
                ++next_report;
            }
            for (long long m = 0; m < n_steps; ++m) {
                const double inc = sqrt_dt * rng.next_normal();
                const double mid_a = pos_a + 0.5 * inc;
                pos_a += inc;
                if (mid_a <= b_mid[m]) acc_a += cfg.dt_sim;
                if (anti) {
                    const double mid_b = pos_b - 0.5 * inc;
                    pos_b -= inc;
                    if (mid_b <= b_mid[m]) acc_b += cfg.dt_sim;
                }
                while (next_report < n_report &&
                       report_step[next_report] == m + 1) {
                    double va, vb = 0.0;
                    if (cfg.hard_kill) {
                        va = (lambda * acc_a <= clock_a) ? 1.0 : 0.0;
                        if (anti) vb = (lambda * acc_b <= clock_b) ? 1.0 : 0.0;
                    } else {
                        va = std::exp(-lambda * acc_a);
                        if (anti) vb = std::exp(-lambda * acc_b);
                    }
                    values[next_report][q] = anti ? 0.5 * (va + vb) : va;
                    ++next_report;
                }
            }
        }
    });

    SurvivalEstimate est;
    est.times = std::move(report_times);
    est.mean.resize(n_report);
    est.std_err.resize(n_report);
    est.n_effective = static_cast<long long>(n_units);
    est.seed = cfg.seed;
    for (std::size_t k = 0; k < n_report; ++k) {
        const Moments m = reduce(values[k]);
        est.mean[k] = m.mean;
        est.std_err[k] = m.std_err;
    }
    return est;
}

PointEstimate feynman_kac_density(double x, double t, const DensityField& u0,
                                  const Barrier& b, double lambda,
                                  const PathConfig& cfg) {
    validate_cfg(cfg);
    if (!(t > 0.0)) throw DomainError("feynman_kac_density: t must be positive");
    if (t > b.mesh().horizon() + 1e-9 * std::max(1.0, t))
        throw DomainError("feynman_kac_density: t beyond barrier horizon");
    if (!(lambda > 0.0)) throw DomainError("feynman_kac_density: lambda > 0");
    const long long n_steps = as_step_index(t, cfg.dt_sim, "feynman_kac_density");
    if (n_steps == 0)
        throw DomainError("feynman_kac_density: t must be at least dt_sim");

    // occupation at forward step s weighs against the barrier at t - s
    std::vector<double> b_rev(static_cast<std::size_t>(n_steps));
    for (long long m = 0; m < n_steps; ++m)
        b_rev[m] = b.at(std::max(t - (m + 0.5) * cfg.dt_sim, 0.0));

    const bool anti = cfg.antithetic;
    const std::size_t n_units =
        static_cast<std::size_t>(anti ? cfg.n_paths / 2 : cfg.n_paths);
    const double sqrt_dt = std::sqrt(cfg.dt_sim);
    std::vector<double> values(n_units);

    parallel_chunks(n_units, kChunk, cfg.threads, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t q = lo; q < hi; ++q) {
            CounterRng rng(cfg.seed, q);
            rng.next_uniform(); // keep the block layout of simulate_survival
            double pos_a = x, pos_b = x;
            double acc_a = 0.0, acc_b = 0.0;
            for (long long m = 0; m < n_steps; ++m) {
                const double inc = sqrt_dt * rng.next_normal();
                const double mid_a = pos_a + 0.5 * inc;
                pos_a += inc;
                if (mid_a <= b_rev[m]) acc_a += cfg.dt_sim;
                if (anti) {
                    const double mid_b = pos_b - 0.5 * inc;
                    pos_b -= inc;
                    if (mid_b <= b_rev[m]) acc_b += cfg.dt_sim;
                }
            }
            const double va = u0.interpolate(pos_a) * std::exp(-lambda * acc_a);
            if (anti) {
                const double vb =
                    u0.interpolate(pos_b) * std::exp(-lambda * acc_b);
                values[q] = 0.5 * (va + vb);
            } else {
                values[q] = va;
            }
        }
    });

    const Moments m = reduce(values);
    return {m.mean, m.std_err};
}

double hazard_estimate(const SurvivalEstimate& est, int j) {
    const int n = static_cast<int>(est.times.size());
    if (j < 1 || j + 1 >= n)
        throw DomainError("hazard_estimate: index must be interior");
    if (!(est.mean[j] > 0.0))
        throw DomainError("hazard_estimate: estimate must be positive");
    const double dg = est.mean[j + 1] - est.mean[j - 1];
    const double dt = est.times[j + 1] - est.times[j - 1];
    return -dg / dt / est.mean[j];
}

} // namespace kbm
