// kbm: killed-Brownian-motion first-passage toolkit, batch CLI.
//
// One JSON config per run; CSV artifacts plus a manifest.json with every
// default materialized, sufficient to reproduce the run bit-exactly.
// Exit codes: 0 success, 1 numerical failure (incompatible data,
// non-convergence, instability), 2 usage errors.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <vector>

#include "kbm/kbm.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

[[noreturn]] void fail_status(kbm_status status) {
    const std::string msg = kbm_last_error();
    if (status == KBM_ERR_COMPATIBILITY || status == KBM_ERR_NONCONVERGENCE ||
        status == KBM_ERR_STABILITY)
        throw NumericalError(msg);
    throw UsageError(msg);
}

void check(kbm_status status) {
    if (status != KBM_OK) fail_status(status);
}

template <typename T, void (*Free)(T*)>
struct Handle {
    T* ptr = nullptr;
    Handle() = default;
    explicit Handle(T* p) : ptr(p) {}
    ~Handle() { Free(ptr); }
    Handle(const Handle&) = delete;
    Handle& operator=(const Handle&) = delete;
    Handle(Handle&& other) noexcept : ptr(other.ptr) { other.ptr = nullptr; }
    T** out() { return &ptr; }
    T* get() const { return ptr; }
};

using GridHandle = Handle<kbm_grid, kbm_grid_free>;
using MeshHandle = Handle<kbm_mesh, kbm_mesh_free>;
using DensityHandle = Handle<kbm_density, kbm_density_free>;
using BarrierHandle = Handle<kbm_barrier, kbm_barrier_free>;
using SurvivalHandle = Handle<kbm_survival, kbm_survival_free>;
using ReportHandle = Handle<kbm_compat_report, kbm_compat_report_free>;
using HistoryHandle = Handle<kbm_history, kbm_history_free>;
using InverseHandle = Handle<kbm_inverse_result, kbm_inverse_result_free>;
using EstimateHandle = Handle<kbm_estimate, kbm_estimate_free>;
using DiffusionHandle = Handle<kbm_diffusion, kbm_diffusion_free>;
using SurfaceHandle = Handle<kbm_surface, kbm_surface_free>;

// ---- config access with strict typing ----

double num_at(const json& j, const std::string& key) {
    if (!j.contains(key) || !j[key].is_number())
        throw UsageError("config: missing numeric field '" + key + "'");
    return j[key].get<double>();
}

double num_or(json& j, const std::string& key, double fallback) {
    if (!j.contains(key)) j[key] = fallback;
    if (!j[key].is_number())
        throw UsageError("config: field '" + key + "' must be numeric");
    return j[key].get<double>();
}

int int_or(json& j, const std::string& key, int fallback) {
    if (!j.contains(key)) j[key] = fallback;
    if (!j[key].is_number_integer())
        throw UsageError("config: field '" + key + "' must be an integer");
    return j[key].get<int>();
}

bool bool_or(json& j, const std::string& key, bool fallback) {
    if (!j.contains(key)) j[key] = fallback;
    if (!j[key].is_boolean())
        throw UsageError("config: field '" + key + "' must be boolean");
    return j[key].get<bool>();
}

std::string str_or(json& j, const std::string& key, const std::string& fb) {
    if (!j.contains(key)) j[key] = fb;
    if (!j[key].is_string())
        throw UsageError("config: field '" + key + "' must be a string");
    return j[key].get<std::string>();
}

// ---- builders ----

MeshHandle build_mesh(json& cfg) {
    if (!cfg.contains("mesh")) throw UsageError("config: missing 'mesh'");
    auto& m = cfg["mesh"];
    const double horizon = num_at(m, "horizon");
    const int n_steps = int_or(m, "n_steps", 1000);
    MeshHandle mesh;
    check(kbm_mesh_create(horizon, n_steps, mesh.out()));
    return mesh;
}

GridHandle build_grid(json& cfg) {
    auto& u0 = cfg["u0"];
    const double mean = u0.is_object() ? num_or(u0, "mean", 0.0) : 0.0;
    const double stddev = u0.is_object() ? num_or(u0, "std", 1.0) : 1.0;
    if (!cfg.contains("grid")) {
        // widen so the heat envelope of u0 is negligible at the boundary
        const double horizon = num_at(cfg["mesh"], "horizon");
        const double half = 12.0 * stddev + 8.0 * std::sqrt(horizon);
        cfg["grid"] = {{"x_min", mean - half}, {"x_max", mean + half}};
    }
    auto& g = cfg["grid"];
    const double x_min = num_at(g, "x_min");
    const double x_max = num_at(g, "x_max");
    int n_default = static_cast<int>(std::lround((x_max - x_min) / 0.01)) + 1;
    const int n_nodes = int_or(g, "n_nodes", n_default);
    GridHandle grid;
    check(kbm_grid_create(x_min, x_max, n_nodes, grid.out()));
    return grid;
}

DensityHandle build_u0(json& cfg, const GridHandle& grid) {
    if (!cfg.contains("u0")) cfg["u0"] = json::object();
    auto& u = cfg["u0"];
    const std::string preset = str_or(u, "preset", "gaussian");
    if (preset != "gaussian")
        throw UsageError("config: unknown u0 preset '" + preset + "'");
    const double mean = num_or(u, "mean", 0.0);
    const double stddev = num_or(u, "std", 1.0);
    DensityHandle d;
    check(kbm_density_gaussian(grid.get(), mean, stddev, d.out()));
    return d;
}

SurvivalHandle build_survival(json& cfg, double lambda) {
    if (!cfg.contains("survival")) throw UsageError("config: missing 'survival'");
    auto& s = cfg["survival"];
    SurvivalHandle out;
    if (s.contains("csv")) {
        const std::string path = s["csv"].get<std::string>();
        check(kbm_survival_from_csv(path.c_str(), lambda, out.out()));
        return out;
    }
    const std::string preset = str_or(s, "preset", "exponential");
    if (preset != "exponential")
        throw UsageError("config: unknown survival preset '" + preset + "'");
    const double rate = num_or(s, "rate", 0.5);
    const double horizon = num_at(cfg["mesh"], "horizon");
    check(kbm_survival_exponential(rate, lambda, horizon, out.out()));
    return out;
}

BarrierHandle build_barrier(json& cfg, const MeshHandle& mesh) {
    if (!cfg.contains("barrier")) throw UsageError("config: missing 'barrier'");
    auto& b = cfg["barrier"];
    BarrierHandle out;
    const std::string preset = str_or(b, "preset", "constant");
    if (preset == "constant") {
        check(kbm_barrier_constant(mesh.get(), num_or(b, "level", 0.0), out.out()));
    } else if (preset == "linear") {
        check(kbm_barrier_linear(mesh.get(), num_or(b, "intercept", 0.0),
                                 num_or(b, "slope", 0.0), out.out()));
    } else if (preset == "sinusoidal") {
        check(kbm_barrier_sinusoidal(mesh.get(), num_or(b, "amplitude", 0.3),
                                     num_or(b, "frequency", 1.0),
                                     num_or(b, "offset", 0.0), out.out()));
    } else if (preset == "none") {
        check(kbm_barrier_minus_infinity(mesh.get(), out.out()));
    } else if (preset == "all") {
        check(kbm_barrier_plus_infinity(mesh.get(), out.out()));
    } else {
        throw UsageError("config: unknown barrier preset '" + preset + "'");
    }
    return out;
}

kbm_forward_config build_forward_config(json& cfg, double lambda,
                                        const char* key = "forward",
                                        bool implicit_default = false) {
    kbm_forward_config fc;
    kbm_forward_config_default(&fc);
    fc.lambda = lambda;
    if (implicit_default) {
        fc.use_implicit_euler = 1;
        fc.rannacher_steps = 0;
    }
    if (!cfg.contains(key)) cfg[key] = json::object();
    auto& f = cfg[key];
    const std::string scheme = str_or(
        f, "scheme", implicit_default ? "implicit_euler" : "crank_nicolson");
    if (scheme == "crank_nicolson") {
        fc.use_implicit_euler = 0;
    } else if (scheme == "implicit_euler") {
        fc.use_implicit_euler = 1;
    } else {
        throw UsageError("config: unknown scheme '" + scheme + "'");
    }
    fc.rannacher_steps =
        int_or(f, "rannacher_steps", fc.use_implicit_euler ? 0 : 2);
    return fc;
}

DiffusionHandle build_diffusion(json& cfg, const GridHandle& grid) {
    if (!cfg.contains("coefficients"))
        cfg["coefficients"] = {{"preset", "brownian"}};
    auto& c = cfg["coefficients"];
    DiffusionHandle out;
    if (c.contains("csv")) {
        // three columns: x (must match the grid), mu, sigma
        std::ifstream in(c["csv"].get<std::string>());
        if (!in) throw UsageError("cannot open coefficients CSV");
        std::vector<double> mu, sigma;
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty() || line[0] == '#') continue;
            std::istringstream row(line);
            std::string a, b, d;
            if (!std::getline(row, a, ',') || !std::getline(row, b, ',') ||
                !std::getline(row, d))
                throw UsageError("coefficients CSV: need x,mu,sigma");
            char* end = nullptr;
            std::strtod(a.c_str(), &end);
            if (end == a.c_str()) continue; // header
            mu.push_back(std::strtod(b.c_str(), nullptr));
            sigma.push_back(std::strtod(d.c_str(), nullptr));
        }
        check(kbm_diffusion_tabulated(grid.get(), mu.data(), sigma.data(),
                                      static_cast<int>(mu.size()), out.out()));
        return out;
    }
    const std::string preset = str_or(c, "preset", "brownian");
    if (preset == "brownian") {
        check(kbm_diffusion_brownian(grid.get(), out.out()));
    } else if (preset == "ou") {
        check(kbm_diffusion_ou(grid.get(), num_or(c, "rate", 1.0), out.out()));
    } else if (preset == "gbm-log") {
        check(kbm_diffusion_gbm_log(grid.get(), num_or(c, "mu", 0.05),
                                    num_or(c, "sigma", 0.2), out.out()));
    } else {
        throw UsageError("config: unknown coefficients preset '" + preset + "'");
    }
    return out;
}

// ---- CSV emission ----

std::ofstream open_csv(const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw UsageError("cannot write " + path.string());
    out << std::setprecision(17);
    return out;
}

void write_curve(const fs::path& path, const char* header,
                 const std::vector<double>& a, const std::vector<double>& b) {
    auto out = open_csv(path);
    out << header << '\n';
    for (std::size_t i = 0; i < a.size(); ++i)
        out << a[i] << ',' << b[i] << '\n';
}

void write_barrier_file(const fs::path& path, const BarrierHandle& barrier,
                        const MeshHandle& mesh) {
    const int n = kbm_mesh_n_steps(mesh.get()) + 1;
    std::vector<double> values(n), times(n);
    check(kbm_barrier_values(barrier.get(), values.data(), n));
    const double dt = kbm_mesh_dt(mesh.get());
    for (int j = 0; j < n; ++j) times[j] = j * dt;
    write_curve(path, "t,b", times, values);
}

void write_history_summary(const fs::path& path, const HistoryHandle& h,
                           const GridHandle& grid, const MeshHandle& mesh) {
    const int ns = kbm_history_n_snapshots(h.get());
    const int nn = kbm_history_n_nodes(h.get());
    auto out = open_csv(path);
    out << "t,mass,min,max,argmax\n";
    std::vector<double> buf(nn);
    const double dt = kbm_mesh_dt(mesh.get());
    for (int j = 0; j < ns; ++j) {
        check(kbm_history_snapshot(h.get(), j, buf.data(), nn));
        double mass;
        check(kbm_history_mass(h.get(), j, &mass));
        double vmin = buf[0], vmax = buf[0];
        int imax = 0;
        for (int i = 1; i < nn; ++i) {
            vmin = std::min(vmin, buf[i]);
            if (buf[i] > vmax) {
                vmax = buf[i];
                imax = i;
            }
        }
        out << j * dt << ',' << mass << ',' << vmin << ',' << vmax << ','
            << kbm_grid_node(grid.get(), imax) << '\n';
    }
}

void write_diagnostics(const fs::path& path, const InverseHandle& result) {
    auto out = open_csv(path);
    out << "k,sup_barrier_change,max_u_violation,max_b_violation,"
           "mass_residual,constraint_residual\n";
    const int n = kbm_inverse_result_iterations(result.get());
    for (int i = 0; i < n; ++i) {
        double row[6];
        check(kbm_inverse_result_record(result.get(), i, row));
        out << static_cast<int>(row[0]);
        for (int c = 1; c < 6; ++c) out << ',' << row[c];
        out << '\n';
    }
}

// ---- manifest ----

struct RunContext {
    std::string command;
    fs::path out_dir;
    json config;
    std::vector<std::string> outputs;
    json summary = json::object();
};

void emit_manifest(RunContext& ctx) {
    json manifest;
    manifest["command"] = ctx.command;
    manifest["version"] = kbm_version();
    manifest["config"] = ctx.config;
    manifest["outputs"] = ctx.outputs;
    manifest["summary"] = ctx.summary;
    std::ofstream out(ctx.out_dir / "manifest.json");
    if (!out) throw UsageError("cannot write manifest.json");
    out << manifest.dump(2) << '\n';
}

// ---- commands ----

int cmd_check_compat(RunContext& ctx) {
    auto& cfg = ctx.config;
    const double lambda = num_or(cfg, "lambda", 1.0);
    auto mesh = build_mesh(cfg);
    auto grid = build_grid(cfg);
    auto u0 = build_u0(cfg, grid);
    auto survival = build_survival(cfg, lambda);
    const int n_check = int_or(cfg, "n_check", 101);

    ReportHandle report;
    check(kbm_check_compatibility(survival.get(), u0.get(), n_check,
                                  report.out()));
    const bool ok = kbm_compat_report_ok(report.get()) != 0;
    const double b0 = kbm_compat_report_initial_barrier(report.get());
    const int nv = kbm_compat_report_n_violations(report.get());

    std::cout << "compatible: " << (ok ? "yes" : "no") << '\n';
    if (ok) std::cout << "initial_barrier: " << b0 << '\n';
    json violations = json::array();
    for (int i = 0; i < nv; ++i) {
        double t, lhs, rhs;
        char cond[32];
        check(kbm_compat_report_violation(report.get(), i, &t, cond,
                                          sizeof cond, &lhs, &rhs));
        std::cout << "violation " << cond << " at t=" << t << " (lhs=" << lhs
                  << ", rhs=" << rhs << ")\n";
        violations.push_back(
            {{"t", t}, {"condition", cond}, {"lhs", lhs}, {"rhs", rhs}});
    }
    ctx.summary["compatible"] = ok;
    ctx.summary["initial_barrier"] = b0;
    ctx.summary["violations"] = violations;
    emit_manifest(ctx);
    return ok ? 0 : 1;
}

int cmd_forward(RunContext& ctx) {
    auto& cfg = ctx.config;
    const double lambda = num_or(cfg, "lambda", 1.0);
    auto mesh = build_mesh(cfg);
    auto grid = build_grid(cfg);
    auto u0 = build_u0(cfg, grid);
    auto barrier = build_barrier(cfg, mesh);
    auto fc = build_forward_config(cfg, lambda);
    const bool emit_history = bool_or(cfg, "emit_history", false);

    HistoryHandle hist;
    check(kbm_forward_solve(u0.get(), barrier.get(), mesh.get(), &fc,
                            hist.out()));

    const int ns = kbm_history_n_snapshots(hist.get());
    std::vector<double> times(ns), masses(ns);
    check(kbm_history_survival(hist.get(), times.data(), masses.data(), ns));
    write_curve(ctx.out_dir / "survival.csv", "t,G", times, masses);
    ctx.outputs.push_back("survival.csv");
    write_history_summary(ctx.out_dir / "summary.csv", hist, grid, mesh);
    ctx.outputs.push_back("summary.csv");
    if (emit_history) {
        const int nn = kbm_history_n_nodes(hist.get());
        auto out = open_csv(ctx.out_dir / "history.csv");
        out << "t";
        for (int i = 0; i < nn; ++i)
            out << ',' << kbm_grid_node(grid.get(), i);
        out << '\n';
        std::vector<double> buf(nn);
        for (int j = 0; j < ns; ++j) {
            check(kbm_history_snapshot(hist.get(), j, buf.data(), nn));
            out << times[j];
            for (int i = 0; i < nn; ++i) out << ',' << buf[i];
            out << '\n';
        }
        ctx.outputs.push_back("history.csv");
    }
    double clipped;
    check(kbm_history_clipped_mass(hist.get(), &clipped));
    ctx.summary["final_mass"] = masses.back();
    ctx.summary["clipped_mass"] = clipped;
    emit_manifest(ctx);
    return 0;
}

int cmd_inverse(RunContext& ctx) {
    auto& cfg = ctx.config;
    const double lambda = num_or(cfg, "lambda", 1.0);
    auto mesh = build_mesh(cfg);
    auto grid = build_grid(cfg);
    auto u0 = build_u0(cfg, grid);
    auto survival = build_survival(cfg, lambda);

    kbm_inverse_config ic;
    kbm_inverse_config_default(&ic);
    if (!cfg.contains("inverse")) cfg["inverse"] = json::object();
    auto& inv = cfg["inverse"];
    ic.max_iterations = int_or(inv, "max_iterations", 50);
    ic.barrier_tol = num_or(inv, "barrier_tol", 1e-6);
    ic.check_compatibility = bool_or(inv, "check_compatibility", true) ? 1 : 0;
    ic.forward = build_forward_config(inv, lambda, "forward", true);

    InverseHandle result;
    check(kbm_inverse_solve(u0.get(), survival.get(), mesh.get(), &ic,
                            result.out()));

    BarrierHandle barrier;
    check(kbm_inverse_result_barrier(result.get(), barrier.out()));
    write_barrier_file(ctx.out_dir / "barrier.csv", barrier, mesh);
    ctx.outputs.push_back("barrier.csv");
    write_diagnostics(ctx.out_dir / "diagnostics.csv", result);
    ctx.outputs.push_back("diagnostics.csv");

    HistoryHandle hist;
    check(kbm_inverse_result_history(result.get(), hist.out()));
    const int ns = kbm_history_n_snapshots(hist.get());
    std::vector<double> times(ns), masses(ns);
    check(kbm_history_survival(hist.get(), times.data(), masses.data(), ns));
    write_curve(ctx.out_dir / "survival_fit.csv", "t,G", times, masses);
    ctx.outputs.push_back("survival_fit.csv");

    double consistency[4];
    check(kbm_inverse_result_consistency(result.get(), survival.get(),
                                         consistency));
    ctx.summary["iterations"] = kbm_inverse_result_iterations(result.get());
    ctx.summary["converged"] = kbm_inverse_result_converged(result.get()) != 0;
    ctx.summary["monotone"] = kbm_inverse_result_monotone(result.get()) != 0;
    ctx.summary["mass_residual"] = consistency[0];
    ctx.summary["constraint_residual"] = consistency[1];
    ctx.summary["integrated_residual"] = consistency[2];
    emit_manifest(ctx);
    return 0;
}

kbm_path_config build_path_config(json& cfg) {
    kbm_path_config pc;
    kbm_path_config_default(&pc);
    if (!cfg.contains("mc")) cfg["mc"] = json::object();
    auto& mc = cfg["mc"];
    pc.n_paths = static_cast<long long>(num_or(mc, "n_paths", 1 << 16));
    pc.dt_sim = num_or(mc, "dt_sim", 1e-3);
    pc.antithetic = bool_or(mc, "antithetic", true) ? 1 : 0;
    pc.hard_kill = bool_or(mc, "hard_kill", false) ? 1 : 0;
    pc.seed = static_cast<std::uint64_t>(num_or(cfg, "seed", 0.0));
    pc.threads = int_or(cfg, "threads", 0);
    return pc;
}

int cmd_mc_verify(RunContext& ctx) {
    auto& cfg = ctx.config;
    const double lambda = num_or(cfg, "lambda", 1.0);
    auto mesh = build_mesh(cfg);
    auto grid = build_grid(cfg);
    auto u0 = build_u0(cfg, grid);
    auto barrier = build_barrier(cfg, mesh);
    auto pc = build_path_config(cfg);

    std::vector<double> report_times;
    if (cfg["mc"].contains("report_times")) {
        for (const auto& t : cfg["mc"]["report_times"])
            report_times.push_back(t.get<double>());
    } else {
        const double T = num_at(cfg["mesh"], "horizon");
        for (int k = 1; k <= 8; ++k) report_times.push_back(T * k / 8.0);
        cfg["mc"]["report_times"] = report_times;
    }

    EstimateHandle est;
    check(kbm_mc_survival(u0.get(), barrier.get(), lambda, report_times.data(),
                          static_cast<int>(report_times.size()), &pc,
                          est.out()));

    auto out = open_csv(ctx.out_dir / "estimate.csv");
    out << "# seed=" << pc.seed
        << " n_effective=" << kbm_estimate_n_effective(est.get()) << '\n';
    out << "t,mean,std_err\n";
    const int n = kbm_estimate_size(est.get());
    for (int i = 0; i < n; ++i) {
        double t, mean, se;
        check(kbm_estimate_row(est.get(), i, &t, &mean, &se));
        out << t << ',' << mean << ',' << se << '\n';
    }
    ctx.outputs.push_back("estimate.csv");
    double t_last, mean_last, se_last;
    check(kbm_estimate_row(est.get(), n - 1, &t_last, &mean_last, &se_last));
    ctx.summary["final_mean"] = mean_last;
    ctx.summary["final_std_err"] = se_last;
    emit_manifest(ctx);
    return 0;
}

int cmd_diffusion_forward(RunContext& ctx) {
    auto& cfg = ctx.config;
    const double lambda = num_or(cfg, "lambda", 1.0);
    auto mesh = build_mesh(cfg);
    auto grid = build_grid(cfg);
    auto coeffs = build_diffusion(cfg, grid);
    auto barrier = build_barrier(cfg, mesh);
    auto fc = build_forward_config(cfg, lambda);

    // the configured density is the physical law f; solve in u = f/m
    auto f = build_u0(cfg, grid);
    const int nn = kbm_grid_n_nodes(grid.get());
    std::vector<double> fv(nn), speed(nn), scale(nn), u0v(nn);
    check(kbm_density_values(f.get(), fv.data(), nn));
    check(kbm_diffusion_speed_scale(coeffs.get(), speed.data(), scale.data(), nn));
    for (int i = 0; i < nn; ++i) u0v[i] = fv[i] / speed[i];
    DensityHandle u0;
    check(kbm_density_create(grid.get(), u0v.data(), nn, u0.out()));

    HistoryHandle hist;
    check(kbm_diffusion_forward(coeffs.get(), u0.get(), barrier.get(),
                                mesh.get(), &fc, hist.out()));
    const int ns = kbm_history_n_snapshots(hist.get());
    std::vector<double> times(ns), masses(ns);
    check(kbm_diffusion_survival(coeffs.get(), hist.get(), times.data(),
                                 masses.data(), ns));
    write_curve(ctx.out_dir / "survival.csv", "t,G", times, masses);
    ctx.outputs.push_back("survival.csv");
    ctx.summary["final_mass"] = masses.back();
    emit_manifest(ctx);
    return 0;
}

int cmd_diffusion_inverse(RunContext& ctx) {
    auto& cfg = ctx.config;
    const double lambda = num_or(cfg, "lambda", 1.0);
    auto mesh = build_mesh(cfg);
    auto grid = build_grid(cfg);
    auto coeffs = build_diffusion(cfg, grid);
    auto f = build_u0(cfg, grid);
    auto survival = build_survival(cfg, lambda);

    kbm_inverse_config ic;
    kbm_inverse_config_default(&ic);
    if (!cfg.contains("inverse")) cfg["inverse"] = json::object();
    auto& inv = cfg["inverse"];
    ic.max_iterations = int_or(inv, "max_iterations", 50);
    ic.barrier_tol = num_or(inv, "barrier_tol", 1e-6);
    ic.check_compatibility = bool_or(inv, "check_compatibility", true) ? 1 : 0;
    ic.forward = build_forward_config(inv, lambda, "forward", true);

    InverseHandle result;
    check(kbm_diffusion_inverse(coeffs.get(), f.get(), survival.get(),
                                mesh.get(), &ic, result.out()));
    BarrierHandle barrier;
    check(kbm_inverse_result_barrier(result.get(), barrier.out()));
    write_barrier_file(ctx.out_dir / "barrier.csv", barrier, mesh);
    ctx.outputs.push_back("barrier.csv");
    write_diagnostics(ctx.out_dir / "diagnostics.csv", result);
    ctx.outputs.push_back("diagnostics.csv");
    ctx.summary["iterations"] = kbm_inverse_result_iterations(result.get());
    ctx.summary["converged"] = kbm_inverse_result_converged(result.get()) != 0;
    ctx.summary["monotone"] = kbm_inverse_result_monotone(result.get()) != 0;
    emit_manifest(ctx);
    return 0;
}

int cmd_price(RunContext& ctx) {
    auto& cfg = ctx.config;
    kbm_pricing_config pc;
    kbm_pricing_config_default(&pc);
    pc.drift = num_or(cfg, "drift", 0.05);
    pc.volatility = num_or(cfg, "volatility", 0.3);
    pc.correlation = num_or(cfg, "correlation", 0.0);
    pc.lambda = num_or(cfg, "lambda", 1.0);
    pc.literal_generator = bool_or(cfg, "literal_generator", false) ? 1 : 0;
    pc.theta = num_or(cfg, "theta", 0.5);
    pc.rannacher_steps = int_or(cfg, "rannacher_steps", 2);
    if (!cfg.contains("payoff")) cfg["payoff"] = json::object();
    auto& pay = cfg["payoff"];
    const std::string kind = str_or(pay, "kind", "call");
    if (kind == "call") pc.payoff_kind = 0;
    else if (kind == "put") pc.payoff_kind = 1;
    else if (kind == "digital") pc.payoff_kind = 2;
    else if (kind == "identity") pc.payoff_kind = 3;
    else throw UsageError("config: unknown payoff kind '" + kind + "'");
    pc.strike = num_or(pay, "strike", 1.0);

    auto mesh = build_mesh(cfg);
    if (!cfg.contains("asset_grid"))
        cfg["asset_grid"] = {{"x_min", -5.0}, {"x_max", 5.0}, {"n_nodes", 201}};
    auto& ag = cfg["asset_grid"];
    GridHandle asset_grid;
    check(kbm_grid_create(num_at(ag, "x_min"), num_at(ag, "x_max"),
                          int_or(ag, "n_nodes", 201), asset_grid.out()));
    if (!cfg.contains("credit_grid"))
        cfg["credit_grid"] = {{"x_min", -9.0}, {"x_max", 9.0}, {"n_nodes", 181}};
    auto& cg = cfg["credit_grid"];
    GridHandle credit_grid;
    check(kbm_grid_create(num_at(cg, "x_min"), num_at(cg, "x_max"),
                          int_or(cg, "n_nodes", 181), credit_grid.out()));
    auto barrier = build_barrier(cfg, mesh);

    SurfaceHandle surface;
    check(kbm_price_solve(&pc, barrier.get(), asset_grid.get(),
                          credit_grid.get(), mesh.get(), surface.out()));

    // credit start density for the reported prices
    if (!cfg.contains("u0")) cfg["u0"] = json::object();
    auto& u = cfg["u0"];
    str_or(u, "preset", "gaussian");
    DensityHandle f;
    check(kbm_density_gaussian(credit_grid.get(), num_or(u, "mean", 0.0),
                               num_or(u, "std", 1.0), f.out()));

    std::vector<double> spots;
    if (cfg.contains("report_assets")) {
        for (const auto& s : cfg["report_assets"]) spots.push_back(s.get<double>());
    } else {
        spots = {std::exp(kbm_grid_node(asset_grid.get(),
                                        kbm_grid_n_nodes(asset_grid.get()) / 2))};
        cfg["report_assets"] = spots;
    }
    auto out = open_csv(ctx.out_dir / "prices.csv");
    out << "asset,price\n";
    json prices = json::array();
    for (double s : spots) {
        double p;
        check(kbm_surface_price(surface.get(), 0.0, s, f.get(), &p));
        out << s << ',' << p << '\n';
        prices.push_back({{"asset", s}, {"price", p}});
    }
    ctx.outputs.push_back("prices.csv");

    // t = 0 slice for plotting
    const int nx = kbm_grid_n_nodes(asset_grid.get());
    const int ny = kbm_grid_n_nodes(credit_grid.get());
    std::vector<double> slice(static_cast<std::size_t>(nx) * ny);
    check(kbm_surface_slice(surface.get(), 0, slice.data(),
                            static_cast<int>(slice.size())));
    auto sl = open_csv(ctx.out_dir / "surface_t0.csv");
    sl << "logx\\y";
    for (int j = 0; j < ny; ++j) sl << ',' << kbm_grid_node(credit_grid.get(), j);
    sl << '\n';
    for (int i = 0; i < nx; ++i) {
        sl << kbm_grid_node(asset_grid.get(), i);
        for (int j = 0; j < ny; ++j)
            sl << ',' << slice[static_cast<std::size_t>(i) * ny + j];
        sl << '\n';
    }
    ctx.outputs.push_back("surface_t0.csv");
    ctx.summary["prices"] = prices;
    emit_manifest(ctx);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"killed Brownian motion first-passage toolkit"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = ".";
    std::optional<std::uint64_t> seed_override;
    std::optional<int> threads_override;

    const std::vector<std::string> commands = {
        "check-compat", "forward",           "inverse",          "mc-verify",
        "diffusion-forward", "diffusion-inverse", "price"};
    for (const auto& name : commands) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "JSON run configuration")
            ->required();
        sub->add_option("--out", out_dir, "output directory (default: cwd)");
        auto* seed_opt =
            sub->add_option("--seed", "override the RNG seed in the config");
        auto* threads_opt =
            sub->add_option("--threads", "override the worker thread count");
        sub->callback([&, sub, seed_opt, threads_opt]() {
            if (seed_opt->count())
                seed_override = seed_opt->as<std::uint64_t>();
            if (threads_opt->count()) threads_override = threads_opt->as<int>();
        });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    RunContext ctx;
    ctx.command = app.get_subcommands().front()->get_name();

    try {
        std::ifstream in(config_path);
        if (!in) throw UsageError("cannot open config: " + config_path);
        json doc;
        try {
            doc = json::parse(in);
        } catch (const json::parse_error& e) {
            throw UsageError(std::string("config parse error: ") + e.what());
        }
        // accept a previously emitted manifest directly
        if (doc.contains("config") && doc.contains("command"))
            doc = doc["config"];
        ctx.config = std::move(doc);
        if (seed_override) ctx.config["seed"] = *seed_override;
        if (threads_override) ctx.config["threads"] = *threads_override;
        ctx.config["seed"] = static_cast<std::uint64_t>(
            num_or(ctx.config, "seed", 0.0));
        int_or(ctx.config, "threads", 0);

        ctx.out_dir = out_dir;
        fs::create_directories(ctx.out_dir);

        if (ctx.command == "check-compat") return cmd_check_compat(ctx);
        if (ctx.command == "forward") return cmd_forward(ctx);
        if (ctx.command == "inverse") return cmd_inverse(ctx);
        if (ctx.command == "mc-verify") return cmd_mc_verify(ctx);
        if (ctx.command == "diffusion-forward") return cmd_diffusion_forward(ctx);
        if (ctx.command == "diffusion-inverse") return cmd_diffusion_inverse(ctx);
        if (ctx.command == "price") return cmd_price(ctx);
        throw UsageError("unknown command");
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 1;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
