#include "core/csv.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

namespace kbm {

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw InvalidArgument("cannot open for writing: " + path);
    out << std::setprecision(17);
    return out;
}

} // namespace

void write_barrier_csv(const std::string& path, const Barrier& b) {
    auto out = open_out(path);
    out << "t,b\n";
    for (int j = 0; j <= b.mesh().n_steps(); ++j)
        out << b.mesh().time(j) << ',' << b.value(j) << '\n';
}

void write_survival_csv(const std::string& path, const SurvivalCurve& curve) {
    auto out = open_out(path);
    out << "t,G\n";
    for (std::size_t j = 0; j < curve.times.size(); ++j)
        out << curve.times[j] << ',' << curve.masses[j] << '\n';
}

void write_estimate_csv(const std::string& path, const SurvivalEstimate& est) {
    auto out = open_out(path);
    out << "# seed=" << est.seed << " n_effective=" << est.n_effective << '\n';
    out << "t,mean,std_err\n";
    for (std::size_t j = 0; j < est.times.size(); ++j)
        out << est.times[j] << ',' << est.mean[j] << ',' << est.std_err[j]
            << '\n';
}

void write_history_csv(const std::string& path, const DensityHistory& h) {
    auto out = open_out(path);
    const auto& grid = h.snapshot(0).grid();
    out << "t";
    for (int i = 0; i < grid.n_nodes(); ++i) out << ',' << grid.node(i);
    out << '\n';
    for (int j = 0; j < h.n_snapshots(); ++j) {
        out << h.mesh().time(j);
        for (double v : h.snapshot(j).values()) out << ',' << v;
        out << '\n';
    }
}

void write_history_summary_csv(const std::string& path,
                               const DensityHistory& h) {
    auto out = open_out(path);
    out << "t,mass,min,max,argmax\n";
    const auto& grid = h.snapshot(0).grid();
    for (int j = 0; j < h.n_snapshots(); ++j) {
        const auto v = h.snapshot(j).values();
        int imax = 0;
        double vmin = v[0], vmax = v[0];
        for (int i = 1; i < grid.n_nodes(); ++i) {
            vmin = std::min(vmin, v[i]);
            if (v[i] > vmax) {
                vmax = v[i];
                imax = i;
            }
        }
        out << h.mesh().time(j) << ',' << trapezoid_mass(h.snapshot(j)) << ','
            << vmin << ',' << vmax << ',' << grid.node(imax) << '\n';
    }
}

void write_diagnostics_csv(const std::string& path,
                           const IterationDiagnostics& diag) {
    auto out = open_out(path);
    out << "k,sup_barrier_change,max_u_violation,max_b_violation,"
           "mass_residual,constraint_residual\n";
    for (const auto& r : diag.records)
        out << r.k << ',' << r.sup_barrier_change << ',' << r.max_u_violation
            << ',' << r.max_b_violation << ',' << r.mass_residual << ','
            << r.constraint_residual << '\n';
}

void write_slice_csv(const std::string& path, std::span<const double> x,
                     std::span<const double> y, std::span<const double> values) {
    auto out = open_out(path);
    out << "x\\y";
    for (double yv : y) out << ',' << yv;
    out << '\n';
    for (std::size_t i = 0; i < x.size(); ++i) {
        out << x[i];
        for (std::size_t j = 0; j < y.size(); ++j)
            out << ',' << values[i * y.size() + j];
        out << '\n';
    }
}

std::vector<std::pair<double, double>> read_two_column_csv(
    const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot open for reading: " + path);
    std::vector<std::pair<double, double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream row(line);
        std::string a, b;
        if (!std::getline(row, a, ',') || !std::getline(row, b))
            throw DomainError("CSV: expected two columns in " + path);
        char* end = nullptr;
        const double x = std::strtod(a.c_str(), &end);
        if (end == a.c_str()) {
            if (rows.empty()) continue; // header
            throw DomainError("CSV: malformed number in " + path);
        }
        const double y = std::strtod(b.c_str(), &end);
        rows.emplace_back(x, y);
    }
    if (rows.empty()) throw DomainError("CSV: no data rows in " + path);
    return rows;
}

} // namespace kbm
