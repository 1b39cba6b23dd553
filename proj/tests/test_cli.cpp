// End-to-end checks of the command-line surface: exit codes, emitted CSV
// artifacts and manifest reproducibility. The binary runs out of process.

#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#ifndef KBM_CLI_PATH
#error "KBM_CLI_PATH must be defined by the build"
#endif

namespace fs = std::filesystem;

namespace {

const fs::path kWorkDir = KBM_TEST_TMPDIR;

int run_cli(const std::string& args) {
    const std::string cmd = std::string(KBM_CLI_PATH) + " " + args +
                            " > " + (kWorkDir / "cli_stdout.txt").string() +
                            " 2>&1";
    const int rc = std::system(cmd.c_str());
    if (rc == -1) return -1;
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& p, const std::string& content) {
    std::ofstream out(p);
    out << content;
}

// parse "a,b[,c...]" rows of a CSV, skipping '#' lines and the header
std::vector<std::vector<double>> read_csv(const fs::path& p) {
    std::ifstream in(p);
    REQUIRE(in.good());
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream row(line);
        std::vector<double> vals;
        std::string cell;
        bool numeric = true;
        while (std::getline(row, cell, ',')) {
            char* end = nullptr;
            const double v = std::strtod(cell.c_str(), &end);
            if (end == cell.c_str()) {
                numeric = false;
                break;
            }
            vals.push_back(v);
        }
        if (numeric && !vals.empty()) rows.push_back(std::move(vals));
    }
    return rows;
}

struct Dirs {
    fs::path cfg;
    fs::path out;
};

Dirs fresh(const std::string& name) {
    Dirs d{kWorkDir / (name + ".json"), kWorkDir / name};
    fs::create_directories(d.out);
    return d;
}

} // namespace

TEST_CASE("cli: check-compat exit codes") {
    fs::create_directories(kWorkDir);

    auto good = fresh("compat_good");
    write_file(good.cfg, R"({
      "lambda": 1.0,
      "mesh": {"horizon": 1.0, "n_steps": 100},
      "grid": {"x_min": -10.0, "x_max": 10.0, "n_nodes": 2001},
      "u0": {"preset": "gaussian", "mean": 0.0, "std": 1.0},
      "survival": {"preset": "exponential", "rate": 0.5}
    })");
    CHECK(run_cli("check-compat --config " + good.cfg.string() + " --out " +
                  good.out.string()) == 0);
    const std::string stdout_text = slurp(kWorkDir / "cli_stdout.txt");
    CHECK(stdout_text.find("compatible: yes") != std::string::npos);
    CHECK(stdout_text.find("initial_barrier") != std::string::npos);

    auto bad = fresh("compat_bad");
    write_file(bad.cfg, R"({
      "lambda": 1.0,
      "mesh": {"horizon": 1.0, "n_steps": 100},
      "grid": {"x_min": -10.0, "x_max": 10.0, "n_nodes": 2001},
      "u0": {"preset": "gaussian"},
      "survival": {"preset": "exponential", "rate": 2.0}
    })");
    CHECK(run_cli("check-compat --config " + bad.cfg.string() + " --out " +
                  bad.out.string()) == 1);
    CHECK(slurp(kWorkDir / "cli_stdout.txt").find("violation ii_upper") !=
          std::string::npos);

    CHECK(run_cli("check-compat --config /nonexistent.json --out " +
                  bad.out.string()) == 2);
    CHECK(run_cli("definitely-not-a-command") == 2);
}

TEST_CASE("cli: forward emits a constant survival column without killing") {
    auto d = fresh("forward_free");
    write_file(d.cfg, R"({
      "lambda": 1.0,
      "mesh": {"horizon": 1.0, "n_steps": 200},
      "grid": {"x_min": -12.0, "x_max": 12.0, "n_nodes": 601},
      "u0": {"preset": "gaussian"},
      "barrier": {"preset": "none"}
    })");
    REQUIRE(run_cli("forward --config " + d.cfg.string() + " --out " +
                    d.out.string()) == 0);
    auto rows = read_csv(d.out / "survival.csv");
    REQUIRE(rows.size() == 201);
    for (const auto& row : rows) CHECK(std::abs(row[1] - rows[0][1]) < 1e-8);
    CHECK(fs::exists(d.out / "summary.csv"));
    CHECK(fs::exists(d.out / "manifest.json"));
}

TEST_CASE("cli: manifest reproduces the run byte-for-byte") {
    auto d = fresh("forward_manifest");
    write_file(d.cfg, R"({
      "mesh": {"horizon": 0.5, "n_steps": 100},
      "grid": {"x_min": -10.0, "x_max": 10.0, "n_nodes": 401},
      "u0": {"preset": "gaussian"},
      "barrier": {"preset": "sinusoidal", "amplitude": 0.4}
    })");
    REQUIRE(run_cli("forward --config " + d.cfg.string() + " --out " +
                    d.out.string()) == 0);
    auto rerun = fresh("forward_manifest_rerun");
    REQUIRE(run_cli("forward --config " +
                    (d.out / "manifest.json").string() + " --out " +
                    rerun.out.string()) == 0);
    CHECK(slurp(d.out / "survival.csv") == slurp(rerun.out / "survival.csv"));
    CHECK(slurp(d.out / "summary.csv") == slurp(rerun.out / "summary.csv"));
}

TEST_CASE("cli: inverse round trip through CSV survival input") {
    // generate G by a forward run, then recover the flat barrier from it
    auto gen = fresh("rt_generate");
    write_file(gen.cfg, R"({
      "lambda": 1.0,
      "mesh": {"horizon": 1.0, "n_steps": 250},
      "grid": {"x_min": -12.0, "x_max": 12.0, "n_nodes": 601},
      "u0": {"preset": "gaussian"},
      "barrier": {"preset": "constant", "level": 0.0}
    })");
    REQUIRE(run_cli("forward --config " + gen.cfg.string() + " --out " +
                    gen.out.string()) == 0);

    auto inv = fresh("rt_invert");
    write_file(inv.cfg, std::string(R"({
      "lambda": 1.0,
      "mesh": {"horizon": 1.0, "n_steps": 250},
      "grid": {"x_min": -12.0, "x_max": 12.0, "n_nodes": 601},
      "u0": {"preset": "gaussian"},
      "survival": {"csv": ")") + (gen.out / "survival.csv").string() + R"("}
    })");
    REQUIRE(run_cli("inverse --config " + inv.cfg.string() + " --out " +
                    inv.out.string()) == 0);
    auto rows = read_csv(inv.out / "barrier.csv");
    REQUIRE(rows.size() == 251);
    double sup = 0.0;
    for (const auto& row : rows) sup = std::max(sup, std::abs(row[1]));
    CHECK(sup <= 2e-2);
    CHECK(fs::exists(inv.out / "diagnostics.csv"));
    CHECK(fs::exists(inv.out / "survival_fit.csv"));
}

TEST_CASE("cli: inverse rejects incompatible survival data with exit 1") {
    auto d = fresh("inverse_incompatible");
    write_file(d.cfg, R"({
      "lambda": 1.0,
      "mesh": {"horizon": 1.0, "n_steps": 100},
      "grid": {"x_min": -10.0, "x_max": 10.0, "n_nodes": 401},
      "u0": {"preset": "gaussian"},
      "survival": {"preset": "exponential", "rate": 2.0}
    })");
    CHECK(run_cli("inverse --config " + d.cfg.string() + " --out " +
                  d.out.string()) == 1);
}

TEST_CASE("cli: mc-verify against uniform killing") {
    auto d = fresh("mc_uniform");
    write_file(d.cfg, R"({
      "lambda": 1.0,
      "seed": 17,
      "mesh": {"horizon": 1.0, "n_steps": 100},
      "grid": {"x_min": -10.0, "x_max": 10.0, "n_nodes": 401},
      "u0": {"preset": "gaussian"},
      "barrier": {"preset": "all"},
      "mc": {"n_paths": 4096, "dt_sim": 0.001,
             "report_times": [0.25, 0.5, 0.75, 1.0]}
    })");
    REQUIRE(run_cli("mc-verify --config " + d.cfg.string() + " --out " +
                    d.out.string()) == 0);
    const std::string text = slurp(d.out / "estimate.csv");
    CHECK(text.find("# seed=17") != std::string::npos);
    auto rows = read_csv(d.out / "estimate.csv");
    REQUIRE(rows.size() == 4);
    for (const auto& row : rows)
        CHECK(std::abs(row[1] - std::exp(-row[0])) < 5e-4); // 3 decimals

    // --seed overrides the config and lands in the manifest
    auto redo = fresh("mc_uniform_seed");
    REQUIRE(run_cli("mc-verify --config " + d.cfg.string() + " --seed 99" +
                    " --out " + redo.out.string()) == 0);
    CHECK(slurp(redo.out / "estimate.csv").find("# seed=99") !=
          std::string::npos);
    CHECK(slurp(redo.out / "manifest.json").find("\"seed\": 99") !=
          std::string::npos);
}

TEST_CASE("cli: diffusion commands") {
    auto fwd = fresh("diff_forward");
    write_file(fwd.cfg, R"({
      "lambda": 1.0,
      "mesh": {"horizon": 1.0, "n_steps": 200},
      "grid": {"x_min": -10.0, "x_max": 10.0, "n_nodes": 801},
      "u0": {"preset": "gaussian"},
      "coefficients": {"preset": "ou", "rate": 1.0},
      "barrier": {"preset": "constant", "level": 0.0}
    })");
    REQUIRE(run_cli("diffusion-forward --config " + fwd.cfg.string() +
                    " --out " + fwd.out.string()) == 0);
    auto rows = read_csv(fwd.out / "survival.csv");
    REQUIRE(rows.size() == 201);
    CHECK(std::abs(rows[0][1] - 1.0) < 1e-6);
    CHECK(rows.back()[1] < 1.0);

    auto inv = fresh("diff_inverse");
    write_file(inv.cfg, std::string(R"({
      "lambda": 1.0,
      "mesh": {"horizon": 1.0, "n_steps": 200},
      "grid": {"x_min": -10.0, "x_max": 10.0, "n_nodes": 801},
      "u0": {"preset": "gaussian"},
      "coefficients": {"preset": "ou", "rate": 1.0},
      "survival": {"csv": ")") + (fwd.out / "survival.csv").string() + R"("}
    })");
    REQUIRE(run_cli("diffusion-inverse --config " + inv.cfg.string() +
                    " --out " + inv.out.string()) == 0);
    auto brows = read_csv(inv.out / "barrier.csv");
    double sup = 0.0;
    for (const auto& row : brows) sup = std::max(sup, std::abs(row[1]));
    CHECK(sup <= 5e-2);
}

TEST_CASE("cli: tabulated diffusion coefficients from CSV") {
    auto d = fresh("diff_tabulated");
    // OU coefficients written out node by node
    std::ostringstream table;
    table << "x,mu,sigma\n";
    const int n = 401;
    for (int i = 0; i < n; ++i) {
        const double x = -10.0 + 20.0 * i / (n - 1);
        table << x << ',' << -x << ",1.0\n";
    }
    const fs::path coeff_path = kWorkDir / "ou_coeffs.csv";
    write_file(coeff_path, table.str());
    write_file(d.cfg, std::string(R"({
      "lambda": 1.0,
      "mesh": {"horizon": 0.5, "n_steps": 100},
      "grid": {"x_min": -10.0, "x_max": 10.0, "n_nodes": 401},
      "u0": {"preset": "gaussian"},
      "coefficients": {"csv": ")") + coeff_path.string() + R"("},
      "barrier": {"preset": "constant", "level": 0.0}
    })");
    REQUIRE(run_cli("diffusion-forward --config " + d.cfg.string() +
                    " --out " + d.out.string()) == 0);
    auto rows = read_csv(d.out / "survival.csv");
    REQUIRE(rows.size() == 101);
    CHECK(rows.back()[1] < 1.0);
    CHECK(rows.back()[1] > 0.5);
}

TEST_CASE("cli: price command") {
    auto d = fresh("price_call");
    write_file(d.cfg, R"({
      "lambda": 1.0,
      "drift": 0.05,
      "volatility": 0.3,
      "correlation": 0.5,
      "payoff": {"kind": "call", "strike": 1.0},
      "mesh": {"horizon": 1.0, "n_steps": 60},
      "asset_grid": {"x_min": -4.0, "x_max": 4.0, "n_nodes": 81},
      "credit_grid": {"x_min": -8.0, "x_max": 8.0, "n_nodes": 81},
      "barrier": {"preset": "constant", "level": 0.0},
      "report_assets": [1.0]
    })");
    REQUIRE(run_cli("price --config " + d.cfg.string() + " --out " +
                    d.out.string()) == 0);
    auto rows = read_csv(d.out / "prices.csv");
    REQUIRE(rows.size() == 1);
    CHECK(rows[0][1] > 0.0);
    CHECK(rows[0][1] < 0.2); // killed call is well below the free value
    CHECK(fs::exists(d.out / "surface_t0.csv"));
}
