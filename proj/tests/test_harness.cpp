#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <unistd.h>

#include "doctest.h"
#include "emi/harness.hpp"

using namespace emi;

namespace {

ExperimentConfig small(std::vector<PrimalVariant> variants = {PrimalVariant::vef, PrimalVariant::ve}) {
  ExperimentConfig c;
  c.mesh.cells_x = 2;
  c.mesh.cells_y = 1;
  c.mesh.cells_z = 1;
  c.variants = std::move(variants);
  c.samples = 3;
  return c;
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

std::vector<std::string> fields(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream in(line);
  for (std::string f; std::getline(in, f, ',');) out.push_back(f);
  return out;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Cli {
  std::filesystem::path dir;
  Cli() : dir(std::filesystem::temp_directory_path() / ("emi_bddc_cli_" + std::to_string(::getpid()))) {
    std::filesystem::create_directories(dir);
  }
  ~Cli() { std::filesystem::remove_all(dir); }

  // exit code, stdout in `out`
  int run(const std::string& args, std::string* out = nullptr) const {
    const char* exe = std::getenv("EMI_BDDC_CLI");
    REQUIRE_MESSAGE(exe != nullptr, "EMI_BDDC_CLI must point at the command-line tool");
    const auto log = dir / "stdout.txt";
    const std::string cmd = std::string(exe) + " " + args + " > " + log.string() + " 2> " + (dir / "stderr.txt").string();
    const int status = std::system(cmd.c_str());
    if (out) *out = read_file(log);
    return WEXITSTATUS(status);
  }
  std::filesystem::path file(const std::string& name, const std::string& text = "") const {
    const auto p = dir / name;
    if (!text.empty()) std::ofstream(p) << text;
    return p;
  }
};

}  // namespace

TEST_CASE("config defaults and full key set") {
  const ExperimentConfig d = parse_config("{}");
  CHECK(d.experiment == Experiment::solve);
  CHECK(d.mesh.num_cells() == 4);
  CHECK(d.variants.size() == 2);
  CHECK(d.samples == 100);
  CHECK(d.tau == 0.01);

  const ExperimentConfig c = parse_config(R"({
    "experiment": "random_sigma",
    "mesh": {"cells": [3, 2, 1], "refinement": 1, "base_resolution": 8, "geometry": "repetitive", "cell_edge_mm": 0.2},
    "model": {"sigma_extra": 10, "sigma_intra": 2, "C_m": 2, "tau": 0.02, "R_g": 0.001, "stimulus": 0.5,
              "aliev_panfilov": {"k": 7, "a": 0.1, "eps0": 0.01, "mu1": 0.1, "mu2": 0.2}},
    "solver": {"variants": ["ve"], "tolerance": 1e-8, "mode": "absolute", "max_iterations": 50},
    "study": {"samples": 7, "seed": 9, "sizes": [[1, 1, 2]], "levels": [0, 2]},
    "output": "x.csv"
  })");
  CHECK(c.experiment == Experiment::random_sigma);
  CHECK(c.mesh.cells_x == 3);
  CHECK(c.mesh.voxels_per_cell() == 16);
  CHECK(c.mesh.cell_edge_mm == 0.2);
  CHECK(c.sigma_extra == 10);
  CHECK(c.ionic.k == 7);
  CHECK(c.ionic.mu2 == 0.2);
  CHECK(c.stimulus == 0.5);
  CHECK(c.variants == std::vector<PrimalVariant>{PrimalVariant::ve});
  CHECK(c.mode == ToleranceMode::absolute);
  CHECK(c.max_iterations == 50);
  CHECK(c.samples == 7);
  CHECK(c.seed == 9);
  CHECK(c.sizes.size() == 1);
  CHECK(c.levels == std::vector<int>{0, 2});
  CHECK(c.output == "x.csv");
}

TEST_CASE("invalid configs are rejected") {
  CHECK_THROWS_AS(parse_config(R"({"mesh": {"cells": [1, 1, 1], "colour": 3}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"solvr": {}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"solver": {"tolerance": "small"}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"mesh": {"cells": [1, 1]}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"experiment": "strong-scaling"})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"solver": {"variants": ["vefx"]}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"study": {"samples": 0}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"model": {"tau": -1}})"), ConfigError);
  CHECK_THROWS_AS(parse_config("{"), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);
  CHECK(parse_experiment("weak_scaling") == Experiment::weak_scaling);
  CHECK(parse_experiment("weak-scaling") == Experiment::weak_scaling);
}

TEST_CASE("CSV layout") {
  ResultRow r;
  r.cells = 2;
  r.subdomains = 3;
  r.global_dofs = 100;
  r.primal_space = PrimalVariant::ve;
  r.iterations = 12;
  r.kappa_est = 3.5;
  r.coarse_dim = 9;
  r.solve_ms = 1.23456;
  r.seed = 42;
  r.sigma_summary = sigma_summary({20, 3, 3});
  r.extra["level"] = "1";
  std::ostringstream out;
  write_csv(out, {r});
  const auto l = lines(out.str());
  REQUIRE(l.size() == 2);
  CHECK(l[0] == "cells,subdomains,global_dofs,primal_space,iterations,kappa_est,coarse_dim,solve_ms,seed,sigma_summary,level");
  CHECK(l[1] == "2,3,100,VE,12,3.5,9,1.235,42,extra=20 intra=3,1");
  CHECK(sigma_summary({1.5, 2, 7}) == "extra=1.5 intra=2..7");
}

TEST_CASE("stimulus covers the first column of cells") {
  MeshConfig mc;
  mc.cells_x = 2;
  mc.cells_y = 2;
  const Mesh m = build_mesh(mc);
  const InterfaceTopology topo = extract_interfaces(m);
  const DofMap dofs = build_composite_space(m, topo);
  const Eigen::VectorXd u = stimulus_state(mc, dofs, 1.0);
  for (const auto& sub : dofs.subs) {
    const bool first = sub.id == 1 || sub.id == 3;
    for (int l = 0; l < sub.num_own; ++l) CHECK(u[sub.global[l]] == (first ? 1.0 : 0.0));
  }
}

TEST_CASE("solve rows are consistent with the preconditioner") {
  std::ostringstream log;
  const ExperimentConfig c = small();
  const auto rows = run_solve(c, log);
  REQUIRE(rows.size() == 2);
  const Problem p = build_problem(c.mesh, make_params(c, 3), c.stimulus);
  for (const auto& r : rows) {
    CHECK(r.converged);
    CHECK(r.kappa_est >= 1.0);
    CHECK(r.subdomains == 3);
    CHECK(r.global_dofs == p.dofs.num_global());
    const BddcPreconditioner M(*p.cs, build_primal_constraints(p.mesh, p.dofs, p.topo, r.primal_space), p.scaling);
    CHECK(r.coarse_dim == M.coarse_dim());
  }
  CHECK(rows[0].coarse_dim > rows[1].coarse_dim);
  CHECK(log.str().find("iterations") != std::string::npos);
}

TEST_CASE("interface solve reproduces the global solution") {
  const ExperimentConfig c = small({PrimalVariant::vef});
  const Problem p = build_problem(c.mesh, make_params(c, 3), c.stimulus);
  CHECK(std::abs(p.f.sum()) <= 1e-12 * p.f.norm());
  CHECK(p.f.norm() > 0);
  const BddcPreconditioner M(*p.cs, build_primal_constraints(p.mesh, p.dofs, p.topo, PrimalVariant::vef), p.scaling);
  PcgOptions opt;
  opt.tolerance = 1e-12;
  const InterfaceSolve s = solve_interface(*p.cs, M, p.cs->reduce_rhs(p.f), opt);
  const Eigen::VectorXd u = p.cs->recover(s.u_interface, p.f);
  const Eigen::VectorXd res = assemble_K(p.mesh, p.topo, p.dofs, p.params).K * u - p.f;
  CHECK(res.norm() <= 1e-9 * p.f.norm());
}

TEST_CASE("weak scaling and refinement rows") {
  std::ostringstream log;
  ExperimentConfig c = small({PrimalVariant::vef});
  c.sizes = {{1, 1, 1}, {2, 1, 1}};
  const auto ws = run_weak_scaling(c, log);
  REQUIRE(ws.size() == 2);
  CHECK(ws[0].extra.at("H_over_h") == ws[1].extra.at("H_over_h"));
  CHECK(ws[1].cells == 2);

  c.levels = {0, 1};
  const auto ref = run_refinement(c, log);
  REQUIRE(ref.size() == 2);
  CHECK(ref[0].extra.at("H_over_h") == "4");
  CHECK(ref[1].extra.at("H_over_h") == "8");
  CHECK(std::stod(ref[0].extra.at("polylog_model")) == doctest::Approx(ref[0].kappa_est));
  const double ratio = std::pow((1 + std::log(8.0)) / (1 + std::log(4.0)), 2);
  CHECK(std::stod(ref[1].extra.at("polylog_model")) == doctest::Approx(ref[0].kappa_est * ratio));
}

TEST_CASE("randomized studies are reproducible and honour the sampling ranges") {
  std::ostringstream log;
  const ExperimentConfig c = small();
  const auto a = run_random_sigma(c, log);
  REQUIRE(a.size() == 6);
  const auto b = run_random_sigma(c, log);
  for (size_t k = 0; k < a.size(); ++k) {
    CHECK(a[k].iterations == b[k].iterations);
    CHECK(a[k].kappa_est == b[k].kappa_est);
    CHECK(a[k].sigma_summary == b[k].sigma_summary);
  }
  CHECK(a[0].sigma_summary != a[2].sigma_summary);
  // every drawn conductivity lies in (1, 20)
  for (const auto& r : a) {
    std::istringstream in(r.sigma_summary);
    std::string extra, intra;
    in >> extra >> intra;
    const double e = std::stod(extra.substr(6));
    const std::string range = intra.substr(6);
    const auto dots = range.find("..");
    const double lo = std::stod(range.substr(0, dots));
    const double hi = dots == std::string::npos ? lo : std::stod(range.substr(dots + 2));
    CHECK((e > 1.0 && e < 20.0));
    CHECK((lo > 1.0 && hi < 20.0));
  }

  const auto r1 = run_random_rhs(c, log);
  const auto r2 = run_random_rhs(c, log);
  REQUIRE(r1.size() == 6);
  for (size_t k = 0; k < r1.size(); ++k) CHECK(r1[k].kappa_est == r2[k].kappa_est);
}

TEST_CASE("verification passes on a single cell with VEF") {
  std::ostringstream log;
  ExperimentConfig c = small({PrimalVariant::vef});
  c.mesh.cells_x = 1;
  const VerifyReport rep = run_verify(c, log);
  CHECK(rep.checks.size() == 4);
  CHECK_MESSAGE(rep.passed(), log.str());
}

TEST_CASE("verification reports VE as undefined on a single cell") {
  std::ostringstream log;
  ExperimentConfig c = small({PrimalVariant::ve});
  c.mesh.cells_x = 1;
  const VerifyReport rep = run_verify(c, log);
  CHECK_FALSE(rep.passed());
  REQUIRE(rep.checks.size() == 1);
  CHECK(rep.checks[0].name == "setup[VE]");
}

TEST_CASE("command-line exit codes and outputs") {
  const Cli cli;
  std::string out;
  CHECK(cli.run("--help", &out) == 0);
  CHECK(cli.run("") == 2);
  CHECK(cli.run("solve --bogus") == 2);
  CHECK(cli.run("experiment strong-scaling") == 2);
  CHECK(cli.run("solve --variant vefx") == 2);

  const auto bad = cli.file("bad.json", R"({"mesh": {"cells": [2, 1, 1]}, "solver": {"tolerence": 1e-6}})");
  CHECK(cli.run("solve --config " + bad.string()) == 2);

  CHECK(cli.run("solve --cells 2 1 1", &out) == 0);
  CHECK(out.find("iterations") != std::string::npos);
  CHECK(out.find("kappa_est") != std::string::npos);

  const auto vtk = cli.dir / "m.vtk";
  CHECK(cli.run("mesh --cells 2 1 1 --out " + vtk.string()) == 0);
  CHECK(std::filesystem::exists(vtk));

  const auto cfg = cli.file("ws.json", R"({"study": {"sizes": [[1, 1, 1], [2, 1, 1]]}})");
  const auto csv = cli.dir / "ws.csv";
  CHECK(cli.run("experiment weak-scaling --config " + cfg.string() + " --variant vef --out " + csv.string()) == 0);
  const auto l = lines(read_file(csv));
  REQUIRE(l.size() == 3);
  CHECK(l[0].rfind("cells,subdomains,global_dofs,primal_space,iterations,kappa_est,coarse_dim,solve_ms,seed,sigma_summary", 0) == 0);

  // identical config and seed: identical rows apart from timings
  const auto c1 = cli.dir / "a.csv", c2 = cli.dir / "b.csv";
  CHECK(cli.run("experiment random-rhs --cells 2 1 1 --samples 4 --seed 7 --out " + c1.string()) == 0);
  CHECK(cli.run("experiment random-rhs --cells 2 1 1 --samples 4 --seed 7 --out " + c2.string()) == 0);
  const auto a = lines(read_file(c1)), b = lines(read_file(c2));
  REQUIRE(a.size() == 9);
  REQUIRE(a.size() == b.size());
  for (size_t k = 0; k < a.size(); ++k) {
    auto fa = fields(a[k]), fb = fields(b[k]);
    REQUIRE(fa.size() == fb.size());
    if (k > 0) fa[7] = fb[7] = "";
    CHECK(fa == fb);
    if (k > 0) CHECK(fa[8] == "7");
  }

  CHECK(cli.run("experiment verify --cells 1 1 1 --variant vef") == 0);
  CHECK(cli.run("experiment verify --cells 1 1 1 --variant ve") == 1);
}
