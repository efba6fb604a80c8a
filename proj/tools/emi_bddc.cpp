#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "emi/harness.hpp"

using namespace emi;

namespace {

constexpr int kOk = 0;
constexpr int kCheckFailed = 1;
constexpr int kUsage = 2;

void emit_csv(const ExperimentConfig& c, const std::vector<ResultRow>& rows) {
  if (c.output.empty()) {
    write_csv(std::cout, rows);
    return;
  }
  std::ofstream out(c.output);
  if (!out) throw std::runtime_error("cannot write '" + c.output + "'");
  write_csv(out, rows);
  std::cout << "wrote " << rows.size() << " rows to " << c.output << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"BDDC-preconditioned CG for composite DG discretizations of the cell-by-cell cardiac model"};
  app.require_subcommand(1);

  std::string config_path, variant, geometry, mode;
  std::vector<int> cells;
  int level = -1, samples = 0, base = 0;
  std::uint64_t seed = 0;
  double tol = 0;
  std::string out;
  auto common = [&](CLI::App* cmd) {
    cmd->add_option("-c,--config", config_path, "JSON configuration file")->check(CLI::ExistingFile);
    cmd->add_option("--cells", cells, "cells per axis: X Y Z")->expected(3);
    cmd->add_option("--level", level, "refinement level")->check(CLI::NonNegativeNumber);
    cmd->add_option("--base-resolution", base, "voxels per cell edge at level 0")->check(CLI::PositiveNumber);
    cmd->add_option("--geometry", geometry, "repetitive or convex")->check(CLI::IsMember({"repetitive", "convex"}));
    cmd->add_option("--seed", seed, "random seed");
    cmd->add_option("--tol", tol, "PCG tolerance")->check(CLI::PositiveNumber);
    cmd->add_option("--mode", mode, "tolerance mode")->check(CLI::IsMember({"relative", "absolute"}));
    cmd->add_option("--variant", variant, "primal space")->check(CLI::IsMember({"vef", "ve"}));
    cmd->add_option("--samples", samples, "samples for randomized studies")->check(CLI::PositiveNumber);
    cmd->add_option("--out", out, "output path (VTK for mesh, CSV for experiments)");
  };

  CLI::App* mesh_cmd = app.add_subcommand("mesh", "generate a mesh and export it as legacy VTK");
  CLI::App* solve_cmd = app.add_subcommand("solve", "solve one time-step system and print the solver report");
  CLI::App* exp_cmd = app.add_subcommand("experiment", "run a study and write CSV");
  std::string experiment;
  exp_cmd->add_option("name", experiment, "weak-scaling, refinement, random-rhs, random-sigma or verify")
      ->required()
      ->check(CLI::IsMember({"weak-scaling", "refinement", "random-rhs", "random-sigma", "verify"}));
  for (CLI::App* cmd : {mesh_cmd, solve_cmd, exp_cmd}) common(cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  ExperimentConfig c;
  try {
    if (!config_path.empty()) c = load_config(config_path);
    if (!cells.empty()) {
      c.mesh.cells_x = cells[0];
      c.mesh.cells_y = cells[1];
      c.mesh.cells_z = cells[2];
    }
    if (level >= 0) c.mesh.refinement = level;
    if (base > 0) c.mesh.base_resolution = base;
    if (!geometry.empty()) c.mesh.geometry = parse_geometry(geometry);
    if (seed) c.seed = seed;
    if (tol > 0) c.tolerance = tol;
    if (!mode.empty()) c.mode = parse_tolerance_mode(mode);
    if (!variant.empty()) c.variants = {parse_variant(variant)};
    if (samples > 0) c.samples = samples;
    if (!out.empty()) c.output = out;
    if (exp_cmd->parsed()) c.experiment = parse_experiment(experiment);
    else if (solve_cmd->parsed()) c.experiment = Experiment::solve;
    c.validate();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n" << app.help();
    return kUsage;
  }

  try {
    if (mesh_cmd->parsed()) {
      const Mesh m = build_mesh(c.mesh);
      const InterfaceTopology topo = extract_interfaces(m);
      const DofMap dofs = build_composite_space(m, topo);
      const std::string path = c.output.empty() ? "mesh.vtk" : c.output;
      write_vtk(m, path);
      std::cout << m.vertices.size() << " nodes, " << m.tets.size() << " tets, " << m.num_substructures()
                << " substructures, " << topo.faces.size() << " faces, " << topo.edges.size() << " edges, "
                << topo.vertices.size() << " vertices, " << dofs.num_global() << " global dofs, "
                << dofs.num_interface() << " interface dofs\nwrote " << path << "\n";
      return kOk;
    }
    switch (c.experiment) {
      case Experiment::solve: {
        const auto rows = run_solve(c, std::cout);
        if (!c.output.empty()) emit_csv(c, rows);
        return kOk;
      }
      case Experiment::weak_scaling: {
        const auto rows = run_weak_scaling(c, std::cout);
        write_summary(std::cout, "weak scaling", rows);
        emit_csv(c, rows);
        return kOk;
      }
      case Experiment::refinement: {
        const auto rows = run_refinement(c, std::cout);
        write_summary(std::cout, "refinement", rows);
        emit_csv(c, rows);
        return kOk;
      }
      case Experiment::random_rhs: emit_csv(c, run_random_rhs(c, std::cout)); return kOk;
      case Experiment::random_sigma: emit_csv(c, run_random_sigma(c, std::cout)); return kOk;
      case Experiment::verify: {
        const VerifyReport rep = run_verify(c, std::cout);
        if (!c.output.empty()) emit_csv(c, rep.rows);
        std::cout << (rep.passed() ? "all checks passed" : "verification FAILED") << "\n";
        return rep.passed() ? kOk : kCheckFailed;
      }
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kCheckFailed;
  }
  return kOk;
}
