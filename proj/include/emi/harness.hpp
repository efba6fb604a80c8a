#pragma once

#include <iosfwd>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "emi/assembly.hpp"
#include "emi/bddc.hpp"
#include "emi/config.hpp"
#include "emi/krylov.hpp"

namespace emi {

ModelParams make_params(const ExperimentConfig& config, int num_substructures);

// Potential `stimulus` on the own dofs of every cell in the first column
// (x index 0), zero elsewhere.
Eigen::VectorXd stimulus_state(const MeshConfig& mesh, const DofMap& dofs, double stimulus);

// One assembled and condensed time-step system.
struct Problem {
  MeshConfig mesh_config;
  Mesh mesh;
  InterfaceTopology topo;
  DofMap dofs;
  ModelParams params;
  Eigen::VectorXd f;  // right-hand side over global dofs
  std::unique_ptr<CondensedSystem> cs;
  Scaling scaling;

  int num_cells() const { return mesh.num_substructures() - 1; }
  // Reassembles K, the condensed system and the scaling for new conductivities.
  void set_sigma(const std::vector<double>& sigma);
};

// One IMEX step from the stimulus state with resting recovery variables.
Problem build_problem(const MeshConfig& mesh, const ModelParams& params, double stimulus);

struct InterfaceSolve {
  Eigen::VectorXd u_interface;
  SolveReport report;
};

// PCG on the interface system with the BDDC preconditioner and the constant kernel.
InterfaceSolve solve_interface(const CondensedSystem& cs, const BddcPreconditioner& M, const Eigen::VectorXd& b,
                               const PcgOptions& options);

struct ResultRow {
  int cells = 0;
  int subdomains = 0;
  int global_dofs = 0;
  PrimalVariant primal_space = PrimalVariant::vef;
  int iterations = 0;
  double kappa_est = 1;
  int coarse_dim = 0;
  double solve_ms = 0;
  std::uint64_t seed = 0;
  std::string sigma_summary;
  bool converged = true;
  // extra columns appended after the fixed ones, in key order
  std::map<std::string, std::string> extra;
};

const std::vector<std::string>& csv_columns();
// Header, then one line per row. Extra columns are the union over rows.
void write_csv(std::ostream& out, const std::vector<ResultRow>& rows);
// Per variant: row count, min/mean/max iterations and kappa.
void write_summary(std::ostream& out, const std::string& title, const std::vector<ResultRow>& rows);

std::string sigma_summary(const std::vector<double>& sigma);

// Each experiment returns its rows in a deterministic order.
std::vector<ResultRow> run_solve(const ExperimentConfig& config, std::ostream& log);
std::vector<ResultRow> run_weak_scaling(const ExperimentConfig& config, std::ostream& log);
std::vector<ResultRow> run_refinement(const ExperimentConfig& config, std::ostream& log);
std::vector<ResultRow> run_random_rhs(const ExperimentConfig& config, std::ostream& log);
std::vector<ResultRow> run_random_sigma(const ExperimentConfig& config, std::ostream& log);

struct Check {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct VerifyReport {
  std::vector<Check> checks;
  std::vector<ResultRow> rows;
  bool passed() const;
};

// Dense cross-checks on a small mesh, per configured variant.
VerifyReport run_verify(const ExperimentConfig& config, std::ostream& log);

}  // namespace emi
