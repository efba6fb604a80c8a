#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <memory>
#include <vector>

#include "emi/femspace.hpp"
#include "emi/geometry.hpp"
#include "emi/ionic.hpp"

namespace emi {

using SparseMatrix = Eigen::SparseMatrix<double>;

struct ModelParams {
  std::vector<double> sigma;  // mS/cm, per substructure
  double C_m = 1.0;           // uF/cm^2
  double tau = 0.01;          // ms
  double R_g = 4.5e-4;
  std::shared_ptr<const IonicModel> ionic = std::make_shared<AlievPanfilov>();

  // sigma_extra for substructure 0, sigma_intra for every cell.
  static ModelParams uniform(int num_substructures, double sigma_intra = 3.0, double sigma_extra = 20.0);
  // Throws std::invalid_argument.
  void validate(int num_substructures) const;
};

// Local matrix of one substructure in its DofMap numbering.
struct LocalOperator {
  int substructure = 0;
  SparseMatrix matrix;
  std::vector<int> interior;
  std::vector<int> interface;
};

struct AssembledSystem {
  SparseMatrix K;  // global, owned dofs
  std::vector<LocalOperator> locals;
};

// sigma * |T| * grad(phi_a) . grad(phi_b)
Eigen::Matrix4d element_stiffness(const std::array<Point3, 4>& p, double sigma);
// Consistent P1 mass on a triangle.
Eigen::Matrix3d face_mass(const std::array<Point3, 3>& p);

// A_i (sigma included, tau not) per substructure, local numbering.
std::vector<SparseMatrix> assemble_stiffness(const Mesh& mesh, const DofMap& dofs,
                                             const std::vector<double>& sigma);
// M_i = C_m/2 [M -M; -M M] on (own, trace) pairs of every face of i.
std::vector<SparseMatrix> assemble_membrane(const Mesh& mesh, const InterfaceTopology& topo,
                                            const DofMap& dofs, double C_m);
// sum_i R_i^T K_i R_i
SparseMatrix scatter_to_global(const DofMap& dofs, const std::vector<SparseMatrix>& locals);

// K_i' = tau A_i + M_i and K = sum_i K_i'.
AssembledSystem assemble_K(const Mesh& mesh, const InterfaceTopology& topo, const DofMap& dofs,
                           const ModelParams& params);

// Resting recovery state on every membrane node.
IonicState resting_state(const InterfaceTopology& topo);
// v = u_cell - u_extracellular at each state node.
std::vector<double> membrane_jumps(const DofMap& dofs, const IonicState& state, const Eigen::VectorXd& u);

// IMEX right-hand side from the previous potentials u (owned dofs):
// f_i = +M (C_m v - tau F(v)), f_j = -M (C_m v - tau F(v)) on each face,
// with F = I_ion on membranes and v / R_g on gap junctions.
// Throws std::runtime_error if a membrane node has no ionic state.
Eigen::VectorXd assemble_rhs(const Mesh& mesh, const InterfaceTopology& topo, const DofMap& dofs,
                             const ModelParams& params, const Eigen::VectorXd& u, const IonicState& state);

}  // namespace emi
