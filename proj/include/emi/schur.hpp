#pragma once

#include <Eigen/Dense>
#include <vector>

#include "emi/assembly.hpp"
#include "emi/sparse_cholesky.hpp"

namespace emi {

// Rows `rows`, columns `cols` of A.
SparseMatrix select_block(const SparseMatrix& A, const std::vector<int>& rows, const std::vector<int>& cols);

// Interior-eliminated view of the substructure operators. Interface vectors
// of substructure i are indexed by slot, i.e. by position in op.interface.
class CondensedSystem {
 public:
  // interface_map[i][slot]: position on the global interface.
  // interior_global[i][k]: global dof of op.interior[k].
  // interface_global[position]: global dof of an interface position.
  CondensedSystem(std::vector<LocalOperator> ops, std::vector<std::vector<int>> interface_map,
                  std::vector<std::vector<int>> interior_global, std::vector<int> interface_global,
                  int global_size);

  int num_substructures() const { return static_cast<int>(parts_.size()); }
  int interface_size() const { return static_cast<int>(interface_global_.size()); }
  int global_size() const { return global_size_; }
  const LocalOperator& local(int i) const { return parts_[i].op; }
  const std::vector<int>& interface_map(int i) const { return parts_[i].to_interface; }
  const std::vector<int>& interface_global() const { return interface_global_; }

  // S_i x
  Eigen::VectorXd apply_local(int i, const Eigen::VectorXd& x) const;
  // Full local vector: interior solves K_II u_I = -K_IG x.
  Eigen::VectorXd harmonic_extension(int i, const Eigen::VectorXd& x) const;
  // sum_i R_i^T S_i R_i x
  Eigen::VectorXd apply(const Eigen::VectorXd& x) const;
  // f_G - sum_i R_i^T K_GI K_II^{-1} f_I, from a vector over all global dofs.
  Eigen::VectorXd reduce_rhs(const Eigen::VectorXd& f) const;
  // Global solution from interface values.
  Eigen::VectorXd recover(const Eigen::VectorXd& u_interface, const Eigen::VectorXd& f) const;
  // Explicit S_i (small problems only).
  Eigen::MatrixXd dense_local_schur(int i) const;

  Eigen::VectorXd restrict(int i, const Eigen::VectorXd& x) const;
  void add_extended(int i, const Eigen::VectorXd& xi, Eigen::VectorXd& y) const;

 private:
  struct Part {
    LocalOperator op;
    SparseMatrix KII, KIG, KGG;
    SparseCholesky interior;
    std::vector<int> to_interface;
    std::vector<int> interior_global;
  };
  std::vector<Part> parts_;
  std::vector<int> interface_global_;
  int global_size_ = 0;
};

// Factorises every interior block; throws std::runtime_error naming the
// substructure whose block is not positive definite.
CondensedSystem factor_interiors(std::vector<LocalOperator> ops, const DofMap& dofs);

}  // namespace emi
