#pragma once

#include <Eigen/Dense>
#include <vector>

#include "emi/femspace.hpp"
#include "emi/schur.hpp"

namespace emi {

// rho-scaling weights, per substructure and interface slot: every copy held
// by substructure i gets sigma_i / sum of sigma over the holders of the value.
struct Scaling {
  std::vector<Eigen::VectorXd> weights;
};

Scaling build_scaling(const DofMap& dofs, const std::vector<double>& sigma);

// sigma_i / sum_{j in N_x} sigma_j, or 0 when x is not in the closure of i.
double rho_weight(const InterfaceTopology& topo, const std::vector<double>& sigma, int i, int node);

// One interface vector per substructure (the broken space W(Gamma')).
using BrokenVector = std::vector<Eigen::VectorXd>;

BrokenVector restrict_broken(const CondensedSystem& cs, const Eigen::VectorXd& x);
// Every copy replaced by the weighted mean of all copies of the same value.
BrokenVector apply_ED(const CondensedSystem& cs, const Scaling& scaling, const BrokenVector& u);
BrokenVector apply_PD(const CondensedSystem& cs, const Scaling& scaling, const BrokenVector& u);
// sum_i u_i^T S_i u_i
double broken_energy(const CondensedSystem& cs, const BrokenVector& u);
// Euclidean projection onto the space where every primal class agrees.
BrokenVector project_constrained(const CondensedSystem& cs, const ConstraintSet& constraints, BrokenVector u);

class BddcPreconditioner {
 public:
  // `cs` must outlive the preconditioner. Throws std::runtime_error when a
  // local problem is not controlled by its constraints or the coarse matrix
  // has a kernel beyond the constants.
  BddcPreconditioner(const CondensedSystem& cs, const ConstraintSet& constraints, const Scaling& scaling);

  Eigen::VectorXd apply(const Eigen::VectorXd& r) const;

  PrimalVariant variant() const { return variant_; }
  int coarse_dim() const { return static_cast<int>(coarse_.rows()); }
  const Eigen::MatrixXd& coarse_matrix() const { return coarse_; }
  // Phi_i on interface slots, one column per local primal row.
  const Eigen::MatrixXd& coarse_basis(int i) const { return locals_[i].phi; }
  const std::vector<int>& coarse_index(int i) const { return locals_[i].primal; }
  // C_i on interface slots.
  const Eigen::SparseMatrix<double, Eigen::RowMajor>& constraints(int i) const { return locals_[i].C; }
  // Interface part of argmin 1/2 w'S_i w - g'w subject to C_i w = 0.
  Eigen::VectorXd constrained_solve(int i, const Eigen::VectorXd& g) const;

 private:
  struct Local {
    Eigen::SparseMatrix<double, Eigen::RowMajor> C;  // m x slots
    std::vector<int> primal;                          // class per row
    int pin = 0;                                      // slot
    double shift = 0;
    SparseCholesky regularized;
    Eigen::MatrixXd Y;  // slots x (m+1), K_reg^{-1} L^T restricted to the interface
    Eigen::PartialPivLU<Eigen::MatrixXd> G;
    Eigen::MatrixXd phi;
    Eigen::VectorXd weights;
  };

  Eigen::VectorXd regularized_solve(int i, const Eigen::VectorXd& g) const;

  const CondensedSystem& cs_;
  PrimalVariant variant_;
  std::vector<Local> locals_;
  Eigen::MatrixXd coarse_;
  Eigen::LLT<Eigen::MatrixXd> coarse_llt_;
};

}  // namespace emi
