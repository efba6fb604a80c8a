#pragma once

#include <Eigen/Dense>
#include <functional>

#include "emi/bddc.hpp"

namespace emi {

// Dense verification objects for small problems. Everything here is built
// independently of BddcPreconditioner: the constrained space is the null space
// of the primal jump rows, not a bordered solve.

// Columns op(e_k), k < n.
Eigen::MatrixXd dense_operator(int n, const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& op);

// Assembled interface Schur complement from explicit local complements.
Eigen::MatrixXd dense_schur(const CondensedSystem& cs);

// R_D^T Z (Z^T S Z)^+ Z^T R_D, projected on both sides orthogonal to the
// constants; Z spans the broken vectors on which every primal class agrees.
Eigen::MatrixXd dense_bddc(const CondensedSystem& cs, const ConstraintSet& constraints, const Scaling& scaling);

// Orthonormal basis of the complement of the constant vector.
Eigen::MatrixXd constant_complement(int n);

struct Spectrum {
  double lambda_min = 0;
  double lambda_max = 0;
  double kappa() const { return lambda_max / lambda_min; }
};

// Eigenvalues of M S on the complement of the constants; M and S symmetric
// with the constants in their kernels.
Spectrum preconditioned_spectrum(const Eigen::MatrixXd& M, const Eigen::MatrixXd& S);

// Solution of S x = b orthogonal to the constants.
Eigen::VectorXd dense_kernel_solve(const Eigen::MatrixXd& S, const Eigen::VectorXd& b);

}  // namespace emi
