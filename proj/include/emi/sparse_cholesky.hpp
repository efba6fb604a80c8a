#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <memory>

namespace emi {

// Sparse LL^T of a symmetric positive definite matrix (lower triangle used).
// Backed by CHOLMOD's simplicial LL' factorization.
class SparseCholesky {
 public:
  SparseCholesky();
  ~SparseCholesky();
  SparseCholesky(SparseCholesky&&) noexcept;
  SparseCholesky& operator=(SparseCholesky&&) noexcept;

  // False when the matrix is not numerically positive definite.
  bool factor(const Eigen::SparseMatrix<double>& A);
  int rows() const { return rows_; }

  Eigen::VectorXd solve(const Eigen::VectorXd& b) const;
  Eigen::MatrixXd solve(const Eigen::MatrixXd& B) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int rows_ = 0;
};

}  // namespace emi
