#include "emi/sparse_cholesky.hpp"

#include <Eigen/CholmodSupport>
#include <stdexcept>

namespace emi {

// Simplicial factorization: the supernodal path goes through BLAS, and some
// OpenBLAS builds select kernels that break dpotrf on newer AVX-512 cores.
struct SparseCholesky::Impl {
  Eigen::CholmodSimplicialLLT<Eigen::SparseMatrix<double>, Eigen::Lower> llt;
  Impl() {
    // failures are reported through info(), keep CHOLMOD quiet
    llt.cholmod().print = 0;
    llt.cholmod().error_handler = nullptr;
  }
};

SparseCholesky::SparseCholesky() = default;
SparseCholesky::~SparseCholesky() = default;
SparseCholesky::SparseCholesky(SparseCholesky&&) noexcept = default;
SparseCholesky& SparseCholesky::operator=(SparseCholesky&&) noexcept = default;

bool SparseCholesky::factor(const Eigen::SparseMatrix<double>& A) {
  if (A.rows() != A.cols()) throw std::invalid_argument("Cholesky of a non-square matrix");
  rows_ = static_cast<int>(A.rows());
  impl_.reset();
  if (rows_ == 0) return true;
  impl_ = std::make_unique<Impl>();
  impl_->llt.compute(A);
  return impl_->llt.info() == Eigen::Success;
}

Eigen::VectorXd SparseCholesky::solve(const Eigen::VectorXd& b) const {
  if (b.size() != rows_) throw std::invalid_argument("right-hand side has wrong size");
  if (rows_ == 0) return b;
  return impl_->llt.solve(b);
}

Eigen::MatrixXd SparseCholesky::solve(const Eigen::MatrixXd& B) const {
  if (B.rows() != rows_) throw std::invalid_argument("right-hand side has wrong size");
  if (rows_ == 0 || B.cols() == 0) return B;
  return impl_->llt.solve(B);
}

}  // namespace emi
