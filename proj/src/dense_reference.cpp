#include "emi/dense_reference.hpp"

#include <Eigen/Eigenvalues>
#include <stdexcept>

namespace emi {

Eigen::MatrixXd dense_operator(int n, const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& op) {
  Eigen::MatrixXd A(n, n);
  for (int k = 0; k < n; ++k) A.col(k) = op(Eigen::VectorXd::Unit(n, k));
  return A;
}

Eigen::MatrixXd dense_schur(const CondensedSystem& cs) {
  const int n = cs.interface_size();
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < cs.num_substructures(); ++i) {
    const Eigen::MatrixXd Si = cs.dense_local_schur(i);
    const auto& map = cs.interface_map(i);
    for (size_t a = 0; a < map.size(); ++a)
      for (size_t b = 0; b < map.size(); ++b) S(map[a], map[b]) += Si(a, b);
  }
  return S;
}

Eigen::MatrixXd constant_complement(int n) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(Eigen::MatrixXd::Ones(n, 1));
  const Eigen::MatrixXd Q = qr.householderQ();
  return Q.rightCols(n - 1);
}

Eigen::MatrixXd dense_bddc(const CondensedSystem& cs, const ConstraintSet& constraints, const Scaling& scaling) {
  const int ns = cs.num_substructures();
  const int n = cs.interface_size();
  std::vector<int> offset(ns + 1, 0), index_of(constraints.rows_of.size(), -1);
  for (int i = 0; i < ns; ++i) {
    offset[i + 1] = offset[i] + static_cast<int>(cs.interface_map(i).size());
    index_of[cs.local(i).substructure] = i;
  }
  const int nb = offset[ns];

  // broken position of (substructure, local dof)
  std::vector<std::vector<int>> broken(ns);
  for (int i = 0; i < ns; ++i) {
    const auto& op = cs.local(i);
    broken[i].assign(op.matrix.rows(), -1);
    for (size_t k = 0; k < op.interface.size(); ++k) broken[i][op.interface[k]] = offset[i] + static_cast<int>(k);
  }
  auto functional = [&](const ConstraintRow& row) {
    Eigen::VectorXd c = Eigen::VectorXd::Zero(nb);
    const int i = index_of.at(row.substructure);
    for (size_t k = 0; k < row.dofs.size(); ++k) c[broken[i][row.dofs[k]]] += row.weights[k];
    return c;
  };
  int jumps = 0;
  for (const PrimalClass& cls : constraints.classes) jumps += static_cast<int>(cls.rows.size()) - 1;
  Eigen::MatrixXd Bt = Eigen::MatrixXd::Zero(nb, jumps);
  int q = 0;
  for (const PrimalClass& cls : constraints.classes) {
    const Eigen::VectorXd first = functional(constraints.rows[cls.rows[0]]);
    for (size_t r = 1; r < cls.rows.size(); ++r) Bt.col(q++) = functional(constraints.rows[cls.rows[r]]) - first;
  }
  Eigen::MatrixXd Z;
  if (jumps == 0) {
    Z = Eigen::MatrixXd::Identity(nb, nb);
  } else {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Bt);
    const Eigen::MatrixXd Q = qr.householderQ();
    Z = Q.rightCols(nb - qr.rank());
  }

  Eigen::MatrixXd Sb = Eigen::MatrixXd::Zero(nb, nb);
  Eigen::MatrixXd RD = Eigen::MatrixXd::Zero(nb, n);
  for (int i = 0; i < ns; ++i) {
    const int m = offset[i + 1] - offset[i];
    Sb.block(offset[i], offset[i], m, m) = cs.dense_local_schur(i);
    const auto& map = cs.interface_map(i);
    for (int k = 0; k < m; ++k) RD(offset[i] + k, map[k]) = scaling.weights[i][k];
  }
  Eigen::MatrixXd St = Z.transpose() * Sb * Z;
  St = 0.5 * (St + St.transpose());
  const Eigen::VectorXd c = Z.transpose() * Eigen::VectorXd::Ones(nb);
  const double alpha = St.diagonal().mean();
  const Eigen::MatrixXd reg = St + alpha * c * c.transpose() / c.squaredNorm();
  const Eigen::MatrixXd ZtR = Z.transpose() * RD;
  Eigen::MatrixXd M = ZtR.transpose() * reg.ldlt().solve(ZtR);
  const Eigen::MatrixXd P = Eigen::MatrixXd::Identity(n, n) - Eigen::MatrixXd::Constant(n, n, 1.0 / n);
  M = P * M * P;
  return 0.5 * (M + M.transpose());
}

Spectrum preconditioned_spectrum(const Eigen::MatrixXd& M, const Eigen::MatrixXd& S) {
  if (M.rows() < 2) throw std::invalid_argument("spectrum needs at least two unknowns");
  const Eigen::MatrixXd Q = constant_complement(static_cast<int>(M.rows()));
  const Eigen::MatrixXd MQ = Q.transpose() * M * Q;
  const Eigen::MatrixXd SQ = Q.transpose() * S * Q;
  Eigen::LLT<Eigen::MatrixXd> llt(0.5 * (MQ + MQ.transpose()));
  if (llt.info() != Eigen::Success) throw std::runtime_error("preconditioner is not positive on the constant complement");
  const Eigen::MatrixXd L = llt.matrixL();
  Eigen::MatrixXd T = L.transpose() * SQ * L;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (T + T.transpose()), Eigen::EigenvaluesOnly);
  return {eig.eigenvalues().minCoeff(), eig.eigenvalues().maxCoeff()};
}

Eigen::VectorXd dense_kernel_solve(const Eigen::MatrixXd& S, const Eigen::VectorXd& b) {
  const Eigen::MatrixXd Q = constant_complement(static_cast<int>(S.rows()));
  const Eigen::MatrixXd SQ = Q.transpose() * S * Q;
  return Q * SQ.ldlt().solve(Q.transpose() * b);
}

}  // namespace emi
