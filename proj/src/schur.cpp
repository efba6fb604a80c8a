#include "emi/schur.hpp"

#include <stdexcept>

namespace emi {

SparseMatrix select_block(const SparseMatrix& A, const std::vector<int>& rows, const std::vector<int>& cols) {
  std::vector<int> rmap(A.rows(), -1), cmap(A.cols(), -1);
  for (size_t k = 0; k < rows.size(); ++k) rmap[rows[k]] = static_cast<int>(k);
  for (size_t k = 0; k < cols.size(); ++k) cmap[cols[k]] = static_cast<int>(k);
  std::vector<Eigen::Triplet<double>> trip;
  for (int c = 0; c < A.outerSize(); ++c) {
    if (cmap[c] < 0) continue;
    for (SparseMatrix::InnerIterator it(A, c); it; ++it)
      if (rmap[it.row()] >= 0) trip.emplace_back(rmap[it.row()], cmap[c], it.value());
  }
  SparseMatrix B(rows.size(), cols.size());
  B.setFromTriplets(trip.begin(), trip.end());
  return B;
}

CondensedSystem::CondensedSystem(std::vector<LocalOperator> ops, std::vector<std::vector<int>> interface_map,
                                 std::vector<std::vector<int>> interior_global, std::vector<int> interface_global,
                                 int global_size)
    : interface_global_(std::move(interface_global)), global_size_(global_size) {
  if (ops.size() != interface_map.size() || ops.size() != interior_global.size())
    throw std::invalid_argument("condensed system: inconsistent substructure counts");
  parts_.resize(ops.size());
  for (size_t i = 0; i < ops.size(); ++i) {
    Part& p = parts_[i];
    p.op = std::move(ops[i]);
    p.to_interface = std::move(interface_map[i]);
    p.interior_global = std::move(interior_global[i]);
    if (p.to_interface.size() != p.op.interface.size() || p.interior_global.size() != p.op.interior.size())
      throw std::invalid_argument("condensed system: index maps do not match substructure " + std::to_string(i));
    p.KII = select_block(p.op.matrix, p.op.interior, p.op.interior);
    p.KIG = select_block(p.op.matrix, p.op.interior, p.op.interface);
    p.KGG = select_block(p.op.matrix, p.op.interface, p.op.interface);
    if (!p.interior.factor(p.KII))
      throw std::runtime_error("interior block of substructure " + std::to_string(p.op.substructure) +
                               " is not positive definite");
  }
}

Eigen::VectorXd CondensedSystem::apply_local(int i, const Eigen::VectorXd& x) const {
  const Part& p = parts_[i];
  Eigen::VectorXd y = p.KGG * x;
  if (p.KII.rows() > 0) y -= p.KIG.transpose() * p.interior.solve(Eigen::VectorXd(p.KIG * x));
  return y;
}

Eigen::VectorXd CondensedSystem::harmonic_extension(int i, const Eigen::VectorXd& x) const {
  const Part& p = parts_[i];
  Eigen::VectorXd u = Eigen::VectorXd::Zero(p.op.matrix.rows());
  for (size_t k = 0; k < p.op.interface.size(); ++k) u[p.op.interface[k]] = x[k];
  if (p.KII.rows() > 0) {
    const Eigen::VectorXd uI = -p.interior.solve(Eigen::VectorXd(p.KIG * x));
    for (size_t k = 0; k < p.op.interior.size(); ++k) u[p.op.interior[k]] = uI[k];
  }
  return u;
}

Eigen::VectorXd CondensedSystem::restrict(int i, const Eigen::VectorXd& x) const {
  const auto& map = parts_[i].to_interface;
  Eigen::VectorXd xi(map.size());
  for (size_t k = 0; k < map.size(); ++k) xi[k] = x[map[k]];
  return xi;
}

void CondensedSystem::add_extended(int i, const Eigen::VectorXd& xi, Eigen::VectorXd& y) const {
  const auto& map = parts_[i].to_interface;
  for (size_t k = 0; k < map.size(); ++k) y[map[k]] += xi[k];
}

Eigen::VectorXd CondensedSystem::apply(const Eigen::VectorXd& x) const {
  Eigen::VectorXd y = Eigen::VectorXd::Zero(interface_size());
  for (int i = 0; i < num_substructures(); ++i) add_extended(i, apply_local(i, restrict(i, x)), y);
  return y;
}

Eigen::VectorXd CondensedSystem::reduce_rhs(const Eigen::VectorXd& f) const {
  if (f.size() != global_size_) throw std::invalid_argument("reduce_rhs: vector has wrong size");
  Eigen::VectorXd g(interface_size());
  for (int k = 0; k < interface_size(); ++k) g[k] = f[interface_global_[k]];
  for (const Part& p : parts_) {
    if (p.KII.rows() == 0) continue;
    Eigen::VectorXd fI(p.interior_global.size());
    for (size_t k = 0; k < p.interior_global.size(); ++k) fI[k] = f[p.interior_global[k]];
    const Eigen::VectorXd c = p.KIG.transpose() * p.interior.solve(fI);
    for (size_t k = 0; k < p.to_interface.size(); ++k) g[p.to_interface[k]] -= c[k];
  }
  return g;
}

Eigen::VectorXd CondensedSystem::recover(const Eigen::VectorXd& u_interface, const Eigen::VectorXd& f) const {
  if (f.size() != global_size_ || u_interface.size() != interface_size())
    throw std::invalid_argument("recover: vector has wrong size");
  Eigen::VectorXd u = Eigen::VectorXd::Zero(global_size_);
  for (int k = 0; k < interface_size(); ++k) u[interface_global_[k]] = u_interface[k];
  for (int i = 0; i < num_substructures(); ++i) {
    const Part& p = parts_[i];
    if (p.KII.rows() == 0) continue;
    Eigen::VectorXd rhs(p.interior_global.size());
    for (size_t k = 0; k < p.interior_global.size(); ++k) rhs[k] = f[p.interior_global[k]];
    rhs -= p.KIG * restrict(i, u_interface);
    const Eigen::VectorXd uI = p.interior.solve(rhs);
    for (size_t k = 0; k < p.interior_global.size(); ++k) u[p.interior_global[k]] = uI[k];
  }
  return u;
}

Eigen::MatrixXd CondensedSystem::dense_local_schur(int i) const {
  const Part& p = parts_[i];
  Eigen::MatrixXd S(p.KGG);
  if (p.KII.rows() > 0) S -= p.KIG.transpose() * p.interior.solve(Eigen::MatrixXd(p.KIG));
  return 0.5 * (S + S.transpose());
}

CondensedSystem factor_interiors(std::vector<LocalOperator> ops, const DofMap& dofs) {
  std::vector<std::vector<int>> interface_map(ops.size()), interior_global(ops.size());
  for (size_t i = 0; i < ops.size(); ++i) {
    const auto& s = dofs.subs.at(ops[i].substructure);
    for (int l : ops[i].interface) interface_map[i].push_back(dofs.interface_position[s.global[l]]);
    for (int l : ops[i].interior) interior_global[i].push_back(s.global[l]);
  }
  return CondensedSystem(std::move(ops), std::move(interface_map), std::move(interior_global), dofs.interface_dofs,
                         dofs.num_global());
}

}  // namespace emi
