#include "emi/bddc.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <stdexcept>
#include <string>

namespace emi {

Scaling build_scaling(const DofMap& dofs, const std::vector<double>& sigma) {
  if (sigma.size() != dofs.subs.size()) throw std::invalid_argument("need one conductivity per substructure");
  Scaling s;
  for (const auto& sub : dofs.subs) {
    Eigen::VectorXd w(sub.interface.size());
    for (size_t k = 0; k < sub.interface.size(); ++k) {
      const int pos = dofs.interface_position[sub.global[sub.interface[k]]];
      double total = 0;
      for (const DofCopy& c : dofs.copies(pos)) total += sigma[c.substructure];
      w[k] = sigma[sub.id] / total;
    }
    s.weights.push_back(std::move(w));
  }
  return s;
}

double rho_weight(const InterfaceTopology& topo, const std::vector<double>& sigma, int i, int node) {
  double total = 0;
  bool member = false;
  for (int j : topo.substructures_at(node)) {
    total += sigma[j];
    member = member || j == i;
  }
  return member ? sigma[i] / total : 0.0;
}

BrokenVector restrict_broken(const CondensedSystem& cs, const Eigen::VectorXd& x) {
  BrokenVector u(cs.num_substructures());
  for (int i = 0; i < cs.num_substructures(); ++i) u[i] = cs.restrict(i, x);
  return u;
}

BrokenVector apply_ED(const CondensedSystem& cs, const Scaling& scaling, const BrokenVector& u) {
  Eigen::VectorXd z = Eigen::VectorXd::Zero(cs.interface_size());
  for (int i = 0; i < cs.num_substructures(); ++i)
    cs.add_extended(i, scaling.weights[i].cwiseProduct(u[i]), z);
  return restrict_broken(cs, z);
}

BrokenVector apply_PD(const CondensedSystem& cs, const Scaling& scaling, const BrokenVector& u) {
  BrokenVector e = apply_ED(cs, scaling, u);
  for (size_t i = 0; i < e.size(); ++i) e[i] = u[i] - e[i];
  return e;
}

double broken_energy(const CondensedSystem& cs, const BrokenVector& u) {
  double e = 0;
  for (int i = 0; i < cs.num_substructures(); ++i) e += u[i].dot(cs.apply_local(i, u[i]));
  return e;
}

namespace {

std::vector<int> slots_of(const LocalOperator& op) {
  std::vector<int> slot(op.matrix.rows(), -1);
  for (size_t k = 0; k < op.interface.size(); ++k) slot[op.interface[k]] = static_cast<int>(k);
  return slot;
}

std::string describe(const PrimalClass& c) {
  const char* kind = c.kind == EntityKind::vertex ? "vertex at node " : c.kind == EntityKind::edge ? "edge " : "face ";
  return std::string(kind) + std::to_string(c.entity) + " (copy of substructure " + std::to_string(c.provenance) + ")";
}

void check_rank(const Eigen::SparseMatrix<double, Eigen::RowMajor>& C, const std::vector<int>& primal,
                const ConstraintSet& cons, int sub) {
  std::vector<int> cols;
  for (int r = 0; r < C.rows(); ++r)
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(C, r); it; ++it) cols.push_back(static_cast<int>(it.col()));
  std::sort(cols.begin(), cols.end());
  cols.erase(std::unique(cols.begin(), cols.end()), cols.end());
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(cols.size(), C.rows());  // C^T on the touched columns
  for (int r = 0; r < C.rows(); ++r)
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(C, r); it; ++it)
      D(std::lower_bound(cols.begin(), cols.end(), it.col()) - cols.begin(), r) = it.value();
  for (int r = 0; r < C.rows(); ++r)
    if (D.col(r).norm() == 0.0)
      throw std::runtime_error("substructure " + std::to_string(sub) + ": empty constraint for " + describe(cons.classes[primal[r]]));
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(D);
  if (qr.rank() == C.rows()) return;
  for (int r = 1; r < C.rows(); ++r) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> part(D.leftCols(r + 1));
    if (part.rank() <= r)
      throw std::runtime_error("substructure " + std::to_string(sub) + ": constraint for " +
                               describe(cons.classes[primal[r]]) + " is linearly dependent on earlier constraints");
  }
}

}  // namespace

BddcPreconditioner::BddcPreconditioner(const CondensedSystem& cs, const ConstraintSet& cons, const Scaling& scaling)
    : cs_(cs), variant_(cons.variant) {
  const int ns = cs.num_substructures();
  const int nc = cons.coarse_dim();
  if (cs.interface_size() == 0) throw std::runtime_error("no interface: the preconditioner is undefined");
  if (static_cast<int>(scaling.weights.size()) != ns) throw std::invalid_argument("scaling does not match substructures");
  locals_.resize(ns);
  coarse_ = Eigen::MatrixXd::Zero(nc, nc);

  for (int i = 0; i < ns; ++i) {
    const LocalOperator& op = cs.local(i);
    Local& loc = locals_[i];
    const int sub = op.substructure;
    const int nslots = static_cast<int>(op.interface.size());
    loc.weights = scaling.weights[i];
    if (loc.weights.size() != nslots) throw std::invalid_argument("scaling does not match substructure " + std::to_string(sub));

    const auto& rows = cons.rows_of.at(sub);
    const int m = static_cast<int>(rows.size());
    if (m == 0)
      throw std::runtime_error("substructure " + std::to_string(sub) + " has no primal constraints in the " +
                               to_string(cons.variant) + " space; its local problem is singular");
    const std::vector<int> slot = slots_of(op);
    std::vector<Eigen::Triplet<double>> trip;
    for (int r = 0; r < m; ++r) {
      const ConstraintRow& row = cons.rows[rows[r]];
      loc.primal.push_back(row.primal);
      for (size_t k = 0; k < row.dofs.size(); ++k) {
        const int s = slot[row.dofs[k]];
        if (s < 0) throw std::runtime_error("constraint touches a non-interface dof of substructure " + std::to_string(sub));
        trip.emplace_back(r, s, row.weights[k]);
      }
    }
    loc.C.resize(m, nslots);
    loc.C.setFromTriplets(trip.begin(), trip.end());
    check_rank(loc.C, loc.primal, cons, sub);

    // Pin one interface dof to remove the constant kernel of K_i'.
    loc.pin = 0;
    const int p = op.interface[loc.pin];
    loc.shift = op.matrix.coeff(p, p);
    SparseMatrix Kreg = op.matrix;
    Kreg.coeffRef(p, p) += loc.shift;
    if (!loc.regularized.factor(Kreg))
      throw std::runtime_error("regularised local matrix of substructure " + std::to_string(sub) +
                               " is not positive definite");

    Eigen::MatrixXd Lt = Eigen::MatrixXd::Zero(op.matrix.rows(), m + 1);
    for (int r = 0; r < m; ++r)
      for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(loc.C, r); it; ++it)
        Lt(op.interface[it.col()], r) = it.value();
    Lt(p, m) = 1.0;
    const Eigen::MatrixXd Yfull = loc.regularized.solve(Lt);
    Lt.resize(0, 0);
    loc.Y.resize(nslots, m + 1);
    for (int k = 0; k < nslots; ++k) loc.Y.row(k) = Yfull.row(op.interface[k]);

    Eigen::MatrixXd G(m + 1, m + 1);
    G.topRows(m) = loc.C * loc.Y;
    G.row(m) = loc.Y.row(loc.pin);
    G(m, m) -= 1.0 / loc.shift;
    loc.G.compute(G);
    if (!(loc.G.rcond() > 1e-14))
      throw std::runtime_error("constrained local problem of substructure " + std::to_string(sub) + " is singular");

    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(m + 1, m);
    rhs.topRows(m) = -Eigen::MatrixXd::Identity(m, m);
    const Eigen::MatrixXd xi = loc.G.solve(rhs);
    loc.phi = -loc.Y * xi;
    const Eigen::MatrixXd lambda = xi.topRows(m);
    const Eigen::MatrixXd Spi = -0.5 * (lambda + lambda.transpose());
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b) coarse_(loc.primal[a], loc.primal[b]) += Spi(a, b);
  }

  coarse_ = 0.5 * (coarse_ + coarse_.transpose());
  // constants are reproduced by the primal space: one known null direction
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(coarse_, Eigen::EigenvaluesOnly);
  const Eigen::VectorXd& ev = eig.eigenvalues();
  const double top = ev[nc - 1];
  if (nc > 1 && !(ev[1] > 1e-12 * top))
    throw std::runtime_error("coarse matrix is singular beyond the constant kernel (second eigenvalue " +
                             std::to_string(ev[1]) + ", largest " + std::to_string(top) + ")");
  const double alpha = coarse_.diagonal().mean();
  coarse_llt_.compute(coarse_ + alpha * Eigen::MatrixXd::Constant(nc, nc, 1.0 / nc));
  if (coarse_llt_.info() != Eigen::Success) throw std::runtime_error("coarse factorization failed");
}

Eigen::VectorXd BddcPreconditioner::regularized_solve(int i, const Eigen::VectorXd& g) const {
  const LocalOperator& op = cs_.local(i);
  Eigen::VectorXd full = Eigen::VectorXd::Zero(op.matrix.rows());
  for (size_t k = 0; k < op.interface.size(); ++k) full[op.interface[k]] = g[k];
  const Eigen::VectorXd y = locals_[i].regularized.solve(full);
  Eigen::VectorXd out(op.interface.size());
  for (size_t k = 0; k < op.interface.size(); ++k) out[k] = y[op.interface[k]];
  return out;
}

Eigen::VectorXd BddcPreconditioner::constrained_solve(int i, const Eigen::VectorXd& g) const {
  const Local& loc = locals_[i];
  const Eigen::VectorXd y0 = regularized_solve(i, g);
  Eigen::VectorXd Ly(loc.C.rows() + 1);
  Ly.head(loc.C.rows()) = loc.C * y0;
  Ly[loc.C.rows()] = y0[loc.pin];
  return y0 - loc.Y * loc.G.solve(Ly);
}

Eigen::VectorXd BddcPreconditioner::apply(const Eigen::VectorXd& r) const {
  const int ns = cs_.num_substructures();
  std::vector<Eigen::VectorXd> g(ns);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(coarse_dim());
  for (int i = 0; i < ns; ++i) {
    g[i] = locals_[i].weights.cwiseProduct(cs_.restrict(i, r));
    const Eigen::VectorXd bi = locals_[i].phi.transpose() * g[i];
    for (size_t a = 0; a < locals_[i].primal.size(); ++a) b[locals_[i].primal[a]] += bi[a];
  }
  b.array() -= b.mean();
  const Eigen::VectorXd u = coarse_llt_.solve(b);

  Eigen::VectorXd z = Eigen::VectorXd::Zero(cs_.interface_size());
  for (int i = 0; i < ns; ++i) {
    const Local& loc = locals_[i];
    Eigen::VectorXd ui(loc.primal.size());
    for (size_t a = 0; a < loc.primal.size(); ++a) ui[a] = u[loc.primal[a]];
    const Eigen::VectorXd v = loc.phi * ui + constrained_solve(i, g[i]);
    cs_.add_extended(i, loc.weights.cwiseProduct(v), z);
  }
  return z;
}

BrokenVector project_constrained(const CondensedSystem& cs, const ConstraintSet& cons, BrokenVector u) {
  std::vector<std::vector<int>> slot(cs.num_substructures());
  for (int i = 0; i < cs.num_substructures(); ++i) slot[i] = slots_of(cs.local(i));
  for (const PrimalClass& cls : cons.classes) {
    std::vector<double> a, nrm;
    double num = 0, den = 0;
    for (int r : cls.rows) {
      const ConstraintRow& row = cons.rows[r];
      double ar = 0, nr = 0;
      for (size_t k = 0; k < row.dofs.size(); ++k) {
        ar += row.weights[k] * u[row.substructure][slot[row.substructure][row.dofs[k]]];
        nr += row.weights[k] * row.weights[k];
      }
      a.push_back(ar);
      nrm.push_back(nr);
      num += ar / nr;
      den += 1.0 / nr;
    }
    const double t = num / den;
    for (size_t q = 0; q < cls.rows.size(); ++q) {
      const ConstraintRow& row = cons.rows[cls.rows[q]];
      for (size_t k = 0; k < row.dofs.size(); ++k)
        u[row.substructure][slot[row.substructure][row.dofs[k]]] += (t - a[q]) * row.weights[k] / nrm[q];
    }
  }
  return u;
}

}  // namespace emi
