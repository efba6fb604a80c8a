#include "emi/assembly.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace emi {

ModelParams ModelParams::uniform(int num_substructures, double sigma_intra, double sigma_extra) {
  ModelParams p;
  p.sigma.assign(num_substructures, sigma_intra);
  if (num_substructures > 0) p.sigma[kExtracellular] = sigma_extra;
  return p;
}

void ModelParams::validate(int num_substructures) const {
  if (static_cast<int>(sigma.size()) != num_substructures)
    throw std::invalid_argument("need one conductivity per substructure (" + std::to_string(num_substructures) +
                                "), got " + std::to_string(sigma.size()));
  for (size_t i = 0; i < sigma.size(); ++i)
    if (!(sigma[i] > 0)) throw std::invalid_argument("conductivity of substructure " + std::to_string(i) + " must be positive");
  if (!(C_m > 0)) throw std::invalid_argument("C_m must be positive");
  if (!(tau > 0)) throw std::invalid_argument("tau must be positive");
  if (!(R_g > 0)) throw std::invalid_argument("R_g must be positive");
  if (!ionic) throw std::invalid_argument("missing ionic model");
}

Eigen::Matrix4d element_stiffness(const std::array<Point3, 4>& p, double sigma) {
  Eigen::Matrix3d J;
  for (int c = 0; c < 3; ++c)
    for (int r = 0; r < 3; ++r) J(r, c) = p[c + 1][r] - p[0][r];
  const double vol = std::abs(J.determinant()) / 6.0;
  if (!(vol > 0)) throw std::invalid_argument("degenerate tetrahedron");
  // rows of J^{-1} are the gradients of the barycentric coordinates 1..3
  const Eigen::Matrix3d Jinv = J.inverse();
  Eigen::Matrix<double, 4, 3> G;
  G.row(0) = -Jinv.colwise().sum();
  G.bottomRows<3>() = Jinv;
  return sigma * vol * G * G.transpose();
}

Eigen::Matrix3d face_mass(const std::array<Point3, 3>& p) {
  const Eigen::Vector3d a(p[0][0], p[0][1], p[0][2]);
  const Eigen::Vector3d b(p[1][0], p[1][1], p[1][2]);
  const Eigen::Vector3d c(p[2][0], p[2][1], p[2][2]);
  const double area = 0.5 * (b - a).cross(c - a).norm();
  if (!(area > 0)) throw std::invalid_argument("degenerate triangle");
  Eigen::Matrix3d M;
  M << 2, 1, 1, 1, 2, 1, 1, 1, 2;
  return area / 12.0 * M;
}

std::vector<SparseMatrix> assemble_stiffness(const Mesh& mesh, const DofMap& dofs,
                                             const std::vector<double>& sigma) {
  const int ns = static_cast<int>(dofs.subs.size());
  std::vector<std::vector<int>> tets_of(ns);
  for (size_t t = 0; t < mesh.tets.size(); ++t) tets_of[mesh.tet_substructure[t]].push_back(static_cast<int>(t));

  std::vector<int> own(mesh.vertices.size(), -1);
  std::vector<SparseMatrix> out(ns);
  for (int i = 0; i < ns; ++i) {
    const auto& s = dofs.subs[i];
    for (int l = 0; l < s.num_own; ++l) own[s.dofs[l].node] = l;
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(16 * tets_of[i].size());
    for (int t : tets_of[i]) {
      const auto& tet = mesh.tets[t];
      const Eigen::Matrix4d Ke = element_stiffness(
          {mesh.vertices[tet[0]], mesh.vertices[tet[1]], mesh.vertices[tet[2]], mesh.vertices[tet[3]]}, sigma[i]);
      for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) trip.emplace_back(own[tet[a]], own[tet[b]], Ke(a, b));
    }
    out[i].resize(s.size(), s.size());
    out[i].setFromTriplets(trip.begin(), trip.end());
    for (int l = 0; l < s.num_own; ++l) own[s.dofs[l].node] = -1;
  }
  return out;
}

std::vector<SparseMatrix> assemble_membrane(const Mesh& mesh, const InterfaceTopology& topo,
                                            const DofMap& dofs, double C_m) {
  const int ns = static_cast<int>(dofs.subs.size());
  std::vector<std::vector<Eigen::Triplet<double>>> trip(ns);
  for (const auto& f : topo.faces) {
    for (const auto& tri : f.triangles) {
      const Eigen::Matrix3d M =
          0.5 * C_m * face_mass({mesh.vertices[tri[0]], mesh.vertices[tri[1]], mesh.vertices[tri[2]]});
      for (int side : {f.first, f.second}) {
        const auto& s = dofs.subs[side];
        const int other = f.other(side);
        int o[3], t[3];
        for (int k = 0; k < 3; ++k) {
          o[k] = s.local_index(tri[k], side);
          t[k] = s.local_index(tri[k], other);
        }
        for (int a = 0; a < 3; ++a)
          for (int b = 0; b < 3; ++b) {
            trip[side].emplace_back(o[a], o[b], M(a, b));
            trip[side].emplace_back(t[a], t[b], M(a, b));
            trip[side].emplace_back(o[a], t[b], -M(a, b));
            trip[side].emplace_back(t[a], o[b], -M(a, b));
          }
      }
    }
  }
  std::vector<SparseMatrix> out(ns);
  for (int i = 0; i < ns; ++i) {
    out[i].resize(dofs.subs[i].size(), dofs.subs[i].size());
    out[i].setFromTriplets(trip[i].begin(), trip[i].end());
  }
  return out;
}

SparseMatrix scatter_to_global(const DofMap& dofs, const std::vector<SparseMatrix>& locals) {
  std::vector<Eigen::Triplet<double>> trip;
  size_t nnz = 0;
  for (const auto& m : locals) nnz += m.nonZeros();
  trip.reserve(nnz);
  for (size_t i = 0; i < locals.size(); ++i) {
    const auto& g = dofs.subs[i].global;
    for (int c = 0; c < locals[i].outerSize(); ++c)
      for (SparseMatrix::InnerIterator it(locals[i], c); it; ++it) trip.emplace_back(g[it.row()], g[it.col()], it.value());
  }
  SparseMatrix K(dofs.num_global(), dofs.num_global());
  K.setFromTriplets(trip.begin(), trip.end());
  return K;
}

AssembledSystem assemble_K(const Mesh& mesh, const InterfaceTopology& topo, const DofMap& dofs,
                           const ModelParams& params) {
  params.validate(static_cast<int>(dofs.subs.size()));
  auto A = assemble_stiffness(mesh, dofs, params.sigma);
  const auto M = assemble_membrane(mesh, topo, dofs, params.C_m);
  AssembledSystem sys;
  std::vector<SparseMatrix> local(dofs.subs.size());
  for (size_t i = 0; i < dofs.subs.size(); ++i) {
    local[i] = params.tau * A[i] + M[i];
    local[i].makeCompressed();
    A[i] = SparseMatrix();
    const Eigen::VectorXd d = local[i].diagonal();
    for (int l = 0; l < d.size(); ++l)
      if (!(d[l] > 0))
        throw std::runtime_error("local dof " + std::to_string(l) + " of substructure " + std::to_string(i) +
                                 " received no contribution");
  }
  sys.K = scatter_to_global(dofs, local);
  for (size_t i = 0; i < dofs.subs.size(); ++i) {
    LocalOperator op;
    op.substructure = static_cast<int>(i);
    op.matrix = std::move(local[i]);
    op.interior = dofs.subs[i].interior;
    op.interface = dofs.subs[i].interface;
    sys.locals.push_back(std::move(op));
  }
  return sys;
}

IonicState resting_state(const InterfaceTopology& topo) {
  IonicState state;
  for (const auto& f : topo.faces) {
    if (f.first != kExtracellular) continue;
    for (int x : f.nodes) state.nodes.push_back({f.second, x});
  }
  std::sort(state.nodes.begin(), state.nodes.end());
  state.nodes.erase(std::unique(state.nodes.begin(), state.nodes.end()), state.nodes.end());
  state.w.assign(state.nodes.size(), 0.0);
  return state;
}

std::vector<double> membrane_jumps(const DofMap& dofs, const IonicState& state, const Eigen::VectorXd& u) {
  std::vector<double> v(state.nodes.size());
  for (size_t k = 0; k < v.size(); ++k) {
    const auto& n = state.nodes[k];
    v[k] = u[dofs.global_index(n.cell, n.node)] - u[dofs.global_index(kExtracellular, n.node)];
  }
  return v;
}

Eigen::VectorXd assemble_rhs(const Mesh& mesh, const InterfaceTopology& topo, const DofMap& dofs,
                             const ModelParams& params, const Eigen::VectorXd& u, const IonicState& state) {
  params.validate(static_cast<int>(dofs.subs.size()));
  if (u.size() != dofs.num_global()) throw std::invalid_argument("previous potential has wrong size");
  if (state.w.size() != state.nodes.size()) throw std::invalid_argument("ionic state is inconsistent");
  Eigen::VectorXd f = Eigen::VectorXd::Zero(dofs.num_global());
  for (const auto& face : topo.faces) {
    // orientation: the cell is the "inside" of a membrane
    const bool membrane = face.first == kExtracellular;
    const int i = membrane ? face.second : face.first;
    const int j = membrane ? face.first : face.second;
    for (const auto& tri : face.triangles) {
      const Eigen::Matrix3d M = face_mass({mesh.vertices[tri[0]], mesh.vertices[tri[1]], mesh.vertices[tri[2]]});
      Eigen::Vector3d q;
      int gi[3], gj[3];
      for (int a = 0; a < 3; ++a) {
        gi[a] = dofs.global_index(i, tri[a]);
        gj[a] = dofs.global_index(j, tri[a]);
        const double v = u[gi[a]] - u[gj[a]];
        double current;
        if (membrane) {
          const int k = state.find(i, tri[a]);
          if (k < 0)
            throw std::runtime_error("no ionic state for cell " + std::to_string(i) + " at node " + std::to_string(tri[a]));
          current = params.ionic->current(v, state.w[k]);
        } else {
          current = v / params.R_g;
        }
        q[a] = params.C_m * v - params.tau * current;
      }
      const Eigen::Vector3d g = M * q;
      for (int a = 0; a < 3; ++a) {
        f[gi[a]] += g[a];
        f[gj[a]] -= g[a];
      }
    }
  }
  return f;
}

}  // namespace emi
