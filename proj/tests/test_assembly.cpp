#include <Eigen/Eigenvalues>
#include <cmath>
#include <random>

#include "doctest.h"
#include "emi/assembly.hpp"

using namespace emi;

namespace {

MeshConfig grid(int cx, int cy, int cz) {
  MeshConfig c;
  c.cells_x = cx;
  c.cells_y = cy;
  c.cells_z = cz;
  return c;
}

struct Fixture {
  Mesh mesh;
  InterfaceTopology topo;
  DofMap dofs;
  explicit Fixture(const MeshConfig& c) : mesh(build_cell_grid(c)), topo(extract_interfaces(mesh)), dofs(build_composite_space(mesh, topo)) {}
};

class NoCurrent final : public IonicModel {
 public:
  double current(double, double) const override { return 0.0; }
  double recovery(double, double) const override { return 0.0; }
};

double max_abs(const SparseMatrix& A) {
  double m = 0;
  for (int c = 0; c < A.outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(A, c); it; ++it) m = std::max(m, std::abs(it.value()));
  return m;
}

// u^T K u by direct quadrature: tet gradients from nodal differences and a
// three-point edge-midpoint rule on every interface triangle.
double energy_by_quadrature(const Fixture& f, const ModelParams& p, const Eigen::VectorXd& u) {
  double e = 0;
  for (size_t t = 0; t < f.mesh.tets.size(); ++t) {
    const auto& tet = f.mesh.tets[t];
    const int s = f.mesh.tet_substructure[t];
    Eigen::Matrix3d D;
    Eigen::Vector3d du;
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) D(r, c) = f.mesh.vertices[tet[r + 1]][c] - f.mesh.vertices[tet[0]][c];
      du[r] = u[f.dofs.global_index(s, tet[r + 1])] - u[f.dofs.global_index(s, tet[0])];
    }
    const Eigen::Vector3d g = D.fullPivLu().solve(du);
    e += p.tau * p.sigma[s] * std::abs(D.determinant()) / 6.0 * g.squaredNorm();
  }
  for (const auto& face : f.topo.faces)
    for (const auto& tri : face.triangles) {
      Eigen::Vector3d a, b, c;
      for (int d = 0; d < 3; ++d) {
        a[d] = f.mesh.vertices[tri[0]][d];
        b[d] = f.mesh.vertices[tri[1]][d];
        c[d] = f.mesh.vertices[tri[2]][d];
      }
      const double area = 0.5 * (b - a).cross(c - a).norm();
      double jump[3];
      for (int k = 0; k < 3; ++k)
        jump[k] = u[f.dofs.global_index(face.first, tri[k])] - u[f.dofs.global_index(face.second, tri[k])];
      const double m01 = 0.5 * (jump[0] + jump[1]), m12 = 0.5 * (jump[1] + jump[2]), m02 = 0.5 * (jump[0] + jump[2]);
      e += p.C_m * area / 3.0 * (m01 * m01 + m12 * m12 + m02 * m02);
    }
  return e;
}

}  // namespace

TEST_CASE("element stiffness on the reference tetrahedron") {
  const std::array<Point3, 4> ref = {Point3{0, 0, 0}, Point3{1, 0, 0}, Point3{0, 1, 0}, Point3{0, 0, 1}};
  Eigen::Matrix4d expected;
  expected << 3, -1, -1, -1, -1, 1, 0, 0, -1, 0, 1, 0, -1, 0, 0, 1;
  expected /= 6.0;
  const Eigen::Matrix4d K = element_stiffness(ref, 1.0);
  CHECK((K - expected).norm() < 1e-14);
  CHECK(K.rowwise().sum().norm() < 1e-14);
  CHECK((element_stiffness(ref, 2.0) - 2.0 * K).norm() < 1e-14);
  const std::array<Point3, 4> flat = {Point3{0, 0, 0}, Point3{1, 0, 0}, Point3{0, 1, 0}, Point3{1, 1, 0}};
  CHECK_THROWS_AS(element_stiffness(flat, 1.0), std::invalid_argument);
}

TEST_CASE("face mass on the unit right triangle") {
  const std::array<Point3, 3> tri = {Point3{0, 0, 0}, Point3{1, 0, 0}, Point3{0, 1, 0}};
  Eigen::Matrix3d expected;
  expected << 2, 1, 1, 1, 2, 1, 1, 1, 2;
  expected /= 24.0;
  const Eigen::Matrix3d M = face_mass(tri);
  CHECK((M - expected).norm() < 1e-15);
  for (int r = 0; r < 3; ++r) CHECK(M.row(r).sum() == doctest::Approx(0.5 / 3.0).epsilon(1e-15));
  const std::array<Point3, 3> big = {Point3{0, 0, 0}, Point3{2, 0, 0}, Point3{0, 2, 0}};
  CHECK((face_mass(big) - 4.0 * M).norm() < 1e-14);
  const std::array<Point3, 3> line = {Point3{0, 0, 0}, Point3{1, 0, 0}, Point3{2, 0, 0}};
  CHECK_THROWS_AS(face_mass(line), std::invalid_argument);
}

TEST_CASE("global matrix: symmetric, constants in the kernel, sum of local operators") {
  const Fixture f(grid(2, 1, 1));
  const ModelParams p = ModelParams::uniform(f.mesh.num_substructures());
  const AssembledSystem sys = assemble_K(f.mesh, f.topo, f.dofs, p);
  const SparseMatrix Kt = sys.K.transpose();
  CHECK(max_abs(sys.K - Kt) <= 1e-12 * max_abs(sys.K));
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(f.dofs.num_global());
  CHECK((sys.K * ones).norm() <= 1e-10 * max_abs(sys.K));

  // independent scatter of the local operators
  SparseMatrix sum(f.dofs.num_global(), f.dofs.num_global());
  for (size_t i = 0; i < sys.locals.size(); ++i) {
    const auto& g = f.dofs.subs[i].global;
    std::vector<Eigen::Triplet<double>> trip;
    for (int c = 0; c < sys.locals[i].matrix.outerSize(); ++c)
      for (SparseMatrix::InnerIterator it(sys.locals[i].matrix, c); it; ++it) trip.emplace_back(g[it.row()], g[it.col()], it.value());
    SparseMatrix part(f.dofs.num_global(), f.dofs.num_global());
    part.setFromTriplets(trip.begin(), trip.end());
    sum += part;
  }
  CHECK(max_abs(sum - sys.K) <= 1e-15 * max_abs(sys.K));
}

TEST_CASE("global matrix matches quadrature energies, including the ellipticity sandwich") {
  const Fixture f(grid(2, 1, 1));
  ModelParams p = ModelParams::uniform(f.mesh.num_substructures(), 3.0, 20.0);
  p.sigma[2] = 7.0;
  const AssembledSystem sys = assemble_K(f.mesh, f.topo, f.dofs, p);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> U(-1, 1);
  for (int trial = 0; trial < 5; ++trial) {
    Eigen::VectorXd u(f.dofs.num_global());
    for (int k = 0; k < u.size(); ++k) u[k] = U(rng);
    const double e = u.dot(sys.K * u);
    CHECK(e == doctest::Approx(energy_by_quadrature(f, p, u)).epsilon(1e-11));

    ModelParams lo = p, hi = p;
    lo.sigma.assign(p.sigma.size(), 3.0);
    hi.sigma.assign(p.sigma.size(), 20.0);
    CHECK(energy_by_quadrature(f, lo, u) <= e * (1 + 1e-12));
    CHECK(e <= energy_by_quadrature(f, hi, u) * (1 + 1e-12));
  }
}

TEST_CASE("doubling tau changes only the stiffness part") {
  const Fixture f(grid(1, 1, 1));
  ModelParams p = ModelParams::uniform(f.mesh.num_substructures());
  const SparseMatrix K1 = assemble_K(f.mesh, f.topo, f.dofs, p).K;
  p.tau *= 2;
  const SparseMatrix K2 = assemble_K(f.mesh, f.topo, f.dofs, p).K;
  const SparseMatrix A = scatter_to_global(f.dofs, assemble_stiffness(f.mesh, f.dofs, p.sigma));
  CHECK(max_abs(SparseMatrix(K2 - K1) - 0.5 * p.tau * A) <= 1e-13 * max_abs(K1));
}

TEST_CASE("K is positive semidefinite with a one-dimensional kernel; interior blocks are definite") {
  const Fixture f(grid(1, 1, 1));
  const ModelParams p = ModelParams::uniform(f.mesh.num_substructures());
  const AssembledSystem sys = assemble_K(f.mesh, f.topo, f.dofs, p);
  const Eigen::MatrixXd K(sys.K);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(K, Eigen::EigenvaluesOnly);
  const auto& ev = eig.eigenvalues();
  CHECK(std::abs(ev[0]) <= 1e-10 * ev[1]);
  CHECK(ev[1] > 0);
  for (const auto& op : sys.locals) {
    const Eigen::MatrixXd L(op.matrix);
    Eigen::MatrixXd KII(op.interior.size(), op.interior.size());
    for (size_t a = 0; a < op.interior.size(); ++a)
      for (size_t b = 0; b < op.interior.size(); ++b) KII(a, b) = L(op.interior[a], op.interior[b]);
    CHECK(Eigen::LLT<Eigen::MatrixXd>(KII).info() == Eigen::Success);
    CHECK((L - L.transpose()).norm() <= 1e-14 * L.norm());
  }
}

TEST_CASE("invalid parameters are rejected") {
  const Fixture f(grid(1, 1, 1));
  ModelParams p = ModelParams::uniform(2);
  p.sigma[1] = 0;
  CHECK_THROWS_AS(assemble_K(f.mesh, f.topo, f.dofs, p), std::invalid_argument);
  p = ModelParams::uniform(2);
  p.tau = 0;
  CHECK_THROWS_AS(assemble_K(f.mesh, f.topo, f.dofs, p), std::invalid_argument);
  CHECK_THROWS_AS(assemble_K(f.mesh, f.topo, f.dofs, ModelParams::uniform(3)), std::invalid_argument);
}

TEST_CASE("right-hand side: constant potential gives zero, linear gap current, compatibility") {
  const Fixture f(grid(2, 1, 1));
  ModelParams p = ModelParams::uniform(f.mesh.num_substructures());
  const IonicState rest = resting_state(f.topo);

  const Eigen::VectorXd c = Eigen::VectorXd::Constant(f.dofs.num_global(), 0.7);
  CHECK(assemble_rhs(f.mesh, f.topo, f.dofs, p, c, rest).norm() == 0.0);

  // with no ionic current: f = C_m J_all u - tau/R_g J_gap u, where J is the
  // jump mass operator over the given faces
  p.ionic = std::make_shared<NoCurrent>();
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(-1, 1);
  Eigen::VectorXd u(f.dofs.num_global());
  for (int k = 0; k < u.size(); ++k) u[k] = U(rng);
  InterfaceTopology gaps = f.topo;
  gaps.faces.clear();
  for (const auto& face : f.topo.faces)
    if (face.first != kExtracellular) gaps.faces.push_back(face);
  REQUIRE(gaps.faces.size() == 1);
  const SparseMatrix J_all = scatter_to_global(f.dofs, assemble_membrane(f.mesh, f.topo, f.dofs, 1.0));
  const SparseMatrix J_gap = scatter_to_global(f.dofs, assemble_membrane(f.mesh, gaps, f.dofs, 1.0));
  const Eigen::VectorXd expected = p.C_m * (J_all * u) - p.tau / p.R_g * (J_gap * u);
  const Eigen::VectorXd got = assemble_rhs(f.mesh, f.topo, f.dofs, p, u, rest);
  CHECK((got - expected).norm() <= 1e-12 * expected.norm());

  // Aliev-Panfilov current keeps 1^T f = 0
  p.ionic = std::make_shared<AlievPanfilov>();
  const Eigen::VectorXd fa = assemble_rhs(f.mesh, f.topo, f.dofs, p, u, rest);
  CHECK(std::abs(fa.sum()) <= 1e-10 * fa.norm());
  CHECK(fa.norm() > 0);

  IonicState broken = rest;
  broken.nodes.pop_back();
  broken.w.pop_back();
  CHECK_THROWS_AS(assemble_rhs(f.mesh, f.topo, f.dofs, p, u, broken), std::runtime_error);
}

TEST_CASE("Aliev-Panfilov step") {
  const AlievPanfilov ap;
  CHECK(ap.current(0, 0) == 0.0);
  IonicState s;
  s.nodes = {{1, 0}, {1, 1}};
  s.w = {0.0, 0.3};
  const std::vector<double> rest = {0.0, 0.0};
  CHECK(ionic_step(ap, s, rest, 0.1).w[0] == 0.0);
  const std::vector<double> v = {0.5, 0.8};
  CHECK(ionic_step(ap, s, v, 0.0).w == s.w);

  // two half steps against one full step: the gap shrinks like tau^2
  auto gap = [&](double tau) {
    const IonicState one = ionic_step(ap, s, v, tau);
    const IonicState two = ionic_step(ap, ionic_step(ap, s, v, tau / 2), v, tau / 2);
    return std::abs(one.w[1] - two.w[1]) + std::abs(one.w[0] - two.w[0]);
  };
  const double ratio = gap(0.1) / gap(0.05);
  CHECK(ratio == doctest::Approx(4.0).epsilon(0.05));
}
