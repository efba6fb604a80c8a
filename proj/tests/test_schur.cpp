#include <Eigen/Eigenvalues>
#include <random>

#include "doctest.h"
#include "emi/schur.hpp"

using namespace emi;

namespace {

SparseMatrix sparse(const Eigen::MatrixXd& A) { return A.sparseView(); }

CondensedSystem single(const Eigen::MatrixXd& K, std::vector<int> interior, std::vector<int> interface) {
  LocalOperator op;
  op.matrix = sparse(K);
  op.interior = interior;
  op.interface = interface;
  std::vector<int> slots(interface.size());
  for (size_t k = 0; k < slots.size(); ++k) slots[k] = static_cast<int>(k);
  return CondensedSystem({op}, {slots}, {interior}, interface, static_cast<int>(K.rows()));
}

struct Problem {
  Mesh mesh;
  InterfaceTopology topo;
  DofMap dofs;
  AssembledSystem sys;
  CondensedSystem condensed;
  explicit Problem(int cells_x)
      : mesh(build_cell_grid([&] {
          MeshConfig c;
          c.cells_x = cells_x;
          return c;
        }())),
        topo(extract_interfaces(mesh)),
        dofs(build_composite_space(mesh, topo)),
        sys(assemble_K(mesh, topo, dofs, ModelParams::uniform(mesh.num_substructures()))),
        condensed(factor_interiors(sys.locals, dofs)) {}
};

Eigen::MatrixXd dense_block(const Eigen::MatrixXd& K, const std::vector<int>& r, const std::vector<int>& c) {
  Eigen::MatrixXd B(r.size(), c.size());
  for (size_t a = 0; a < r.size(); ++a)
    for (size_t b = 0; b < c.size(); ++b) B(a, b) = K(r[a], c[b]);
  return B;
}

Eigen::VectorXd random_vector(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> U(-1, 1);
  Eigen::VectorXd v(n);
  for (int k = 0; k < n; ++k) v[k] = U(rng);
  return v;
}

}  // namespace

TEST_CASE("hand elimination of a 3x3 chain") {
  Eigen::MatrixXd K(3, 3);
  K << 2, -1, 0, -1, 2, -1, 0, -1, 1;
  const CondensedSystem cs = single(K, {0}, {1, 2});
  Eigen::MatrixXd expected(2, 2);
  expected << 1.5, -1, -1, 1;
  CHECK((cs.dense_local_schur(0) - expected).norm() < 1e-14);
  const Eigen::Vector2d x(0.3, -0.7);
  CHECK((cs.apply_local(0, x) - expected * x).norm() < 1e-14);
  CHECK(cs.apply_local(0, Eigen::Vector2d::Zero()).norm() == 0.0);
  // harmonic extension: 2 u0 = u1
  CHECK(cs.harmonic_extension(0, x)[0] == doctest::Approx(0.15));
}

TEST_CASE("no interior nodes: Schur complement is the interface block") {
  Eigen::MatrixXd K(2, 2);
  K << 2, -1, -1, 3;
  const CondensedSystem cs = single(K, {}, {0, 1});
  CHECK((cs.dense_local_schur(0) - K).norm() < 1e-15);
}

TEST_CASE("indefinite interior block is reported") {
  Eigen::MatrixXd K(2, 2);
  K << -1, 0, 0, 1;
  CHECK_THROWS_AS(single(K, {0}, {1}), std::runtime_error);
}

TEST_CASE("local Schur complements against dense elimination") {
  const Problem p(1);
  std::mt19937_64 rng(5);
  for (int i = 0; i < p.condensed.num_substructures(); ++i) {
    const auto& op = p.condensed.local(i);
    const Eigen::MatrixXd K(op.matrix);
    const Eigen::MatrixXd KII = dense_block(K, op.interior, op.interior);
    const Eigen::MatrixXd KIG = dense_block(K, op.interior, op.interface);
    const Eigen::MatrixXd KGG = dense_block(K, op.interface, op.interface);
    const Eigen::MatrixXd S = KGG - KIG.transpose() * KII.ldlt().solve(KIG);
    for (int t = 0; t < 5; ++t) {
      const Eigen::VectorXd x = random_vector(rng, static_cast<int>(op.interface.size()));
      const Eigen::VectorXd y = p.condensed.apply_local(i, x);
      CHECK((y - S * x).norm() <= 1e-10 * (S * x).norm());
      CHECK((y - p.condensed.apply_local(i, x)).norm() == 0.0);
    }
    for (int t = 0; t < 100; ++t) {
      const Eigen::VectorXd x = random_vector(rng, static_cast<int>(op.interface.size()));
      CHECK(x.dot(p.condensed.apply_local(i, x)) >= 0.0);
    }
  }
}

TEST_CASE("harmonic extension: constants, orthogonality, energy identity and minimality") {
  const Problem p(2);
  std::mt19937_64 rng(9);
  for (int i = 0; i < p.condensed.num_substructures(); ++i) {
    const auto& op = p.condensed.local(i);
    const int ng = static_cast<int>(op.interface.size());
    const Eigen::VectorXd c = Eigen::VectorXd::Constant(ng, 0.4);
    const Eigen::VectorXd hc = p.condensed.harmonic_extension(i, c);
    for (int l : op.interior) CHECK(hc[l] == doctest::Approx(0.4).epsilon(1e-12));

    const Eigen::VectorXd x = random_vector(rng, ng);
    const Eigen::VectorXd h = p.condensed.harmonic_extension(i, x);
    const double e = h.dot(op.matrix * h);
    CHECK(x.dot(p.condensed.apply_local(i, x)) == doctest::Approx(e).epsilon(1e-10));
    const Eigen::VectorXd Kh = op.matrix * h;
    for (int t = 0; t < 20; ++t) {
      Eigen::VectorXd v = Eigen::VectorXd::Zero(h.size());
      for (int l : op.interior) v[l] = std::uniform_real_distribution<double>(-1, 1)(rng);
      CHECK(std::abs(v.dot(Kh)) <= 1e-10 * v.norm() * Kh.norm() + 1e-300);
    }
    for (int t = 0; t < 10; ++t) {
      Eigen::VectorXd w = h;
      for (int l : op.interior) w[l] += std::uniform_real_distribution<double>(-1, 1)(rng);
      CHECK(w.dot(op.matrix * w) >= e);
    }
  }
}

TEST_CASE("global Schur complement is symmetric PSD with the constant kernel") {
  const Problem p(1);
  const int n = p.condensed.interface_size();
  Eigen::MatrixXd S(n, n);
  for (int k = 0; k < n; ++k) S.col(k) = p.condensed.apply(Eigen::VectorXd::Unit(n, k));
  CHECK((S - S.transpose()).norm() <= 1e-12 * S.norm());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (S + S.transpose()));
  CHECK(std::abs(eig.eigenvalues()[0]) <= 1e-10 * eig.eigenvalues()[1]);
  CHECK(eig.eigenvalues()[1] > 0);
  CHECK((S * Eigen::VectorXd::Ones(n)).norm() <= 1e-10 * S.norm());
}

TEST_CASE("reduce, solve, recover reproduces the direct solution") {
  const Problem p(2);
  std::mt19937_64 rng(13);
  Eigen::VectorXd f = random_vector(rng, p.dofs.num_global());
  f.array() -= f.mean();

  // f on the interface only passes through unchanged
  Eigen::VectorXd fg = Eigen::VectorXd::Zero(f.size());
  for (int g : p.dofs.interface_dofs) fg[g] = f[g];
  const Eigen::VectorXd rg = p.condensed.reduce_rhs(fg);
  for (int k = 0; k < p.condensed.interface_size(); ++k) CHECK(rg[k] == fg[p.dofs.interface_dofs[k]]);
  CHECK((p.condensed.reduce_rhs(2.5 * f) - 2.5 * p.condensed.reduce_rhs(f)).norm() <=
        1e-13 * p.condensed.reduce_rhs(f).norm());

  const int n = p.condensed.interface_size();
  Eigen::MatrixXd S(n, n);
  for (int k = 0; k < n; ++k) S.col(k) = p.condensed.apply(Eigen::VectorXd::Unit(n, k));
  const Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(n, n) / n;
  const Eigen::VectorXd uG = (S + S.norm() * ones).ldlt().solve(p.condensed.reduce_rhs(f));
  Eigen::VectorXd u = p.condensed.recover(uG, f);
  u.array() -= u.mean();

  const Eigen::MatrixXd K(p.sys.K);
  const int N = static_cast<int>(K.rows());
  Eigen::VectorXd direct = (K + K.norm() * Eigen::MatrixXd::Ones(N, N) / N).ldlt().solve(f);
  direct.array() -= direct.mean();
  CHECK((u - direct).norm() <= 1e-8 * direct.norm());
}
