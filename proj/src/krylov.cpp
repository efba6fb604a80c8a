#include "emi/krylov.hpp"

#include <Eigen/Eigenvalues>
#include <chrono>
#include <cmath>
#include <stdexcept>

namespace emi {

std::string to_string(ToleranceMode m) { return m == ToleranceMode::relative ? "relative" : "absolute"; }

ToleranceMode parse_tolerance_mode(const std::string& s) {
  if (s == "relative") return ToleranceMode::relative;
  if (s == "absolute") return ToleranceMode::absolute;
  throw std::invalid_argument("unknown tolerance mode '" + s + "' (expected relative or absolute)");
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> lanczos_tridiagonal(const std::vector<double>& alphas,
                                                                const std::vector<double>& betas) {
  const int k = static_cast<int>(alphas.size());
  if (k == 0) throw std::invalid_argument("Lanczos estimate needs at least one CG iteration");
  if (static_cast<int>(betas.size()) < k - 1) throw std::invalid_argument("Lanczos estimate: missing beta coefficients");
  Eigen::VectorXd d(k), e(std::max(k - 1, 0));
  d[0] = 1.0 / alphas[0];
  for (int j = 1; j < k; ++j) {
    d[j] = 1.0 / alphas[j] + betas[j - 1] / alphas[j - 1];
    e[j - 1] = std::sqrt(betas[j - 1]) / alphas[j - 1];
  }
  return {d, e};
}

EigenEstimate lanczos_estimate(const std::vector<double>& alphas, const std::vector<double>& betas) {
  const auto [d, e] = lanczos_tridiagonal(alphas, betas);
  if (d.size() == 1) return {d[0], d[0]};
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig;
  eig.computeFromTridiagonal(d, e, Eigen::EigenvaluesOnly);
  return {eig.eigenvalues().minCoeff(), eig.eigenvalues().maxCoeff()};
}

PcgResult pcg(const LinearOperator& A, const LinearOperator& M, const Eigen::VectorXd& b, const PcgOptions& options,
              const std::vector<Eigen::VectorXd>& kernel) {
  if (!(options.tolerance > 0)) throw std::invalid_argument("tolerance must be positive");
  if (options.max_iterations < 1) throw std::invalid_argument("max_iterations must be at least 1");
  const auto start = std::chrono::steady_clock::now();

  // orthonormal kernel basis
  std::vector<Eigen::VectorXd> basis;
  for (Eigen::VectorXd k : kernel) {
    if (k.size() != b.size()) throw std::invalid_argument("kernel vector has wrong size");
    for (const auto& q : basis) k -= q.dot(k) * q;
    if (k.norm() > 0) basis.push_back(k / k.norm());
  }
  auto project = [&](Eigen::VectorXd v) {
    for (const auto& q : basis) v -= q.dot(v) * q;
    return v;
  };

  PcgResult out;
  SolveReport& rep = out.report;
  rep.mode = options.mode;
  rep.tolerance = options.tolerance;
  out.x = Eigen::VectorXd::Zero(b.size());
  Eigen::VectorXd r = project(b);
  const double bnorm = r.norm();
  const double threshold = options.mode == ToleranceMode::relative ? options.tolerance * bnorm : options.tolerance;
  if (options.keep_residuals) out.residuals.push_back(r);
  auto finish = [&] {
    if (!rep.alphas.empty()) {
      const EigenEstimate est = lanczos_estimate(rep.alphas, rep.betas);
      rep.lambda_min_est = est.lambda_min;
      rep.lambda_max_est = est.lambda_max;
      rep.kappa_est = std::max(1.0, est.lambda_max / est.lambda_min);
    }
    rep.solve_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return out;
  };
  if (bnorm == 0.0 || bnorm <= threshold) {
    rep.converged = true;
    return finish();
  }

  Eigen::VectorXd z = project(M(r));
  double rz = r.dot(z);
  if (!(rz > 0)) throw std::runtime_error("preconditioner is not positive definite (r'Mr <= 0)");
  Eigen::VectorXd p = z;
  for (int k = 0; k < options.max_iterations; ++k) {
    const Eigen::VectorXd q = project(A(p));
    const double pq = p.dot(q);
    if (!(pq > 0)) throw std::runtime_error("operator is not positive definite (p'Ap <= 0) at iteration " + std::to_string(k + 1));
    const double alpha = rz / pq;
    out.x += alpha * p;
    r -= alpha * q;
    rep.alphas.push_back(alpha);
    rep.iterations = k + 1;
    const double rnorm = r.norm();
    rep.residual_history.push_back(rnorm / bnorm);
    if (options.keep_residuals) out.residuals.push_back(r);
    if (rnorm <= threshold) {
      rep.converged = true;
      break;
    }
    z = project(M(r));
    const double rz_new = r.dot(z);
    if (!(rz_new > 0)) throw std::runtime_error("preconditioner is not positive definite (r'Mr <= 0)");
    const double beta = rz_new / rz;
    if (k + 1 < options.max_iterations) rep.betas.push_back(beta);
    p = z + beta * p;
    rz = rz_new;
  }
  out.x = project(out.x);
  return finish();
}

}  // namespace emi
