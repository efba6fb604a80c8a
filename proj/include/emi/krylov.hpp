#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

namespace emi {

using LinearOperator = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

enum class ToleranceMode { relative, absolute };
std::string to_string(ToleranceMode m);
ToleranceMode parse_tolerance_mode(const std::string& s);

struct PcgOptions {
  double tolerance = 1e-6;
  ToleranceMode mode = ToleranceMode::relative;
  int max_iterations = 1000;
  bool keep_residuals = false;
};

struct SolveReport {
  int iterations = 0;
  std::vector<double> residual_history;  // ||r_k|| / ||b|| after each iteration
  std::vector<double> alphas, betas;
  double lambda_min_est = 1;
  double lambda_max_est = 1;
  double kappa_est = 1;
  bool converged = false;
  ToleranceMode mode = ToleranceMode::relative;
  double tolerance = 0;
  double solve_ms = 0;
  int coarse_dim = 0;
  int global_dofs = 0;
};

struct PcgResult {
  Eigen::VectorXd x;
  SolveReport report;
  std::vector<Eigen::VectorXd> residuals;  // r_0, r_1, ... when requested
};

// Preconditioned CG from a zero initial guess. The span of `kernel` is
// projected out of b and of every application of A and M. Stops on the
// residual norm ||b - A x||, relative to ||b|| or absolute. Throws
// std::runtime_error when p'Ap <= 0 or r'Mr <= 0.
PcgResult pcg(const LinearOperator& A, const LinearOperator& M, const Eigen::VectorXd& b, const PcgOptions& options,
              const std::vector<Eigen::VectorXd>& kernel = {});

struct EigenEstimate {
  double lambda_min = 0;
  double lambda_max = 0;
};

// Extreme eigenvalues of the Lanczos tridiagonal built from CG coefficients;
// needs alphas.size() >= 1 and betas.size() >= alphas.size() - 1.
EigenEstimate lanczos_estimate(const std::vector<double>& alphas, const std::vector<double>& betas);

// Diagonal and subdiagonal of that tridiagonal.
std::pair<Eigen::VectorXd, Eigen::VectorXd> lanczos_tridiagonal(const std::vector<double>& alphas,
                                                                const std::vector<double>& betas);

}  // namespace emi
