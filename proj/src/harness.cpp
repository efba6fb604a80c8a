#include "emi/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <random>
#include <set>
#include <sstream>

#include "emi/dense_reference.hpp"

namespace emi {

namespace {

double elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
}

std::string format(double v, int precision = 8) {
  std::ostringstream s;
  s << std::setprecision(precision) << v;
  return s.str();
}

PcgOptions pcg_options(const ExperimentConfig& c) {
  PcgOptions o;
  o.tolerance = c.tolerance;
  o.mode = c.mode;
  o.max_iterations = c.max_iterations;
  return o;
}

Eigen::VectorXd interface_rhs(const Problem& p) {
  Eigen::VectorXd b = p.cs->reduce_rhs(p.f);
  b.array() -= b.mean();
  return b;
}

ResultRow make_row(const Problem& p, PrimalVariant v, const SolveReport& rep, std::uint64_t seed) {
  ResultRow r;
  r.cells = p.num_cells();
  r.subdomains = p.mesh.num_substructures();
  r.global_dofs = p.dofs.num_global();
  r.primal_space = v;
  r.iterations = rep.iterations;
  r.kappa_est = rep.kappa_est;
  r.coarse_dim = rep.coarse_dim;
  r.solve_ms = rep.solve_ms;
  r.seed = seed;
  r.sigma_summary = sigma_summary(p.params.sigma);
  r.converged = rep.converged;
  return r;
}

void log_row(std::ostream& log, const ResultRow& r) {
  log << "  " << r.cells << " cells, " << to_string(r.primal_space) << ": " << r.iterations << " iterations, kappa "
      << format(r.kappa_est, 5) << ", coarse dim " << r.coarse_dim << (r.converged ? "" : " (not converged)") << "\n";
}

// Builds the preconditioner and solves the system's own right-hand side.
ResultRow solve_variant(const Problem& p, PrimalVariant v, const ExperimentConfig& c, std::ostream& log) {
  const BddcPreconditioner M(*p.cs, build_primal_constraints(p.mesh, p.dofs, p.topo, v), p.scaling);
  const InterfaceSolve s = solve_interface(*p.cs, M, interface_rhs(p), pcg_options(c));
  ResultRow row = make_row(p, v, s.report, c.seed);
  log_row(log, row);
  return row;
}

}  // namespace

ModelParams make_params(const ExperimentConfig& c, int num_substructures) {
  ModelParams p = ModelParams::uniform(num_substructures, c.sigma_intra, c.sigma_extra);
  p.C_m = c.C_m;
  p.tau = c.tau;
  p.R_g = c.R_g;
  p.ionic = std::make_shared<AlievPanfilov>(c.ionic);
  p.validate(num_substructures);
  return p;
}

Eigen::VectorXd stimulus_state(const MeshConfig& mesh, const DofMap& dofs, double stimulus) {
  Eigen::VectorXd u = Eigen::VectorXd::Zero(dofs.num_global());
  for (const auto& sub : dofs.subs) {
    if (sub.id == kExtracellular || (sub.id - 1) % mesh.cells_x != 0) continue;
    for (int l = 0; l < sub.num_own; ++l) u[sub.global[l]] = stimulus;
  }
  return u;
}

void Problem::set_sigma(const std::vector<double>& sigma) {
  params.sigma = sigma;
  params.validate(mesh.num_substructures());
  AssembledSystem sys = assemble_K(mesh, topo, dofs, params);
  cs = std::make_unique<CondensedSystem>(factor_interiors(std::move(sys.locals), dofs));
  scaling = build_scaling(dofs, sigma);
}

Problem build_problem(const MeshConfig& mesh, const ModelParams& params, double stimulus) {
  Problem p;
  p.mesh_config = mesh;
  p.mesh = build_mesh(mesh);
  p.topo = extract_interfaces(p.mesh);
  if (p.topo.faces.empty()) throw std::runtime_error("mesh has no interfaces: the preconditioner is undefined");
  p.dofs = build_composite_space(p.mesh, p.topo);
  p.params = params;
  p.f = assemble_rhs(p.mesh, p.topo, p.dofs, p.params, stimulus_state(mesh, p.dofs, stimulus), resting_state(p.topo));
  p.set_sigma(params.sigma);
  return p;
}

InterfaceSolve solve_interface(const CondensedSystem& cs, const BddcPreconditioner& M, const Eigen::VectorXd& b,
                               const PcgOptions& options) {
  const LinearOperator A = [&](const Eigen::VectorXd& x) { return cs.apply(x); };
  const LinearOperator P = [&](const Eigen::VectorXd& x) { return M.apply(x); };
  PcgResult r = pcg(A, P, b, options, {Eigen::VectorXd::Ones(cs.interface_size())});
  r.report.coarse_dim = M.coarse_dim();
  r.report.global_dofs = cs.global_size();
  return {std::move(r.x), std::move(r.report)};
}

const std::vector<std::string>& csv_columns() {
  static const std::vector<std::string> cols = {"cells",      "subdomains", "global_dofs", "primal_space", "iterations",
                                                "kappa_est",  "coarse_dim", "solve_ms",    "seed",         "sigma_summary"};
  return cols;
}

void write_csv(std::ostream& out, const std::vector<ResultRow>& rows) {
  std::vector<std::string> extra_keys;
  for (const auto& r : rows)
    for (const auto& [k, v] : r.extra)
      if (std::find(extra_keys.begin(), extra_keys.end(), k) == extra_keys.end()) extra_keys.push_back(k);
  std::sort(extra_keys.begin(), extra_keys.end());
  for (size_t k = 0; k < csv_columns().size(); ++k) out << (k ? "," : "") << csv_columns()[k];
  for (const auto& k : extra_keys) out << "," << k;
  out << "\n";
  for (const auto& r : rows) {
    out << r.cells << "," << r.subdomains << "," << r.global_dofs << "," << to_string(r.primal_space) << ","
        << r.iterations << "," << format(r.kappa_est, 10) << "," << r.coarse_dim << "," << std::fixed
        << std::setprecision(3) << r.solve_ms << std::defaultfloat << "," << r.seed << "," << r.sigma_summary;
    for (const auto& k : extra_keys) {
      const auto it = r.extra.find(k);
      out << "," << (it == r.extra.end() ? "" : it->second);
    }
    out << "\n";
  }
}

void write_summary(std::ostream& out, const std::string& title, const std::vector<ResultRow>& rows) {
  out << title << "\n";
  std::vector<PrimalVariant> order;
  for (const auto& r : rows)
    if (std::find(order.begin(), order.end(), r.primal_space) == order.end()) order.push_back(r.primal_space);
  for (PrimalVariant v : order) {
    int n = 0, unconverged = 0, itmin = 1 << 30, itmax = 0;
    double itsum = 0, kmin = 1e300, kmax = 0, ksum = 0;
    for (const auto& r : rows) {
      if (r.primal_space != v) continue;
      ++n;
      unconverged += !r.converged;
      itmin = std::min(itmin, r.iterations);
      itmax = std::max(itmax, r.iterations);
      itsum += r.iterations;
      kmin = std::min(kmin, r.kappa_est);
      kmax = std::max(kmax, r.kappa_est);
      ksum += r.kappa_est;
    }
    out << "  " << to_string(v) << ": " << n << " solves, iterations min/mean/max " << itmin << "/"
        << format(itsum / n, 4) << "/" << itmax << ", kappa min/mean/max " << format(kmin, 5) << "/"
        << format(ksum / n, 5) << "/" << format(kmax, 5);
    if (unconverged) out << ", " << unconverged << " not converged";
    out << "\n";
  }
}

std::string sigma_summary(const std::vector<double>& sigma) {
  if (sigma.empty()) return "";
  std::ostringstream s;
  s << "extra=" << format(sigma[0], 4);
  if (sigma.size() > 1) {
    const auto [lo, hi] = std::minmax_element(sigma.begin() + 1, sigma.end());
    s << " intra=" << format(*lo, 4);
    if (*hi != *lo) s << ".." << format(*hi, 4);
  }
  return s.str();
}

std::vector<ResultRow> run_solve(const ExperimentConfig& c, std::ostream& log) {
  const auto t0 = std::chrono::steady_clock::now();
  const Problem p = build_problem(c.mesh, make_params(c, build_mesh(c.mesh).num_substructures()), c.stimulus);
  log << "mesh " << c.mesh.cells_x << "x" << c.mesh.cells_y << "x" << c.mesh.cells_z << " cells, level "
      << c.mesh.refinement << ": " << p.mesh.vertices.size() << " nodes, " << p.mesh.tets.size() << " tets, "
      << p.mesh.num_substructures() << " substructures, " << p.dofs.num_global() << " global dofs, "
      << p.cs->interface_size() << " interface dofs (assembly " << format(elapsed_ms(t0), 4) << " ms)\n";
  std::vector<ResultRow> rows;
  for (PrimalVariant v : c.variants) {
    const auto t1 = std::chrono::steady_clock::now();
    const BddcPreconditioner M(*p.cs, build_primal_constraints(p.mesh, p.dofs, p.topo, v), p.scaling);
    const double setup_ms = elapsed_ms(t1);
    const InterfaceSolve s = solve_interface(*p.cs, M, interface_rhs(p), pcg_options(c));
    const Eigen::VectorXd u = p.cs->recover(s.u_interface, p.f);
    const SolveReport& r = s.report;
    log << to_string(v) << ": iterations " << r.iterations << ", kappa_est " << format(r.kappa_est, 6)
        << " (lambda " << format(r.lambda_min_est, 6) << " .. " << format(r.lambda_max_est, 6) << "), "
        << (r.converged ? "converged" : "not converged") << ", final residual "
        << format(r.residual_history.empty() ? 0.0 : r.residual_history.back(), 3) << " (" << to_string(r.mode)
        << "), coarse dim " << r.coarse_dim << ", setup " << format(setup_ms, 4) << " ms, solve "
        << format(r.solve_ms, 4) << " ms, |u| " << format(u.norm(), 6) << "\n";
    rows.push_back(make_row(p, v, r, c.seed));
  }
  return rows;
}

std::vector<ResultRow> run_weak_scaling(const ExperimentConfig& c, std::ostream& log) {
  std::vector<ResultRow> rows;
  for (const auto& size : c.sizes) {
    MeshConfig mc = c.mesh;
    mc.cells_x = size[0];
    mc.cells_y = size[1];
    mc.cells_z = size[2];
    const Problem p = build_problem(mc, make_params(c, mc.num_cells() + 1), c.stimulus);
    log << size[0] << "x" << size[1] << "x" << size[2] << " cells, H/h " << mc.voxels_per_cell() << ", "
        << p.dofs.num_global() << " global dofs\n";
    for (PrimalVariant v : c.variants) {
      ResultRow row = solve_variant(p, v, c, log);
      row.extra["grid"] = std::to_string(size[0]) + "x" + std::to_string(size[1]) + "x" + std::to_string(size[2]);
      row.extra["H_over_h"] = std::to_string(mc.voxels_per_cell());
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

std::vector<ResultRow> run_refinement(const ExperimentConfig& c, std::ostream& log) {
  std::vector<ResultRow> rows;
  std::vector<int> levels = c.levels;
  std::sort(levels.begin(), levels.end());
  for (int level : levels) {
    MeshConfig mc = c.mesh;
    mc.refinement = level;
    const auto t0 = std::chrono::steady_clock::now();
    const Problem p = build_problem(mc, make_params(c, mc.num_cells() + 1), c.stimulus);
    log << "level " << level << ", H/h " << mc.voxels_per_cell() << ", " << p.dofs.num_global() << " global dofs ("
        << format(elapsed_ms(t0) / 1000, 3) << " s setup)\n";
    for (PrimalVariant v : c.variants) {
      ResultRow row = solve_variant(p, v, c, log);
      row.extra["level"] = std::to_string(level);
      row.extra["H_over_h"] = std::to_string(mc.voxels_per_cell());
      rows.push_back(std::move(row));
    }
  }
  // C (1 + log H/h)^2, scaled through the first level of each variant
  for (PrimalVariant v : c.variants) {
    const ResultRow* first = nullptr;
    for (auto& r : rows) {
      if (r.primal_space != v) continue;
      const double n = std::stod(r.extra["H_over_h"]);
      if (!first) first = &r;
      const double n0 = std::stod(first->extra.at("H_over_h"));
      const double model = first->kappa_est * std::pow((1 + std::log(n)) / (1 + std::log(n0)), 2);
      r.extra["polylog_model"] = format(model, 8);
    }
  }
  return rows;
}

std::vector<ResultRow> run_random_rhs(const ExperimentConfig& c, std::ostream& log) {
  const Problem p = build_problem(c.mesh, make_params(c, c.mesh.num_cells() + 1), c.stimulus);
  const int n = p.cs->interface_size();
  std::vector<ResultRow> rows;
  for (PrimalVariant v : c.variants) {
    const BddcPreconditioner M(*p.cs, build_primal_constraints(p.mesh, p.dofs, p.topo, v), p.scaling);
    std::mt19937_64 rng(c.seed);  // same right-hand sides for every variant
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    for (int s = 0; s < c.samples; ++s) {
      Eigen::VectorXd b(n);
      for (int k = 0; k < n; ++k) b[k] = U(rng);
      b.array() -= b.mean();
      const InterfaceSolve sol = solve_interface(*p.cs, M, b, pcg_options(c));
      ResultRow row = make_row(p, v, sol.report, c.seed);
      row.extra["sample"] = std::to_string(s);
      rows.push_back(std::move(row));
    }
  }
  write_summary(log, "random right-hand sides", rows);
  return rows;
}

std::vector<ResultRow> run_random_sigma(const ExperimentConfig& c, std::ostream& log) {
  Problem p = build_problem(c.mesh, make_params(c, c.mesh.num_cells() + 1), c.stimulus);
  std::mt19937_64 rng(c.seed);
  std::uniform_real_distribution<double> U(1.0, 20.0);
  std::vector<ResultRow> rows;
  for (int s = 0; s < c.samples; ++s) {
    std::vector<double> sigma(p.mesh.num_substructures());
    for (double& x : sigma) {
      do x = U(rng);
      while (x <= 1.0);
    }
    p.set_sigma(sigma);
    log << "draw " << s << ": " << sigma_summary(sigma) << "\n";
    for (PrimalVariant v : c.variants) {
      ResultRow row = solve_variant(p, v, c, log);
      row.extra["sample"] = std::to_string(s);
      rows.push_back(std::move(row));
    }
  }
  write_summary(log, "random conductivities", rows);
  return rows;
}

bool VerifyReport::passed() const {
  return !checks.empty() && std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

VerifyReport run_verify(const ExperimentConfig& c, std::ostream& log) {
  VerifyReport report;
  const Problem p = build_problem(c.mesh, make_params(c, c.mesh.num_cells() + 1), c.stimulus);
  const int n = p.cs->interface_size();
  const int N = p.dofs.num_global();
  if (N > 6000) throw ConfigError("verify needs a small mesh (" + std::to_string(N) + " global dofs)");
  auto add = [&](std::string name, bool ok, std::string detail) {
    log << (ok ? "ok     " : "FAILED ") << name << ": " << detail << "\n";
    report.checks.push_back({std::move(name), ok, std::move(detail)});
  };

  const Eigen::MatrixXd S = dense_schur(*p.cs);
  const Eigen::MatrixXd P = Eigen::MatrixXd::Identity(n, n) - Eigen::MatrixXd::Constant(n, n, 1.0 / n);
  const Spectrum plain = preconditioned_spectrum(P, S);
  const Eigen::MatrixXd K(assemble_K(p.mesh, p.topo, p.dofs, p.params).K);
  Eigen::VectorXd direct = dense_kernel_solve(K, p.f);
  direct.array() -= direct.mean();
  const Eigen::VectorXd b = interface_rhs(p);

  std::map<PrimalVariant, double> kappa;
  for (PrimalVariant v : c.variants) {
    const std::string tag = "[" + to_string(v) + "]";
    const ConstraintSet cons = build_primal_constraints(p.mesh, p.dofs, p.topo, v);
    std::unique_ptr<BddcPreconditioner> M;
    try {
      M = std::make_unique<BddcPreconditioner>(*p.cs, cons, p.scaling);
    } catch (const std::runtime_error& e) {
      add("setup" + tag, false, e.what());
      continue;
    }
    const Eigen::MatrixXd Mi = P * dense_operator(n, [&](const Eigen::VectorXd& r) { return M->apply(r); }) * P;
    const Eigen::MatrixXd Md = dense_bddc(*p.cs, cons, p.scaling);
    const double apply_err = (Mi - Md).norm() / Md.norm();
    add("apply-matches-dense" + tag, apply_err <= 1e-9, "relative difference " + format(apply_err, 3));

    const Spectrum spectrum = preconditioned_spectrum(Md, S);
    kappa[v] = spectrum.kappa();
    add("spectrum-floor" + tag, spectrum.lambda_min >= 1 - 1e-6,
        "lambda_min " + format(spectrum.lambda_min, 10) + ", lambda_max " + format(spectrum.lambda_max, 6));

    PcgOptions tight;
    tight.tolerance = 1e-12;
    tight.max_iterations = std::max(c.max_iterations, 4 * n);
    // The stimulus right-hand side can lie in the coarse space and converge in
    // one step, so the Lanczos estimate uses a generic right-hand side.
    std::mt19937_64 rng(c.seed);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    Eigen::VectorXd g(n);
    for (int k = 0; k < n; ++k) g[k] = U(rng);
    g.array() -= g.mean();
    const InterfaceSolve probe = solve_interface(*p.cs, *M, g, tight);
    const double kerr = std::abs(probe.report.kappa_est - spectrum.kappa()) / spectrum.kappa();
    add("lanczos-kappa" + tag, kerr <= 0.15,
        "Lanczos " + format(probe.report.kappa_est, 6) + " vs dense " + format(spectrum.kappa(), 6));

    const InterfaceSolve sol = solve_interface(*p.cs, *M, b, tight);

    Eigen::VectorXd u = p.cs->recover(sol.u_interface, p.f);
    u.array() -= u.mean();
    const double derr = (u - direct).norm() / direct.norm();
    add("direct-solve" + tag, derr <= 1e-8, "relative difference " + format(derr, 3));

    log << "info   unpreconditioned kappa " << format(plain.kappa(), 6) << " vs preconditioned "
        << format(spectrum.kappa(), 6) << "\n";

    report.rows.push_back(make_row(p, v, sol.report, c.seed));
  }
  if (kappa.count(PrimalVariant::vef) && kappa.count(PrimalVariant::ve))
    add("vef-not-worse-than-ve", kappa[PrimalVariant::vef] <= 1.05 * kappa[PrimalVariant::ve],
        "dense kappa " + format(kappa[PrimalVariant::vef], 6) + " vs " + format(kappa[PrimalVariant::ve], 6));
  return report;
}

}  // namespace emi
