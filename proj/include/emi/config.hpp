#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "emi/femspace.hpp"
#include "emi/geometry.hpp"
#include "emi/ionic.hpp"
#include "emi/krylov.hpp"

namespace emi {

enum class Experiment { solve, weak_scaling, refinement, random_rhs, random_sigma, verify };
std::string to_string(Experiment e);
// Accepts both weak-scaling and weak_scaling spellings.
Experiment parse_experiment(const std::string& name);

// Malformed or unknown configuration input.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  Experiment experiment = Experiment::solve;
  MeshConfig mesh = [] {
    MeshConfig m;
    m.cells_x = 2;
    m.cells_y = 2;
    return m;
  }();

  double sigma_extra = 20.0;  // mS/cm
  double sigma_intra = 3.0;
  double C_m = 1.0;
  double tau = 0.01;
  double R_g = 4.5e-4;
  AlievPanfilov::Parameters ionic;
  double stimulus = 1.0;  // initial potential in the first column of cells

  std::vector<PrimalVariant> variants = {PrimalVariant::vef, PrimalVariant::ve};
  double tolerance = 1e-6;
  ToleranceMode mode = ToleranceMode::relative;
  int max_iterations = 1000;

  int samples = 100;
  std::uint64_t seed = 42;
  std::vector<std::array<int, 3>> sizes = {{2, 2, 1}, {2, 2, 2}, {3, 3, 2}, {3, 3, 3}};
  std::vector<int> levels = {0, 1, 2, 3};
  std::string output;

  // Throws ConfigError.
  void validate() const;
};

// JSON text with the key layout documented in the README; unknown keys and
// wrong types throw ConfigError.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

}  // namespace emi
