#include "emi/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace emi {

using nlohmann::json;

std::string to_string(Experiment e) {
  switch (e) {
    case Experiment::solve: return "solve";
    case Experiment::weak_scaling: return "weak-scaling";
    case Experiment::refinement: return "refinement";
    case Experiment::random_rhs: return "random-rhs";
    case Experiment::random_sigma: return "random-sigma";
    case Experiment::verify: return "verify";
  }
  return "?";
}

Experiment parse_experiment(const std::string& name) {
  std::string s = name;
  for (char& c : s)
    if (c == '_') c = '-';
  for (Experiment e : {Experiment::solve, Experiment::weak_scaling, Experiment::refinement, Experiment::random_rhs,
                       Experiment::random_sigma, Experiment::verify})
    if (to_string(e) == s) return e;
  throw ConfigError("unknown experiment '" + name + "'");
}

void ExperimentConfig::validate() const {
  try {
    mesh.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (!(sigma_extra > 0) || !(sigma_intra > 0)) throw ConfigError("conductivities must be positive");
  if (!(C_m > 0) || !(tau > 0) || !(R_g > 0)) throw ConfigError("C_m, tau and R_g must be positive");
  if (variants.empty()) throw ConfigError("at least one primal variant is required");
  if (!(tolerance > 0)) throw ConfigError("tolerance must be positive");
  if (max_iterations < 1) throw ConfigError("max_iterations must be at least 1");
  if (samples < 1) throw ConfigError("samples must be at least 1");
  if (sizes.empty()) throw ConfigError("weak scaling needs at least one grid size");
  for (const auto& s : sizes)
    if (s[0] < 1 || s[1] < 1 || s[2] < 1) throw ConfigError("grid sizes must be positive");
  if (levels.empty()) throw ConfigError("refinement needs at least one level");
  for (int l : levels)
    if (l < 0) throw ConfigError("refinement levels must be non-negative");
}

namespace {

void allow(const json& obj, const std::string& where, std::set<std::string> keys) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!keys.count(it.key())) throw ConfigError("unknown key '" + where + "." + it.key() + "'");
}

template <class T>
void read(const json& obj, const char* key, T& out, const std::string& where) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("wrong type for '" + where + "." + key + "'");
  }
}

std::array<int, 3> triple(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 3) throw ConfigError(where + " must be a list of three integers");
  std::array<int, 3> t{};
  for (int k = 0; k < 3; ++k) {
    if (!j[k].is_number_integer()) throw ConfigError(where + " must be a list of three integers");
    t[k] = j[k].get<int>();
  }
  return t;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  ExperimentConfig c;
  allow(root, "config", {"experiment", "mesh", "model", "solver", "study", "output"});
  if (root.contains("experiment")) {
    std::string name;
    read(root, "experiment", name, "config");
    c.experiment = parse_experiment(name);
  }
  read(root, "output", c.output, "config");

  if (root.contains("mesh")) {
    const json& m = root["mesh"];
    allow(m, "mesh", {"cells", "refinement", "base_resolution", "geometry", "cell_edge_mm"});
    if (m.contains("cells")) {
      const auto t = triple(m["cells"], "mesh.cells");
      c.mesh.cells_x = t[0];
      c.mesh.cells_y = t[1];
      c.mesh.cells_z = t[2];
    }
    read(m, "refinement", c.mesh.refinement, "mesh");
    read(m, "base_resolution", c.mesh.base_resolution, "mesh");
    read(m, "cell_edge_mm", c.mesh.cell_edge_mm, "mesh");
    if (m.contains("geometry")) {
      std::string g;
      read(m, "geometry", g, "mesh");
      try {
        c.mesh.geometry = parse_geometry(g);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
      }
    }
  }

  if (root.contains("model")) {
    const json& m = root["model"];
    allow(m, "model", {"sigma_extra", "sigma_intra", "C_m", "tau", "R_g", "stimulus", "aliev_panfilov"});
    read(m, "sigma_extra", c.sigma_extra, "model");
    read(m, "sigma_intra", c.sigma_intra, "model");
    read(m, "C_m", c.C_m, "model");
    read(m, "tau", c.tau, "model");
    read(m, "R_g", c.R_g, "model");
    read(m, "stimulus", c.stimulus, "model");
    if (m.contains("aliev_panfilov")) {
      const json& a = m["aliev_panfilov"];
      allow(a, "model.aliev_panfilov", {"k", "a", "eps0", "mu1", "mu2"});
      read(a, "k", c.ionic.k, "model.aliev_panfilov");
      read(a, "a", c.ionic.a, "model.aliev_panfilov");
      read(a, "eps0", c.ionic.eps0, "model.aliev_panfilov");
      read(a, "mu1", c.ionic.mu1, "model.aliev_panfilov");
      read(a, "mu2", c.ionic.mu2, "model.aliev_panfilov");
    }
  }

  if (root.contains("solver")) {
    const json& s = root["solver"];
    allow(s, "solver", {"variants", "tolerance", "mode", "max_iterations"});
    if (s.contains("variants")) {
      std::vector<std::string> names;
      read(s, "variants", names, "solver");
      c.variants.clear();
      try {
        for (const auto& n : names) c.variants.push_back(parse_variant(n));
      } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
      }
    }
    read(s, "tolerance", c.tolerance, "solver");
    read(s, "max_iterations", c.max_iterations, "solver");
    if (s.contains("mode")) {
      std::string mode;
      read(s, "mode", mode, "solver");
      try {
        c.mode = parse_tolerance_mode(mode);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
      }
    }
  }

  if (root.contains("study")) {
    const json& s = root["study"];
    allow(s, "study", {"samples", "seed", "sizes", "levels"});
    read(s, "samples", c.samples, "study");
    read(s, "seed", c.seed, "study");
    read(s, "levels", c.levels, "study");
    if (s.contains("sizes")) {
      if (!s["sizes"].is_array()) throw ConfigError("study.sizes must be a list of [x, y, z] triples");
      c.sizes.clear();
      for (const json& t : s["sizes"]) c.sizes.push_back(triple(t, "study.sizes"));
    }
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace emi
