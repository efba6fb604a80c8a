#pragma once

#include <memory>
#include <span>
#include <vector>

namespace emi {

class IonicModel {
 public:
  virtual ~IonicModel() = default;
  // Membrane current for potential jump v and recovery variable w.
  virtual double current(double v, double w) const = 0;
  // dw/dt
  virtual double recovery(double v, double w) const = 0;
};

class AlievPanfilov final : public IonicModel {
 public:
  struct Parameters {
    double k = 8.0;
    double a = 0.15;
    double eps0 = 0.002;
    double mu1 = 0.2;
    double mu2 = 0.3;
  };

  AlievPanfilov() = default;
  explicit AlievPanfilov(Parameters p) : p_(p) {}

  double current(double v, double w) const override {
    return p_.k * v * (v - p_.a) * (v - 1.0) + v * w;
  }
  double recovery(double v, double w) const override {
    return (p_.eps0 + p_.mu1 * w / (v + p_.mu2)) * (-w - p_.k * v * (v - p_.a - 1.0));
  }
  const Parameters& parameters() const { return p_; }

 private:
  Parameters p_;
};

// Recovery variable per (cell, membrane node).
struct MembraneNode {
  int cell = 0;
  int node = 0;
  friend bool operator<(const MembraneNode& a, const MembraneNode& b) {
    return a.cell != b.cell ? a.cell < b.cell : a.node < b.node;
  }
  friend bool operator==(const MembraneNode& a, const MembraneNode& b) {
    return a.cell == b.cell && a.node == b.node;
  }
};

struct IonicState {
  std::vector<MembraneNode> nodes;  // sorted
  std::vector<double> w;

  // -1 when absent.
  int find(int cell, int node) const;
};

// w' = w + tau * R(v, w), explicit Euler.
IonicState ionic_step(const IonicModel& model, const IonicState& state, std::span<const double> v,
                      double tau);

}  // namespace emi
