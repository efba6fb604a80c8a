#include "emi/ionic.hpp"

#include <algorithm>
#include <stdexcept>

namespace emi {

int IonicState::find(int cell, int node) const {
  const MembraneNode key{cell, node};
  auto it = std::lower_bound(nodes.begin(), nodes.end(), key);
  return (it != nodes.end() && *it == key) ? static_cast<int>(it - nodes.begin()) : -1;
}

IonicState ionic_step(const IonicModel& model, const IonicState& state, std::span<const double> v,
                      double tau) {
  if (v.size() != state.w.size()) throw std::invalid_argument("jump vector does not match ionic state");
  IonicState next = state;
  for (size_t k = 0; k < v.size(); ++k) next.w[k] = state.w[k] + tau * model.recovery(v[k], state.w[k]);
  return next;
}

}  // namespace emi
