#pragma once

#include <span>
#include <string>
#include <vector>

#include "emi/geometry.hpp"

namespace emi {

// A local degree of freedom of substructure i: the value at `node` of the
// function owned by `provenance` (i itself, or a neighbour j whose trace on
// the shared face i holds a copy of).
struct LocalDof {
  int node = 0;
  int provenance = 0;
};

struct GlobalDof {
  int owner = 0;
  int node = 0;
};

struct SubstructureSpace {
  int id = 0;
  int num_own = 0;
  // Own nodes ascending, then traces ordered by (provenance, node).
  std::vector<LocalDof> dofs;
  std::vector<int> global;     // global dof index per local dof
  std::vector<int> interior;   // I_i, local indices
  std::vector<int> interface;  // Gamma_i', local indices

  int size() const { return static_cast<int>(dofs.size()); }
  // -1 when the substructure holds no such copy.
  int local_index(int node, int provenance) const;
};

struct DofCopy {
  int substructure = 0;
  int local = 0;  // local dof index
};

class DofMap {
 public:
  std::vector<SubstructureSpace> subs;
  std::vector<GlobalDof> globals;
  std::vector<int> interface_dofs;      // interface position -> global index
  std::vector<int> interface_position;  // global index -> position or -1

  int num_global() const { return static_cast<int>(globals.size()); }
  int num_interface() const { return static_cast<int>(interface_dofs.size()); }
  int global_index(int owner, int node) const;
  // All local copies of an interface dof, ordered by substructure.
  std::span<const DofCopy> copies(int position) const;
  // Local positions of each local dof inside subs[i].interface, or -1.
  std::vector<int> interface_slot(int i) const;

 private:
  friend DofMap build_composite_space(const Mesh&, const InterfaceTopology&);
  std::vector<int> copy_offsets_;
  std::vector<DofCopy> copies_;
};

// Throws std::runtime_error on inconsistent topology.
DofMap build_composite_space(const Mesh& mesh, const InterfaceTopology& topo);

struct DofClasses {
  std::vector<int> interior;
  std::vector<int> dual;
  std::vector<int> primal_vertex;
};
std::vector<DofClasses> classify_dofs(const DofMap& dofs, const InterfaceTopology& topo);

enum class PrimalVariant { vef, ve };
std::string to_string(PrimalVariant v);
PrimalVariant parse_variant(const std::string& name);

enum class EntityKind { vertex, edge, face };

// One coarse degree of freedom: the value (vertex) or mean (edge, face) of
// the copies with a given provenance, shared by every holder.
struct PrimalClass {
  EntityKind kind = EntityKind::vertex;
  int entity = 0;  // vertex node, edge index or face index
  int provenance = 0;
  std::vector<int> rows;
};

struct ConstraintRow {
  int substructure = 0;
  int primal = 0;
  std::vector<int> dofs;  // local dof indices
  std::vector<double> weights;
};

struct ConstraintCounts {
  int vertices = 0;  // vertex nodes in the closure
  int vertex_rows = 0;
  int edge_rows = 0;
  int face_rows = 0;
};

struct ConstraintSet {
  PrimalVariant variant = PrimalVariant::vef;
  std::vector<PrimalClass> classes;
  std::vector<ConstraintRow> rows;
  std::vector<std::vector<int>> rows_of;  // per substructure, in class order
  std::vector<ConstraintCounts> counts;

  int coarse_dim() const { return static_cast<int>(classes.size()); }
};

// Entities without free nodes add no rows. Throws std::runtime_error for
// degenerate entities or incomplete copies.
ConstraintSet build_primal_constraints(const Mesh& mesh, const DofMap& dofs,
                                       const InterfaceTopology& topo, PrimalVariant variant);

}  // namespace emi
