#pragma once

#include <array>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace emi {

using Point3 = std::array<double, 3>;

// Substructure 0 is always the extracellular space.
constexpr int kExtracellular = 0;

enum class GeometryKind { repetitive, convex_cells };

std::string to_string(GeometryKind kind);
GeometryKind parse_geometry(const std::string& name);

struct MeshConfig {
  int cells_x = 1;
  int cells_y = 1;
  int cells_z = 1;
  int refinement = 0;
  int base_resolution = 4;  // voxels per cell edge at refinement 0
  GeometryKind geometry = GeometryKind::repetitive;
  double cell_edge_mm = 0.1;

  int voxels_per_cell() const { return base_resolution << refinement; }
  int num_cells() const { return cells_x * cells_y * cells_z; }
  double cell_edge_cm() const { return 0.1 * cell_edge_mm; }
  double voxel_size_cm() const { return cell_edge_cm() / voxels_per_cell(); }
  // Throws std::invalid_argument.
  void validate() const;
};

struct Mesh {
  std::vector<Point3> vertices;
  std::vector<std::array<int, 4>> tets;  // positively oriented
  std::vector<int> tet_substructure;

  int num_substructures() const;
  double signed_volume(int tet) const;
  Point3 centroid(int tet) const;
};

// Six Kuhn tetrahedra per voxel of an nx*ny*nz grid with spacing h.
// label(voxel index (i,j,k), tet centroid) picks the substructure.
Mesh build_voxel_mesh(std::array<int, 3> voxels, double h, Point3 origin,
                      const std::function<int(std::array<int, 3>, const Point3&)>& label);

// Repetitive "plus" cells on a cells_x*cells_y*cells_z lattice.
Mesh build_cell_grid(const MeshConfig& config);
// Inset cubes, one or two per axis; cells are surrounded by extracellular space.
Mesh build_convex_cells(const MeshConfig& config);
// Dispatches on config.geometry.
Mesh build_mesh(const MeshConfig& config);
// Same geometry at a different refinement level (h halves per level).
Mesh refine(const MeshConfig& config, int level);

struct InterfaceFace {
  int first = 0;   // first < second
  int second = 0;
  std::vector<std::array<int, 3>> triangles;  // sorted node triples
  std::vector<int> nodes;                     // sorted
  int other(int s) const { return s == first ? second : first; }
  bool involves(int s) const { return s == first || s == second; }
};

struct InterfaceEdge {
  std::vector<int> substructures;  // sorted, at least three
  std::vector<std::array<int, 2>> segments;
  std::vector<int> chain;           // nodes in walking order
  std::vector<int> interior_nodes;  // chain nodes that are not vertices, sorted
  std::vector<int> endpoints;       // vertex nodes, sorted
  bool closed = false;
};

class InterfaceTopology {
 public:
  int num_substructures = 0;
  std::vector<InterfaceFace> faces;  // sorted by (first, second)
  std::vector<InterfaceEdge> edges;
  std::vector<int> vertices;  // sorted node ids

  // N_x: substructures whose closure contains the node, sorted.
  std::span<const int> substructures_at(int node) const;
  // Index into faces, or -1. Order of i and j does not matter.
  int face_index(int i, int j) const;
  std::vector<int> neighbors(int i) const;
  bool is_vertex(int node) const { return node_kind_[node] == 2; }
  bool is_edge_node(int node) const { return node_kind_[node] >= 1; }

 private:
  friend InterfaceTopology extract_interfaces(const Mesh& mesh);
  std::vector<int> node_offsets_;
  std::vector<int> node_subs_;
  std::vector<char> node_kind_;  // 0 plain, 1 edge interior, 2 vertex
};

InterfaceTopology extract_interfaces(const Mesh& mesh);

// Planar pieces and reflex crease lines of one face, seen from `side`.
struct FaceFeatures {
  int planes = 0;
  int reflex_lines = 0;
};
FaceFeatures face_features(const Mesh& mesh, const InterfaceTopology& topo, int face, int side);

// Legacy ASCII VTK with a "substructure" cell array.
void write_vtk(const Mesh& mesh, const std::string& path);
Mesh read_vtk(const std::string& path);

}  // namespace emi
