#include "emi/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

namespace emi {

std::string to_string(GeometryKind kind) {
  return kind == GeometryKind::repetitive ? "repetitive" : "convex";
}

GeometryKind parse_geometry(const std::string& name) {
  if (name == "repetitive" || name == "plus") return GeometryKind::repetitive;
  if (name == "convex" || name == "convex_cells") return GeometryKind::convex_cells;
  throw std::invalid_argument("unknown geometry '" + name + "'");
}

void MeshConfig::validate() const {
  if (cells_x < 1 || cells_y < 1 || cells_z < 1)
    throw std::invalid_argument("cell counts must be positive");
  if (refinement < 0 || refinement > 8)
    throw std::invalid_argument("refinement level must be in 0..8");
  if (base_resolution < 2 || base_resolution % 2 != 0)
    throw std::invalid_argument("base resolution must be a positive even number");
  if (voxels_per_cell() < 4)
    throw std::invalid_argument("need at least 4 voxels per cell edge");
  if (!(cell_edge_mm > 0.0)) throw std::invalid_argument("cell edge must be positive");
  if (geometry == GeometryKind::convex_cells &&
      (cells_x > 2 || cells_y > 2 || cells_z > 2))
    throw std::invalid_argument("convex cells support at most two cells per axis");
}

int Mesh::num_substructures() const {
  if (tet_substructure.empty()) return 0;
  return *std::max_element(tet_substructure.begin(), tet_substructure.end()) + 1;
}

double Mesh::signed_volume(int t) const {
  const auto& v = tets[t];
  const Point3& a = vertices[v[0]];
  double e[3][3];
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) e[r][c] = vertices[v[r + 1]][c] - a[c];
  const double det = e[0][0] * (e[1][1] * e[2][2] - e[1][2] * e[2][1]) -
                     e[0][1] * (e[1][0] * e[2][2] - e[1][2] * e[2][0]) +
                     e[0][2] * (e[1][0] * e[2][1] - e[1][1] * e[2][0]);
  return det / 6.0;
}

Point3 Mesh::centroid(int t) const {
  Point3 c{0, 0, 0};
  for (int v : tets[t])
    for (int d = 0; d < 3; ++d) c[d] += 0.25 * vertices[v][d];
  return c;
}

Mesh build_voxel_mesh(std::array<int, 3> voxels, double h, Point3 origin,
                      const std::function<int(std::array<int, 3>, const Point3&)>& label) {
  const int nx = voxels[0], ny = voxels[1], nz = voxels[2];
  if (nx < 1 || ny < 1 || nz < 1 || !(h > 0.0))
    throw std::invalid_argument("empty voxel grid");
  const long px = nx + 1, py = ny + 1, pz = nz + 1;
  Mesh mesh;
  mesh.vertices.resize(px * py * pz);
  for (long k = 0; k < pz; ++k)
    for (long j = 0; j < py; ++j)
      for (long i = 0; i < px; ++i)
        mesh.vertices[i + px * (j + py * k)] = {origin[0] + i * h, origin[1] + j * h,
                                                origin[2] + k * h};

  // Kuhn split: all six tets share the voxel diagonal.
  static constexpr int orders[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2},
                                       {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
  std::array<std::array<std::array<int, 3>, 4>, 6> corners{};
  for (int t = 0; t < 6; ++t) {
    std::array<int, 3> c{0, 0, 0};
    corners[t][0] = c;
    for (int s = 0; s < 3; ++s) {
      c[orders[t][s]] = 1;
      corners[t][s + 1] = c;
    }
    // odd axis orders give negative volume; swap two vertices
    const auto& e = corners[t];
    const int det = e[1][0] * (e[2][1] * e[3][2] - e[2][2] * e[3][1]) -
                    e[1][1] * (e[2][0] * e[3][2] - e[2][2] * e[3][0]) +
                    e[1][2] * (e[2][0] * e[3][1] - e[2][1] * e[3][0]);
    if (det < 0) std::swap(corners[t][1], corners[t][2]);
  }

  const size_t ntets = 6ul * nx * ny * nz;
  mesh.tets.reserve(ntets);
  mesh.tet_substructure.reserve(ntets);
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i)
        for (int t = 0; t < 6; ++t) {
          std::array<int, 4> tet;
          for (int v = 0; v < 4; ++v) {
            const auto& c = corners[t][v];
            tet[v] = static_cast<int>((i + c[0]) + px * ((j + c[1]) + py * (k + c[2])));
          }
          mesh.tets.push_back(tet);
          const int id = static_cast<int>(mesh.tets.size()) - 1;
          mesh.tet_substructure.push_back(label({i, j, k}, mesh.centroid(id)));
        }

  std::vector<char> seen(mesh.num_substructures(), 0);
  for (int s : mesh.tet_substructure) {
    if (s < 0) throw std::invalid_argument("negative substructure label");
    seen[s] = 1;
  }
  for (size_t s = 0; s < seen.size(); ++s)
    if (!seen[s])
      throw std::invalid_argument("substructure " + std::to_string(s) + " has no tetrahedra");
  return mesh;
}

namespace {

// Fraction of the voxel centre inside its cell, in [0,1).
double cell_fraction(int voxel, int n) { return (voxel % n + 0.5) / n; }

bool central(double f) { return f >= 0.25 && f < 0.75; }

Mesh build_cells(const MeshConfig& config, int min_central) {
  config.validate();
  const int n = config.voxels_per_cell();
  const int cx = config.cells_x, cy = config.cells_y;
  auto label = [&](std::array<int, 3> v, const Point3&) {
    const int count = central(cell_fraction(v[0], n)) + central(cell_fraction(v[1], n)) +
                      central(cell_fraction(v[2], n));
    if (count < min_central) return kExtracellular;
    return 1 + v[0] / n + cx * (v[1] / n + cy * (v[2] / n));
  };
  return build_voxel_mesh({config.cells_x * n, config.cells_y * n, config.cells_z * n},
                          config.voxel_size_cm(), {0, 0, 0}, label);
}

}  // namespace

Mesh build_cell_grid(const MeshConfig& config) { return build_cells(config, 2); }

Mesh build_convex_cells(const MeshConfig& config) {
  if (config.geometry != GeometryKind::convex_cells) {
    MeshConfig c = config;
    c.geometry = GeometryKind::convex_cells;
    c.validate();
  }
  return build_cells(config, 3);
}

Mesh build_mesh(const MeshConfig& config) {
  return config.geometry == GeometryKind::repetitive ? build_cell_grid(config)
                                                     : build_convex_cells(config);
}

Mesh refine(const MeshConfig& config, int level) {
  MeshConfig c = config;
  c.refinement = level;
  return build_mesh(c);
}

// ---------------------------------------------------------------------------

std::span<const int> InterfaceTopology::substructures_at(int node) const {
  return {node_subs_.data() + node_offsets_[node],
          static_cast<size_t>(node_offsets_[node + 1] - node_offsets_[node])};
}

int InterfaceTopology::face_index(int i, int j) const {
  if (i > j) std::swap(i, j);
  auto it = std::lower_bound(faces.begin(), faces.end(), std::make_pair(i, j),
                             [](const InterfaceFace& f, const std::pair<int, int>& key) {
                               return std::make_pair(f.first, f.second) < key;
                             });
  if (it == faces.end() || it->first != i || it->second != j) return -1;
  return static_cast<int>(it - faces.begin());
}

std::vector<int> InterfaceTopology::neighbors(int i) const {
  std::vector<int> out;
  for (const auto& f : faces)
    if (f.involves(i)) out.push_back(f.other(i));
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

struct DisjointSets {
  std::vector<int> parent;
  explicit DisjointSets(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

struct EdgeSegment {
  int a, b;
  std::vector<int> subs;
};

// Orders the segments of a simple path or cycle into a node chain.
std::vector<int> walk_chain(const std::vector<std::array<int, 2>>& segs, const std::vector<char>& vertex_flag) {
  std::unordered_map<int, std::vector<int>> incident;
  for (int s = 0; s < static_cast<int>(segs.size()); ++s) {
    incident[segs[s][0]].push_back(s);
    incident[segs[s][1]].push_back(s);
  }
  int start = -1;
  for (const auto& [node, list] : incident)
    if (vertex_flag[node] && (start < 0 || node < start)) start = node;
  if (start < 0)
    for (const auto& [node, list] : incident)
      if (start < 0 || node < start) start = node;

  std::vector<int> chain{start};
  std::vector<char> used(segs.size(), 0);
  int cur = start;
  for (size_t step = 0; step < segs.size(); ++step) {
    int next_seg = -1;
    for (int s : incident[cur])
      if (!used[s] && (next_seg < 0 || s < next_seg)) next_seg = s;
    if (next_seg < 0) break;
    used[next_seg] = 1;
    cur = segs[next_seg][0] == cur ? segs[next_seg][1] : segs[next_seg][0];
    chain.push_back(cur);
  }
  return chain;
}

}  // namespace

InterfaceTopology extract_interfaces(const Mesh& mesh) {
  const int nn = static_cast<int>(mesh.vertices.size());
  const long nt = static_cast<long>(mesh.tets.size());
  InterfaceTopology topo;
  topo.num_substructures = mesh.num_substructures();

  // N_x as compressed rows
  {
    std::vector<std::pair<int, int>> pairs;
    pairs.reserve(4 * nt);
    for (long t = 0; t < nt; ++t)
      for (int v : mesh.tets[t]) pairs.emplace_back(v, mesh.tet_substructure[t]);
    std::sort(pairs.begin(), pairs.end());
    pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
    topo.node_offsets_.assign(nn + 1, 0);
    topo.node_subs_.reserve(pairs.size());
    for (const auto& [node, s] : pairs) {
      ++topo.node_offsets_[node + 1];
      topo.node_subs_.push_back(s);
    }
    for (int i = 0; i < nn; ++i) topo.node_offsets_[i + 1] += topo.node_offsets_[i];
  }

  // interface triangles: tet faces whose two sides carry different labels
  {
    struct TriRef {
      std::array<int, 3> n;
      int tet;
    };
    std::vector<TriRef> tris;
    tris.reserve(4 * nt);
    static constexpr int local[4][3] = {{1, 2, 3}, {0, 2, 3}, {0, 1, 3}, {0, 1, 2}};
    for (long t = 0; t < nt; ++t)
      for (const auto& f : local) {
        std::array<int, 3> key{mesh.tets[t][f[0]], mesh.tets[t][f[1]], mesh.tets[t][f[2]]};
        std::sort(key.begin(), key.end());
        tris.push_back({key, static_cast<int>(t)});
      }
    std::sort(tris.begin(), tris.end(), [](const TriRef& x, const TriRef& y) {
      return x.n != y.n ? x.n < y.n : x.tet < y.tet;
    });
    std::map<std::pair<int, int>, std::vector<std::array<int, 3>>> groups;
    for (size_t a = 0; a < tris.size();) {
      size_t b = a + 1;
      while (b < tris.size() && tris[b].n == tris[a].n) ++b;
      if (b - a > 2) throw std::runtime_error("non-manifold mesh: triangle shared by more than two tetrahedra");
      if (b - a == 2) {
        int s0 = mesh.tet_substructure[tris[a].tet], s1 = mesh.tet_substructure[tris[a + 1].tet];
        if (s0 != s1) groups[{std::min(s0, s1), std::max(s0, s1)}].push_back(tris[a].n);
      }
      a = b;
    }
    for (auto& [key, list] : groups) {
      InterfaceFace face;
      face.first = key.first;
      face.second = key.second;
      face.triangles = std::move(list);
      for (const auto& tri : face.triangles) face.nodes.insert(face.nodes.end(), tri.begin(), tri.end());
      std::sort(face.nodes.begin(), face.nodes.end());
      face.nodes.erase(std::unique(face.nodes.begin(), face.nodes.end()), face.nodes.end());
      topo.faces.push_back(std::move(face));
    }
  }

  // Edge segments: boundary segments shared by two faces of one substructure.
  std::vector<EdgeSegment> edge_segs;
  {
    struct SegRef {
      int a, b, face;
      bool operator<(const SegRef& o) const {
        return std::tie(a, b, face) < std::tie(o.a, o.b, o.face);
      }
      bool same_seg(const SegRef& o) const { return a == o.a && b == o.b; }
    };
    std::vector<SegRef> refs;
    for (int f = 0; f < static_cast<int>(topo.faces.size()); ++f)
      for (const auto& tri : topo.faces[f].triangles) {
        refs.push_back({tri[0], tri[1], f});
        refs.push_back({tri[0], tri[2], f});
        refs.push_back({tri[1], tri[2], f});
      }
    std::sort(refs.begin(), refs.end());
    for (size_t a = 0; a < refs.size();) {
      size_t b = a;
      std::vector<int> bfaces;
      while (b < refs.size() && refs[b].same_seg(refs[a])) {
        size_t c = b;
        while (c < refs.size() && refs[c].same_seg(refs[a]) && refs[c].face == refs[b].face) ++c;
        if ((c - b) % 2 == 1) bfaces.push_back(refs[b].face);
        b = c;
      }
      bool shared = false;
      for (size_t p = 0; p < bfaces.size() && !shared; ++p)
        for (size_t q = p + 1; q < bfaces.size() && !shared; ++q) {
          const auto& fp = topo.faces[bfaces[p]];
          const auto& fq = topo.faces[bfaces[q]];
          shared = fq.involves(fp.first) || fq.involves(fp.second);
        }
      if (shared) {
        std::vector<int> subs;
        for (int f : bfaces) {
          subs.push_back(topo.faces[f].first);
          subs.push_back(topo.faces[f].second);
        }
        std::sort(subs.begin(), subs.end());
        subs.erase(std::unique(subs.begin(), subs.end()), subs.end());
        if (subs.size() >= 3) edge_segs.push_back({refs[a].a, refs[a].b, std::move(subs)});
      }
      a = b;
    }
  }

  topo.node_kind_.assign(nn, 0);
  std::vector<char> vertex_flag(nn, 0);
  {
    // group id per distinct substructure set
    std::map<std::vector<int>, int> group_of;
    std::vector<int> seg_group(edge_segs.size());
    for (size_t s = 0; s < edge_segs.size(); ++s) {
      auto it = group_of.emplace(edge_segs[s].subs, static_cast<int>(group_of.size())).first;
      seg_group[s] = it->second;
    }
    // vertices: degree != 2 within a group, or touched by several groups
    std::vector<std::pair<int, int>> node_group;
    for (size_t s = 0; s < edge_segs.size(); ++s) {
      node_group.emplace_back(edge_segs[s].a, seg_group[s]);
      node_group.emplace_back(edge_segs[s].b, seg_group[s]);
    }
    std::sort(node_group.begin(), node_group.end());
    for (size_t a = 0; a < node_group.size();) {
      size_t b = a;
      int groups = 0;
      bool odd_degree = false;
      while (b < node_group.size() && node_group[b].first == node_group[a].first) {
        size_t c = b;
        while (c < node_group.size() && node_group[c] == node_group[b]) ++c;
        if (c - b != 2) odd_degree = true;
        ++groups;
        b = c;
      }
      if (odd_degree || groups > 1) vertex_flag[node_group[a].first] = 1;
      a = b;
    }

    // split groups into pieces joined only through non-vertex nodes
    DisjointSets sets(static_cast<int>(edge_segs.size()));
    std::unordered_map<long, int> first_seg;  // (node, group) -> segment
    for (size_t s = 0; s < edge_segs.size(); ++s)
      for (int node : {edge_segs[s].a, edge_segs[s].b}) {
        if (vertex_flag[node]) continue;
        const long key = static_cast<long>(node) * (group_of.size() + 1) + seg_group[s];
        auto [it, inserted] = first_seg.emplace(key, static_cast<int>(s));
        if (!inserted) sets.unite(it->second, static_cast<int>(s));
      }
    std::map<int, std::vector<int>> pieces;
    for (size_t s = 0; s < edge_segs.size(); ++s) pieces[sets.find(static_cast<int>(s))].push_back(static_cast<int>(s));

    for (auto& [root, segs] : pieces) {
      InterfaceEdge edge;
      edge.substructures = edge_segs[root].subs;
      std::vector<int> nodes;
      for (int s : segs) {
        edge.segments.push_back({edge_segs[s].a, edge_segs[s].b});
        nodes.push_back(edge_segs[s].a);
        nodes.push_back(edge_segs[s].b);
      }
      std::sort(edge.segments.begin(), edge.segments.end());
      std::sort(nodes.begin(), nodes.end());
      nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
      for (int v : nodes) (vertex_flag[v] ? edge.endpoints : edge.interior_nodes).push_back(v);
      edge.closed = edge.endpoints.empty();
      edge.chain = walk_chain(edge.segments, vertex_flag);
      topo.edges.push_back(std::move(edge));
    }
    std::sort(topo.edges.begin(), topo.edges.end(), [](const InterfaceEdge& x, const InterfaceEdge& y) {
      return std::tie(x.substructures, x.segments) < std::tie(y.substructures, y.segments);
    });
    for (const auto& e : topo.edges)
      for (int v : e.interior_nodes) topo.node_kind_[v] = 1;
  }
  for (int v = 0; v < nn; ++v)
    if (vertex_flag[v]) {
      topo.vertices.push_back(v);
      topo.node_kind_[v] = 2;
    }
  return topo;
}

// ---------------------------------------------------------------------------

namespace {

using Vec = std::array<double, 3>;
Vec sub(const Vec& a, const Vec& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
Vec cross(const Vec& a, const Vec& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}
double dot(const Vec& a, const Vec& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
Vec normalized(Vec a) {
  const double n = std::sqrt(dot(a, a));
  return {a[0] / n, a[1] / n, a[2] / n};
}
// Direction with a canonical sign so that v and -v compare equal.
Vec canonical(Vec a) {
  a = normalized(a);
  for (double c : a) {
    if (std::abs(c) < 1e-12) continue;
    if (c < 0) a = {-a[0], -a[1], -a[2]};
    break;
  }
  return a;
}

double dihedral(const Mesh& mesh, const std::array<int, 4>& tet, int a, int b) {
  int others[2], k = 0;
  for (int v : tet)
    if (v != a && v != b) others[k++] = v;
  const Vec& pa = mesh.vertices[a];
  const Vec e = sub(mesh.vertices[b], pa);
  const Vec n1 = cross(e, sub(mesh.vertices[others[0]], pa));
  const Vec n2 = cross(e, sub(mesh.vertices[others[1]], pa));
  const double c = dot(n1, n2) / std::sqrt(dot(n1, n1) * dot(n2, n2));
  return std::acos(std::clamp(c, -1.0, 1.0));
}

}  // namespace

FaceFeatures face_features(const Mesh& mesh, const InterfaceTopology& topo, int face, int side) {
  const InterfaceFace& f = topo.faces.at(face);
  if (!f.involves(side)) throw std::invalid_argument("face does not touch the requested side");
  FaceFeatures out;

  auto tri_normal = [&](const std::array<int, 3>& t) {
    const Vec& p = mesh.vertices[t[0]];
    return canonical(cross(sub(mesh.vertices[t[1]], p), sub(mesh.vertices[t[2]], p)));
  };
  double h = 0;
  for (const auto& t : f.triangles)
    h = std::max(h, std::sqrt(dot(sub(mesh.vertices[t[1]], mesh.vertices[t[0]]),
                                  sub(mesh.vertices[t[1]], mesh.vertices[t[0]]))));
  const double tol = 1e-6 * std::max(h, 1e-300);

  std::vector<std::array<double, 4>> planes;
  std::vector<Vec> normals;
  for (const auto& t : f.triangles) {
    const Vec n = tri_normal(t);
    normals.push_back(n);
    const double d = dot(n, mesh.vertices[t[0]]);
    bool found = false;
    for (const auto& p : planes)
      if (std::abs(p[0] - n[0]) < 1e-9 && std::abs(p[1] - n[1]) < 1e-9 &&
          std::abs(p[2] - n[2]) < 1e-9 && std::abs(p[3] - d) < tol) {
        found = true;
        break;
      }
    if (!found) planes.push_back({n[0], n[1], n[2], d});
  }
  out.planes = static_cast<int>(planes.size());

  // crease segments: interior segments of the face between non-coplanar triangles
  std::map<std::pair<int, int>, std::vector<int>> seg_tris;
  for (int t = 0; t < static_cast<int>(f.triangles.size()); ++t) {
    const auto& tri = f.triangles[t];
    seg_tris[{tri[0], tri[1]}].push_back(t);
    seg_tris[{tri[0], tri[2]}].push_back(t);
    seg_tris[{tri[1], tri[2]}].push_back(t);
  }
  std::map<std::pair<int, int>, double> creases;
  for (const auto& [seg, ts] : seg_tris)
    if (ts.size() == 2 && std::abs(dot(normals[ts[0]], normals[ts[1]])) < 1.0 - 1e-9)
      creases[seg] = 0.0;

  static constexpr int pairs[6][2] = {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}};
  for (size_t t = 0; t < mesh.tets.size(); ++t) {
    if (mesh.tet_substructure[t] != side) continue;
    const auto& tet = mesh.tets[t];
    for (const auto& p : pairs) {
      const int a = std::min(tet[p[0]], tet[p[1]]), b = std::max(tet[p[0]], tet[p[1]]);
      auto it = creases.find({a, b});
      if (it != creases.end()) it->second += dihedral(mesh, tet, a, b);
    }
  }

  std::vector<std::array<int, 2>> reflex;
  for (const auto& [seg, angle] : creases)
    if (angle > M_PI + 1e-6) reflex.push_back({seg.first, seg.second});

  // chain collinear reflex segments into lines
  DisjointSets sets(static_cast<int>(reflex.size()));
  std::map<int, std::vector<int>> at_node;
  for (int s = 0; s < static_cast<int>(reflex.size()); ++s) {
    at_node[reflex[s][0]].push_back(s);
    at_node[reflex[s][1]].push_back(s);
  }
  auto direction = [&](int s) {
    return canonical(sub(mesh.vertices[reflex[s][1]], mesh.vertices[reflex[s][0]]));
  };
  for (const auto& [node, segs] : at_node)
    for (size_t p = 0; p < segs.size(); ++p)
      for (size_t q = p + 1; q < segs.size(); ++q)
        if (std::abs(dot(direction(segs[p]), direction(segs[q]))) > 1.0 - 1e-9)
          sets.unite(segs[p], segs[q]);
  for (int s = 0; s < static_cast<int>(reflex.size()); ++s)
    if (sets.find(s) == s) ++out.reflex_lines;
  return out;
}

}  // namespace emi
