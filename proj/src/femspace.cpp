#include "emi/femspace.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace emi {

int SubstructureSpace::local_index(int node, int provenance) const {
  if (provenance == id) {
    auto first = dofs.begin(), last = dofs.begin() + num_own;
    auto it = std::lower_bound(first, last, node, [](const LocalDof& d, int n) { return d.node < n; });
    return (it != last && it->node == node) ? static_cast<int>(it - dofs.begin()) : -1;
  }
  auto first = dofs.begin() + num_own, last = dofs.end();
  auto it = std::lower_bound(first, last, std::make_pair(provenance, node),
                             [](const LocalDof& d, const std::pair<int, int>& key) {
                               return std::make_pair(d.provenance, d.node) < key;
                             });
  return (it != last && it->provenance == provenance && it->node == node)
             ? static_cast<int>(it - dofs.begin())
             : -1;
}

int DofMap::global_index(int owner, int node) const {
  const int local = subs.at(owner).local_index(node, owner);
  return local < 0 ? -1 : subs[owner].global[local];
}

std::span<const DofCopy> DofMap::copies(int position) const {
  return {copies_.data() + copy_offsets_[position],
          static_cast<size_t>(copy_offsets_[position + 1] - copy_offsets_[position])};
}

std::vector<int> DofMap::interface_slot(int i) const {
  const auto& s = subs.at(i);
  std::vector<int> slot(s.size(), -1);
  for (int k = 0; k < static_cast<int>(s.interface.size()); ++k) slot[s.interface[k]] = k;
  return slot;
}

DofMap build_composite_space(const Mesh& mesh, const InterfaceTopology& topo) {
  const int ns = mesh.num_substructures();
  DofMap map;
  map.subs.resize(ns);

  std::vector<std::vector<int>> own(ns), on_face(ns);
  for (size_t t = 0; t < mesh.tets.size(); ++t) {
    auto& v = own[mesh.tet_substructure[t]];
    v.insert(v.end(), mesh.tets[t].begin(), mesh.tets[t].end());
  }
  std::vector<std::vector<std::pair<int, int>>> traces(ns);
  for (const auto& f : topo.faces) {
    for (int x : f.nodes) {
      traces[f.first].emplace_back(f.second, x);
      traces[f.second].emplace_back(f.first, x);
    }
    on_face[f.first].insert(on_face[f.first].end(), f.nodes.begin(), f.nodes.end());
    on_face[f.second].insert(on_face[f.second].end(), f.nodes.begin(), f.nodes.end());
  }

  int offset = 0;
  for (int i = 0; i < ns; ++i) {
    auto& o = own[i];
    std::sort(o.begin(), o.end());
    o.erase(std::unique(o.begin(), o.end()), o.end());
    auto& fn = on_face[i];
    std::sort(fn.begin(), fn.end());
    fn.erase(std::unique(fn.begin(), fn.end()), fn.end());
    auto& tr = traces[i];
    std::sort(tr.begin(), tr.end());
    tr.erase(std::unique(tr.begin(), tr.end()), tr.end());

    SubstructureSpace& s = map.subs[i];
    s.id = i;
    s.num_own = static_cast<int>(o.size());
    s.dofs.reserve(o.size() + tr.size());
    for (int x : o) {
      s.dofs.push_back({x, i});
      s.global.push_back(offset++);
      map.globals.push_back({i, x});
    }
    for (const auto& [p, x] : tr) s.dofs.push_back({x, p});
  }

  for (int i = 0; i < ns; ++i) {
    SubstructureSpace& s = map.subs[i];
    const auto& fn = on_face[i];
    for (int l = 0; l < s.num_own; ++l) {
      const bool iface = std::binary_search(fn.begin(), fn.end(), s.dofs[l].node);
      (iface ? s.interface : s.interior).push_back(l);
    }
    for (int l = s.num_own; l < s.size(); ++l) {
      const LocalDof& d = s.dofs[l];
      const int g = map.subs[d.provenance].local_index(d.node, d.provenance);
      if (g < 0)
        throw std::runtime_error("trace node " + std::to_string(d.node) + " of substructure " +
                                 std::to_string(d.provenance) + " held by " + std::to_string(i) +
                                 " is not owned by the neighbour");
      s.global.push_back(map.subs[d.provenance].global[g]);
      s.interface.push_back(l);
    }
  }

  // interface globals and their copies
  std::vector<std::pair<int, DofCopy>> all;
  for (int i = 0; i < ns; ++i)
    for (int l : map.subs[i].interface) all.push_back({map.subs[i].global[l], {i, l}});
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first < b.first : a.second.substructure < b.second.substructure;
  });
  map.interface_position.assign(map.globals.size(), -1);
  map.copy_offsets_.push_back(0);
  for (size_t a = 0; a < all.size();) {
    size_t b = a;
    while (b < all.size() && all[b].first == all[a].first) map.copies_.push_back(all[b++].second);
    map.interface_position[all[a].first] = static_cast<int>(map.interface_dofs.size());
    map.interface_dofs.push_back(all[a].first);
    map.copy_offsets_.push_back(static_cast<int>(map.copies_.size()));
    a = b;
  }
  return map;
}

std::vector<DofClasses> classify_dofs(const DofMap& dofs, const InterfaceTopology& topo) {
  std::vector<DofClasses> out(dofs.subs.size());
  for (size_t i = 0; i < dofs.subs.size(); ++i) {
    const auto& s = dofs.subs[i];
    out[i].interior = s.interior;
    for (int l : s.interface)
      (topo.is_vertex(s.dofs[l].node) ? out[i].primal_vertex : out[i].dual).push_back(l);
  }
  return out;
}

std::string to_string(PrimalVariant v) { return v == PrimalVariant::vef ? "VEF" : "VE"; }

PrimalVariant parse_variant(const std::string& name) {
  if (name == "vef" || name == "VEF") return PrimalVariant::vef;
  if (name == "ve" || name == "VE") return PrimalVariant::ve;
  throw std::invalid_argument("unknown primal space '" + name + "' (expected vef or ve)");
}

namespace {

double distance(const Point3& a, const Point3& b) {
  return std::sqrt((a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]) + (a[2] - b[2]) * (a[2] - b[2]));
}

double triangle_area(const Mesh& mesh, const std::array<int, 3>& t) {
  const Point3& a = mesh.vertices[t[0]];
  const Point3& b = mesh.vertices[t[1]];
  const Point3& c = mesh.vertices[t[2]];
  const double u[3] = {b[0] - a[0], b[1] - a[1], b[2] - a[2]};
  const double v[3] = {c[0] - a[0], c[1] - a[1], c[2] - a[2]};
  const double n[3] = {u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]};
  return 0.5 * std::sqrt(n[0] * n[0] + n[1] * n[1] + n[2] * n[2]);
}

// Lumped mass weights restricted to `keep`, normalised to sum to one.
std::vector<std::pair<int, double>> normalised(const std::map<int, double>& lumped,
                                               const std::vector<int>& keep) {
  std::vector<std::pair<int, double>> w;
  double total = 0;
  for (int x : keep) {
    auto it = lumped.find(x);
    const double v = it == lumped.end() ? 0.0 : it->second;
    w.emplace_back(x, v);
    total += v;
  }
  for (auto& [x, v] : w) v /= total;
  return w;
}

}  // namespace

ConstraintSet build_primal_constraints(const Mesh& mesh, const DofMap& dofs,
                                       const InterfaceTopology& topo, PrimalVariant variant) {
  const int ns = static_cast<int>(dofs.subs.size());
  ConstraintSet set;
  set.variant = variant;
  set.rows_of.resize(ns);
  set.counts.resize(ns);

  auto add_class = [&](EntityKind kind, int entity, int provenance,
                       const std::vector<std::pair<int, std::vector<std::pair<int, double>>>>& holder_rows) {
    PrimalClass cls{kind, entity, provenance, {}};
    const int id = static_cast<int>(set.classes.size());
    for (const auto& [h, entries] : holder_rows) {
      ConstraintRow row;
      row.substructure = h;
      row.primal = id;
      for (const auto& [l, w] : entries) {
        row.dofs.push_back(l);
        row.weights.push_back(w);
      }
      cls.rows.push_back(static_cast<int>(set.rows.size()));
      set.rows_of[h].push_back(static_cast<int>(set.rows.size()));
      set.rows.push_back(std::move(row));
      auto& c = set.counts[h];
      (kind == EntityKind::vertex ? c.vertex_rows : kind == EntityKind::edge ? c.edge_rows : c.face_rows)++;
    }
    set.classes.push_back(std::move(cls));
  };

  for (int x : topo.vertices) {
    for (int s : topo.substructures_at(x)) ++set.counts[s].vertices;
    for (int p : topo.substructures_at(x)) {
      const int g = dofs.global_index(p, x);
      if (g < 0 || dofs.interface_position[g] < 0) continue;
      std::vector<std::pair<int, std::vector<std::pair<int, double>>>> rows;
      for (const DofCopy& c : dofs.copies(dofs.interface_position[g]))
        rows.push_back({c.substructure, {{c.local, 1.0}}});
      add_class(EntityKind::vertex, x, p, rows);
    }
  }

  for (int e = 0; e < static_cast<int>(topo.edges.size()); ++e) {
    const InterfaceEdge& edge = topo.edges[e];
    std::map<int, double> lumped;
    double length = 0;
    for (const auto& seg : edge.segments) {
      const double l = distance(mesh.vertices[seg[0]], mesh.vertices[seg[1]]);
      lumped[seg[0]] += 0.5 * l;
      lumped[seg[1]] += 0.5 * l;
      length += l;
    }
    if (!(length > 0)) throw std::runtime_error("edge " + std::to_string(e) + " has zero length");
    // A segment between two vertices carries no free dofs; the vertex
    // constraints already fix it.
    if (edge.interior_nodes.empty()) continue;
    const auto weights = normalised(lumped, edge.interior_nodes);
    for (int p : edge.substructures) {
      std::vector<std::pair<int, std::vector<std::pair<int, double>>>> rows;
      for (int h : edge.substructures) {
        std::vector<std::pair<int, double>> entries;
        for (const auto& [x, w] : weights) {
          const int l = dofs.subs[h].local_index(x, p);
          if (l < 0) break;
          entries.emplace_back(l, w);
        }
        if (entries.empty()) continue;
        if (entries.size() != weights.size())
          throw std::runtime_error("substructure " + std::to_string(h) + " holds a partial copy of edge " +
                                   std::to_string(e));
        rows.push_back({h, std::move(entries)});
      }
      add_class(EntityKind::edge, e, p, rows);
    }
  }

  if (variant == PrimalVariant::vef) {
    for (int f = 0; f < static_cast<int>(topo.faces.size()); ++f) {
      const InterfaceFace& face = topo.faces[f];
      std::map<int, double> lumped;
      double area = 0;
      for (const auto& t : face.triangles) {
        const double a = triangle_area(mesh, t);
        for (int x : t) lumped[x] += a / 3.0;
        area += a;
      }
      if (!(area > 0)) throw std::runtime_error("face " + std::to_string(f) + " has zero area");
      std::vector<int> free;
      for (int x : face.nodes)
        if (!topo.is_edge_node(x)) free.push_back(x);
      if (free.empty()) continue;
      const auto weights = normalised(lumped, free);
      for (int p : {face.first, face.second}) {
        std::vector<std::pair<int, std::vector<std::pair<int, double>>>> rows;
        for (int h : {face.first, face.second}) {
          std::vector<std::pair<int, double>> entries;
          for (const auto& [x, w] : weights) {
            const int l = dofs.subs[h].local_index(x, p);
            if (l < 0) throw std::runtime_error("face copy missing in substructure " + std::to_string(h));
            entries.emplace_back(l, w);
          }
          rows.push_back({h, std::move(entries)});
        }
        add_class(EntityKind::face, f, p, rows);
      }
    }
  }
  return set;
}

}  // namespace emi
