#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include "emi/geometry.hpp"

namespace emi {

void write_vtk(const Mesh& mesh, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  const size_t nt = mesh.tets.size();
  out << "# vtk DataFile Version 3.0\n"
      << "emi-bddc mesh\n"
      << "ASCII\n"
      << "DATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << mesh.vertices.size() << " double\n" << std::setprecision(17);
  for (const auto& p : mesh.vertices) out << p[0] << ' ' << p[1] << ' ' << p[2] << '\n';
  out << "CELLS " << nt << ' ' << 5 * nt << '\n';
  for (const auto& t : mesh.tets) out << "4 " << t[0] << ' ' << t[1] << ' ' << t[2] << ' ' << t[3] << '\n';
  out << "CELL_TYPES " << nt << '\n';
  for (size_t t = 0; t < nt; ++t) out << "10\n";
  out << "CELL_DATA " << nt << '\n'
      << "SCALARS substructure int 1\n"
      << "LOOKUP_TABLE default\n";
  for (int s : mesh.tet_substructure) out << s << '\n';
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

namespace {

void expect(std::istream& in, const std::string& word, const std::string& path) {
  std::string token;
  if (!(in >> token) || token != word)
    throw std::runtime_error("'" + path + "': expected '" + word + "', got '" + token + "'");
}

}  // namespace

Mesh read_vtk(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::string line;
  std::getline(in, line);  // version
  std::getline(in, line);  // title
  expect(in, "ASCII", path);
  expect(in, "DATASET", path);
  expect(in, "UNSTRUCTURED_GRID", path);

  Mesh mesh;
  size_t n = 0, nt = 0, total = 0;
  std::string type;
  expect(in, "POINTS", path);
  in >> n >> type;
  mesh.vertices.resize(n);
  for (auto& p : mesh.vertices) in >> p[0] >> p[1] >> p[2];
  expect(in, "CELLS", path);
  in >> nt >> total;
  if (total != 5 * nt) throw std::runtime_error("'" + path + "': only tetrahedral cells are supported");
  mesh.tets.resize(nt);
  for (auto& t : mesh.tets) {
    int count = 0;
    in >> count >> t[0] >> t[1] >> t[2] >> t[3];
    if (count != 4) throw std::runtime_error("'" + path + "': non-tetrahedral cell");
  }
  expect(in, "CELL_TYPES", path);
  in >> total;
  for (size_t t = 0; t < nt; ++t) {
    int ct = 0;
    in >> ct;
    if (ct != 10) throw std::runtime_error("'" + path + "': cell type " + std::to_string(ct) + " is not a tetrahedron");
  }
  expect(in, "CELL_DATA", path);
  in >> total;
  std::string name;
  expect(in, "SCALARS", path);
  in >> name >> type;
  if (name != "substructure") throw std::runtime_error("'" + path + "': missing substructure array");
  std::getline(in, line);  // optional component count
  expect(in, "LOOKUP_TABLE", path);
  in >> name;
  mesh.tet_substructure.resize(nt);
  for (auto& s : mesh.tet_substructure) in >> s;
  if (!in) throw std::runtime_error("'" + path + "': truncated file");
  for (const auto& t : mesh.tets)
    for (int v : t)
      if (v < 0 || static_cast<size_t>(v) >= n)
        throw std::runtime_error("'" + path + "': node index out of range");
  return mesh;
}

}  // namespace emi
