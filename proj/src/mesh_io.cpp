#include "dgremap/mesh_io.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

namespace dgremap {

template <int D>
void write_mesh(std::ostream& os, const SimplicialMesh<D>& mesh) {
  os << D << " " << mesh.n_vertices() << " " << mesh.n_elements() << "\n";
  os << std::setprecision(17);
  for (int i = 0; i < mesh.n_vertices(); ++i) {
    for (int d = 0; d < D; ++d) os << (d ? " " : "") << mesh.vertex(i)(d);
    os << "\n";
  }
  for (int e = 0; e < mesh.n_elements(); ++e) {
    const auto& el = mesh.element(e);
    for (int k = 0; k <= D; ++k) os << (k ? " " : "") << el[k];
    os << "\n";
  }
  for (int i = 0; i < mesh.n_vertices(); ++i)
    os << static_cast<int>(mesh.marker(i)) << "\n";
}

template <int D>
SimplicialMesh<D> read_mesh(std::istream& is) {
  int dim = 0, nv = 0, ne = 0;
  if (!(is >> dim >> nv >> ne)) throw IoError("cannot read mesh header");
  if (dim != D)
    throw ValidationError("mesh file has dimension " + std::to_string(dim) +
                          ", expected " + std::to_string(D));
  if (nv <= 0 || ne <= 0) throw IoError("mesh header with nonpositive counts");
  std::vector<typename SimplicialMesh<D>::Point> vertices(nv);
  for (int i = 0; i < nv; ++i)
    for (int d = 0; d < D; ++d)
      if (!(is >> vertices[i](d))) throw IoError("truncated vertex section");
  std::vector<typename MeshTopology<D>::Element> elements(ne);
  for (int e = 0; e < ne; ++e)
    for (int k = 0; k <= D; ++k)
      if (!(is >> elements[e][k])) throw IoError("truncated connectivity section");
  std::vector<BoundaryMarker> markers(nv);
  for (int i = 0; i < nv; ++i) {
    int m = -1;
    if (!(is >> m)) throw IoError("truncated boundary-marker section");
    if (m < 0 || m > 2) throw IoError("invalid boundary marker " + std::to_string(m));
    markers[i] = static_cast<BoundaryMarker>(m);
  }
  return SimplicialMesh<D>::create(std::move(vertices), std::move(elements),
                                   std::move(markers), /*normalize_orientation=*/true);
}

int read_mesh_dimension(std::istream& is) {
  const auto pos = is.tellg();
  int dim = 0;
  if (!(is >> dim)) throw IoError("cannot read mesh header");
  is.seekg(pos);
  return dim;
}

template <int D>
void write_mesh_file(const std::string& path, const SimplicialMesh<D>& mesh) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open " + path + " for writing");
  write_mesh(os, mesh);
}

template <int D>
SimplicialMesh<D> read_mesh_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path);
  return read_mesh<D>(is);
}

int mesh_file_dimension(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path);
  return read_mesh_dimension(is);
}

template <int D>
void write_vtk(std::ostream& os, const SimplicialMesh<D>& mesh,
               const Eigen::VectorXd* cell_scalar, const std::string& scalar_name) {
  os << "# vtk DataFile Version 3.0\n";
  os << "dgremap mesh\n";
  os << "ASCII\n";
  os << "DATASET UNSTRUCTURED_GRID\n";
  os << "POINTS " << mesh.n_vertices() << " double\n";
  os << std::setprecision(17);
  for (int i = 0; i < mesh.n_vertices(); ++i) {
    const auto& x = mesh.vertex(i);
    os << x(0) << " " << (D > 1 ? x(D - 1) : 0.0) << " 0\n";
  }
  const int ne = mesh.n_elements();
  os << "CELLS " << ne << " " << ne * (D + 2) << "\n";
  for (int e = 0; e < ne; ++e) {
    const auto& el = mesh.element(e);
    os << (D + 1);
    for (int k = 0; k <= D; ++k) os << " " << el[k];
    os << "\n";
  }
  os << "CELL_TYPES " << ne << "\n";
  for (int e = 0; e < ne; ++e) os << (D == 1 ? 3 : 5) << "\n";  // VTK_LINE / VTK_TRIANGLE
  if (cell_scalar) {
    os << "CELL_DATA " << ne << "\n";
    os << "SCALARS " << scalar_name << " double 1\n";
    os << "LOOKUP_TABLE default\n";
    for (int e = 0; e < ne; ++e) os << (*cell_scalar)(e) << "\n";
  }
}

template <int D>
void write_vtk_file(const std::string& path, const SimplicialMesh<D>& mesh,
                    const Eigen::VectorXd* cell_scalar, const std::string& scalar_name) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open " + path + " for writing");
  write_vtk(os, mesh, cell_scalar, scalar_name);
}

template void write_mesh<1>(std::ostream&, const SimplicialMesh<1>&);
template void write_mesh<2>(std::ostream&, const SimplicialMesh<2>&);
template SimplicialMesh<1> read_mesh<1>(std::istream&);
template SimplicialMesh<2> read_mesh<2>(std::istream&);
template void write_mesh_file<1>(const std::string&, const SimplicialMesh<1>&);
template void write_mesh_file<2>(const std::string&, const SimplicialMesh<2>&);
template SimplicialMesh<1> read_mesh_file<1>(const std::string&);
template SimplicialMesh<2> read_mesh_file<2>(const std::string&);
template void write_vtk<1>(std::ostream&, const SimplicialMesh<1>&, const Eigen::VectorXd*,
                           const std::string&);
template void write_vtk<2>(std::ostream&, const SimplicialMesh<2>&, const Eigen::VectorXd*,
                           const std::string&);
template void write_vtk_file<1>(const std::string&, const SimplicialMesh<1>&,
                                const Eigen::VectorXd*, const std::string&);
template void write_vtk_file<2>(const std::string&, const SimplicialMesh<2>&,
                                const Eigen::VectorXd*, const std::string&);

}  // namespace dgremap
