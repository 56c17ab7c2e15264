// Plain-text mesh format and legacy-VTK emission.
//
// Format: header "dim N_v N", then N_v coordinate lines, then N connectivity
// lines (0-based), then N_v boundary-marker lines (0 interior, 1 boundary
// edge, 2 corner).
#pragma once

#include <iosfwd>
#include <string>

#include "dgremap/mesh.hpp"

namespace dgremap {

template <int D>
void write_mesh(std::ostream& os, const SimplicialMesh<D>& mesh);

template <int D>
SimplicialMesh<D> read_mesh(std::istream& is);

// peeks at the header's dimension without consuming the stream position
int read_mesh_dimension(std::istream& is);

template <int D>
void write_mesh_file(const std::string& path, const SimplicialMesh<D>& mesh);

template <int D>
SimplicialMesh<D> read_mesh_file(const std::string& path);

int mesh_file_dimension(const std::string& path);

// Legacy VTK unstructured grid text; optional per-element scalar field.
template <int D>
void write_vtk(std::ostream& os, const SimplicialMesh<D>& mesh,
               const Eigen::VectorXd* cell_scalar = nullptr,
               const std::string& scalar_name = "value");

template <int D>
void write_vtk_file(const std::string& path, const SimplicialMesh<D>& mesh,
                    const Eigen::VectorXd* cell_scalar = nullptr,
                    const std::string& scalar_name = "value");

}  // namespace dgremap
