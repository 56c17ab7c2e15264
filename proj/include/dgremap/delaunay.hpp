// Mesh builders: structured interval/square meshes, Delaunay triangulation of
// planar point sets, and the randomly perturbed meshes used by the 2D
// interpolation study.
#pragma once

#include <vector>

#include "dgremap/common.hpp"
#include "dgremap/mesh.hpp"

namespace dgremap {

// Uniform 1D mesh of n elements on (a,b); endpoints are corners.
SimplicialMesh<1> uniform_interval_mesh(double a, double b, int n);

// n x n grid on the unit square, each cell split into four triangles by its
// center: 4 n^2 elements.
SimplicialMesh<2> square_quad4_mesh(int n);

// n x n grid, each cell split into two triangles: 2 n^2 elements.
SimplicialMesh<2> square_diag_mesh(int n);

// Delaunay triangulation of a point set whose convex hull is the unit square;
// boundary markers are assigned geometrically (tolerance 1e-12).
SimplicialMesh<2> delaunay_unit_square(const std::vector<Eigen::Vector2d>& points,
                                       Rng& rng);

// Start from the square_quad4_mesh(n) vertex set, displace each interior
// vertex by the given fraction of the mean element diameter (uniform per
// coordinate), and return the Delaunay mesh of the displaced points.
SimplicialMesh<2> perturbed_delaunay_square(int n, double perturb_fraction, Rng& rng);

}  // namespace dgremap
