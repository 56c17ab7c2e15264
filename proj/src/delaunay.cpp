#include "dgremap/delaunay.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace dgremap {

SimplicialMesh<1> uniform_interval_mesh(double a, double b, int n) {
  if (n < 1 || !(b > a)) throw ValidationError("bad interval mesh parameters");
  std::vector<SimplicialMesh<1>::Point> vertices(n + 1);
  for (int i = 0; i <= n; ++i) vertices[i](0) = a + (b - a) * i / n;
  std::vector<MeshTopology<1>::Element> elements(n);
  for (int e = 0; e < n; ++e) elements[e] = {e, e + 1};
  std::vector<BoundaryMarker> markers(n + 1, BoundaryMarker::Interior);
  markers.front() = markers.back() = BoundaryMarker::Corner;
  return SimplicialMesh<1>::create(std::move(vertices), std::move(elements),
                                   std::move(markers));
}

namespace {

std::vector<BoundaryMarker> unit_square_markers(
    const std::vector<Eigen::Vector2d>& vertices) {
  const double tol = 1e-12;
  std::vector<BoundaryMarker> markers(vertices.size(), BoundaryMarker::Interior);
  for (std::size_t i = 0; i < vertices.size(); ++i) {
    const double x = vertices[i](0), y = vertices[i](1);
    const bool on_x = std::abs(x) < tol || std::abs(x - 1.0) < tol;
    const bool on_y = std::abs(y) < tol || std::abs(y - 1.0) < tol;
    if (on_x && on_y)
      markers[i] = BoundaryMarker::Corner;
    else if (on_x || on_y)
      markers[i] = BoundaryMarker::Boundary;
  }
  return markers;
}

}  // namespace

SimplicialMesh<2> square_quad4_mesh(int n) {
  if (n < 1) throw ValidationError("square_quad4_mesh requires n >= 1");
  std::vector<Eigen::Vector2d> vertices;
  vertices.reserve((n + 1) * (n + 1) + n * n);
  const double h = 1.0 / n;
  auto grid = [n](int i, int j) { return i * (n + 1) + j; };
  for (int i = 0; i <= n; ++i)
    for (int j = 0; j <= n; ++j) vertices.emplace_back(j * h, i * h);
  const int center0 = (n + 1) * (n + 1);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) vertices.emplace_back((j + 0.5) * h, (i + 0.5) * h);
  std::vector<MeshTopology<2>::Element> elements;
  elements.reserve(4 * n * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const int c = center0 + i * n + j;
      const int sw = grid(i, j), se = grid(i, j + 1);
      const int nw = grid(i + 1, j), ne = grid(i + 1, j + 1);
      elements.push_back({sw, se, c});
      elements.push_back({se, ne, c});
      elements.push_back({ne, nw, c});
      elements.push_back({nw, sw, c});
    }
  auto markers = unit_square_markers(vertices);
  return SimplicialMesh<2>::create(std::move(vertices), std::move(elements),
                                   std::move(markers));
}

SimplicialMesh<2> square_diag_mesh(int n) {
  if (n < 1) throw ValidationError("square_diag_mesh requires n >= 1");
  std::vector<Eigen::Vector2d> vertices;
  const double h = 1.0 / n;
  auto grid = [n](int i, int j) { return i * (n + 1) + j; };
  for (int i = 0; i <= n; ++i)
    for (int j = 0; j <= n; ++j) vertices.emplace_back(j * h, i * h);
  std::vector<MeshTopology<2>::Element> elements;
  elements.reserve(2 * n * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const int sw = grid(i, j), se = grid(i, j + 1);
      const int nw = grid(i + 1, j), ne = grid(i + 1, j + 1);
      elements.push_back({sw, se, ne});
      elements.push_back({sw, ne, nw});
    }
  auto markers = unit_square_markers(vertices);
  return SimplicialMesh<2>::create(std::move(vertices), std::move(elements),
                                   std::move(markers));
}

namespace {

// Incremental Delaunay triangulation with edge flips.  Predicates are plain
// double arithmetic guarded by error bounds; ambiguous cases (exactly
// cocircular boundary configurations) are left unflipped, which still yields
// a valid triangulation.
class DelaunayBuilder {
 public:
  explicit DelaunayBuilder(const std::vector<Eigen::Vector2d>& points, Rng& rng)
      : pts_(points) {
    const int n = static_cast<int>(pts_.size());
    if (n < 3) throw ValidationError("Delaunay needs at least 3 points");
    // enclosing super-triangle, appended after the real points
    pts_.emplace_back(-8.0, -8.0);
    pts_.emplace_back(24.0, -8.0);
    pts_.emplace_back(-8.0, 24.0);
    tris_.push_back({{n, n + 1, n + 2}, {-1, -1, -1}});

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    for (int i = n - 1; i > 0; --i) std::swap(order[i], order[rng.below(i + 1)]);
    for (int id : order) insert(id);
  }

  SimplicialMesh<2> extract() const {
    const int n = static_cast<int>(pts_.size()) - 3;
    std::vector<MeshTopology<2>::Element> elements;
    for (std::size_t t = 0; t < tris_.size(); ++t) {
      if (!alive_[t]) continue;
      const auto& tri = tris_[t];
      if (tri.v[0] >= n || tri.v[1] >= n || tri.v[2] >= n) continue;
      elements.push_back({tri.v[0], tri.v[1], tri.v[2]});
    }
    std::vector<Eigen::Vector2d> vertices(pts_.begin(), pts_.begin() + n);
    auto markers = unit_square_markers(vertices);
    return SimplicialMesh<2>::create(std::move(vertices), std::move(elements),
                                     std::move(markers));
  }

 private:
  struct Tri {
    std::array<int, 3> v;
    std::array<int, 3> n;  // n[k] across the edge opposite v[k]
  };

  std::vector<Eigen::Vector2d> pts_;
  std::vector<Tri> tris_;
  std::vector<char> alive_ = {1};
  int last_ = 0;

  static double orient(const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                       const Eigen::Vector2d& c, double* bound = nullptr) {
    const double l = (b(0) - a(0)) * (c(1) - a(1));
    const double r = (b(1) - a(1)) * (c(0) - a(0));
    if (bound) *bound = 8.0 * 2.2e-16 * (std::abs(l) + std::abs(r));
    return l - r;
  }

  // positive when d lies strictly inside the circumcircle of CCW (a,b,c)
  double incircle(int ia, int ib, int ic, int id, double* bound) const {
    const Eigen::Vector2d& d = pts_[id];
    const double ax = pts_[ia](0) - d(0), ay = pts_[ia](1) - d(1);
    const double bx = pts_[ib](0) - d(0), by = pts_[ib](1) - d(1);
    const double cx = pts_[ic](0) - d(0), cy = pts_[ic](1) - d(1);
    const double a2 = ax * ax + ay * ay;
    const double b2 = bx * bx + by * by;
    const double c2 = cx * cx + cy * cy;
    const double t1 = a2 * (bx * cy - by * cx);
    const double t2 = b2 * (ax * cy - ay * cx);
    const double t3 = c2 * (ax * by - ay * bx);
    *bound = 32.0 * 2.2e-16 * (std::abs(t1) + std::abs(t2) + std::abs(t3));
    return t1 - t2 + t3;
  }

  int neighbor_slot(const Tri& t, int nbr) const {
    for (int k = 0; k < 3; ++k)
      if (t.n[k] == nbr) return k;
    throw Error("delaunay: broken adjacency");
  }

  void relink(int tri, int old_nbr, int new_nbr) {
    if (tri < 0) return;
    tris_[tri].n[neighbor_slot(tris_[tri], old_nbr)] = new_nbr;
  }

  int fresh(const Tri& t) {
    tris_.push_back(t);
    alive_.push_back(1);
    return static_cast<int>(tris_.size()) - 1;
  }

  // containing triangle; on_edge set to the local edge index when p lies on it
  int locate(const Eigen::Vector2d& p, int hint, int* on_edge) const {
    int t = hint;
    int guard = static_cast<int>(tris_.size()) * 4 + 64;
    while (guard-- > 0) {
      if (!alive_[t]) break;
      const auto& tri = tris_[t];
      int step = -1;
      double worst = 0.0;
      int zero_edge = -1;
      for (int k = 0; k < 3; ++k) {
        double bound;
        const double o = orient(pts_[tri.v[(k + 1) % 3]], pts_[tri.v[(k + 2) % 3]], p,
                                &bound);
        if (o < -bound && o < worst) {
          worst = o;
          step = k;
        } else if (std::abs(o) <= bound) {
          zero_edge = k;
        }
      }
      if (step < 0) {
        *on_edge = zero_edge;
        return t;
      }
      const int next = tri.n[step];
      if (next < 0) break;
      t = next;
    }
    // exhaustive fallback
    for (std::size_t k = 0; k < tris_.size(); ++k) {
      if (!alive_[k]) continue;
      const auto& tri = tris_[k];
      bool inside = true;
      int zero_edge = -1;
      for (int e = 0; e < 3 && inside; ++e) {
        double bound;
        const double o =
            orient(pts_[tri.v[(e + 1) % 3]], pts_[tri.v[(e + 2) % 3]], p, &bound);
        if (o < -bound) inside = false;
        if (std::abs(o) <= bound) zero_edge = e;
      }
      if (inside) {
        *on_edge = zero_edge;
        return static_cast<int>(k);
      }
    }
    throw Error("delaunay: point location failed");
  }

  void insert(int ip) {
    int on_edge = -1;
    const int t = locate(pts_[ip], last_, &on_edge);
    if (on_edge < 0)
      split_interior(t, ip);
    else
      split_edge(t, on_edge, ip);
  }

  void split_interior(int t, int ip) {
    const Tri old = tris_[t];
    const int a = old.v[0], b = old.v[1], c = old.v[2];
    const int na = old.n[0], nb = old.n[1], nc = old.n[2];
    const int t1 = t;  // (a,b,p)
    const int t2 = fresh({{b, c, ip}, {0, 0, 0}});
    const int t3 = fresh({{c, a, ip}, {0, 0, 0}});
    tris_[t1] = {{a, b, ip}, {t2, t3, nc}};
    tris_[t2].n = {t3, t1, na};
    tris_[t3].n = {t1, t2, nb};
    relink(na, t, t2);
    relink(nb, t, t3);
    last_ = t1;
    legalize(t1, 2);
    legalize(t2, 2);
    legalize(t3, 2);
  }

  void split_edge(int t, int k, int ip) {
    const Tri old = tris_[t];
    const int a = old.v[k], b = old.v[(k + 1) % 3], c = old.v[(k + 2) % 3];
    const int x1 = old.n[(k + 2) % 3];  // across (a,b)
    const int x2 = old.n[(k + 1) % 3];  // across (c,a)
    const int u = old.n[k];
    if (u < 0) {
      const int t1 = t;  // (a,b,p)
      const int t2 = fresh({{a, ip, c}, {0, 0, 0}});
      tris_[t1] = {{a, b, ip}, {-1, t2, x1}};
      tris_[t2].n = {-1, x2, t1};
      relink(x2, t, t2);
      last_ = t1;
      legalize(t1, 2);
      legalize(t2, 1);
      return;
    }
    const Tri oldu = tris_[u];
    const int ku = neighbor_slot(oldu, t);
    const int d = oldu.v[ku];
    const int y1 = oldu.n[(ku + 2) % 3];  // across (d,c)
    const int y2 = oldu.n[(ku + 1) % 3];  // across (d,b)
    const int t1 = t;  // (a,b,p)
    const int t2 = fresh({{a, ip, c}, {0, 0, 0}});
    const int u1 = u;  // (d,c,p)
    const int u2 = fresh({{d, ip, b}, {0, 0, 0}});
    tris_[t1] = {{a, b, ip}, {u2, t2, x1}};
    tris_[t2].n = {u1, x2, t1};
    tris_[u1] = {{d, c, ip}, {t2, u2, y1}};
    tris_[u2].n = {t1, y2, u1};
    relink(x2, t, t2);
    relink(y2, u, u2);
    last_ = t1;
    legalize(t1, 2);
    legalize(t2, 1);
    legalize(u1, 2);
    legalize(u2, 1);
  }

  void legalize(int t, int k) {
    int budget = 64 + 8 * static_cast<int>(tris_.size());
    std::vector<std::pair<int, int>> stack = {{t, k}};
    while (!stack.empty() && budget-- > 0) {
      const auto [ti, ki] = stack.back();
      stack.pop_back();
      const int o = tris_[ti].n[ki];
      if (o < 0) continue;
      const int ko = neighbor_slot(tris_[o], ti);
      const int d = tris_[o].v[ko];
      double bound;
      const double ic = incircle(tris_[ti].v[0], tris_[ti].v[1], tris_[ti].v[2], d, &bound);
      if (ic <= bound) continue;
      // flip the shared edge; x = apex of ti at the edge
      const Tri oldt = tris_[ti], oldo = tris_[o];
      const int x = oldt.v[ki], y = oldt.v[(ki + 1) % 3], z = oldt.v[(ki + 2) % 3];
      double bx, bz;
      if (orient(pts_[x], pts_[y], pts_[d], &bx) <= bx ||
          orient(pts_[x], pts_[d], pts_[z], &bz) <= bz)
        continue;  // nonconvex quad: flipping would invert a triangle
      const int c1 = oldt.n[(ki + 2) % 3];  // across (x,y)
      const int c2 = oldt.n[(ki + 1) % 3];  // across (z,x)
      const int c3 = oldo.n[(ko + 2) % 3];  // across (d,z)
      const int c4 = oldo.n[(ko + 1) % 3];  // across (y,d)
      tris_[ti] = {{x, y, d}, {c4, o, c1}};
      tris_[o] = {{x, d, z}, {c3, c2, ti}};
      relink(c4, o, ti);
      relink(c2, ti, o);
      stack.push_back({ti, 0});
      stack.push_back({o, 0});
    }
  }
};

}  // namespace

SimplicialMesh<2> delaunay_unit_square(const std::vector<Eigen::Vector2d>& points,
                                       Rng& rng) {
  DelaunayBuilder builder(points, rng);
  return builder.extract();
}

SimplicialMesh<2> perturbed_delaunay_square(int n, double perturb_fraction, Rng& rng) {
  const SimplicialMesh<2> base = square_quad4_mesh(n);
  double mean_diam = 0.0;
  for (int e = 0; e < base.n_elements(); ++e) {
    double longest = 0.0;
    for (int f = 0; f < 3; ++f) longest = std::max(longest, base.facet_measure(e, f));
    mean_diam += longest;
  }
  mean_diam /= base.n_elements();
  const double amp = perturb_fraction * mean_diam;
  std::vector<Eigen::Vector2d> points(base.n_vertices());
  for (int i = 0; i < base.n_vertices(); ++i) {
    points[i] = base.vertex(i);
    if (base.marker(i) == BoundaryMarker::Interior) {
      points[i](0) += amp * rng.uniform(-1.0, 1.0);
      points[i](1) += amp * rng.uniform(-1.0, 1.0);
    }
  }
  return delaunay_unit_square(points, rng);
}

}  // namespace dgremap
