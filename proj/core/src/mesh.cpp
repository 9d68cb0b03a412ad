#include "wofem/mesh.hpp"

#include "wofem/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace wofem {

std::string to_string(Pattern p) { return p == Pattern::CrissCross ? "criss_cross" : "diagonal"; }

Pattern pattern_from_string(const std::string& s) {
  if (s == "criss_cross" || s == "crisscross") return Pattern::CrissCross;
  if (s == "diagonal") return Pattern::Diagonal;
  throw FormatError("unknown mesh pattern '" + s + "'");
}

namespace {

Edge sorted_edge(int a, int b) { return a < b ? Edge{a, b} : Edge{b, a}; }

double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double len2 = ab.squaredNorm();
  double s = len2 > 0.0 ? (p - a).dot(ab) / len2 : 0.0;
  s = std::clamp(s, 0.0, 1.0);
  return (p - (a + s * ab)).norm();
}

}  // namespace

SimplicialMesh::SimplicialMesh(std::vector<Vec2> vertices, std::vector<Cell> cells,
                               std::vector<Edge> boundary_faces)
    : vertices_(std::move(vertices)), cells_(std::move(cells)), boundary_faces_(std::move(boundary_faces)) {
  const int nv = static_cast<int>(vertices_.size());
  const int nc = static_cast<int>(cells_.size());
  if (nc == 0) throw FormatError("mesh has no cells");

  area_.resize(nc);
  grads_.resize(nc);
  vertex_cells_.assign(nv, {});
  for (int t = 0; t < nc; ++t) {
    const Cell& c = cells_[t];
    for (int v : c) {
      if (v < 0 || v >= nv) throw FormatError("cell references missing vertex");
    }
    const Vec2 e1 = vertices_[c[1]] - vertices_[c[0]];
    const Vec2 e2 = vertices_[c[2]] - vertices_[c[0]];
    const double det = cross(e1, e2);
    if (!(det > 0.0)) throw FormatError("cell " + std::to_string(t) + " is degenerate or negatively oriented");
    area_[t] = 0.5 * det;
    // Gradients of barycentric coordinates: rotate the opposite edge.
    for (int i = 0; i < 3; ++i) {
      const Vec2& a = vertices_[c[(i + 1) % 3]];
      const Vec2& b = vertices_[c[(i + 2) % 3]];
      grads_[t][i] = Vec2(a.y() - b.y(), b.x() - a.x()) / det;
    }
    for (int v : c) vertex_cells_[v].push_back(t);
  }

  std::map<Edge, std::vector<int>> edge_cells;
  for (int t = 0; t < nc; ++t) {
    const Cell& c = cells_[t];
    for (int i = 0; i < 3; ++i) edge_cells[sorted_edge(c[i], c[(i + 1) % 3])].push_back(t);
  }
  std::map<Edge, int> face_index;
  for (int f = 0; f < static_cast<int>(boundary_faces_.size()); ++f) {
    const Edge& e = boundary_faces_[f];
    if (e[0] < 0 || e[0] >= nv || e[1] < 0 || e[1] >= nv || e[0] == e[1])
      throw FormatError("invalid boundary face");
    if (!face_index.emplace(sorted_edge(e[0], e[1]), f).second) throw FormatError("duplicate boundary face");
  }

  cell_neighbors_.assign(nc, {});
  cell_boundary_edges_.assign(nc, 0);
  edges_.reserve(edge_cells.size());
  for (const auto& [e, ts] : edge_cells) {
    edges_.push_back(e);
    const bool on_boundary = face_index.count(e) != 0;
    if (ts.size() == 2 && !on_boundary) {
      cell_neighbors_[ts[0]].push_back(ts[1]);
      cell_neighbors_[ts[1]].push_back(ts[0]);
    } else if (ts.size() == 1 && on_boundary) {
      cell_boundary_edges_[ts[0]] += 1;
    } else {
      throw FormatError("non-conforming edge (" + std::to_string(e[0]) + "," + std::to_string(e[1]) + ")");
    }
  }
  for (const auto& [e, f] : face_index) {
    if (!edge_cells.count(e)) throw FormatError("boundary face is not a cell edge");
  }
  for (auto& n : cell_neighbors_) std::sort(n.begin(), n.end());

  boundary_flag_.assign(nv, 0);
  vertex_faces_.assign(nv, {});
  for (int f = 0; f < static_cast<int>(boundary_faces_.size()); ++f) {
    for (int v : boundary_faces_[f]) {
      boundary_flag_[v] = 1;
      vertex_faces_[v].push_back(f);
    }
  }
  for (int v = 0; v < nv; ++v) {
    if (vertex_cells_[v].empty()) throw FormatError("vertex " + std::to_string(v) + " belongs to no cell");
    if (boundary_flag_[v] && vertex_faces_[v].size() != 2)
      throw FormatError("boundary faces do not form closed loops at vertex " + std::to_string(v));
  }

  dof_.assign(nv, -1);
  for (int v = 0; v < nv; ++v) {
    if (!boundary_flag_[v]) {
      dof_[v] = static_cast<int>(interior_.size());
      interior_.push_back(v);
    }
  }
}

Vec2 SimplicialMesh::centroid(int t) const {
  const Cell& c = cells_[t];
  return (vertices_[c[0]] + vertices_[c[1]] + vertices_[c[2]]) / 3.0;
}

Vec2 SimplicialMesh::map(int t, double xi, double eta) const {
  const Cell& c = cells_[t];
  return vertices_[c[0]] + xi * (vertices_[c[1]] - vertices_[c[0]]) + eta * (vertices_[c[2]] - vertices_[c[0]]);
}

void SimplicialMesh::set_vertex_parents(std::vector<Edge> parents) {
  if (!parents.empty() && parents.size() != vertices_.size())
    throw FormatError("vertex parent list has wrong length");
  parents_ = std::move(parents);
}

Box SimplicialMesh::bounding_box() const {
  Box b{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
        -std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const Vec2& x : vertices_) {
    b.x0 = std::min(b.x0, x.x());
    b.y0 = std::min(b.y0, x.y());
    b.x1 = std::max(b.x1, x.x());
    b.y1 = std::max(b.y1, x.y());
  }
  return b;
}

SimplicialMesh structured_rect(int nx, int ny, const Box& box, Pattern pattern) {
  if (nx < 1 || ny < 1) throw DomainError("structured_rect: nx and ny must be >= 1");
  if (!(box.x1 > box.x0) || !(box.y1 > box.y0)) throw DomainError("structured_rect: degenerate box");

  const double dx = (box.x1 - box.x0) / nx;
  const double dy = (box.y1 - box.y0) / ny;
  auto grid = [nx](int i, int j) { return j * (nx + 1) + i; };

  std::vector<Vec2> verts;
  for (int j = 0; j <= ny; ++j) {
    for (int i = 0; i <= nx; ++i) {
      const double x = i == nx ? box.x1 : box.x0 + i * dx;
      const double y = j == ny ? box.y1 : box.y0 + j * dy;
      verts.emplace_back(x, y);
    }
  }

  std::vector<Cell> cells;
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const int v00 = grid(i, j), v10 = grid(i + 1, j), v11 = grid(i + 1, j + 1), v01 = grid(i, j + 1);
      if (pattern == Pattern::CrissCross) {
        const int c = static_cast<int>(verts.size());
        verts.push_back(0.25 * (verts[v00] + verts[v10] + verts[v11] + verts[v01]));
        cells.push_back({v00, v10, c});
        cells.push_back({v10, v11, c});
        cells.push_back({v11, v01, c});
        cells.push_back({v01, v00, c});
      } else {
        cells.push_back({v00, v10, v11});
        cells.push_back({v00, v11, v01});
      }
    }
  }

  std::vector<Edge> faces;
  for (int i = 0; i < nx; ++i) faces.push_back({grid(i, 0), grid(i + 1, 0)});
  for (int j = 0; j < ny; ++j) faces.push_back({grid(nx, j), grid(nx, j + 1)});
  for (int i = nx; i > 0; --i) faces.push_back({grid(i, ny), grid(i - 1, ny)});
  for (int j = ny; j > 0; --j) faces.push_back({grid(0, j), grid(0, j - 1)});

  return SimplicialMesh(std::move(verts), std::move(cells), std::move(faces));
}

SimplicialMesh refine_uniform(const SimplicialMesh& m) {
  const int nv = static_cast<int>(m.num_vertices());
  std::vector<Vec2> verts = m.vertices();
  std::vector<Edge> parents(nv);
  for (int v = 0; v < nv; ++v) parents[v] = {v, v};

  std::map<Edge, int> midpoint;
  for (const Edge& e : m.edges()) {
    midpoint[e] = static_cast<int>(verts.size());
    verts.push_back(0.5 * (m.vertex(e[0]) + m.vertex(e[1])));
    parents.push_back(e);
  }
  auto mid = [&](int a, int b) { return midpoint.at(sorted_edge(a, b)); };

  std::vector<Cell> cells;
  cells.reserve(4 * m.num_cells());
  for (const Cell& c : m.cells()) {
    const int a = c[0], b = c[1], d = c[2];
    const int ab = mid(a, b), bd = mid(b, d), da = mid(d, a);
    cells.push_back({a, ab, da});
    cells.push_back({ab, b, bd});
    cells.push_back({da, bd, d});
    cells.push_back({ab, bd, da});
  }

  std::vector<Edge> faces;
  faces.reserve(2 * m.boundary_faces().size());
  for (const Edge& f : m.boundary_faces()) {
    const int c = mid(f[0], f[1]);
    faces.push_back({f[0], c});
    faces.push_back({c, f[1]});
  }

  SimplicialMesh out(std::move(verts), std::move(cells), std::move(faces));
  out.set_vertex_parents(std::move(parents));
  return out;
}

std::vector<int> patch_of_element(const SimplicialMesh& m, int t) {
  std::vector<int> out;
  for (int v : m.cell(t)) {
    const auto& vc = m.vertex_cells(v);
    out.insert(out.end(), vc.begin(), vc.end());
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

ShapeMetrics shape_metrics(const SimplicialMesh& m) {
  ShapeMetrics s;
  const std::size_t nc = m.num_cells();
  s.h.resize(nc);
  s.rho.resize(nc);
  s.sigma.resize(nc);
  for (std::size_t t = 0; t < nc; ++t) {
    const Cell& c = m.cell(static_cast<int>(t));
    double perimeter = 0.0;
    double diam = 0.0;
    for (int i = 0; i < 3; ++i) {
      const double len = (m.vertex(c[i]) - m.vertex(c[(i + 1) % 3])).norm();
      perimeter += len;
      diam = std::max(diam, len);
    }
    s.h[t] = diam;
    s.rho[t] = 4.0 * m.area(static_cast<int>(t)) / perimeter;
    s.sigma[t] = s.h[t] / s.rho[t];
    s.h_max = std::max(s.h_max, s.h[t]);
    s.sigma_max = std::max(s.sigma_max, s.sigma[t]);
  }
  return s;
}

std::vector<double> patch_diameters(const SimplicialMesh& m) {
  std::vector<double> out(m.num_cells());
  for (std::size_t t = 0; t < m.num_cells(); ++t) {
    std::vector<int> vs;
    for (int c : patch_of_element(m, static_cast<int>(t))) {
      for (int v : m.cell(c)) vs.push_back(v);
    }
    std::sort(vs.begin(), vs.end());
    vs.erase(std::unique(vs.begin(), vs.end()), vs.end());
    double d = 0.0;
    for (std::size_t i = 0; i < vs.size(); ++i) {
      for (std::size_t j = i + 1; j < vs.size(); ++j) d = std::max(d, (m.vertex(vs[i]) - m.vertex(vs[j])).norm());
    }
    out[t] = d;
  }
  return out;
}

VertexStar inscribed_ball(const SimplicialMesh& m, int v) {
  if (v < 0 || v >= static_cast<int>(m.num_vertices())) throw DomainError("inscribed_ball: invalid vertex");
  if (m.is_boundary_vertex(v)) throw DomainError("inscribed_ball: vertex lies on the boundary");
  VertexStar s;
  s.vertex = v;
  s.center = m.vertex(v);
  s.cells = m.vertex_cells(v);
  s.radius = std::numeric_limits<double>::infinity();
  for (int t : s.cells) {
    const Cell& c = m.cell(t);
    int k = 0;
    while (c[k] != v) ++k;
    const Edge e{c[(k + 1) % 3], c[(k + 2) % 3]};
    s.outer_edges.push_back(e);
    s.radius = std::min(s.radius, point_segment_distance(s.center, m.vertex(e[0]), m.vertex(e[1])));
  }
  return s;
}

bool boundary_condition_check(const SimplicialMesh& m) {
  for (std::size_t t = 0; t < m.num_cells(); ++t) {
    if (m.boundary_edge_count(static_cast<int>(t)) > 1) return false;
  }
  return true;
}

long euler_characteristic(const SimplicialMesh& m) {
  return static_cast<long>(m.num_vertices()) - static_cast<long>(m.num_edges()) +
         static_cast<long>(m.num_cells());
}

int nearest_vertex(const SimplicialMesh& m, const Vec2& x) {
  int best = 0;
  double bd = std::numeric_limits<double>::infinity();
  for (std::size_t v = 0; v < m.num_vertices(); ++v) {
    const double d = (m.vertex(static_cast<int>(v)) - x).squaredNorm();
    if (d < bd) {
      bd = d;
      best = static_cast<int>(v);
    }
  }
  return best;
}

int locate(const SimplicialMesh& m, const Vec2& x, std::array<double, 3>* bary) {
  constexpr double tol = -1e-12;
  for (std::size_t t = 0; t < m.num_cells(); ++t) {
    const Cell& c = m.cell(static_cast<int>(t));
    const auto& g = m.basis_gradients(static_cast<int>(t));
    std::array<double, 3> l;
    for (int i = 0; i < 3; ++i) {
      // λ_i is affine with value 1 at c[i] and gradient g[i].
      l[i] = 1.0 + g[i].dot(x - m.vertex(c[i]));
    }
    if (l[0] >= tol && l[1] >= tol && l[2] >= tol) {
      if (bary) *bary = l;
      return static_cast<int>(t);
    }
  }
  return -1;
}

}  // namespace wofem
