#pragma once

#include "wofem/nfunc.hpp"

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

namespace wofem {

using Cell = std::array<int, 3>;
using Edge = std::array<int, 2>;

enum class Pattern { CrissCross, Diagonal };

std::string to_string(Pattern p);
Pattern pattern_from_string(const std::string& s);

struct Box {
  double x0 = 0.0, y0 = 0.0, x1 = 1.0, y1 = 1.0;
};

/// Conforming triangulation of a polygon in ℝ². Cells are positively
/// oriented. Immutable after construction.
class SimplicialMesh {
 public:
  SimplicialMesh() = default;
  /// Validates orientation, conformity and closed boundary loops; throws
  /// FormatError otherwise.
  SimplicialMesh(std::vector<Vec2> vertices, std::vector<Cell> cells, std::vector<Edge> boundary_faces);

  int dim() const { return 2; }
  std::size_t num_vertices() const { return vertices_.size(); }
  std::size_t num_cells() const { return cells_.size(); }
  std::size_t num_edges() const { return edges_.size(); }

  const std::vector<Vec2>& vertices() const { return vertices_; }
  const Vec2& vertex(int v) const { return vertices_[v]; }
  const std::vector<Cell>& cells() const { return cells_; }
  const Cell& cell(int t) const { return cells_[t]; }
  const std::vector<Edge>& boundary_faces() const { return boundary_faces_; }
  /// Unique edges sorted by (min id, max id).
  const std::vector<Edge>& edges() const { return edges_; }

  bool is_boundary_vertex(int v) const { return boundary_flag_[v] != 0; }
  const std::vector<int>& interior_vertices() const { return interior_; }
  /// Position of v in interior_vertices(), or -1 for boundary vertices.
  int dof(int v) const { return dof_[v]; }
  std::size_t num_dofs() const { return interior_.size(); }

  /// Cells containing v, ascending.
  const std::vector<int>& vertex_cells(int v) const { return vertex_cells_[v]; }
  /// Boundary faces containing v, ascending.
  const std::vector<int>& vertex_boundary_faces(int v) const { return vertex_faces_[v]; }
  /// Cells sharing an edge with t, ascending.
  const std::vector<int>& cell_neighbors(int t) const { return cell_neighbors_[t]; }
  /// Number of boundary edges of cell t.
  int boundary_edge_count(int t) const { return cell_boundary_edges_[t]; }

  double area(int t) const { return area_[t]; }
  /// Gradients of the three barycentric coordinates on t.
  const std::array<Vec2, 3>& basis_gradients(int t) const { return grads_[t]; }
  Vec2 centroid(int t) const;
  /// Maps reference coordinates (ξ, η) on t to physical space.
  Vec2 map(int t, double xi, double eta) const;

  /// For meshes produced by refine_uniform: parents[v] = {a, b} means the
  /// vertex sits at the midpoint of coarse vertices a and b (a == b for
  /// vertices inherited from the coarse mesh). Empty otherwise.
  const std::vector<Edge>& vertex_parents() const { return parents_; }
  void set_vertex_parents(std::vector<Edge> parents);

  Box bounding_box() const;

 private:
  std::vector<Vec2> vertices_;
  std::vector<Cell> cells_;
  std::vector<Edge> boundary_faces_;
  std::vector<Edge> edges_;
  std::vector<char> boundary_flag_;
  std::vector<int> interior_;
  std::vector<int> dof_;
  std::vector<std::vector<int>> vertex_cells_;
  std::vector<std::vector<int>> vertex_faces_;
  std::vector<std::vector<int>> cell_neighbors_;
  std::vector<int> cell_boundary_edges_;
  std::vector<double> area_;
  std::vector<std::array<Vec2, 3>> grads_;
  std::vector<Edge> parents_;
};

SimplicialMesh structured_rect(int nx, int ny, const Box& box = {}, Pattern pattern = Pattern::CrissCross);

/// Red refinement: every triangle split into four by its edge midpoints.
SimplicialMesh refine_uniform(const SimplicialMesh& m);

/// Cells sharing at least one vertex with t, ascending (includes t).
std::vector<int> patch_of_element(const SimplicialMesh& m, int t);

struct ShapeMetrics {
  std::vector<double> h;      ///< cell diameters
  std::vector<double> rho;    ///< inscribed-circle diameters
  std::vector<double> sigma;  ///< h / rho
  double h_max = 0.0;
  double sigma_max = 0.0;
};

ShapeMetrics shape_metrics(const SimplicialMesh& m);

/// diam(S_T) for every cell.
std::vector<double> patch_diameters(const SimplicialMesh& m);

struct VertexStar {
  int vertex = -1;
  std::vector<int> cells;
  Vec2 center = Vec2::Zero();
  double radius = 0.0;
  /// Outer edges of the star polygon (the edge of each star cell opposite v).
  std::vector<Edge> outer_edges;
};

/// Largest ball centred at an interior vertex and contained in its star.
VertexStar inscribed_ball(const SimplicialMesh& m, int v);

/// True iff no cell has more than one boundary edge.
bool boundary_condition_check(const SimplicialMesh& m);

/// V - E + F.
long euler_characteristic(const SimplicialMesh& m);

/// Index of the vertex nearest to x (lowest index on ties).
int nearest_vertex(const SimplicialMesh& m, const Vec2& x);

/// Cell containing x and its barycentric coordinates; -1 if outside.
int locate(const SimplicialMesh& m, const Vec2& x, std::array<double, 3>* bary = nullptr);

// -- text format -----------------------------------------------------------

/// Header `d nv nc nbf`, then coordinates, cells and boundary faces, one per
/// line. Doubles use the shortest round-trip representation.
void write_mesh(std::ostream& os, const SimplicialMesh& m);
SimplicialMesh read_mesh(std::istream& is);
std::string mesh_to_string(const SimplicialMesh& m);
SimplicialMesh mesh_from_string(const std::string& s);

/// Shortest decimal form that parses back to the same double.
std::string format_double(double x);
double parse_double(const std::string& s);

}  // namespace wofem
