#include "wofem/errors.hpp"
#include "wofem/mesh.hpp"

#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>

namespace wofem {

std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
  double x = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (first != last && *first == '+') ++first;
  const auto res = std::from_chars(first, last, x);
  if (res.ec != std::errc() || res.ptr != last) throw FormatError("cannot parse number '" + s + "'");
  return x;
}

namespace {

template <typename T>
T read_token(std::istream& is, const char* what) {
  std::string tok;
  if (!(is >> tok)) throw FormatError(std::string("mesh file truncated while reading ") + what);
  if constexpr (std::is_same_v<T, double>) {
    return parse_double(tok);
  } else {
    long v = 0;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
      throw FormatError(std::string("bad integer for ") + what + ": '" + tok + "'");
    return static_cast<T>(v);
  }
}

}  // namespace

void write_mesh(std::ostream& os, const SimplicialMesh& m) {
  os << m.dim() << ' ' << m.num_vertices() << ' ' << m.num_cells() << ' ' << m.boundary_faces().size() << '\n';
  for (const Vec2& x : m.vertices()) os << format_double(x.x()) << ' ' << format_double(x.y()) << '\n';
  for (const Cell& c : m.cells()) os << c[0] << ' ' << c[1] << ' ' << c[2] << '\n';
  for (const Edge& e : m.boundary_faces()) os << e[0] << ' ' << e[1] << '\n';
}

SimplicialMesh read_mesh(std::istream& is) {
  const int d = read_token<int>(is, "dimension");
  if (d != 2) throw FormatError("only d = 2 meshes are supported");
  const long nv = read_token<long>(is, "vertex count");
  const long nc = read_token<long>(is, "cell count");
  const long nbf = read_token<long>(is, "boundary face count");
  if (nv < 0 || nc < 0 || nbf < 0) throw FormatError("negative counts in mesh header");

  std::vector<Vec2> verts(nv);
  for (long i = 0; i < nv; ++i) {
    const double x = read_token<double>(is, "coordinate");
    const double y = read_token<double>(is, "coordinate");
    verts[i] = Vec2(x, y);
  }
  std::vector<Cell> cells(nc);
  for (long i = 0; i < nc; ++i) {
    for (int k = 0; k < 3; ++k) cells[i][k] = read_token<int>(is, "cell");
  }
  std::vector<Edge> faces(nbf);
  for (long i = 0; i < nbf; ++i) {
    for (int k = 0; k < 2; ++k) faces[i][k] = read_token<int>(is, "boundary face");
  }
  return SimplicialMesh(std::move(verts), std::move(cells), std::move(faces));
}

std::string mesh_to_string(const SimplicialMesh& m) {
  std::ostringstream os;
  write_mesh(os, m);
  return os.str();
}

SimplicialMesh mesh_from_string(const std::string& s) {
  std::istringstream is(s);
  return read_mesh(is);
}

}  // namespace wofem
