// Copyright (c) the robinlab contributors.
// SPDX-License-Identifier: Apache-2.0

#include "robinlab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <utility>

namespace robinlab {

namespace {

double cross2(const Eigen::Vector2d& u, const Eigen::Vector2d& v) {
  return u.x() * v.y() - u.y() * v.x();
}

double signed_area(const std::vector<Eigen::Vector2d>& v) {
  double twice = 0.0;
  const int n = static_cast<int>(v.size());
  for (int i = 0; i < n; ++i) {
    const Eigen::Vector2d& p = v[i];
    const Eigen::Vector2d& q = v[(i + 1) % n];
    twice += p.x() * q.y() - p.y() * q.x();
  }
  return 0.5 * twice;
}

std::vector<std::string> split_fields(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

double parse_number(const std::string& s, const std::string& what) {
  try {
    size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("geometry: bad " + what + " '" + s + "'");
  }
}

bool point_in_triangle(const Eigen::Vector2d& p, const Eigen::Vector2d& a,
                       const Eigen::Vector2d& b, const Eigen::Vector2d& c) {
  // Includes the closed triangle up to a relative tolerance; blocking a
  // candidate ear on a borderline point keeps clipping conservative.
  const double s = cross2(b - a, c - a);
  const double tol = -1e-12 * std::abs(s);
  const double w0 = cross2(b - a, p - a);
  const double w1 = cross2(c - b, p - b);
  const double w2 = cross2(a - c, p - c);
  return w0 >= tol && w1 >= tol && w2 >= tol;
}

TriangleMesh centroid_fan_mesh(const PolygonalDomain& domain) {
  TriangleMesh m;
  m.nodes = domain.vertices;
  Eigen::Vector2d c = Eigen::Vector2d::Zero();
  for (const auto& v : domain.vertices) c += v;
  c /= static_cast<double>(domain.vertices.size());
  const int center = static_cast<int>(m.nodes.size());
  m.nodes.push_back(c);
  const int n = static_cast<int>(domain.vertices.size());
  for (int i = 0; i < n; ++i) {
    m.triangles.push_back({i, (i + 1) % n, center});
    m.boundary_edges.push_back({i, (i + 1) % n, i});
  }
  return m;
}

TriangleMesh ear_clip_mesh(const PolygonalDomain& domain) {
  TriangleMesh m;
  m.nodes = domain.vertices;
  const int n = static_cast<int>(domain.vertices.size());
  std::vector<int> ring(n);
  for (int i = 0; i < n; ++i) ring[i] = i;

  while (static_cast<int>(ring.size()) > 3) {
    const int r = static_cast<int>(ring.size());
    bool clipped = false;
    for (int k = 0; k < r; ++k) {
      const int ip = ring[(k + r - 1) % r];
      const int ic = ring[k];
      const int in = ring[(k + 1) % r];
      const Eigen::Vector2d& a = m.nodes[ip];
      const Eigen::Vector2d& b = m.nodes[ic];
      const Eigen::Vector2d& c = m.nodes[in];
      if (cross2(b - a, c - b) <= 0.0) continue;  // reflex or flat
      bool blocked = false;
      for (int j = 0; j < r && !blocked; ++j) {
        const int other = ring[j];
        if (other == ip || other == ic || other == in) continue;
        blocked = point_in_triangle(m.nodes[other], a, b, c);
      }
      if (blocked) continue;
      m.triangles.push_back({ip, ic, in});
      ring.erase(ring.begin() + k);
      clipped = true;
      break;
    }
    if (!clipped) {
      throw std::invalid_argument("geometry: ear clipping failed; polygon is not simple");
    }
  }
  m.triangles.push_back({ring[0], ring[1], ring[2]});

  for (int i = 0; i < n; ++i) {
    m.boundary_edges.push_back({i, (i + 1) % n, i});
  }
  return m;
}

void finalize_mesh(TriangleMesh& m, int level) {
  m.level = level;
  m.on_boundary.assign(m.nodes.size(), false);
  for (const auto& e : m.boundary_edges) {
    m.on_boundary[e.a] = true;
    m.on_boundary[e.b] = true;
  }
  double h = 0.0;
  for (const auto& t : m.triangles) {
    for (int k = 0; k < 3; ++k) {
      const double len = (m.nodes[t[k]] - m.nodes[t[(k + 1) % 3]]).norm();
      h = std::max(h, len);
    }
  }
  m.h = h;
}

void validate_mesh(const TriangleMesh& m) {
  const int n = m.num_nodes();
  if (n < 3) throw std::invalid_argument("mesh: fewer than three nodes");
  for (const auto& t : m.triangles) {
    for (int k = 0; k < 3; ++k) {
      if (t[k] < 0 || t[k] >= n) throw std::invalid_argument("mesh: triangle node index out of range");
    }
    if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2]) {
      throw std::invalid_argument("mesh: degenerate triangle");
    }
    const double s = cross2(m.nodes[t[1]] - m.nodes[t[0]], m.nodes[t[2]] - m.nodes[t[0]]);
    if (s <= 0.0) throw std::invalid_argument("mesh: triangle not counterclockwise");
  }
  for (const auto& e : m.boundary_edges) {
    if (e.a < 0 || e.a >= n || e.b < 0 || e.b >= n || e.a == e.b) {
      throw std::invalid_argument("mesh: boundary edge index out of range");
    }
  }
}

}  // namespace

double PolygonalDomain::area() const { return signed_area(vertices); }

double PolygonalDomain::perimeter() const {
  double p = 0.0;
  const int n = static_cast<int>(vertices.size());
  for (int i = 0; i < n; ++i) p += (vertices[(i + 1) % n] - vertices[i]).norm();
  return p;
}

std::vector<int> PolygonalDomain::reentrant_corners() const {
  std::vector<int> out;
  const int n = static_cast<int>(vertices.size());
  for (int i = 0; i < n; ++i) {
    const Eigen::Vector2d& a = vertices[(i + n - 1) % n];
    const Eigen::Vector2d& b = vertices[i];
    const Eigen::Vector2d& c = vertices[(i + 1) % n];
    if (cross2(b - a, c - b) < 0.0) out.push_back(i);
  }
  return out;
}

PolygonalDomain make_domain(std::string name, std::vector<Eigen::Vector2d> vertices) {
  if (vertices.size() < 3) {
    throw std::invalid_argument("geometry: polygon needs at least three vertices");
  }
  const double a = signed_area(vertices);
  if (a < 0.0) {
    throw std::invalid_argument("geometry: polygon is clockwise; supply counterclockwise vertices");
  }
  if (a == 0.0) {
    throw std::invalid_argument("geometry: polygon has zero area");
  }
  PolygonalDomain d;
  d.name = std::move(name);
  d.vertices = std::move(vertices);
  return d;
}

PolygonalDomain make_domain(const std::string& spec) {
  const auto fields = split_fields(spec, ':');
  const std::string& kind = fields[0];
  if (kind == "unit_square" && fields.size() == 1) {
    return make_domain("unit_square",
                       {{0.0, 0.0}, {1.0, 0.0}, {1.0, 1.0}, {0.0, 1.0}});
  }
  if (kind == "rectangle" && fields.size() == 3) {
    const double a = parse_number(fields[1], "rectangle width");
    const double b = parse_number(fields[2], "rectangle height");
    if (!(a > 0.0) || !(b > 0.0)) {
      throw std::invalid_argument("geometry: rectangle sides must be positive");
    }
    return make_domain(spec, {{0.0, 0.0}, {a, 0.0}, {a, b}, {0.0, b}});
  }
  if (kind == "lshape" && fields.size() == 1) {
    return make_domain("lshape", {{0.0, 0.0},
                                  {2.0, 0.0},
                                  {2.0, 1.0},
                                  {1.0, 1.0},
                                  {1.0, 2.0},
                                  {0.0, 2.0}});
  }
  if (kind == "regular_ngon" && fields.size() == 3) {
    const int n = static_cast<int>(parse_number(fields[1], "ngon vertex count"));
    const double r = parse_number(fields[2], "ngon radius");
    if (n < 3) throw std::invalid_argument("geometry: ngon needs at least three vertices");
    if (!(r > 0.0)) throw std::invalid_argument("geometry: ngon radius must be positive");
    std::vector<Eigen::Vector2d> v(n);
    for (int i = 0; i < n; ++i) {
      const double ang = 2.0 * M_PI * static_cast<double>(i) / static_cast<double>(n);
      v[i] = {r * std::cos(ang), r * std::sin(ang)};
    }
    return make_domain(spec, std::move(v));
  }
  throw std::invalid_argument("geometry: unknown domain spec '" + spec + "'");
}

int TriangleMesh::num_boundary_nodes() const {
  int k = 0;
  for (bool b : on_boundary) k += b ? 1 : 0;
  return k;
}

double TriangleMesh::triangle_area(int t) const {
  const auto& tri = triangles[t];
  return 0.5 * cross2(nodes[tri[1]] - nodes[tri[0]], nodes[tri[2]] - nodes[tri[0]]);
}

double TriangleMesh::total_area() const {
  double a = 0.0;
  for (int t = 0; t < num_triangles(); ++t) a += triangle_area(t);
  return a;
}

Eigen::Vector2d TriangleMesh::outward_normal(int boundary_edge) const {
  const auto& e = boundary_edges[boundary_edge];
  const Eigen::Vector2d d = nodes[e.b] - nodes[e.a];
  // Domain on the left of a->b, so the outward normal is d rotated by -90 deg.
  return Eigen::Vector2d(d.y(), -d.x()).normalized();
}

double TriangleMesh::edge_length(int boundary_edge) const {
  const auto& e = boundary_edges[boundary_edge];
  return (nodes[e.b] - nodes[e.a]).norm();
}

TriangleMesh coarse_mesh(const PolygonalDomain& domain) {
  const int n = static_cast<int>(domain.vertices.size());
  bool centroid_fan = false;
  if (n == 4) {
    // Rectangles (axis-aligned or not) take the symmetric centroid fan.
    const Eigen::Vector2d e0 = domain.vertices[1] - domain.vertices[0];
    const Eigen::Vector2d e1 = domain.vertices[2] - domain.vertices[1];
    const Eigen::Vector2d e2 = domain.vertices[3] - domain.vertices[2];
    const Eigen::Vector2d e3 = domain.vertices[0] - domain.vertices[3];
    centroid_fan = std::abs(e0.dot(e1)) < 1e-12 && std::abs(e1.dot(e2)) < 1e-12 &&
                   std::abs(e2.dot(e3)) < 1e-12;
  }
  if (!centroid_fan && n >= 5) {
    // Regular polygon: all vertices equidistant from the vertex centroid.
    Eigen::Vector2d c = Eigen::Vector2d::Zero();
    for (const auto& v : domain.vertices) c += v;
    c /= static_cast<double>(n);
    const double r0 = (domain.vertices[0] - c).norm();
    bool regular = true;
    for (const auto& v : domain.vertices) {
      if (std::abs((v - c).norm() - r0) > 1e-9 * r0) {
        regular = false;
        break;
      }
    }
    centroid_fan = regular;
  }
  TriangleMesh m = centroid_fan ? centroid_fan_mesh(domain) : ear_clip_mesh(domain);
  finalize_mesh(m, 0);
  validate_mesh(m);
  return m;
}

RefinedMesh refine_with_parents(const TriangleMesh& mesh) {
  RefinedMesh result;
  TriangleMesh& out = result.mesh;
  out.nodes = mesh.nodes;
  std::map<std::pair<int, int>, int> midpoint;
  auto mid = [&](int a, int b) {
    const auto key = std::minmax(a, b);
    auto it = midpoint.find(key);
    if (it != midpoint.end()) return it->second;
    const int idx = static_cast<int>(out.nodes.size());
    out.nodes.push_back(0.5 * (mesh.nodes[a] + mesh.nodes[b]));
    result.midpoint_parents.push_back({key.first, key.second});
    midpoint.emplace(key, idx);
    return idx;
  };

  out.triangles.reserve(mesh.triangles.size() * 4);
  for (const auto& t : mesh.triangles) {
    const int m01 = mid(t[0], t[1]);
    const int m12 = mid(t[1], t[2]);
    const int m20 = mid(t[2], t[0]);
    out.triangles.push_back({t[0], m01, m20});
    out.triangles.push_back({m01, t[1], m12});
    out.triangles.push_back({m20, m12, t[2]});
    out.triangles.push_back({m01, m12, m20});
  }

  out.boundary_edges.reserve(mesh.boundary_edges.size() * 2);
  for (const auto& e : mesh.boundary_edges) {
    const int m = mid(e.a, e.b);
    out.boundary_edges.push_back({e.a, m, e.side});
    out.boundary_edges.push_back({m, e.b, e.side});
  }

  finalize_mesh(out, mesh.level + 1);
  return result;
}

TriangleMesh refine(const TriangleMesh& mesh) { return refine_with_parents(mesh).mesh; }

TriangleMesh mesh_at_level(const PolygonalDomain& domain, int level) {
  if (level < 0) throw std::invalid_argument("geometry: negative refinement level");
  TriangleMesh m = coarse_mesh(domain);
  for (int i = 0; i < level; ++i) m = refine(m);
  return m;
}

BoundaryTraversal boundary_traversal(const TriangleMesh& mesh) {
  const int ne = static_cast<int>(mesh.boundary_edges.size());
  if (ne == 0) throw std::invalid_argument("traversal: mesh has no boundary edges");

  std::map<int, int> edge_from;  // start node -> boundary edge index
  for (int e = 0; e < ne; ++e) {
    const auto& be = mesh.boundary_edges[e];
    if (!edge_from.emplace(be.a, e).second) {
      throw std::invalid_argument("traversal: boundary is not a simple loop");
    }
  }

  int start = -1;
  for (const auto& [node, _] : edge_from) {
    if (start < 0) {
      start = node;
      continue;
    }
    const Eigen::Vector2d& p = mesh.nodes[node];
    const Eigen::Vector2d& q = mesh.nodes[start];
    if (p.x() < q.x() || (p.x() == q.x() && p.y() < q.y())) start = node;
  }

  BoundaryTraversal tr;
  tr.edge_order.reserve(ne);
  tr.node_order.reserve(ne);
  tr.node_arclength.reserve(ne);

  const double inv_sqrt3 = 1.0 / std::sqrt(3.0);
  double s = 0.0;
  int node = start;
  for (int step = 0; step < ne; ++step) {
    auto it = edge_from.find(node);
    if (it == edge_from.end()) {
      throw std::invalid_argument("traversal: boundary loop is not closed");
    }
    const int e = it->second;
    const auto& be = mesh.boundary_edges[e];
    const Eigen::Vector2d& pa = mesh.nodes[be.a];
    const Eigen::Vector2d& pb = mesh.nodes[be.b];
    const double len = (pb - pa).norm();

    tr.edge_order.push_back(e);
    tr.node_order.push_back(node);
    tr.node_arclength.push_back(s);

    for (int g = 0; g < 2; ++g) {
      const double t = 0.5 * (1.0 + (g == 0 ? -inv_sqrt3 : inv_sqrt3));
      BoundaryTraversal::QuadPoint qp;
      qp.x = pa + t * (pb - pa);
      qp.s = s + t * len;
      qp.w = 0.5 * len;
      qp.edge = e;
      tr.quadrature.push_back(qp);
    }

    s += len;
    node = be.b;
  }
  if (node != start) {
    throw std::invalid_argument("traversal: boundary has more than one loop");
  }
  tr.total_arclength = s;
  return tr;
}

void write_m2d(std::ostream& out, const TriangleMesh& mesh) {
  char buf[80];
  out << "m2d 1\n";
  out << "nodes " << mesh.num_nodes() << "\n";
  for (const auto& p : mesh.nodes) {
    std::snprintf(buf, sizeof buf, "%.17g %.17g\n", p.x(), p.y());
    out << buf;
  }
  out << "triangles " << mesh.num_triangles() << "\n";
  for (const auto& t : mesh.triangles) out << t[0] << " " << t[1] << " " << t[2] << "\n";
  out << "boundary " << mesh.boundary_edges.size() << "\n";
  for (const auto& e : mesh.boundary_edges) out << e.a << " " << e.b << " " << e.side << "\n";
}

TriangleMesh read_m2d(std::istream& in) {
  std::string magic;
  int version = 0;
  if (!(in >> magic >> version) || magic != "m2d" || version != 1) {
    throw std::invalid_argument("m2d: bad header");
  }
  auto expect = [&](const char* kw) {
    std::string s;
    long long count = -1;
    if (!(in >> s >> count) || s != kw || count < 0) {
      throw std::invalid_argument(std::string("m2d: expected '") + kw + " <count>'");
    }
    return static_cast<int>(count);
  };

  TriangleMesh m;
  const int nn = expect("nodes");
  m.nodes.resize(nn);
  for (auto& p : m.nodes) {
    if (!(in >> p.x() >> p.y())) throw std::invalid_argument("m2d: truncated node list");
  }
  const int nt = expect("triangles");
  m.triangles.resize(nt);
  for (auto& t : m.triangles) {
    if (!(in >> t[0] >> t[1] >> t[2])) throw std::invalid_argument("m2d: truncated triangle list");
  }
  const int nb = expect("boundary");
  m.boundary_edges.resize(nb);
  for (auto& e : m.boundary_edges) {
    if (!(in >> e.a >> e.b >> e.side)) throw std::invalid_argument("m2d: truncated boundary list");
  }
  finalize_mesh(m, 0);
  validate_mesh(m);
  return m;
}

void write_m2d_file(const std::string& path, const TriangleMesh& mesh) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("m2d: cannot open '" + path + "' for writing");
  write_m2d(f, mesh);
}

TriangleMesh read_m2d_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("m2d: cannot open '" + path + "'");
  return read_m2d(f);
}

}  // namespace robinlab
