// Copyright (c) the robinlab contributors.
// SPDX-License-Identifier: Apache-2.0

#ifndef ROBINLAB_GEOMETRY_HPP
#define ROBINLAB_GEOMETRY_HPP

#include <Eigen/Core>

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

namespace robinlab {

// Simple planar polygon, vertices in counterclockwise order. Clockwise input
// is rejected at construction; it is never silently reoriented.
struct PolygonalDomain {
  std::string name;
  std::vector<Eigen::Vector2d> vertices;

  double area() const;
  double perimeter() const;
  // Indices of vertices whose interior angle exceeds pi.
  std::vector<int> reentrant_corners() const;
};

// Catalog spec strings:
//   unit_square
//   rectangle:<a>:<b>
//   lshape
//   regular_ngon:<N>:<R>
PolygonalDomain make_domain(const std::string& spec);
PolygonalDomain make_domain(std::string name, std::vector<Eigen::Vector2d> vertices);

// Conforming triangle mesh. Triangles are counterclockwise. Boundary edges
// are oriented with the domain on their left; `side` identifies the polygon
// side an edge descends from and survives refinement.
struct TriangleMesh {
  struct BoundaryEdge {
    int a = 0;
    int b = 0;
    int side = 0;
  };

  std::vector<Eigen::Vector2d> nodes;
  std::vector<std::array<int, 3>> triangles;
  std::vector<BoundaryEdge> boundary_edges;
  std::vector<bool> on_boundary;
  int level = 0;
  double h = 0.0;  // longest element edge

  int num_nodes() const { return static_cast<int>(nodes.size()); }
  int num_triangles() const { return static_cast<int>(triangles.size()); }
  int num_boundary_nodes() const;
  double total_area() const;
  double triangle_area(int t) const;
  Eigen::Vector2d outward_normal(int boundary_edge) const;
  double edge_length(int boundary_edge) const;
};

// Coarse triangulations: rectangles get the four-triangle centroid fan,
// regular polygons the center fan, anything else deterministic ear clipping
// (lowest-index ear first) with no interior nodes.
TriangleMesh coarse_mesh(const PolygonalDomain& domain);

// One step of red refinement: every triangle splits into four via edge
// midpoints. Triangle count quadruples, boundary edges double, h halves.
// Parent node indices are preserved; new nodes are appended.
TriangleMesh refine(const TriangleMesh& mesh);

// refine() plus, for each appended node, the parent node pair it bisects.
// midpoint_parents[k] belongs to node (parent.num_nodes() + k).
struct RefinedMesh {
  TriangleMesh mesh;
  std::vector<std::array<int, 2>> midpoint_parents;
};
RefinedMesh refine_with_parents(const TriangleMesh& mesh);

// coarse_mesh refined `level` times.
TriangleMesh mesh_at_level(const PolygonalDomain& domain, int level);

// Walk of the (single) boundary loop starting at the lexicographically
// smallest boundary node. Arclength accumulates edge lengths in walk order;
// total_arclength is that exact running sum.
struct BoundaryTraversal {
  struct QuadPoint {
    Eigen::Vector2d x;
    double s = 0.0;  // arclength coordinate
    double w = 0.0;  // weight, two-point Gauss per edge
    int edge = 0;    // index into mesh.boundary_edges
  };

  std::vector<int> edge_order;       // boundary edge indices in walk order
  std::vector<int> node_order;       // boundary node indices in walk order
  std::vector<double> node_arclength;
  std::vector<QuadPoint> quadrature; // two points per edge, walk order
  double total_arclength = 0.0;
};

BoundaryTraversal boundary_traversal(const TriangleMesh& mesh);

// Plain-text mesh exchange format:
//   m2d 1
//   nodes <N>        followed by N lines "x y"
//   triangles <T>    followed by T lines "a b c"
//   boundary <E>     followed by E lines "a b side"
// Round-trips exactly; the parser validates index ranges and orientation.
void write_m2d(std::ostream& out, const TriangleMesh& mesh);
TriangleMesh read_m2d(std::istream& in);
void write_m2d_file(const std::string& path, const TriangleMesh& mesh);
TriangleMesh read_m2d_file(const std::string& path);

}  // namespace robinlab

#endif
