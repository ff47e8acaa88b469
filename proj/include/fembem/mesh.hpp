#pragma once

#include <array>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fembem/parallel.hpp"

namespace fembem {

class MeshError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Vertex {
  double x = 0.0;
  double y = 0.0;
};

inline Vertex operator-(Vertex a, Vertex b) { return {a.x - b.x, a.y - b.y}; }
inline Vertex operator+(Vertex a, Vertex b) { return {a.x + b.x, a.y + b.y}; }
inline Vertex operator*(double s, Vertex a) { return {s * a.x, s * a.y}; }
inline double dot(Vertex a, Vertex b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vertex a, Vertex b) { return a.x * b.y - a.y * b.x; }
double norm(Vertex a);

/// Counterclockwise triangle. The reference edge for newest vertex bisection
/// joins v[ref_edge] and v[(ref_edge + 1) % 3]; the opposite vertex is the
/// newest vertex.
struct Triangle {
  std::array<Index, 3> v{};
  int ref_edge = 0;
  int generation = 0;
  std::optional<Index> father;
};

/// Boundary edge a -> b, oriented so that the domain lies on the left.
struct BoundaryFacet {
  Index a = 0;
  Index b = 0;
  Index triangle = 0;
  Index edge = 0;
};

/// Edge connectivity derived from the triangle list.
struct EdgeTopology {
  std::vector<std::array<Index, 2>> edges;           // sorted endpoint pairs
  std::vector<std::array<Index, 3>> triangle_edges;  // local edge k = (v[k], v[k+1])
  std::vector<std::array<Index, 2>> edge_triangles;  // second entry -1 on the boundary
};

enum class DomainId { LShape, ZShape };

std::string to_string(DomainId id);

/// Conforming triangulation. Immutable after construction; refinement builds a
/// new mesh. Vertex ids of a coarse mesh are preserved by refinement (new
/// vertices are appended), triangle ids are not.
class Mesh {
 public:
  Mesh(std::vector<Vertex> vertices, std::vector<Triangle> triangles, int level = 0);

  const std::vector<Vertex>& vertices() const { return vertices_; }
  const std::vector<Triangle>& triangles() const { return triangles_; }
  /// Boundary facets in polygon order (closed, counterclockwise).
  const std::vector<BoundaryFacet>& boundary() const { return boundary_; }
  const EdgeTopology& topology() const { return topology_; }

  std::size_t num_vertices() const { return vertices_.size(); }
  std::size_t num_triangles() const { return triangles_.size(); }
  int level() const { return level_; }

  double area(Index t) const;
  double total_area() const;
  double diameter(Index t) const;
  /// Corner coordinates of triangle t in storage order.
  std::array<Vertex, 3> corners(Index t) const;
  /// Global edge id of the reference edge of triangle t.
  Index reference_edge(Index t) const;
  /// Global edge id joining a and b, or -1.
  Index find_edge(Index a, Index b) const;

 private:
  void build_topology();
  void build_boundary();

  std::vector<Vertex> vertices_;
  std::vector<Triangle> triangles_;
  std::vector<BoundaryFacet> boundary_;
  EdgeTopology topology_;
  int level_ = 0;
};

/// Father/son record of one refinement step.
struct RefinementRelation {
  std::size_t coarse_vertices = 0;
  /// parents[k] are the endpoints of the coarse edge whose midpoint is fine
  /// vertex coarse_vertices + k.
  std::vector<std::array<Index, 2>> new_vertex_parents;
  std::vector<std::vector<Index>> triangle_sons;  // indexed by coarse triangle
  std::vector<Index> triangle_father;             // indexed by fine triangle
  std::vector<std::vector<Index>> segment_sons;   // indexed by coarse boundary facet
  std::vector<Index> segment_father;              // indexed by fine boundary facet

  bool identity() const { return new_vertex_parents.empty(); }
};

/// Induced boundary mesh in polygon order: segment k joins node k and node k+1.
struct BoundarySegment {
  Index a = 0;  // node index (into BoundaryMesh::nodes)
  Index b = 0;
  double length = 0.0;
  Vertex tangent;
  Vertex normal;  // outward unit normal
  Index triangle = 0;
};

struct BoundaryMesh {
  std::vector<Index> nodes;   // volume vertex ids
  std::vector<Vertex> points;
  std::vector<BoundarySegment> segments;

  std::size_t num_segments() const { return segments.size(); }
  std::size_t num_nodes() const { return nodes.size(); }
  double perimeter() const;
  Vertex point_on(Index segment, double t) const;  // t in [0,1]
};

Mesh make_initial_mesh(DomainId domain);
/// Reentrant corner interior angle of the domain (3pi/2 or 7pi/4).
double reentrant_angle(DomainId domain);

/// Newest vertex bisection: every marked triangle is bisected at least once,
/// followed by the coarsest conforming closure.
std::pair<Mesh, RefinementRelation> refine_nvb(const Mesh& mesh, std::span<const Index> marked);
/// Edge-driven variant: every marked edge (global id) is bisected.
std::pair<Mesh, RefinementRelation> refine_nvb_edges(const Mesh& mesh, std::span<const Index> marked_edges);
/// All three edges of every marked triangle are bisected (four sons), then closure.
std::pair<Mesh, RefinementRelation> refine_bisec3(const Mesh& mesh, std::span<const Index> marked);
/// All triangles marked once.
std::pair<Mesh, RefinementRelation> refine_uniform(const Mesh& mesh);

BoundaryMesh boundary_trace(const Mesh& mesh);

/// max_T diam(T) / |T|^{1/2}
double shape_regularity(const Mesh& mesh);

/// Checks conformity, orientation, boundary closure and area; throws MeshError.
void check_mesh(const Mesh& mesh);

/// Plain-text dump: "x y" per vertex, then "v0 v1 v2 refedge" per triangle.
void write_mesh(std::ostream& out, const Mesh& mesh);

}  // namespace fembem
