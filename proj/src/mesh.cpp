#include "fembem/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <ostream>
#include <unordered_map>

namespace fembem {

namespace {

std::uint64_t edge_key(Index a, Index b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint64_t>(b);
}

double signed_area(Vertex a, Vertex b, Vertex c) { return 0.5 * cross(b - a, c - a); }

// Rotates the triangle so that its reference edge is local edge 0.
std::array<Index, 3> canonical(const Triangle& t) {
  const int r = t.ref_edge;
  return {t.v[r], t.v[(r + 1) % 3], t.v[(r + 2) % 3]};
}

}  // namespace

double norm(Vertex a) { return std::hypot(a.x, a.y); }

std::string to_string(DomainId id) {
  switch (id) {
    case DomainId::LShape: return "LShape";
    case DomainId::ZShape: return "ZShape";
  }
  return "?";
}

Mesh::Mesh(std::vector<Vertex> vertices, std::vector<Triangle> triangles, int level)
    : vertices_(std::move(vertices)), triangles_(std::move(triangles)), level_(level) {
  for (std::size_t t = 0; t < triangles_.size(); ++t) {
    const auto& tri = triangles_[t];
    for (Index v : tri.v)
      if (v < 0 || static_cast<std::size_t>(v) >= vertices_.size())
        throw MeshError("triangle " + std::to_string(t) + " references an invalid vertex");
    if (tri.ref_edge < 0 || tri.ref_edge > 2) throw MeshError("invalid reference edge");
    if (area(static_cast<Index>(t)) <= 0.0)
      throw MeshError("triangle " + std::to_string(t) + " is degenerate or clockwise");
  }
  build_topology();
  build_boundary();
}

void Mesh::build_topology() {
  std::unordered_map<std::uint64_t, Index> lookup;
  lookup.reserve(3 * triangles_.size());
  topology_.triangle_edges.resize(triangles_.size());
  for (std::size_t t = 0; t < triangles_.size(); ++t) {
    for (int k = 0; k < 3; ++k) {
      const Index a = triangles_[t].v[k];
      const Index b = triangles_[t].v[(k + 1) % 3];
      auto [it, inserted] = lookup.try_emplace(edge_key(a, b), static_cast<Index>(topology_.edges.size()));
      if (inserted) {
        topology_.edges.push_back({std::min(a, b), std::max(a, b)});
        topology_.edge_triangles.push_back({static_cast<Index>(t), -1});
      } else {
        auto& adj = topology_.edge_triangles[it->second];
        if (adj[1] != -1) throw MeshError("edge shared by more than two triangles");
        adj[1] = static_cast<Index>(t);
      }
      topology_.triangle_edges[t][k] = it->second;
    }
  }
}

void Mesh::build_boundary() {
  // boundary facets keyed by their start vertex
  std::unordered_map<Index, BoundaryFacet> by_start;
  for (std::size_t e = 0; e < topology_.edges.size(); ++e) {
    if (topology_.edge_triangles[e][1] != -1) continue;
    const Index t = topology_.edge_triangles[e][0];
    for (int k = 0; k < 3; ++k) {
      if (topology_.triangle_edges[t][k] != static_cast<Index>(e)) continue;
      BoundaryFacet f{triangles_[t].v[k], triangles_[t].v[(k + 1) % 3], t, static_cast<Index>(e)};
      if (!by_start.emplace(f.a, f).second) throw MeshError("boundary is not a simple polygon");
    }
  }
  if (by_start.empty()) throw MeshError("mesh has no boundary");
  Index start = by_start.begin()->first;
  for (const auto& [a, f] : by_start) start = std::min(start, a);
  boundary_.reserve(by_start.size());
  Index cur = start;
  do {
    auto it = by_start.find(cur);
    if (it == by_start.end()) throw MeshError("boundary polygon is not closed");
    boundary_.push_back(it->second);
    cur = it->second.b;
  } while (cur != start && boundary_.size() <= by_start.size());
  if (boundary_.size() != by_start.size())
    throw MeshError("boundary is not a single closed polygon (hanging node?)");
}

double Mesh::area(Index t) const {
  const auto& v = triangles_[t].v;
  return signed_area(vertices_[v[0]], vertices_[v[1]], vertices_[v[2]]);
}

double Mesh::total_area() const {
  double s = 0.0;
  for (std::size_t t = 0; t < triangles_.size(); ++t) s += area(static_cast<Index>(t));
  return s;
}

double Mesh::diameter(Index t) const {
  const auto c = corners(t);
  return std::max({norm(c[1] - c[0]), norm(c[2] - c[1]), norm(c[0] - c[2])});
}

std::array<Vertex, 3> Mesh::corners(Index t) const {
  const auto& v = triangles_[t].v;
  return {vertices_[v[0]], vertices_[v[1]], vertices_[v[2]]};
}

Index Mesh::reference_edge(Index t) const { return topology_.triangle_edges[t][triangles_[t].ref_edge]; }

Index Mesh::find_edge(Index a, Index b) const {
  // linear scan, not used on hot paths
  const auto key = std::array<Index, 2>{std::min(a, b), std::max(a, b)};
  for (std::size_t e = 0; e < topology_.edges.size(); ++e)
    if (topology_.edges[e] == key) return static_cast<Index>(e);
  return -1;
}

double BoundaryMesh::perimeter() const {
  double s = 0.0;
  for (const auto& seg : segments) s += seg.length;
  return s;
}

Vertex BoundaryMesh::point_on(Index segment, double t) const {
  const auto& s = segments[segment];
  return (1.0 - t) * points[s.a] + t * points[s.b];
}

double reentrant_angle(DomainId domain) {
  return domain == DomainId::LShape ? 1.5 * std::numbers::pi : 1.75 * std::numbers::pi;
}

Mesh make_initial_mesh(DomainId domain) {
  constexpr double q = 0.25;
  constexpr double h = 0.125;
  std::vector<Vertex> v;
  std::vector<Triangle> t;
  // each square (c0,c1,c2,c3) counterclockwise is split into four triangles
  // around its center; the square side is the longest edge and becomes the
  // reference edge
  auto square = [&](Index c0, Index c1, Index c2, Index c3, Index m) {
    t.push_back({{c0, c1, m}, 0, 0, std::nullopt});
    t.push_back({{c1, c2, m}, 0, 0, std::nullopt});
    t.push_back({{c2, c3, m}, 0, 0, std::nullopt});
    t.push_back({{c3, c0, m}, 0, 0, std::nullopt});
  };
  switch (domain) {
    case DomainId::LShape:
      v = {{-q, -q}, {0, -q}, {-q, 0}, {0, 0}, {q, 0}, {-q, q}, {0, q}, {q, q}, {-h, -h}, {-h, h}, {h, h}};
      square(0, 1, 3, 2, 8);
      square(2, 3, 6, 5, 9);
      square(3, 4, 7, 6, 10);
      break;
    case DomainId::ZShape:
      v = {{-q, -q}, {0, -q}, {q, -q}, {-q, 0}, {0, 0}, {q, 0}, {-q, q},
           {0, q},   {q, q},  {h, -h}, {-h, -h}, {-h, h}, {h, h}};
      square(0, 1, 4, 3, 10);
      square(3, 4, 7, 6, 11);
      square(4, 5, 8, 7, 12);
      t.push_back({{4, 1, 9}, 0, 0, std::nullopt});
      t.push_back({{1, 2, 9}, 0, 0, std::nullopt});
      break;
  }
  // longest edge as reference edge (already the case above, kept general)
  for (auto& tri : t) {
    double best = -1.0;
    for (int k = 0; k < 3; ++k) {
      const double len = norm(v[tri.v[(k + 1) % 3]] - v[tri.v[k]]);
      if (len > best + 1e-14) {
        best = len;
        tri.ref_edge = k;
      }
    }
  }
  return Mesh(std::move(v), std::move(t), 0);
}

std::pair<Mesh, RefinementRelation> refine_nvb(const Mesh& mesh, std::span<const Index> marked) {
  std::vector<Index> edges;
  edges.reserve(marked.size());
  for (Index t : marked) {
    if (t < 0 || static_cast<std::size_t>(t) >= mesh.num_triangles()) throw MeshError("marked triangle out of range");
    edges.push_back(mesh.reference_edge(t));
  }
  return refine_nvb_edges(mesh, edges);
}

std::pair<Mesh, RefinementRelation> refine_uniform(const Mesh& mesh) {
  std::vector<Index> all(mesh.num_triangles());
  for (std::size_t t = 0; t < all.size(); ++t) all[t] = static_cast<Index>(t);
  return refine_nvb(mesh, all);
}

std::pair<Mesh, RefinementRelation> refine_bisec3(const Mesh& mesh, std::span<const Index> marked) {
  const auto& topo = mesh.topology();
  std::vector<Index> edges;
  edges.reserve(3 * marked.size());
  for (Index t : marked) {
    if (t < 0 || static_cast<std::size_t>(t) >= mesh.num_triangles()) throw MeshError("marked triangle out of range");
    for (Index e : topo.triangle_edges[t]) edges.push_back(e);
  }
  return refine_nvb_edges(mesh, edges);
}

std::pair<Mesh, RefinementRelation> refine_nvb_edges(const Mesh& mesh, std::span<const Index> marked_edges) {
  const auto& topo = mesh.topology();
  const std::size_t ne = topo.edges.size();
  std::vector<char> marked(ne, 0);
  std::vector<Index> work;
  for (Index e : marked_edges) {
    if (e < 0 || static_cast<std::size_t>(e) >= ne) throw MeshError("marked edge out of range");
    if (!marked[e]) {
      marked[e] = 1;
      for (Index t : topo.edge_triangles[e])
        if (t >= 0) work.push_back(t);
    }
  }
  // closure: a triangle with any bisected edge must bisect its reference edge
  while (!work.empty()) {
    const Index t = work.back();
    work.pop_back();
    const Index ref = mesh.reference_edge(t);
    if (marked[ref]) continue;
    const auto& te = topo.triangle_edges[t];
    if (marked[te[0]] || marked[te[1]] || marked[te[2]]) {
      marked[ref] = 1;
      for (Index n : topo.edge_triangles[ref])
        if (n >= 0) work.push_back(n);
    }
  }

  RefinementRelation rel;
  rel.coarse_vertices = mesh.num_vertices();
  std::vector<Vertex> vertices = mesh.vertices();
  std::vector<Index> midpoint(ne, -1);
  for (std::size_t e = 0; e < ne; ++e) {
    if (!marked[e]) continue;
    const auto [a, b] = topo.edges[e];
    midpoint[e] = static_cast<Index>(vertices.size());
    vertices.push_back(0.5 * (vertices[a] + vertices[b]));
    rel.new_vertex_parents.push_back({a, b});
  }

  std::vector<Triangle> triangles;
  triangles.reserve(mesh.num_triangles() + 2 * rel.new_vertex_parents.size());
  rel.triangle_sons.resize(mesh.num_triangles());
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const Triangle& tri = mesh.triangles()[t];
    const int r = tri.ref_edge;
    const auto& te = topo.triangle_edges[t];
    auto& sons = rel.triangle_sons[t];
    auto emit = [&](std::array<Index, 3> v, int gen) {
      sons.push_back(static_cast<Index>(triangles.size()));
      triangles.push_back({v, 0, gen, static_cast<Index>(t)});
    };
    if (!marked[te[r]]) {
      sons.push_back(static_cast<Index>(triangles.size()));
      Triangle copy = tri;
      copy.father = static_cast<Index>(t);
      triangles.push_back(copy);
      continue;
    }
    const auto [n1, n2, n3] = canonical(tri);
    const Index m = midpoint[te[r]];
    const Index e31 = te[(r + 2) % 3];  // n3 -> n1
    const Index e23 = te[(r + 1) % 3];  // n2 -> n3
    const int g = tri.generation + 1;
    // son (n3, n1, m) has reference edge n3-n1, son (n2, n3, m) has n2-n3
    if (marked[e31]) {
      const Index mm = midpoint[e31];
      emit({m, n3, mm}, g + 1);
      emit({n1, m, mm}, g + 1);
    } else {
      emit({n3, n1, m}, g);
    }
    if (marked[e23]) {
      const Index mm = midpoint[e23];
      emit({m, n2, mm}, g + 1);
      emit({n3, m, mm}, g + 1);
    } else {
      emit({n2, n3, m}, g);
    }
  }
  rel.triangle_father.resize(triangles.size());
  for (std::size_t t = 0; t < rel.triangle_sons.size(); ++t)
    for (Index s : rel.triangle_sons[t]) rel.triangle_father[s] = static_cast<Index>(t);

  Mesh fine(std::move(vertices), std::move(triangles), mesh.level() + (rel.new_vertex_parents.empty() ? 0 : 1));

  // Boundary facets of the fine mesh keep the coarse polygon order when the
  // start vertex is unchanged; map them back to coarse facets through the
  // midpoint table.
  const auto& cb = mesh.boundary();
  const auto& fb = fine.boundary();
  rel.segment_sons.assign(cb.size(), {});
  rel.segment_father.assign(fb.size(), -1);
  std::unordered_map<std::uint64_t, Index> fine_by_edge;
  fine_by_edge.reserve(fb.size());
  for (std::size_t k = 0; k < fb.size(); ++k) fine_by_edge.emplace(edge_key(fb[k].a, fb[k].b), static_cast<Index>(k));
  for (std::size_t k = 0; k < cb.size(); ++k) {
    const Index a = cb[k].a;
    const Index b = cb[k].b;
    const auto it = fine_by_edge.find(edge_key(a, b));
    if (it != fine_by_edge.end()) {
      rel.segment_sons[k] = {it->second};
    } else {
      const Index m = midpoint[cb[k].edge];
      const auto s0 = fine_by_edge.find(edge_key(a, m));
      const auto s1 = fine_by_edge.find(edge_key(m, b));
      if (m < 0 || s0 == fine_by_edge.end() || s1 == fine_by_edge.end())
        throw MeshError("boundary refinement bookkeeping failed");
      rel.segment_sons[k] = {s0->second, s1->second};
    }
    for (Index s : rel.segment_sons[k]) rel.segment_father[s] = static_cast<Index>(k);
  }
  return {std::move(fine), std::move(rel)};
}

BoundaryMesh boundary_trace(const Mesh& mesh) {
  BoundaryMesh bm;
  const auto& fb = mesh.boundary();
  const std::size_t n = fb.size();
  bm.nodes.reserve(n);
  bm.points.reserve(n);
  for (const auto& f : fb) {
    bm.nodes.push_back(f.a);
    bm.points.push_back(mesh.vertices()[f.a]);
  }
  bm.segments.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    BoundarySegment s;
    s.a = static_cast<Index>(k);
    s.b = static_cast<Index>((k + 1) % n);
    const Vertex d = bm.points[s.b] - bm.points[s.a];
    s.length = norm(d);
    s.tangent = (1.0 / s.length) * d;
    s.normal = {s.tangent.y, -s.tangent.x};
    s.triangle = fb[k].triangle;
    bm.segments.push_back(s);
  }
  return bm;
}

double shape_regularity(const Mesh& mesh) {
  double sigma = 0.0;
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const auto i = static_cast<Index>(t);
    sigma = std::max(sigma, mesh.diameter(i) / std::sqrt(mesh.area(i)));
  }
  return sigma;
}

void check_mesh(const Mesh& mesh) {
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t)
    if (!(mesh.area(static_cast<Index>(t)) > 0.0)) throw MeshError("non-positive triangle area");
  // boundary polygon must enclose exactly the triangulated area; an interior
  // one-sided edge (hanging node) would already have broken the polygon chain
  double enclosed = 0.0;
  for (const auto& f : mesh.boundary()) enclosed += 0.5 * cross(mesh.vertices()[f.a], mesh.vertices()[f.b]);
  const double area = mesh.total_area();
  if (std::abs(enclosed - area) > 1e-12 * area) throw MeshError("boundary polygon does not enclose the mesh area");
  for (const auto& adj : mesh.topology().edge_triangles)
    if (adj[0] < 0) throw MeshError("dangling edge");
}

void write_mesh(std::ostream& out, const Mesh& mesh) {
  out.precision(17);
  out << "# vertices " << mesh.num_vertices() << '\n';
  for (const auto& v : mesh.vertices()) out << v.x << ' ' << v.y << '\n';
  out << "# triangles " << mesh.num_triangles() << '\n';
  for (const auto& t : mesh.triangles())
    out << t.v[0] << ' ' << t.v[1] << ' ' << t.v[2] << ' ' << t.ref_edge << '\n';
}

}  // namespace fembem
