#pragma once

#include <Eigen/Dense>

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include "pgc/errors.hpp"

namespace pgc {

using Vec3 = Eigen::Vector3d;

/// Local refinement request: vertices generated within geodesic distance
/// `radius` of `center` use target edge length `h`, with a graded
/// transition back to the coarse length.
struct RefinementRule {
  Vec3 center = Vec3(0, 0, 1);
  double radius = 0.3;
  double h = 0.01;
};

/// Subdomain of the unit sphere bounded by latitude circles.
/// A cap is {colatitude <= theta}; a band is {theta1 <= colatitude <= theta2}.
struct DomainSpec {
  enum class Kind { Cap, Band };
  Kind kind = Kind::Cap;
  double theta = 2.0;   // cap opening angle, in (0, pi)
  double theta1 = 0.0;  // band limits, 0 < theta1 < theta2 < pi
  double theta2 = 0.0;
  double h = 0.05;  // target edge length
  std::vector<RefinementRule> refine;

  static DomainSpec cap(double theta, double h) {
    DomainSpec d;
    d.kind = Kind::Cap;
    d.theta = theta;
    d.h = h;
    return d;
  }
  static DomainSpec band(double theta1, double theta2, double h) {
    DomainSpec d;
    d.kind = Kind::Band;
    d.theta1 = theta1;
    d.theta2 = theta2;
    d.h = h;
    return d;
  }
};

/// Triangulated subdomain of the unit sphere. All vertices lie on the
/// sphere; triangles are flat chords oriented with outward normal
/// (normal . centroid > 0). Boundary loops are closed vertex cycles in
/// the orientation induced by the triangles, each starting at its
/// smallest vertex index; loops are sorted by that index.
struct SurfaceMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;
  std::vector<std::vector<int>> boundary_loops;
  std::vector<std::uint8_t> refined;  // per-vertex: generated under a finer h
  std::string name;

  int vertex_count() const { return static_cast<int>(vertices.size()); }
  int triangle_count() const { return static_cast<int>(triangles.size()); }
};

/// Geodesic (great-circle) distance between unit vectors.
/// Rejects points further than 1e-9 from the sphere.
double geodesic_distance(const Vec3& a, const Vec3& b);

/// Structured latitude-ring triangulation of a cap. theta and h checked.
SurfaceMesh generate_cap_mesh(const DomainSpec& spec);

/// Structured latitude-ring triangulation of a band.
SurfaceMesh generate_band_mesh(const DomainSpec& spec);

/// Dispatch on spec.kind.
SurfaceMesh generate_mesh(const DomainSpec& spec);

/// Sum of flat triangle areas.
double mesh_area(const SurfaceMesh& mesh);

/// Twice the mesh area (the geometric value of the total-mass parameter).
double rho_geometric(const SurfaceMesh& mesh);

/// Area of one flat triangle.
double triangle_area(const SurfaceMesh& mesh, int t);

/// Recompute boundary loops from the triangle topology.
std::vector<std::vector<int>> boundary_components(const SurfaceMesh& mesh);

/// Vertices at geodesic distance < delta from the seed set (includes the
/// seeds). Exact point-to-seed distances; a 3d hash grid only prunes.
std::vector<int> parallel_set(const SurfaceMesh& mesh,
                              const std::vector<int>& seeds, double delta);

/// Checks every structural invariant (unit vertices, manifold edges,
/// consistent orientation, positive triangle areas, Euler characteristic
/// 2 - #loops, loops partition the boundary). Throws on violation.
void validate_mesh(const SurfaceMesh& mesh);

/// Euler characteristic V - E + F.
int euler_characteristic(const SurfaceMesh& mesh);

/// Largest edge length among edges with an endpoint within geodesic
/// distance `radius` of p. Used to decide whether a bubble is resolved.
double local_edge_length(const SurfaceMesh& mesh, const Vec3& p, double radius);

/// Index of the mesh vertex nearest to p (geodesic).
int nearest_vertex(const SurfaceMesh& mesh, const Vec3& p);

/// Set of vertex indices lying on some boundary loop.
std::vector<int> boundary_vertices(const SurfaceMesh& mesh);

/// Wavefront OBJ ("v"/"f" records, 17 significant digits) plus a sidecar
/// CSV (loop_index,position,vertex_index) describing boundary loops.
void export_obj(const SurfaceMesh& mesh, const std::string& obj_path,
                const std::string& loops_csv_path);

/// Rebuilds a mesh from the OBJ, revalidates all invariants, recomputes
/// boundary loops and checks them against the sidecar.
SurfaceMesh import_obj(const std::string& obj_path,
                       const std::string& loops_csv_path);

}  // namespace pgc
