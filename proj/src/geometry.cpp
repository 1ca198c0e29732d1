#include "pgc/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace pgc {

namespace {

constexpr double kPi = std::numbers::pi;

void check_unit(const Vec3& p, double tol, const char* what) {
  if (std::abs(p.norm() - 1.0) > tol)
    fail(ErrorCode::InvalidPoint,
         std::string(what) + ": point is off the unit sphere by " +
             std::to_string(std::abs(p.norm() - 1.0)));
}

Vec3 ring_point(double colat, double azimuth) {
  const double s = std::sin(colat);
  return Vec3(s * std::cos(azimuth), s * std::sin(azimuth), std::cos(colat));
}

/// Target edge length at colatitude t: the coarse h, shrunk inside any
/// refinement window and graded (slope 0.35) in the transition zone.
double target_h(double t, double h_coarse, const std::vector<RefinementRule>& rules) {
  double h = h_coarse;
  for (const auto& r : rules) {
    const double tc = std::acos(std::clamp(r.center.z(), -1.0, 1.0));
    const double dist = std::max(0.0, std::abs(t - tc) - r.radius);
    h = std::min(h, r.h + 0.35 * dist);
  }
  return std::min(h, h_coarse);
}

/// Ring colatitudes spanning [t0, t1], endpoints exact. Uniform division
/// when no refinement is requested; otherwise an adaptive march with a
/// snapped final ring.
std::vector<double> ring_positions(double t0, double t1, double h,
                                   const std::vector<RefinementRule>& rules) {
  std::vector<double> out;
  const double range = t1 - t0;
  if (rules.empty()) {
    const int n = std::max(1, static_cast<int>(std::ceil(range / h)));
    out.reserve(n + 1);
    for (int i = 0; i <= n; ++i) out.push_back(t0 + range * i / n);
    return out;
  }
  out.push_back(t0);
  double t = t0;
  while (true) {
    double dt = target_h(t, h, rules);
    if (t + 1.25 * dt >= t1) {
      out.push_back(t1);
      break;
    }
    t += dt;
    out.push_back(t);
  }
  if (out.size() < 2) out.push_back(t1);
  return out;
}

struct Ring {
  double colat = 0.0;
  double offset = 0.0;
  int count = 0;   // 0 encodes a pole vertex
  int first = 0;   // index of the ring's first vertex
  bool fine = false;
};

/// Merge-triangulates the annulus between two vertex rings by walking
/// both azimuth sequences in order.
void stitch(const Ring& a, const Ring& b,
            std::vector<std::array<int, 3>>& tris) {
  const auto angle = [](const Ring& r, int k) {
    return r.offset + 2.0 * kPi * k / r.count;
  };
  int i = 0, j = 0;
  while (i < a.count || j < b.count) {
    const bool can_a = i < a.count;
    const bool can_b = j < b.count;
    bool take_a;
    if (can_a && can_b)
      take_a = angle(a, i + 1) <= angle(b, j + 1);
    else
      take_a = can_a;
    const int ai = a.first + (i % a.count);
    const int bj = b.first + (j % b.count);
    if (take_a) {
      const int an = a.first + ((i + 1) % a.count);
      tris.push_back({ai, bj, an});
      ++i;
    } else {
      const int bn = b.first + ((j + 1) % b.count);
      tris.push_back({ai, bj, bn});
      ++j;
    }
  }
}

void orient_outward(SurfaceMesh& mesh) {
  for (auto& t : mesh.triangles) {
    const Vec3& p0 = mesh.vertices[t[0]];
    const Vec3& p1 = mesh.vertices[t[1]];
    const Vec3& p2 = mesh.vertices[t[2]];
    const Vec3 n = (p1 - p0).cross(p2 - p0);
    if (n.dot(p0 + p1 + p2) < 0.0) std::swap(t[1], t[2]);
  }
}

SurfaceMesh build_from_rings(const std::vector<double>& colats, bool pole,
                             double h_coarse,
                             const std::vector<RefinementRule>& rules,
                             const std::string& name) {
  SurfaceMesh mesh;
  mesh.name = name;
  std::vector<Ring> rings;
  rings.reserve(colats.size());
  int next = 0;
  for (std::size_t i = 0; i < colats.size(); ++i) {
    Ring r;
    r.colat = colats[i];
    const double ht = target_h(r.colat, h_coarse, rules);
    r.fine = ht < 0.999 * h_coarse;
    if (i == 0 && pole) {
      r.count = 0;
      r.first = next++;
      mesh.vertices.push_back(Vec3(0, 0, 1));
      mesh.refined.push_back(r.fine);
    } else {
      const double circ = 2.0 * kPi * std::sin(r.colat);
      r.count = std::max(3, static_cast<int>(std::lround(circ / ht)));
      r.offset = (i % 2 == 1) ? kPi / r.count : 0.0;
      r.first = next;
      next += r.count;
      for (int k = 0; k < r.count; ++k) {
        mesh.vertices.push_back(
            ring_point(r.colat, r.offset + 2.0 * kPi * k / r.count));
        mesh.refined.push_back(r.fine);
      }
    }
    rings.push_back(r);
  }
  for (std::size_t i = 0; i + 1 < rings.size(); ++i) {
    const Ring& a = rings[i];
    const Ring& b = rings[i + 1];
    if (a.count == 0) {
      for (int k = 0; k < b.count; ++k)
        mesh.triangles.push_back(
            {a.first, b.first + k, b.first + (k + 1) % b.count});
    } else {
      stitch(a, b, mesh.triangles);
    }
  }
  orient_outward(mesh);
  mesh.boundary_loops = boundary_components(mesh);
  validate_mesh(mesh);
  return mesh;
}

void check_refinement(const DomainSpec& spec) {
  for (const auto& r : spec.refine) {
    check_unit(r.center, 1e-9, "refinement center");
    if (!(r.radius > 0.0))
      fail(ErrorCode::InvalidSpec, "refinement radius must be positive");
    if (!(r.h > 0.0) || r.h > spec.h)
      fail(ErrorCode::InvalidSpec,
           "refined edge length must lie in (0, h]");
  }
}

std::string format_name(const DomainSpec& spec) {
  char buf[128];
  if (spec.kind == DomainSpec::Kind::Cap)
    std::snprintf(buf, sizeof buf, "cap(theta=%.6g,h=%.6g)", spec.theta,
                  spec.h);
  else
    std::snprintf(buf, sizeof buf, "band(theta1=%.6g,theta2=%.6g,h=%.6g)",
                  spec.theta1, spec.theta2, spec.h);
  return buf;
}

}  // namespace

double geodesic_distance(const Vec3& a, const Vec3& b) {
  check_unit(a, 1e-9, "geodesic_distance");
  check_unit(b, 1e-9, "geodesic_distance");
  return std::acos(std::clamp(a.dot(b), -1.0, 1.0));
}

SurfaceMesh generate_cap_mesh(const DomainSpec& spec) {
  if (!(spec.theta > 0.0) || !(spec.theta < kPi))
    fail(ErrorCode::InvalidSpec, "cap angle must lie in (0, pi)");
  if (!(spec.h > 0.0) || spec.h >= kPi)
    fail(ErrorCode::InvalidSpec, "edge length must lie in (0, pi)");
  check_refinement(spec);
  const auto colats = ring_positions(0.0, spec.theta, spec.h, spec.refine);
  return build_from_rings(colats, true, spec.h, spec.refine,
                          format_name(spec));
}

SurfaceMesh generate_band_mesh(const DomainSpec& spec) {
  if (!(spec.theta1 > 0.0) || !(spec.theta1 < spec.theta2) ||
      !(spec.theta2 < kPi))
    fail(ErrorCode::InvalidSpec,
         "band limits must satisfy 0 < theta1 < theta2 < pi");
  if (!(spec.h > 0.0) || spec.h >= kPi)
    fail(ErrorCode::InvalidSpec, "edge length must lie in (0, pi)");
  check_refinement(spec);
  const auto colats =
      ring_positions(spec.theta1, spec.theta2, spec.h, spec.refine);
  return build_from_rings(colats, false, spec.h, spec.refine,
                          format_name(spec));
}

SurfaceMesh generate_mesh(const DomainSpec& spec) {
  return spec.kind == DomainSpec::Kind::Cap ? generate_cap_mesh(spec)
                                            : generate_band_mesh(spec);
}

double triangle_area(const SurfaceMesh& mesh, int t) {
  const auto& tr = mesh.triangles[t];
  const Vec3 e1 = mesh.vertices[tr[1]] - mesh.vertices[tr[0]];
  const Vec3 e2 = mesh.vertices[tr[2]] - mesh.vertices[tr[0]];
  return 0.5 * e1.cross(e2).norm();
}

double mesh_area(const SurfaceMesh& mesh) {
  double area = 0.0;
  for (int t = 0; t < mesh.triangle_count(); ++t) area += triangle_area(mesh, t);
  return area;
}

double rho_geometric(const SurfaceMesh& mesh) { return 2.0 * mesh_area(mesh); }

std::vector<std::vector<int>> boundary_components(const SurfaceMesh& mesh) {
  // Interior directed edges come in opposite pairs; a directed edge with no
  // reverse partner is a boundary edge, and those edges form disjoint cycles.
  const std::int64_t n = mesh.vertex_count();
  std::unordered_set<std::int64_t> directed;
  directed.reserve(mesh.triangles.size() * 3);
  for (const auto& t : mesh.triangles)
    for (int e = 0; e < 3; ++e)
      directed.insert(t[e] * n + t[(e + 1) % 3]);
  std::unordered_map<int, int> next_on_boundary;
  for (const auto& t : mesh.triangles)
    for (int e = 0; e < 3; ++e) {
      const int u = t[e], v = t[(e + 1) % 3];
      if (!directed.count(std::int64_t(v) * n + u)) {
        if (next_on_boundary.count(u))
          fail(ErrorCode::MeshIntegrity,
               "vertex " + std::to_string(u) + " has two outgoing boundary edges");
        next_on_boundary[u] = v;
      }
    }
  std::vector<int> starts;
  starts.reserve(next_on_boundary.size());
  for (const auto& [u, v] : next_on_boundary) starts.push_back(u);
  std::sort(starts.begin(), starts.end());
  std::unordered_set<int> visited;
  std::vector<std::vector<int>> loops;
  for (int s : starts) {
    if (visited.count(s)) continue;
    std::vector<int> loop;
    int u = s;
    do {
      loop.push_back(u);
      visited.insert(u);
      auto it = next_on_boundary.find(u);
      if (it == next_on_boundary.end())
        fail(ErrorCode::MeshIntegrity, "open boundary chain at vertex " +
                                           std::to_string(u));
      u = it->second;
    } while (u != s);
    loops.push_back(std::move(loop));
  }
  return loops;
}

std::vector<int> boundary_vertices(const SurfaceMesh& mesh) {
  std::vector<int> out;
  for (const auto& loop : mesh.boundary_loops)
    out.insert(out.end(), loop.begin(), loop.end());
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<int> parallel_set(const SurfaceMesh& mesh,
                              const std::vector<int>& seeds, double delta) {
  if (!(delta > 0.0))
    fail(ErrorCode::InvalidArgument, "parallel_set needs delta > 0");
  for (int s : seeds)
    if (s < 0 || s >= mesh.vertex_count())
      fail(ErrorCode::InvalidArgument, "seed vertex out of range");
  std::vector<int> out;
  if (delta > kPi) {
    out.resize(mesh.vertex_count());
    for (int i = 0; i < mesh.vertex_count(); ++i) out[i] = i;
    return out;
  }
  // Geodesic dist < delta iff chord dist < 2 sin(delta/2); a coarse 3d grid
  // over the seeds prunes candidates, the chord test itself stays exact.
  const double chord = 2.0 * std::sin(0.5 * delta);
  const double cell = std::max(chord, 1e-6);
  const auto key = [cell](const Vec3& p) {
    const auto c = [cell](double x) {
      return static_cast<std::int64_t>(std::floor(x / cell)) + (1 << 20);
    };
    return (c(p.x()) << 42) | (c(p.y()) << 21) | c(p.z());
  };
  std::unordered_map<std::int64_t, std::vector<int>> grid;
  for (int s : seeds) grid[key(mesh.vertices[s])].push_back(s);
  const double chord2 = chord * chord;
  for (int i = 0; i < mesh.vertex_count(); ++i) {
    const Vec3& p = mesh.vertices[i];
    bool hit = false;
    for (int dx = -1; dx <= 1 && !hit; ++dx)
      for (int dy = -1; dy <= 1 && !hit; ++dy)
        for (int dz = -1; dz <= 1 && !hit; ++dz) {
          auto it = grid.find(key(p + cell * Vec3(dx, dy, dz)));
          if (it == grid.end()) continue;
          for (int s : it->second)
            if ((p - mesh.vertices[s]).squaredNorm() < chord2) {
              hit = true;
              break;
            }
        }
    if (hit) out.push_back(i);
  }
  return out;
}

int euler_characteristic(const SurfaceMesh& mesh) {
  const std::int64_t n = mesh.vertex_count();
  std::unordered_set<std::int64_t> edges;
  edges.reserve(mesh.triangles.size() * 3);
  for (const auto& t : mesh.triangles)
    for (int e = 0; e < 3; ++e) {
      const int u = t[e], v = t[(e + 1) % 3];
      edges.insert(std::int64_t(std::min(u, v)) * n + std::max(u, v));
    }
  return mesh.vertex_count() - static_cast<int>(edges.size()) +
         mesh.triangle_count();
}

void validate_mesh(const SurfaceMesh& mesh) {
  const int n = mesh.vertex_count();
  if (n < 3 || mesh.triangles.empty())
    fail(ErrorCode::MeshIntegrity, "mesh too small");
  for (int i = 0; i < n; ++i)
    if (std::abs(mesh.vertices[i].norm() - 1.0) > 1e-12)
      fail(ErrorCode::MeshIntegrity,
           "vertex " + std::to_string(i) + " is off the unit sphere");
  std::unordered_map<std::int64_t, int> edge_count;
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const auto& tr = mesh.triangles[t];
    for (int e = 0; e < 3; ++e) {
      if (tr[e] < 0 || tr[e] >= n)
        fail(ErrorCode::MeshIntegrity, "triangle index out of range");
      if (tr[e] == tr[(e + 1) % 3])
        fail(ErrorCode::MeshIntegrity, "degenerate triangle " + std::to_string(t));
      const int u = tr[e], v = tr[(e + 1) % 3];
      edge_count[std::int64_t(std::min(u, v)) * n + std::max(u, v)] += 1;
    }
    if (triangle_area(mesh, t) < 1e-14)
      fail(ErrorCode::MeshIntegrity,
           "triangle " + std::to_string(t) + " has vanishing area");
    const Vec3& p0 = mesh.vertices[tr[0]];
    const Vec3& p1 = mesh.vertices[tr[1]];
    const Vec3& p2 = mesh.vertices[tr[2]];
    if ((p1 - p0).cross(p2 - p0).dot(p0 + p1 + p2) <= 0.0)
      fail(ErrorCode::MeshIntegrity,
           "triangle " + std::to_string(t) + " is not oriented outward");
  }
  for (const auto& [e, c] : edge_count)
    if (c > 2) fail(ErrorCode::MeshIntegrity, "non-manifold edge");
  const auto loops = boundary_components(mesh);
  if (loops.size() != mesh.boundary_loops.size())
    fail(ErrorCode::MeshIntegrity, "stored boundary loops are stale");
  for (std::size_t i = 0; i < loops.size(); ++i)
    if (loops[i] != mesh.boundary_loops[i])
      fail(ErrorCode::MeshIntegrity, "stored boundary loop differs");
  const int chi = euler_characteristic(mesh);
  if (chi != 2 - static_cast<int>(loops.size()))
    fail(ErrorCode::MeshIntegrity,
         "Euler characteristic " + std::to_string(chi) + " does not match " +
             std::to_string(loops.size()) + " boundary loop(s)");
}

int nearest_vertex(const SurfaceMesh& mesh, const Vec3& p) {
  check_unit(p, 1e-9, "nearest_vertex");
  int best = 0;
  double best_dot = -2.0;
  for (int i = 0; i < mesh.vertex_count(); ++i) {
    const double d = mesh.vertices[i].dot(p);
    if (d > best_dot) {
      best_dot = d;
      best = i;
    }
  }
  return best;
}

double local_edge_length(const SurfaceMesh& mesh, const Vec3& p,
                         double radius) {
  check_unit(p, 1e-9, "local_edge_length");
  const double cos_r = std::cos(std::min(radius, kPi));
  std::vector<char> near(mesh.vertex_count(), 0);
  bool any = false;
  for (int i = 0; i < mesh.vertex_count(); ++i) {
    near[i] = mesh.vertices[i].dot(p) >= cos_r;
    any = any || near[i];
  }
  if (!any) near[nearest_vertex(mesh, p)] = 1;
  double longest = 0.0;
  for (const auto& t : mesh.triangles)
    for (int e = 0; e < 3; ++e) {
      const int u = t[e], v = t[(e + 1) % 3];
      if (near[u] || near[v])
        longest = std::max(longest,
                           (mesh.vertices[u] - mesh.vertices[v]).norm());
    }
  return longest;
}

void export_obj(const SurfaceMesh& mesh, const std::string& obj_path,
                const std::string& loops_csv_path) {
  std::ofstream obj(obj_path);
  if (!obj) fail(ErrorCode::Io, "cannot open " + obj_path);
  char buf[160];
  for (const Vec3& v : mesh.vertices) {
    std::snprintf(buf, sizeof buf, "v %.17g %.17g %.17g\n", v.x(), v.y(),
                  v.z());
    obj << buf;
  }
  for (const auto& t : mesh.triangles)
    obj << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
  if (!obj.good()) fail(ErrorCode::Io, "write failed: " + obj_path);
  std::ofstream csv(loops_csv_path);
  if (!csv) fail(ErrorCode::Io, "cannot open " + loops_csv_path);
  csv << "loop,position,vertex\n";
  for (std::size_t l = 0; l < mesh.boundary_loops.size(); ++l)
    for (std::size_t k = 0; k < mesh.boundary_loops[l].size(); ++k)
      csv << l << ',' << k << ',' << mesh.boundary_loops[l][k] << '\n';
  if (!csv.good()) fail(ErrorCode::Io, "write failed: " + loops_csv_path);
}

SurfaceMesh import_obj(const std::string& obj_path,
                       const std::string& loops_csv_path) {
  std::ifstream obj(obj_path);
  if (!obj) fail(ErrorCode::Io, "cannot open " + obj_path);
  SurfaceMesh mesh;
  mesh.name = obj_path;
  std::string line;
  while (std::getline(obj, line)) {
    std::istringstream ss(line);
    std::string tag;
    ss >> tag;
    if (tag == "v") {
      Vec3 v;
      ss >> v.x() >> v.y() >> v.z();
      if (!ss) fail(ErrorCode::MeshIntegrity, "unreadable vertex: " + line);
      mesh.vertices.push_back(v);
    } else if (tag == "f") {
      std::array<int, 3> t;
      for (int e = 0; e < 3; ++e) {
        std::string item;
        ss >> item;
        if (item.empty())
          fail(ErrorCode::MeshIntegrity, "unreadable face: " + line);
        t[e] = std::stoi(item.substr(0, item.find('/'))) - 1;
      }
      mesh.triangles.push_back(t);
    }
  }
  mesh.refined.assign(mesh.vertices.size(), 0);
  mesh.boundary_loops = boundary_components(mesh);
  validate_mesh(mesh);

  std::ifstream csv(loops_csv_path);
  if (!csv) fail(ErrorCode::Io, "cannot open " + loops_csv_path);
  std::vector<std::vector<int>> sidecar;
  std::getline(csv, line);  // header
  while (std::getline(csv, line)) {
    if (line.empty()) continue;
    std::size_t l = 0, pos = 0;
    int vertex = 0;
    if (std::sscanf(line.c_str(), "%zu,%zu,%d", &l, &pos, &vertex) != 3)
      fail(ErrorCode::MeshIntegrity, "unreadable loop row: " + line);
    if (l >= sidecar.size()) sidecar.resize(l + 1);
    if (pos != sidecar[l].size())
      fail(ErrorCode::MeshIntegrity, "loop rows out of order");
    sidecar[l].push_back(vertex);
  }
  if (sidecar != mesh.boundary_loops)
    fail(ErrorCode::MeshIntegrity,
         "boundary-loop sidecar disagrees with mesh topology");
  return mesh;
}

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidSpec: return "invalid-spec";
    case ErrorCode::InvalidPoint: return "invalid-point";
    case ErrorCode::InvalidArgument: return "invalid-argument";
    case ErrorCode::MeshIntegrity: return "mesh-integrity";
    case ErrorCode::Compatibility: return "compatibility";
    case ErrorCode::NotInX: return "not-in-x";
    case ErrorCode::H1Violation: return "h1-violation";
    case ErrorCode::H2Violation: return "h2-violation";
    case ErrorCode::WrongRegime: return "wrong-regime";
    case ErrorCode::Resolution: return "resolution";
    case ErrorCode::NoConvergence: return "no-convergence";
    case ErrorCode::PathRepair: return "path-repair";
    case ErrorCode::ConfigParse: return "config-parse";
    case ErrorCode::Io: return "io";
  }
  return "unknown";
}

}  // namespace pgc
