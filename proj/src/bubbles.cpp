#include "pgc/bubbles.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <limits>

namespace pgc {

namespace {

void check_bubble(const BubbleSpec& spec) {
  if (!(spec.lambda > 0.0))
    fail(ErrorCode::InvalidSpec, "bubble scale must be positive");
  if (std::abs(spec.center.norm() - 1.0) > 1e-9)
    fail(ErrorCode::InvalidPoint, "bubble center is off the unit sphere");
}

}  // namespace

bool bubble_resolved(const SurfaceMesh& mesh, const BubbleSpec& spec) {
  check_bubble(spec);
  const double h_local =
      local_edge_length(mesh, spec.center, 2.0 / spec.lambda);
  return h_local <= 0.3 / spec.lambda;
}

ScalarField bubble_field(const SurfaceMesh& mesh, const BubbleSpec& spec) {
  check_bubble(spec);
  if (!bubble_resolved(mesh, spec))
    std::cerr << "warning: mesh " << mesh.name
              << " does not resolve bubble at scale " << spec.lambda
              << " (needs local edge length <= " << 0.3 / spec.lambda
              << ")\n";
  ScalarField f(mesh, 0.0);
  const double l2 = spec.lambda * spec.lambda;
  for (int i = 0; i < mesh.vertex_count(); ++i) {
    const double d = geodesic_distance(mesh.vertices[i], spec.center);
    f.values[i] = 2.0 * std::log(l2 / (1.0 + l2 * d * d));
  }
  return f;
}

ScalarField log_convex_combine(const std::vector<ScalarField>& fields,
                               const std::vector<double>& weights) {
  if (fields.empty() || fields.size() != weights.size())
    fail(ErrorCode::InvalidArgument, "need as many weights as fields");
  double wsum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0))
      fail(ErrorCode::InvalidArgument, "combination weights must be >= 0");
    wsum += w;
  }
  if (!(wsum > 0.0))
    fail(ErrorCode::InvalidArgument, "combination weights must not all vanish");
  for (std::size_t k = 1; k < fields.size(); ++k)
    require_same_mesh(fields[0], fields[k]);
  ScalarField out(*fields[0].mesh, 0.0);
  const int n = out.size();
  for (int i = 0; i < n; ++i) {
    double shift = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < fields.size(); ++k)
      if (weights[k] > 0.0) shift = std::max(shift, fields[k].values[i]);
    double acc = 0.0;
    for (std::size_t k = 0; k < fields.size(); ++k)
      if (weights[k] > 0.0)
        acc += weights[k] * std::exp(fields[k].values[i] - shift);
    out.values[i] = shift + std::log(acc);
  }
  return out;
}

int snap_center(const SurfaceMesh& mesh, const Vec3& p, Placement placement) {
  if (std::abs(p.norm() - 1.0) > 1e-9)
    fail(ErrorCode::InvalidPoint, "placement point is off the unit sphere");
  const auto boundary = boundary_vertices(mesh);
  std::vector<char> on_boundary(mesh.vertex_count(), 0);
  for (int b : boundary) on_boundary[b] = 1;
  int best = -1;
  double best_dot = -2.0;
  if (placement == Placement::Boundary) {
    for (int b : boundary) {
      const double d = mesh.vertices[b].dot(p);
      if (d > best_dot) {
        best_dot = d;
        best = b;
      }
    }
    if (best < 0) fail(ErrorCode::InvalidArgument, "mesh has no boundary");
    return best;
  }
  // Interior snap: keep a safety margin of 0.3 from the boundary.
  const auto too_close = parallel_set(mesh, boundary, 0.3);
  std::vector<char> excluded(mesh.vertex_count(), 0);
  for (int v : too_close) excluded[v] = 1;
  for (int i = 0; i < mesh.vertex_count(); ++i) {
    if (excluded[i]) continue;
    const double d = mesh.vertices[i].dot(p);
    if (d > best_dot) {
      best_dot = d;
      best = i;
    }
  }
  if (best < 0)
    fail(ErrorCode::InvalidArgument,
         "no interior vertex at distance >= 0.3 from the boundary");
  return best;
}

AsymptoticsTable asymptotics_scan(const ProblemSpec& spec, const Vec3& p,
                                  Placement placement,
                                  const std::vector<double>& lambdas) {
  if (lambdas.empty())
    fail(ErrorCode::InvalidArgument, "empty scale grid");
  for (std::size_t k = 0; k + 1 < lambdas.size(); ++k)
    if (!(lambdas[k] < lambdas[k + 1]))
      fail(ErrorCode::InvalidArgument, "scale grid must increase strictly");
  const SurfaceMesh& mesh = *spec.mesh;
  AsymptoticsTable table;
  table.snapped_vertex = snap_center(mesh, p, placement);
  table.center = mesh.vertices[table.snapped_vertex];
  const double lambda_max = lambdas.back();
  const double h_local =
      local_edge_length(mesh, table.center, 2.0 / lambda_max);
  if (h_local > 0.3 / lambda_max)
    fail(ErrorCode::Resolution,
         "mesh does not resolve scale " + std::to_string(lambda_max) +
             ": local edge length " + std::to_string(h_local) +
             " exceeds required " + std::to_string(0.3 / lambda_max));
  const ScalarField ones(mesh, 1.0);
  std::vector<double> energies, dirichlets;
  for (double lambda : lambdas) {
    BubbleSpec bubble{table.center, lambda};
    const ScalarField psi = bubble_field(mesh, bubble);
    AsymptoticsRow row;
    row.lambda = lambda;
    row.mass = integrate_weighted_exp(spec.mass, ones, psi).value;
    row.k_mass = integrate_weighted_exp(spec.mass, spec.curvature, psi).value;
    row.dirichlet = dirichlet_energy(spec.stiffness, psi);
    row.linear = spec.mass.weights.dot(psi.values);
    row.energy = energy(spec, psi).total;
    table.rows.push_back(row);
    energies.push_back(row.energy);
    dirichlets.push_back(row.dirichlet);
  }
  const int pts = std::min<int>(3, static_cast<int>(lambdas.size()));
  table.energy_slope = fit_slope(lambdas, energies, pts);
  table.dirichlet_slope = fit_slope(lambdas, dirichlets, pts);
  return table;
}

double fit_slope(const std::vector<double>& lambdas,
                 const std::vector<double>& values, int points) {
  if (lambdas.size() != values.size() || points < 2 ||
      static_cast<std::size_t>(points) > lambdas.size())
    fail(ErrorCode::InvalidArgument, "bad slope-fit request");
  const std::size_t first = lambdas.size() - points;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t k = first; k < lambdas.size(); ++k) {
    const double x = std::log(lambdas[k]);
    sx += x;
    sy += values[k];
    sxx += x * x;
    sxy += x * values[k];
  }
  const double n = points;
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

std::string AsymptoticsTable::to_csv() const {
  std::string s = "lambda,mass,k_mass,dirichlet,linear,energy\n";
  char buf[240];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                  r.lambda, r.mass, r.k_mass, r.dirichlet, r.linear,
                  r.energy);
    s += buf;
  }
  return s;
}

}  // namespace pgc
