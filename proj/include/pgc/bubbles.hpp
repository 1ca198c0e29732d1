#pragma once

#include <string>
#include <vector>

#include "pgc/variational.hpp"

namespace pgc {

/// Concentrating test profile psi_lambda(p)(x) = 2 log(lambda^2 / (1 +
/// lambda^2 dist(x, p)^2)); peak value 4 log lambda at p.
struct BubbleSpec {
  Vec3 center = Vec3(0, 0, 1);
  double lambda = 1.0;  // > 0
};

/// Evaluates the bubble at mesh vertices. Warns (stderr) when the mesh
/// does not resolve the profile (local edge length near p > 0.3/lambda).
ScalarField bubble_field(const SurfaceMesh& mesh, const BubbleSpec& spec);

/// True when the largest edge within 2/lambda of p is <= 0.3/lambda.
bool bubble_resolved(const SurfaceMesh& mesh, const BubbleSpec& spec);

/// Pointwise log(sum_k weight_k e^{field_k}) with a per-vertex max-shift.
/// Weights must be nonnegative with a positive sum; zero-weight terms are
/// skipped so that combining with weights (1, 0) reproduces the first
/// field exactly.
ScalarField log_convex_combine(const std::vector<ScalarField>& fields,
                               const std::vector<double>& weights);

enum class Placement { Boundary, Interior };

/// Snaps a requested center to the nearest admissible vertex: a boundary
/// vertex, or an interior vertex at geodesic distance >= 0.3 from the
/// boundary.
int snap_center(const SurfaceMesh& mesh, const Vec3& p, Placement placement);

struct AsymptoticsRow {
  double lambda = 0.0;
  double mass = 0.0;       // integral of e^psi
  double k_mass = 0.0;     // integral of K e^psi
  double dirichlet = 0.0;  // integral of |grad psi|^2 (no 1/2)
  double linear = 0.0;     // integral of psi
  double energy = 0.0;     // I_rho(psi)
};

struct AsymptoticsTable {
  std::vector<AsymptoticsRow> rows;
  double energy_slope = 0.0;     // least-squares d I / d log lambda, top 3
  double dirichlet_slope = 0.0;  // least-squares d Dirichlet / d log lambda
  int snapped_vertex = -1;
  Vec3 center = Vec3::Zero();

  std::string to_csv() const;
};

/// Evaluates mass/energy asymptotics of a bubble family on one mesh.
/// Throws a resolution error naming the required edge length when the mesh
/// cannot resolve the largest lambda.
AsymptoticsTable asymptotics_scan(const ProblemSpec& spec, const Vec3& p,
                                  Placement placement,
                                  const std::vector<double>& lambdas);

/// Least-squares slope of y against log(lambda) over the last `points`
/// grid entries.
double fit_slope(const std::vector<double>& lambdas,
                 const std::vector<double>& values, int points);

}  // namespace pgc
