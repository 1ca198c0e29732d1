#pragma once

#include <string>
#include <vector>

#include "pgc/variational.hpp"

namespace pgc {

/// Sign pattern of K on the boundary loops. A loop is positive when every
/// vertex has K >= kappa_min, negative when every vertex has K <=
/// -kappa_min, indeterminate otherwise.
struct BoundaryClassification {
  double kappa_min = 1e-3;
  std::vector<int> loop_sign;                // +1 / -1 / 0 per loop
  std::vector<std::vector<int>> offending;   // vertices breaking the sign
  std::vector<int> omega_plus;               // indices of positive loops
  bool h1 = false;  // K > 0 somewhere on the mesh
  bool h2 = false;  // every loop has a determinate sign

  std::string to_json() const;
};

/// Never throws on sign violations; h2/offending record them instead.
BoundaryClassification classify_boundary_lenient(const SurfaceMesh& mesh,
                                                 const ScalarField& K,
                                                 double kappa_min = 1e-3);

/// Same, but raises an h2-violation error listing the offending vertices
/// when some loop has no determinate sign.
BoundaryClassification classify_boundary(const SurfaceMesh& mesh,
                                         const ScalarField& K,
                                         double kappa_min = 1e-3);

/// Where the measure e^u sits: modal vertex, geodesic ball masses,
/// center of mass and its relation to the positive boundary loops.
struct ConcentrationReport {
  int mode_vertex = -1;  // argmax m_i e^{u_i}, lowest index on ties
  std::vector<double> ball_radius = {0.1, 0.2, 0.3, 0.5};
  std::vector<double> ball_mass;  // fraction of total e^u mass per radius
  Vec3 center = Vec3::Zero();     // P(u)
  double dist_to_omega_plus = 0.0;   // Euclidean; inf when Omega+ empty
  int nearest_boundary_vertex = -1;  // on Omega+, -1 when empty
  double curvature_at_nearest = 0.0;
  double max_minus_mean = 0.0;  // max u - lumped mean of u

  std::string to_json() const;
};

ConcentrationReport concentration_report(const SurfaceMesh& mesh,
                                         const LumpedMass& mass,
                                         const ScalarField& K,
                                         const ScalarField& u,
                                         const BoundaryClassification& cls);

struct MtGapRow {
  double label = 0.0;     // family parameter (bubble scale)
  double log_mass = 0.0;  // log integral of e^u (gauge-fixed u)
  double dirichlet = 0.0;
  double gap = 0.0;
};

struct MtScanResult {
  double alpha = 0.0;
  std::vector<MtGapRow> rows;
  double max_gap = 0.0;  // running max, the empirical constant

  std::string to_csv() const;
};

/// gap(u) = log int e^u - alpha int |grad u|^2 over a field family
/// (members are gauge-fixed before evaluation; the operation is invariant
/// for callers who already did).
MtScanResult mt_gap_scan(const StiffnessMatrix& stiffness,
                         const LumpedMass& mass,
                         const std::vector<ScalarField>& family,
                         const std::vector<double>& labels, double alpha);

/// Localized gap(u) = coeff * log int_{Sigma1} e^u
///   - (int_{Sigma1^delta} |grad u|^2 + epsilon int |grad u|^2).
/// The coeff = 16 pi variant requires Sigma1 to keep distance > delta from
/// the boundary and errors otherwise; the 8 pi variant is unrestricted.
MtScanResult localized_mt_scan(const StiffnessMatrix& stiffness,
                               const LumpedMass& mass,
                               const std::vector<int>& sigma1, double delta,
                               const std::vector<ScalarField>& family,
                               const std::vector<double>& labels,
                               double coeff, double epsilon);

/// Dirichlet energy restricted to triangles whose vertices all lie in the
/// given set.
double dirichlet_on_subset(const SurfaceMesh& mesh, const ScalarField& u,
                           const std::vector<int>& vertex_set);

/// Blow-up bookkeeping for a sequence of fields with parameters rho_n.
struct QuantizationEntry {
  double rho = 0.0;
  int mode_vertex = -1;
  double fraction = 0.0;       // local K e^u mass fraction in B(mode, tau)
  double local_mass = 0.0;     // rho * fraction
  double dist_to_quantum = 0.0;  // distance of local_mass to {4pi,8pi,12pi}
  int nearest_k = 0;
  double max_minus_mean = 0.0;
  bool blow_up_flag = false;   // max - mean > 25 and fraction >= 0.95
  bool inadmissible = false;   // K(mode) < 0 or total K e^u mass <= 0

  std::string to_json() const;
};

std::vector<QuantizationEntry> quantization_monitor(
    const SurfaceMesh& mesh, const LumpedMass& mass, const ScalarField& K,
    const std::vector<std::pair<ScalarField, double>>& sequence, double tau);

}  // namespace pgc
