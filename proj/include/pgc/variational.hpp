#pragma once

#include <string>

#include "pgc/fem.hpp"

namespace pgc {

/// One mean-field problem instance on a fixed mesh:
///   I(u) = 1/2 u^T S u + c_lin * sum_i m_i u_i - rho * log(sum_i m_i K_i e^{u_i})
/// with c_lin = rho / area so that the functional is invariant under
/// u -> u + const for every rho (and sum(gradient) = 0 identically).
struct ProblemSpec {
  const SurfaceMesh* mesh = nullptr;
  StiffnessMatrix stiffness;
  LumpedMass mass;
  ScalarField curvature;  // K at vertices
  double rho = 0.0;
  double c_lin = 0.0;

  ProblemSpec() = default;
  ProblemSpec(const SurfaceMesh& m, ScalarField K, double rho_value);
};

struct EnergyBreakdown {
  double dirichlet = 0.0;  // 1/2 u^T S u
  double linear = 0.0;     // c_lin * integral of u
  double log_term = 0.0;   // rho * log integral of K e^u (NaN outside X)
  double total = 0.0;      // dirichlet + linear - log_term (NaN outside X)
  bool in_x = false;       // integral of K e^u > 0

  /// JSON object with the five fields, numbers at 17 significant digits.
  std::string to_json() const;
};

EnergyBreakdown energy(const ProblemSpec& spec, const ScalarField& u);

/// Euclidean gradient of the discrete energy:
///   g = S u + c_lin m - rho (m . K . e^u) / T,     T = sum m K e^u.
/// Components sum to zero; errors if u is outside X.
ScalarField energy_gradient(const ProblemSpec& spec, const ScalarField& u);

/// Action of the energy Hessian (the derivative of energy_gradient):
///   H v = S v - rho (w . v)/T + rho w (w^T v)/T^2,  w = m . K . e^u.
/// Constants are annihilated: H(c 1) = 0.
ScalarField hessian_apply(const ProblemSpec& spec, const ScalarField& u,
                          const ScalarField& v);

/// P(u) = (sum m_i x_i e^{u_i}) / (sum m_i e^{u_i}) in R^3; |P| <= 1.
Vec3 center_of_mass(const SurfaceMesh& mesh, const LumpedMass& mass,
                    const ScalarField& u);

/// u minus its lumped mean.
ScalarField gauge_fix(const LumpedMass& mass, const ScalarField& u);

/// Dual residual norm sqrt(g^T M^{-1} g).
double residual_norm(const LumpedMass& mass, const ScalarField& g);

struct ScaledEnergyPair {
  double lhs = 0.0;  // I_rho(u)/rho - I_rho'(u)/rho'
  double rhs = 0.0;  // 1/2 (1/rho - 1/rho') u^T S u
};

/// Both sides of the scaling identity between two parameter values on the
/// same mesh and curvature; they agree to machine precision and the lhs is
/// nonnegative whenever rho < rho'.
ScaledEnergyPair scaled_energy_identity(const ProblemSpec& spec_a,
                                        const ProblemSpec& spec_b,
                                        const ScalarField& u);

}  // namespace pgc
