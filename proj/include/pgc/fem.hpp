#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <iosfwd>
#include <string>

#include "pgc/geometry.hpp"

namespace pgc {

/// Piecewise-linear vertex field bound to a mesh.
struct ScalarField {
  const SurfaceMesh* mesh = nullptr;
  Eigen::VectorXd values;

  ScalarField() = default;
  ScalarField(const SurfaceMesh& m, double fill = 0.0)
      : mesh(&m), values(Eigen::VectorXd::Constant(m.vertex_count(), fill)) {}
  ScalarField(const SurfaceMesh& m, Eigen::VectorXd v)
      : mesh(&m), values(std::move(v)) {}

  int size() const { return static_cast<int>(values.size()); }
};

void require_same_mesh(const ScalarField& a, const ScalarField& b);
void require_field(const SurfaceMesh& mesh, const ScalarField& f);
void require_finite(const ScalarField& f, const char* what);

/// Cotangent-weight stiffness matrix (flat-triangle P1 Laplacian).
/// Symmetric, positive semidefinite, zero row sums.
struct StiffnessMatrix {
  const SurfaceMesh* mesh = nullptr;
  Eigen::SparseMatrix<double> matrix;

  Eigen::VectorXd apply(const Eigen::VectorXd& u) const { return matrix * u; }
  /// Coordinate-format text dump: one "row col value" line per entry.
  void dump_coordinate(std::ostream& out) const;
};

/// Lumped mass vector: one third of incident triangle areas per vertex.
struct LumpedMass {
  const SurfaceMesh* mesh = nullptr;
  Eigen::VectorXd weights;
  double total = 0.0;
};

StiffnessMatrix assemble_stiffness(const SurfaceMesh& mesh);
LumpedMass assemble_lumped_mass(const SurfaceMesh& mesh);

/// sum_i m_i w_i exp(u_i), evaluated with a max-shift so that large u
/// cannot overflow. `log_abs` is always finite-safe; `value` may overflow
/// to inf for extreme inputs while log_abs stays valid.
struct WeightedExpIntegral {
  double value = 0.0;
  double log_abs = 0.0;  // log |value|; -inf when value == 0
};

WeightedExpIntegral integrate_weighted_exp(const LumpedMass& mass,
                                           const ScalarField& weight,
                                           const ScalarField& u);

/// u^T S u.
double dirichlet_energy(const StiffnessMatrix& stiffness,
                        const ScalarField& u);

/// Lumped mean (integral of u) / area.
double lumped_mean(const LumpedMass& mass, const ScalarField& u);

struct PoissonConfig {
  double rtol = 1e-10;
  int max_iterations = 20000;
  bool jacobi = true;
};

/// Solves S u = M f on the mean-zero complement by conjugate gradients
/// (Jacobi-preconditioned, constant direction deflated). Requires the
/// Neumann compatibility condition sum_i m_i f_i ~ 0 and returns the
/// zero-lumped-mean solution.
ScalarField solve_poisson_neumann(const StiffnessMatrix& stiffness,
                                  const LumpedMass& mass,
                                  const ScalarField& f,
                                  const PoissonConfig& config = {});

/// CSV dump "index,x,y,z,value" with 17 significant digits.
void export_field_csv(const ScalarField& f, const std::string& path);

/// Reads a field CSV back onto a mesh (vertex count must match).
ScalarField import_field_csv(const SurfaceMesh& mesh, const std::string& path);

}  // namespace pgc
