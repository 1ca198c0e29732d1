#include "pgc/fem.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>
#include <vector>

namespace pgc {

void require_same_mesh(const ScalarField& a, const ScalarField& b) {
  if (a.mesh == nullptr || a.mesh != b.mesh)
    fail(ErrorCode::InvalidArgument, "fields live on different meshes");
}

void require_field(const SurfaceMesh& mesh, const ScalarField& f) {
  if (f.mesh != &mesh || f.size() != mesh.vertex_count())
    fail(ErrorCode::InvalidArgument, "field does not match mesh");
}

void require_finite(const ScalarField& f, const char* what) {
  if (!f.values.allFinite())
    fail(ErrorCode::InvalidArgument,
         std::string(what) + ": field has non-finite values");
}

StiffnessMatrix assemble_stiffness(const SurfaceMesh& mesh) {
  const int n = mesh.vertex_count();
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(mesh.triangle_count() * 9);
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const auto& tr = mesh.triangles[t];
    const double area = triangle_area(mesh, t);
    if (area < 1e-14)
      fail(ErrorCode::MeshIntegrity,
           "assembly hit degenerate triangle " + std::to_string(t));
    // Off-diagonal entry for the edge (i, j) is -cot(angle at k)/2, with
    // cot(angle at k) = e_i . e_j / (2 area) for the edges leaving k.
    for (int k = 0; k < 3; ++k) {
      const int i = tr[(k + 1) % 3];
      const int j = tr[(k + 2) % 3];
      const Vec3 ei = mesh.vertices[i] - mesh.vertices[tr[k]];
      const Vec3 ej = mesh.vertices[j] - mesh.vertices[tr[k]];
      const double w = 0.25 * ei.dot(ej) / area;
      trips.emplace_back(i, j, -w);
      trips.emplace_back(j, i, -w);
      trips.emplace_back(i, i, w);
      trips.emplace_back(j, j, w);
    }
  }
  StiffnessMatrix s;
  s.mesh = &mesh;
  s.matrix.resize(n, n);
  s.matrix.setFromTriplets(trips.begin(), trips.end());
  return s;
}

LumpedMass assemble_lumped_mass(const SurfaceMesh& mesh) {
  LumpedMass m;
  m.mesh = &mesh;
  m.weights = Eigen::VectorXd::Zero(mesh.vertex_count());
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const double third = triangle_area(mesh, t) / 3.0;
    for (int k = 0; k < 3; ++k) m.weights[mesh.triangles[t][k]] += third;
  }
  m.total = m.weights.sum();
  return m;
}

WeightedExpIntegral integrate_weighted_exp(const LumpedMass& mass,
                                           const ScalarField& weight,
                                           const ScalarField& u) {
  require_same_mesh(weight, u);
  if (mass.mesh != u.mesh)
    fail(ErrorCode::InvalidArgument, "mass vector does not match field mesh");
  const double shift = u.values.maxCoeff();
  double acc = 0.0;
  for (int i = 0; i < u.size(); ++i)
    acc += mass.weights[i] * weight.values[i] * std::exp(u.values[i] - shift);
  WeightedExpIntegral out;
  out.log_abs = acc == 0.0 ? -std::numeric_limits<double>::infinity()
                           : shift + std::log(std::abs(acc));
  out.value = (acc < 0.0 ? -1.0 : 1.0) * std::exp(out.log_abs);
  return out;
}

double dirichlet_energy(const StiffnessMatrix& stiffness,
                        const ScalarField& u) {
  require_field(*stiffness.mesh, u);
  return u.values.dot(stiffness.matrix * u.values);
}

double lumped_mean(const LumpedMass& mass, const ScalarField& u) {
  if (mass.mesh != u.mesh)
    fail(ErrorCode::InvalidArgument, "mass vector does not match field mesh");
  return mass.weights.dot(u.values) / mass.total;
}

ScalarField solve_poisson_neumann(const StiffnessMatrix& stiffness,
                                  const LumpedMass& mass,
                                  const ScalarField& f,
                                  const PoissonConfig& config) {
  require_field(*stiffness.mesh, f);
  require_finite(f, "solve_poisson_neumann");
  const SurfaceMesh& mesh = *stiffness.mesh;
  const int n = mesh.vertex_count();
  Eigen::VectorXd b = mass.weights.cwiseProduct(f.values);
  const double fnorm = std::sqrt(mass.weights.dot(f.values.cwiseAbs2()));
  if (std::abs(b.sum()) > 1e-8 * fnorm * mass.total + 1e-300)
    fail(ErrorCode::Compatibility,
         "Neumann compatibility violated: integral of f = " +
             std::to_string(b.sum()));
  // Deflate the constant direction: keep b and all iterates Euclidean
  // orthogonal to 1, which spans ker S.
  const auto deflate = [n](Eigen::VectorXd& v) {
    v.array() -= v.sum() / n;
  };
  deflate(b);
  Eigen::VectorXd diag = stiffness.matrix.diagonal();
  for (int i = 0; i < n; ++i)
    if (!(diag[i] > 0.0)) diag[i] = 1.0;
  const double bnorm = b.norm();
  ScalarField u(mesh, 0.0);
  if (bnorm == 0.0) return u;
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd r = b;
  Eigen::VectorXd z = config.jacobi ? (r.array() / diag.array()).matrix() : r;
  deflate(z);
  Eigen::VectorXd p = z;
  double rz = r.dot(z);
  for (int it = 0; it < config.max_iterations; ++it) {
    const Eigen::VectorXd sp = stiffness.matrix * p;
    const double psp = p.dot(sp);
    if (!(psp > 0.0))
      fail(ErrorCode::NoConvergence, "CG lost positive definiteness");
    const double alpha = rz / psp;
    x += alpha * p;
    r -= alpha * sp;
    if (r.norm() <= config.rtol * bnorm) {
      // Report in lumped-mean-zero gauge.
      x.array() -= mass.weights.dot(x) / mass.total;
      u.values = x;
      return u;
    }
    z = config.jacobi ? (r.array() / diag.array()).matrix() : r;
    deflate(z);
    const double rz_next = r.dot(z);
    p = z + (rz_next / rz) * p;
    rz = rz_next;
  }
  fail(ErrorCode::NoConvergence,
       "CG stagnated after " + std::to_string(config.max_iterations) +
           " iterations, residual " + std::to_string(r.norm() / bnorm));
}

void StiffnessMatrix::dump_coordinate(std::ostream& out) const {
  char buf[96];
  for (int k = 0; k < matrix.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(matrix, k); it; ++it) {
      std::snprintf(buf, sizeof buf, "%ld %ld %.17g\n",
                    static_cast<long>(it.row()), static_cast<long>(it.col()),
                    it.value());
      out << buf;
    }
}

void export_field_csv(const ScalarField& f, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::Io, "cannot open " + path);
  out << "index,x,y,z,value\n";
  char buf[200];
  for (int i = 0; i < f.size(); ++i) {
    const Vec3& v = f.mesh->vertices[i];
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g\n", i, v.x(),
                  v.y(), v.z(), f.values[i]);
    out << buf;
  }
  if (!out.good()) fail(ErrorCode::Io, "write failed: " + path);
}

ScalarField import_field_csv(const SurfaceMesh& mesh,
                             const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot open " + path);
  ScalarField f(mesh, 0.0);
  std::string line;
  std::getline(in, line);  // header
  int rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    int idx = 0;
    double x, y, z, value;
    if (std::sscanf(line.c_str(), "%d,%lf,%lf,%lf,%lf", &idx, &x, &y, &z,
                    &value) != 5)
      fail(ErrorCode::Io, "unreadable field row: " + line);
    if (idx < 0 || idx >= mesh.vertex_count())
      fail(ErrorCode::InvalidArgument, "field row index out of range");
    f.values[idx] = value;
    ++rows;
  }
  if (rows != mesh.vertex_count())
    fail(ErrorCode::InvalidArgument,
         "field CSV has " + std::to_string(rows) + " rows for " +
             std::to_string(mesh.vertex_count()) + " vertices");
  return f;
}

}  // namespace pgc
