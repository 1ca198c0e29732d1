#include "pgc/fem.hpp"

#include <cmath>
#include <random>

#include "test_util.hpp"

using namespace pgc;

namespace {

constexpr double kPi = 3.14159265358979323846;

// Equilateral spherical triangle: three unit vectors at colatitude beta,
// azimuths 0/120/240 degrees, counterclockwise seen from outside.
SurfaceMesh equilateral_triangle(double beta) {
  SurfaceMesh mesh;
  for (int k = 0; k < 3; ++k) {
    double az = 2 * kPi * k / 3;
    mesh.vertices.emplace_back(std::sin(beta) * std::cos(az),
                               std::sin(beta) * std::sin(az), std::cos(beta));
  }
  mesh.triangles.push_back({0, 1, 2});
  mesh.refined.assign(3, 0);
  mesh.boundary_loops = boundary_components(mesh);
  return mesh;
}

ScalarField random_field(const SurfaceMesh& mesh, unsigned seed, double lo,
                         double hi) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  ScalarField f(mesh);
  for (int i = 0; i < f.size(); ++i) f.values[i] = dist(rng);
  return f;
}

// Tangential gradient magnitude of the coordinate function z on each flat
// triangle: |P_t e_z|^2 = 1 - n_z^2.
double brute_dirichlet_of_z(const SurfaceMesh& mesh) {
  double acc = 0;
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const auto& tri = mesh.triangles[t];
    Vec3 n = (mesh.vertices[tri[1]] - mesh.vertices[tri[0]])
                 .cross(mesh.vertices[tri[2]] - mesh.vertices[tri[0]]);
    double nz = n.normalized().z();
    acc += (1 - nz * nz) * triangle_area(mesh, t);
  }
  return acc;
}

}  // namespace

TEST_SUITE("fem") {

TEST_CASE("stiffness of an equilateral triangle matches the cotangent formula") {
  SurfaceMesh mesh = equilateral_triangle(0.7);
  validate_mesh(mesh);
  StiffnessMatrix S = assemble_stiffness(mesh);
  // all interior angles pi/3: off-diagonal -cot(pi/3)/2, diagonal twice that
  double off = -0.5 / std::tan(kPi / 3);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      double want = (i == j) ? -2 * off : off;
      CHECK(S.matrix.coeff(i, j) == doctest::Approx(want).epsilon(1e-14));
    }
  }
  LumpedMass M = assemble_lumped_mass(mesh);
  double area = triangle_area(mesh, 0);
  for (int i = 0; i < 3; ++i) {
    CHECK(M.weights[i] == doctest::Approx(area / 3).epsilon(1e-14));
  }
  CHECK(M.total == doctest::Approx(area).epsilon(1e-14));
}

TEST_CASE("stiffness invariants on a generated band") {
  SurfaceMesh mesh = generate_mesh(DomainSpec::band(0.9, 2.2, 0.15));
  StiffnessMatrix S = assemble_stiffness(mesh);

  Eigen::SparseMatrix<double> diff = S.matrix - Eigen::SparseMatrix<double>(S.matrix.transpose());
  CHECK(diff.coeffs().cwiseAbs().maxCoeff() == 0.0);  // assembled symmetric

  Eigen::VectorXd row_sums = S.matrix * Eigen::VectorXd::Ones(mesh.vertex_count());
  CHECK(row_sums.cwiseAbs().maxCoeff() < 1e-12);

  std::mt19937 rng(7);
  std::normal_distribution<double> dist;
  for (int trial = 0; trial < 8; ++trial) {
    Eigen::VectorXd x(mesh.vertex_count());
    for (int i = 0; i < x.size(); ++i) x[i] = dist(rng);
    CHECK(x.dot(S.matrix * x) >= -1e-12 * x.squaredNorm());
  }
}

TEST_CASE("dirichlet energy of the z coordinate matches a direct recomputation") {
  for (auto spec : {DomainSpec::cap(1.1, 0.12), DomainSpec::band(0.8, 2.3, 0.12)}) {
    SurfaceMesh mesh = generate_mesh(spec);
    StiffnessMatrix S = assemble_stiffness(mesh);
    ScalarField z(mesh);
    for (int i = 0; i < mesh.vertex_count(); ++i) z.values[i] = mesh.vertices[i].z();
    CHECK(dirichlet_energy(S, z) ==
          doctest::Approx(brute_dirichlet_of_z(mesh)).epsilon(1e-10));
  }
}

TEST_CASE("lumped mass equals one third of incident triangle areas") {
  SurfaceMesh mesh = generate_mesh(DomainSpec::cap(1.3, 0.2));
  LumpedMass M = assemble_lumped_mass(mesh);
  Eigen::VectorXd brute = Eigen::VectorXd::Zero(mesh.vertex_count());
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    for (int v : mesh.triangles[t]) brute[v] += triangle_area(mesh, t) / 3;
  }
  CHECK((M.weights - brute).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(M.weights.minCoeff() > 0);
  CHECK(M.total == doctest::Approx(mesh_area(mesh)).epsilon(1e-14));
}

TEST_CASE("weighted exp integral agrees with long-double summation") {
  SurfaceMesh mesh = generate_mesh(DomainSpec::band(0.7, 2.4, 0.2));
  LumpedMass M = assemble_lumped_mass(mesh);
  ScalarField K(mesh);
  for (int i = 0; i < mesh.vertex_count(); ++i) K.values[i] = mesh.vertices[i].z();

  for (double offset : {0.0, 300.0, 700.0}) {
    ScalarField u = random_field(mesh, 42, -4.0, 4.0);
    u.values.array() += offset;
    WeightedExpIntegral got = integrate_weighted_exp(M, K, u);

    long double acc = 0;
    for (int i = 0; i < u.size(); ++i) {
      acc += static_cast<long double>(M.weights[i]) * K.values[i] *
             expl(static_cast<long double>(u.values[i]));
    }
    double want_log = static_cast<double>(logl(fabsl(acc)));
    CHECK_MESSAGE(got.log_abs == doctest::Approx(want_log).epsilon(1e-12),
                  "offset=" << offset);
    if (offset == 0.0) {
      CHECK(got.value == doctest::Approx(static_cast<double>(acc)).epsilon(1e-12));
    } else {
      CHECK(got.log_abs > offset - 10);  // no overflow to inf/nan
      CHECK(std::isfinite(got.log_abs));
    }
  }
}

TEST_CASE("poisson solve recovers a manufactured discrete solution") {
  SurfaceMesh mesh = generate_mesh(DomainSpec::cap(1.2, 0.1));
  StiffnessMatrix S = assemble_stiffness(mesh);
  LumpedMass M = assemble_lumped_mass(mesh);

  ScalarField target = random_field(mesh, 11, -1.0, 1.0);
  target.values.array() -= lumped_mean(M, target);
  ScalarField f(mesh, Eigen::VectorXd((S.matrix * target.values).array() /
                                      M.weights.array()));
  ScalarField u = solve_poisson_neumann(S, M, f);
  CHECK(std::abs(lumped_mean(M, u)) < 1e-12);
  CHECK((u.values - target.values).cwiseAbs().maxCoeff() < 1e-7);

  // residual meets the advertised tolerance in the dual norm
  Eigen::VectorXd b = M.weights.array() * f.values.array();
  Eigen::VectorXd resid = b - S.matrix * u.values;
  double rn = std::sqrt((resid.array().square() / M.weights.array()).sum());
  double bn = std::sqrt((b.array().square() / M.weights.array()).sum());
  CHECK(rn <= 1e-9 * bn);
}

TEST_CASE("poisson solve converges at second order to an analytic solution") {
  // axisymmetric u*(theta) = cos(pi theta / theta_b) satisfies the Neumann
  // condition at the cap rim; f = -Lap u* = a^2 cos(a theta) + a cot(theta)
  // sin(a theta), a = pi/theta_b
  double theta_b = 1.0;
  double a = kPi / theta_b;
  auto exact = [&](double theta) { return std::cos(a * theta); };
  auto load = [&](double theta) {
    if (theta < 1e-8) return 2 * a * a;
    return a * a * std::cos(a * theta) +
           a * std::sin(a * theta) / std::tan(theta);
  };

  auto sup_error = [&](double h) {
    SurfaceMesh mesh = generate_mesh(DomainSpec::cap(theta_b, h));
    StiffnessMatrix S = assemble_stiffness(mesh);
    LumpedMass M = assemble_lumped_mass(mesh);
    ScalarField f(mesh), ustar(mesh);
    for (int i = 0; i < mesh.vertex_count(); ++i) {
      double theta = std::acos(std::clamp(mesh.vertices[i].z(), -1.0, 1.0));
      f.values[i] = load(theta);
      ustar.values[i] = exact(theta);
    }
    // make the interpolated load exactly compatible before solving
    f.values.array() -= lumped_mean(M, f);
    ScalarField u = solve_poisson_neumann(S, M, f);
    ustar.values.array() -= lumped_mean(M, ustar);
    return (u.values - ustar.values).cwiseAbs().maxCoeff();
  };

  double e1 = sup_error(0.1), e2 = sup_error(0.05);
  CHECK(e1 / e2 > 3.0);
  CHECK(e1 / e2 < 5.5);
  CHECK(e2 < 0.01);
}

TEST_CASE("poisson solve rejects incompatible loads") {
  SurfaceMesh mesh = generate_mesh(DomainSpec::cap(1.0, 0.2));
  StiffnessMatrix S = assemble_stiffness(mesh);
  LumpedMass M = assemble_lumped_mass(mesh);
  CHECK_FAILS_WITH(Compatibility, solve_poisson_neumann(S, M, ScalarField(mesh, 1.0)));
}

TEST_CASE("field csv round trip is exact") {
  namespace fs = std::filesystem;
  fs::path dir = testutil::scratch_dir("fem");
  SurfaceMesh mesh = generate_mesh(DomainSpec::cap(0.9, 0.2));
  ScalarField f = random_field(mesh, 3, -30.0, 30.0);

  fs::path path = dir / "field.csv";
  export_field_csv(f, path.string());
  ScalarField back = import_field_csv(mesh, path.string());
  CHECK(back.values == f.values);

  SurfaceMesh other = generate_mesh(DomainSpec::cap(0.9, 0.3));
  CHECK_FAILS_WITH(InvalidArgument, import_field_csv(other, path.string()));
  CHECK_FAILS_WITH(Io, import_field_csv(mesh, (dir / "nope.csv").string()));
  fs::remove_all(dir);
}

TEST_CASE("field guards") {
  SurfaceMesh a = generate_mesh(DomainSpec::cap(0.8, 0.3));
  SurfaceMesh b = generate_mesh(DomainSpec::cap(0.8, 0.3));
  ScalarField fa(a), fb(b);
  CHECK_FAILS_WITH(InvalidArgument, require_same_mesh(fa, fb));
  ScalarField bad(a);
  bad.values[0] = std::nan("");
  CHECK_FAILS_WITH(InvalidArgument, require_finite(bad, "u"));
}

}  // TEST_SUITE
