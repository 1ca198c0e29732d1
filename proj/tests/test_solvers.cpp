#include "pgc/solvers.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <random>

#include "pgc/bubbles.hpp"
#include "test_util.hpp"

using namespace pgc;

namespace {

constexpr double kPi = 3.14159265358979323846;

ScalarField z_field(const SurfaceMesh& mesh, double a, double b) {
  ScalarField f(mesh);
  for (int i = 0; i < mesh.vertex_count(); ++i)
    f.values[i] = a + b * mesh.vertices[i].z();
  return f;
}

ScalarField random_field(const SurfaceMesh& mesh, unsigned seed, double amp) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> dist(-amp, amp);
  ScalarField f(mesh);
  for (int i = 0; i < f.size(); ++i) f.values[i] = dist(rng);
  return f;
}

// Curvature manufactured so that u_star is an exact discrete critical
// point: K_i = (S u* + c m)_i / (m_i e^{u*_i}) makes the gradient vanish
// identically (any overall scale of K works).
ScalarField manufactured_curvature(const SurfaceMesh& mesh,
                                   const ScalarField& u_star, double rho) {
  StiffnessMatrix S = assemble_stiffness(mesh);
  LumpedMass M = assemble_lumped_mass(mesh);
  Eigen::VectorXd r =
      S.matrix * u_star.values + (rho / M.total) * M.weights;
  ScalarField K(mesh);
  K.values =
      r.array() / (M.weights.array() * u_star.values.array().exp());
  return K;
}

// Restricted dense pencil oracle: the two smallest eigenvalues of (H, M)
// on the lumped-mean-zero subspace, via an explicit basis and Eigen's
// generalized solver. Only viable on small meshes. Two values because the
// near-axisymmetric meshes carry almost-degenerate azimuthal pairs, so an
// iterative estimate may land anywhere inside the bottom cluster.
std::pair<double, double> dense_restricted_bottom(const ProblemSpec& spec,
                                                  const ScalarField& u) {
  const int n = spec.mesh->vertex_count();
  Eigen::MatrixXd H(n, n);
  for (int j = 0; j < n; ++j) {
    ScalarField e(*spec.mesh);
    e.values[j] = 1.0;
    H.col(j) = hessian_apply(spec, u, e).values;
  }
  H = 0.5 * (H + H.transpose()).eval();
  const Eigen::VectorXd& m = spec.mass.weights;
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(n, n - 1);
  for (int k = 1; k < n; ++k) {
    B(k, k - 1) = 1.0;
    B(0, k - 1) = -m[k] / m[0];
  }
  Eigen::MatrixXd Hr = B.transpose() * H * B;
  Eigen::MatrixXd Mr = B.transpose() * m.asDiagonal() * B;
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(
      0.5 * (Hr + Hr.transpose()).eval(), 0.5 * (Mr + Mr.transpose()).eval());
  return {es.eigenvalues()(0), es.eigenvalues()(1)};
}

}  // namespace

TEST_SUITE("solvers") {

TEST_CASE("descent on a coercive cap finds the flat minimizer") {
  SurfaceMesh mesh = generate_mesh(DomainSpec::cap(kPi / 3, 0.15));
  ProblemSpec spec(mesh, ScalarField(mesh, 1.0), 3.0);
  ScalarField u0 = random_field(mesh, 12, 0.5);
  double start_energy = energy(spec, u0).total;

  SolveResult res = minimize(spec, u0);
  CHECK(res.status == SolveStatus::Converged);
  CHECK(res.residual <= 1e-8);
  CHECK(res.u.values.cwiseAbs().maxCoeff() < 1e-5);  // K constant: u == 0
  CHECK(res.energy.total <= start_energy);
  CHECK(std::abs(lumped_mean(spec.mass, res.u)) < 1e-10);
}

TEST_CASE("descent and newton agree on a smooth curvature") {
  SurfaceMesh mesh = generate_mesh(DomainSpec::cap(kPi / 3, 0.15));
  ProblemSpec spec(mesh, z_field(mesh, 1.0, 0.5), 3.0);
  ScalarField u0(mesh);

  SolveResult slow = minimize(spec, u0);
  SolveResult fast = newton_solve(spec, u0);
  CHECK(slow.status == SolveStatus::Converged);
  CHECK(fast.status == SolveStatus::Converged);
  CHECK(fast.residual <= 1e-10);
  CHECK((slow.u.values - fast.u.values).cwiseAbs().maxCoeff() < 1e-5);
  CHECK(fast.iterations <= 12);
}

TEST_CASE("descent detects blow-up from a bubble start") {
  // Supercritical boundary regime: above 4pi the rim-bubble family is
  // unbounded below, so descent from a resolved rim bubble concentrates
  // instead of converging.
  Vec3 p(std::sin(kPi / 4), 0, std::cos(kPi / 4));
  DomainSpec dom = DomainSpec::band(kPi / 4, 3 * kPi / 4, 0.08);
  dom.refine.push_back({p, 0.2, 0.0055});
  SurfaceMesh mesh = generate_mesh(dom);
  ProblemSpec spec(mesh, ScalarField(mesh, 1.0), 4 * kPi * std::sqrt(2.0));
  int v = snap_center(mesh, p, Placement::Boundary);
  ScalarField u0 = bubble_field(mesh, {mesh.vertices[v], 32.0});

  SolveResult res = minimize(spec, u0);
  CHECK(res.status == SolveStatus::BlowUpDetected);
  CHECK(res.concentration.max_minus_mean > 25.0);
  CHECK(res.concentration.ball_mass.back() > 0.9);
  CHECK((res.concentration.center - mesh.vertices[v]).norm() < 0.1);
  CHECK(res.energy.total < energy(spec, u0).total);  // still descending
}

TEST_CASE("starts outside the admissible cone are rejected") {
  SurfaceMesh mesh = generate_mesh(DomainSpec::cap(kPi / 3, 0.25));
  ProblemSpec spec(mesh, ScalarField(mesh, -1.0), 3.0);
  CHECK_FAILS_WITH(NotInX, minimize(spec, ScalarField(mesh)));
  CHECK_FAILS_WITH(NotInX, newton_solve(spec, ScalarField(mesh)));
}

TEST_CASE("newton recovers a manufactured critical point exactly") {
  SurfaceMesh mesh = generate_mesh(DomainSpec::cap(1.0, 0.15));
  double rho = 5.0;
  ScalarField u_star = z_field(mesh, 0.0, 0.1);
  ProblemSpec spec(mesh, manufactured_curvature(mesh, u_star, rho), rho);

  // the construction really does zero the gradient
  CHECK(residual_norm(spec.mass, energy_gradient(spec, u_star)) < 1e-12);

  SolveResult res = newton_solve(spec, ScalarField(mesh));
  CHECK(res.status == SolveStatus::Converged);
  CHECK(res.residual <= 1e-10);
  ScalarField want = gauge_fix(spec.mass, u_star);
  CHECK((res.u.values - want.values).cwiseAbs().maxCoeff() < 1e-8);
  CHECK(res.iterations <= 10);
}

TEST_CASE("warm starts track a two-percent parameter step in few iterations") {
  SurfaceMesh mesh = generate_mesh(DomainSpec::cap(1.0, 0.15));
  double rho = 5.0;
  ScalarField u_star = z_field(mesh, 0.0, 0.1);
  ProblemSpec spec(mesh, manufactured_curvature(mesh, u_star, rho), rho);

  SolveResult at_rho = newton_solve(spec, ScalarField(mesh));
  SolveResult warm = newton_try(with_rho(spec, 1.02 * rho), at_rho.u);
  CHECK(warm.status == SolveStatus::Converged);
  CHECK(warm.iterations <= 8);
}

TEST_CASE("newton_try reports a stall that newton_solve raises") {
  SurfaceMesh mesh = generate_mesh(DomainSpec::cap(1.0, 0.2));
  double rho = 5.0;
  ScalarField u_star = z_field(mesh, 0.0, 0.4);
  ProblemSpec spec(mesh, manufactured_curvature(mesh, u_star, rho), rho);
  NewtonConfig tight;
  tight.tol = 1e-15;
  tight.max_iterations = 1;

  SolveResult res = newton_try(spec, ScalarField(mesh), tight);
  CHECK(res.status == SolveStatus::MaxIterations);
  CHECK_FAILS_WITH(NoConvergence, newton_solve(spec, ScalarField(mesh), tight));
}

TEST_CASE("with_rho rebinds the linear weight consistently") {
  SurfaceMesh mesh = generate_mesh(DomainSpec::cap(1.0, 0.25));
  ScalarField K = z_field(mesh, 1.0, 0.3);
  ProblemSpec a(mesh, K, 4.0);
  ProblemSpec b = with_rho(a, 9.0);
  ProblemSpec fresh(mesh, K, 9.0);
  CHECK(b.rho == 9.0);
  CHECK(b.c_lin == doctest::Approx(9.0 / b.mass.total).epsilon(1e-15));
  ScalarField u = random_field(mesh, 3, 1.0);
  CHECK(energy(b, u).total == doctest::Approx(energy(fresh, u).total).epsilon(1e-14));
  CHECK(a.rho == 4.0);  // source untouched
}

TEST_CASE("mountain pass on an asymmetric band finds a genuine saddle") {
  SurfaceMesh mesh = generate_mesh(DomainSpec::band(kPi / 4, 2.0, 0.2));
  double rho = 1.35 * 4 * kPi;
  ProblemSpec spec(mesh, z_field(mesh, 0.0, 1.0), rho);

  PathConfig config;
  config.nodes = 10;
  config.max_sweeps = 50;
  config.samples_per_loop = 2;
  config.lambda = 4.0;

  MountainPassResult pass = mountain_pass(spec, config);
  CHECK(pass.samples.size() == 2);  // one positive loop
  CHECK(pass.result.status == SolveStatus::Converged);
  CHECK(pass.result.residual <= 1e-8);
  double base = energy(spec, ScalarField(mesh)).total;
  CHECK(pass.alpha >= base - 1e-9);  // the fixed vertex caps the path max
  CHECK(pass.sample_vertex >= 0);
  bool listed = false;
  for (const auto& s : pass.samples) listed |= (s.vertex == pass.sample_vertex);
  CHECK(listed);
  // the polished saddle is nonflat
  CHECK(pass.result.u.values.cwiseAbs().maxCoeff() > 1e-3);
}

TEST_CASE("mountain pass guards its regime") {
  SurfaceMesh mesh = generate_mesh(DomainSpec::band(kPi / 4, 2.0, 0.25));
  PathConfig config;
  config.samples_per_loop = 1;
  SUBCASE("rho below the window") {
    ProblemSpec spec(mesh, z_field(mesh, 0.0, 1.0), 3.0);
    CHECK_FAILS_WITH(WrongRegime, mountain_pass(spec, config));
  }
  SUBCASE("no positive boundary loop") {
    ProblemSpec spec(mesh, ScalarField(mesh, -1.0), 1.35 * 4 * kPi);
    CHECK_FAILS_WITH(WrongRegime, mountain_pass(spec, config));
  }
  SUBCASE("vertex outside the cone") {
    ProblemSpec spec(mesh, z_field(mesh, 0.0, 1.0), 1.35 * 4 * kPi);
    // a spike on the negative loop makes int K e^v negative
    ScalarField v(mesh);
    v.values[mesh.boundary_loops[1].front()] = 45.0;
    PathConfig bad = config;
    bad.vertex = v;
    CHECK_FAILS_WITH(NotInX, mountain_pass(spec, bad));
  }
}

TEST_CASE("continuation follows the min-max branch and checks the geometric form") {
  // On this symmetric band the flat state is critical at every rho but is a
  // saddle throughout (4pi, 8pi) (rho/|Sigma| = 2 exceeds the first Neumann
  // eigenvalue ~1.4). The first-point mountain pass may polish onto the flat
  // branch or a lower asymmetric one; either way the sweep must carry a
  // verified critical point across the grid.
  SurfaceMesh mesh = generate_mesh(DomainSpec::band(kPi / 4, 3 * kPi / 4, 0.25));
  ProblemSpec spec(mesh, ScalarField(mesh, 1.0), 1.0);
  double rho_geo = rho_geometric(mesh);
  REQUIRE(rho_geo > 4 * kPi);
  REQUIRE(rho_geo < 8 * kPi);
  std::vector<double> grid = {rho_geo - 0.25, rho_geo, rho_geo + 0.25};

  PathConfig path;
  path.nodes = 8;
  path.max_sweeps = 40;
  path.samples_per_loop = 2;
  path.lambda = 4.0;

  SweepCurve curve = rho_continuation(spec, grid, path, NewtonConfig{});
  REQUIRE(curve.points.size() == 3);
  REQUIRE(curve.solutions.size() == 3);
  double flat_per_rho = -std::log(spec.mass.total);
  for (std::size_t i = 0; i < curve.points.size(); ++i) {
    const SweepPoint& pt = curve.points[i];
    CHECK(pt.status == SolveStatus::Converged);
    CHECK(pt.rho == grid[i]);
    CHECK(pt.residual <= 1e-8);
    // every carried state is a genuine critical point at its own rho
    ProblemSpec at = with_rho(spec, pt.rho);
    CHECK(residual_norm(at.mass, energy_gradient(at, curve.solutions[i])) <= 1e-8);
    // any branch the sweep tracks stays at or below the flat level
    CHECK(pt.energy / pt.rho <= flat_per_rho + 1e-9);
  }
  // warm points polish in a few Newton steps and carry the branch energy
  for (std::size_t i = 1; i < curve.points.size(); ++i) {
    CHECK(curve.points[i].iterations <= 8);
    CHECK(curve.points[i].alpha == curve.points[i].energy);
  }
  CHECK(curve.monotonicity_violation() <= 1e-6 * (1 + std::abs(curve.points[0].alpha)));
  CHECK(curve.suspects.empty());
  CHECK(std::isfinite(curve.geo_form_residual));
  CHECK(curve.geo_form_residual <= 1e-8);
  CHECK(curve.to_csv().rfind("rho,alpha,energy,residual,iterations,status", 0) == 0);
}

TEST_CASE("continuation validates its grid") {
  SurfaceMesh mesh = generate_mesh(DomainSpec::band(kPi / 4, 3 * kPi / 4, 0.3));
  ProblemSpec spec(mesh, ScalarField(mesh, 1.0), 1.0);
  PathConfig path;
  CHECK_FAILS_WITH(InvalidArgument,
                   rho_continuation(spec, {}, path, NewtonConfig{}));
  CHECK_FAILS_WITH(InvalidArgument,
                   rho_continuation(spec, {14.0, 14.0}, path, NewtonConfig{}));
  CHECK_FAILS_WITH(WrongRegime,
                   rho_continuation(spec, {10.0, 14.0}, path, NewtonConfig{}));
  CHECK_FAILS_WITH(WrongRegime,
                   rho_continuation(spec, {14.0, 8 * kPi}, path, NewtonConfig{}));
}

TEST_CASE("a stalled continuation point leaves a partial curve and a suspect") {
  SurfaceMesh mesh = generate_mesh(DomainSpec::band(kPi / 4, 2.0, 0.2));
  ProblemSpec spec(mesh, z_field(mesh, 0.0, 1.0), 1.0);
  double rho0 = 1.35 * 4 * kPi;

  PathConfig path;
  path.nodes = 10;
  path.max_sweeps = 50;
  path.samples_per_loop = 2;
  path.lambda = 4.0;
  NewtonConfig crippled;
  crippled.tol = 1e-15;
  crippled.max_iterations = 1;

  SweepCurve partial;
  try {
    rho_continuation(spec, {rho0, rho0 + 0.3}, path, crippled, &partial);
    FAIL_CHECK("expected a no-convergence error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NoConvergence);
    CHECK(e.is_nonconvergence());
    CHECK(std::string(e.what()).find("rho") != std::string::npos);
  }
  REQUIRE(partial.points.size() == 2);
  CHECK(partial.points[0].status == SolveStatus::Converged);
  CHECK(partial.points[1].status == SolveStatus::MaxIterations);
  CHECK(partial.suspects.size() == 1);
  CHECK(partial.solutions.size() == 2);
}

TEST_CASE("hessian pencil eigenvalue lands in the dense bottom cluster") {
  auto check_bottom = [](const ProblemSpec& spec, const ScalarField& u) {
    double est = smallest_hessian_eigenvalue(spec, u);
    auto [lo, next] = dense_restricted_bottom(spec, u);
    double slack = 1e-6 * (1 + std::abs(lo));
    CHECK_MESSAGE(est >= lo - slack, "est=" << est << " lo=" << lo);
    CHECK_MESSAGE(est <= next + slack, "est=" << est << " next=" << next);
    return std::make_pair(est, lo);
  };

  SUBCASE("coercive cap: positive bottom") {
    SurfaceMesh mesh = generate_mesh(DomainSpec::cap(kPi / 3, 0.22));
    ProblemSpec spec(mesh, ScalarField(mesh, 1.0), rho_geometric(mesh));
    auto [est, lo] = check_bottom(spec, ScalarField(mesh));
    CHECK(lo > 0.3);
    CHECK(est > 0.3);
  }
  SUBCASE("band at the geometric parameter: saddle") {
    SurfaceMesh mesh = generate_mesh(DomainSpec::band(kPi / 4, 3 * kPi / 4, 0.3));
    ProblemSpec spec(mesh, ScalarField(mesh, 1.0), rho_geometric(mesh));
    auto [est, lo] = check_bottom(spec, ScalarField(mesh));
    CHECK(lo < -0.3);
    CHECK(est < -0.3);
  }
  SUBCASE("generic state and curvature") {
    SurfaceMesh mesh = generate_mesh(DomainSpec::cap(1.0, 0.25));
    ProblemSpec spec(mesh, z_field(mesh, 1.0, 0.5), 5.0);
    check_bottom(spec, z_field(mesh, 0.0, 0.3));
  }
}

}  // TEST_SUITE
