#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pgc/bubbles.hpp"
#include "pgc/diagnostics.hpp"
#include "pgc/variational.hpp"

namespace pgc {

enum class SolveStatus { Converged, BlowUpDetected, MaxIterations, NotInX };

const char* solve_status_name(SolveStatus status);

struct SolveResult {
  ScalarField u;  // gauge-fixed
  SolveStatus status = SolveStatus::MaxIterations;
  double residual = 0.0;  // dual norm sqrt(g^T M^{-1} g)
  int iterations = 0;
  int fallbacks = 0;  // inner-solver downgrades taken (Newton)
  EnergyBreakdown energy;
  ConcentrationReport concentration;
  double wall_seconds = 0.0;  // excluded from serialized artifacts

  /// Deterministic JSON (no wall time).
  std::string to_json() const;
};

struct MinimizeConfig {
  double tol = 1e-8;
  int max_iterations = 50000;
  double blow_up_threshold = 25.0;  // on max u - lumped mean u
  double armijo_slope = 1e-4;
  double kappa_min = 1e-3;  // boundary classification for the report
};

/// Armijo-damped gradient descent in the H1 metric (direction
/// -(S + M)^{-1} g). Stops at the residual tolerance or when the blow-up
/// detector fires; never leaves X. u0 outside X is an error.
SolveResult minimize(const ProblemSpec& spec, const ScalarField& u0,
                     const MinimizeConfig& config = {});

struct NewtonConfig {
  double tol = 1e-10;
  int max_iterations = 60;
  double cg_rtol = 1e-10;
  int cg_max_iterations = 40000;
  double armijo_slope = 1e-4;
  double kappa_min = 1e-3;
};

/// Damped Newton on the energy gradient with Armijo control of the dual
/// residual norm. The step solves H d = -g by projected Jacobi-PCG; on
/// negative-curvature breakdown it re-solves the normal equations
/// H^2 d = -H g by CG (recorded as a fallback), and falls back to a plain
/// gradient step if that stagnates too. Raises a no-convergence error on
/// the iteration cap.
SolveResult newton_solve(const ProblemSpec& spec, const ScalarField& u0,
                         const NewtonConfig& config = {});

/// Same, but reports failure through status instead of throwing.
SolveResult newton_try(const ProblemSpec& spec, const ScalarField& u0,
                       const NewtonConfig& config = {});

struct PathConfig {
  int nodes = 16;
  int max_sweeps = 200;
  double step_fraction = 0.2;  // node step = fraction * Armijo step
  int samples_per_loop = 8;
  double lambda = 16.0;                  // bubble scale of the far endpoint
  std::optional<ScalarField> vertex;     // cone vertex v; zero field if unset
  double stagnation_tol = 1e-7;
  int stagnation_sweeps = 15;
  double kappa_min = 1e-3;
  NewtonConfig polish;
};

struct PathState {
  std::vector<ScalarField> nodes;   // endpoints fixed across deformation
  std::vector<double> energies;
  double max_energy = 0.0;
  int argmax = 0;
};

struct MountainPassSample {
  int vertex = -1;
  double alpha = 0.0;  // min over sweeps of the path's max node energy
  double residual = 0.0;
  bool polished = false;
  std::string failure;
};

struct MountainPassResult {
  double alpha = 0.0;
  SolveResult result;
  int sample_vertex = -1;
  std::vector<MountainPassSample> samples;

  std::string to_json() const;
};

/// Min-max over the cone between the vertex field and a boundary bubble.
/// Samples bubble centers along every positive boundary loop, deforms each
/// discrete path by damped node-wise descent with energy re-equilibration,
/// polishes the best saddle candidate by Newton, and returns the sample
/// with the smallest polished residual (ties: lower energy). Errors:
/// wrong regime when rho is outside (4 pi, 8 pi) or no boundary loop is
/// positive; not-in-X when the vertex field is outside X.
MountainPassResult mountain_pass(const ProblemSpec& spec,
                                 const PathConfig& config);

/// Copy of a problem at a different rho (same mesh, curvature,
/// assembled operators).
ProblemSpec with_rho(const ProblemSpec& spec, double rho);

struct SweepPoint {
  double rho = 0.0;
  double alpha = 0.0;  // min-max estimate (first point) / branch energy
  double energy = 0.0;
  double residual = 0.0;
  int iterations = 0;
  SolveStatus status = SolveStatus::MaxIterations;
};

struct SweepCurve {
  std::vector<SweepPoint> points;
  std::vector<ScalarField> solutions;
  std::vector<QuantizationEntry> suspects;  // diagnostics for failed points
  /// Residual of the curvature-form equation S u' + 2 m - 2 m K e^{u'}
  /// after the normalization shift, evaluated where the grid hits the
  /// geometric rho = 2 |Sigma|; NaN when the grid has no such point.
  double geo_form_residual = std::numeric_limits<double>::quiet_NaN();

  /// Largest violation of (alpha/rho) monotone decrease over consecutive
  /// converged points (0 when the audit holds exactly).
  double monotonicity_violation() const;

  std::string to_csv() const;
  std::string to_json() const;
};

/// Warm-started continuation over a strictly increasing rho grid in
/// (4 pi, 8 pi): mountain pass at the first point, Newton from the
/// previous solution afterwards. A failing point raises no-convergence
/// with the offending rho attached (after recording a quantization
/// suspect entry); when `partial` is given, the curve gathered so far is
/// stored there before the throw.
SweepCurve rho_continuation(const ProblemSpec& base,
                            const std::vector<double>& rho_grid,
                            const PathConfig& path_config,
                            const NewtonConfig& newton_config,
                            SweepCurve* partial = nullptr);

/// Smallest eigenvalue estimate of the Hessian pencil (H, M) restricted
/// to the zero-lumped-mean subspace, by shifted inverse-power iteration
/// (adaptive shift kept below the spectrum).
double smallest_hessian_eigenvalue(const ProblemSpec& spec,
                                   const ScalarField& u, int steps = 20);

}  // namespace pgc
