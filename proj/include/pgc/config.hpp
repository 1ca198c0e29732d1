#pragma once

#include <string>
#include <vector>

#include "pgc/geometry.hpp"
#include "pgc/solvers.hpp"

namespace pgc {

/// Named curvature presets:
///   "const"     -> K = c
///   "affine-z"  -> K = a + b z
///   "product-z" -> K = z (a + b z)
struct CurvatureConfig {
  std::string preset = "const";
  double c = 1.0;
  double a = 0.0;
  double b = 1.0;
};

/// Initial fields for solve runs:
///   "zero"      -> u0 = 0
///   "affine-z"  -> u0 = a + b z
///   "bubble"    -> u0 = bubble at the snapped center
struct InitialConfig {
  std::string preset = "zero";
  double a = 0.0;
  double b = 0.1;
  double lambda = 32.0;
  Vec3 center = Vec3(0, 0, 1);
  std::string placement = "boundary";  // "boundary" | "interior"
};

struct ProblemConfig {
  bool geometric = true;  // rho = 2 |Sigma|
  double rho = 0.0;       // used when geometric == false
  std::vector<double> rho_grid;  // sweep grid
  double kappa_min = 1e-3;
};

struct SolverConfig {
  std::string method = "newton";  // "newton" | "minimize"
  MinimizeConfig minimize;
  NewtonConfig newton;
};

/// The mesh-free part of PathConfig plus the vertex preset
/// ("zero" | "curvature", the latter meaning v = K pointwise).
struct PathSection {
  int nodes = 16;
  int max_sweeps = 200;
  double step_fraction = 0.2;
  int samples_per_loop = 8;
  double lambda = 16.0;
  std::string vertex = "zero";
  double stagnation_tol = 1e-7;
  int stagnation_sweeps = 15;
};

struct BubbleConfig {
  std::vector<double> lambdas = {8.0, 16.0, 32.0};
  std::string placement = "boundary";
  Vec3 center = Vec3(0, 0, 1);
};

struct MtConfig {
  double alpha = 0.039788735772973836;  // 1 / (8 pi)
  double alpha_scale = 1.0;             // multiplier (reduced-constant runs)
};

struct RunConfig {
  long seed = 0;
  int threads = 1;
  std::string out_dir = "out";
  DomainSpec domain = DomainSpec::cap(1.0471975511965976, 0.1);
  CurvatureConfig curvature;
  InitialConfig initial;
  ProblemConfig problem;
  SolverConfig solver;
  PathSection path;
  BubbleConfig bubbles;
  MtConfig mt;
};

/// Parses and validates config text. Unknown sections or keys, duplicate
/// keys, and out-of-range values are config-parse errors carrying line
/// numbers; missing entries take the defaults above.
RunConfig parse_config(const std::string& text);

RunConfig parse_config_file(const std::string& path);

/// Instantiates a curvature preset on a mesh.
ScalarField make_curvature(const SurfaceMesh& mesh, const CurvatureConfig& c);

/// Instantiates an initial-field preset on a mesh.
ScalarField make_initial(const SurfaceMesh& mesh, const InitialConfig& c);

/// Builds the solver-facing path configuration (vertex preset resolved
/// against the given curvature field).
PathConfig make_path_config(const RunConfig& config, const ScalarField& K);

/// Resolves rho for a single solve on a given mesh.
double resolve_rho(const ProblemConfig& problem, const SurfaceMesh& mesh);

}  // namespace pgc
