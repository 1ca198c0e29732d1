#include "pgc/execute.hpp"

#include <filesystem>
#include <fstream>
#include <set>

#include "pgc/bubbles.hpp"
#include "pgc/diagnostics.hpp"
#include "pgc/errors.hpp"
#include "pgc/json_writer.hpp"
#include "pgc/solvers.hpp"

namespace pgc {
namespace {

namespace fs = std::filesystem;

void write_text(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::Io, "cannot open for writing: " + path.string());
  out << content;
  if (!out) fail(ErrorCode::Io, "write failed: " + path.string());
}

void write_errors(const fs::path& dir, const std::string& code,
                  const std::string& message) {
  JsonWriter w;
  w.field("error", code);
  w.field("message", message);
  std::error_code ec;
  fs::create_directories(dir, ec);
  std::ofstream out(dir / "errors.json", std::ios::binary);
  if (out) out << w.str() << "\n";
}

void require_h1(const ScalarField& K) {
  for (int i = 0; i < K.size(); ++i)
    if (K.values[i] > 0.0) return;
  fail(ErrorCode::H1Violation,
       "curvature is nowhere positive; the problem has no solution");
}

std::string mesh_summary_json(const SurfaceMesh& mesh) {
  std::vector<int> loop_sizes;
  for (const auto& loop : mesh.boundary_loops)
    loop_sizes.push_back(static_cast<int>(loop.size()));
  JsonWriter w;
  w.field("vertices", mesh.vertex_count());
  w.field("triangles", mesh.triangle_count());
  w.field("boundary_loops", loop_sizes);
  w.field("euler_characteristic", euler_characteristic(mesh));
  w.field("area", mesh_area(mesh));
  w.field("rho_geometric", rho_geometric(mesh));
  return w.str();
}

/// Mesh + curvature live side by side here; the field points at the mesh
/// member, so the workspace must stay put (constructed in place, never
/// copied).
struct Workspace {
  SurfaceMesh mesh;
  ScalarField curvature;
  fs::path out;

  explicit Workspace(const RunConfig& config)
      : mesh(generate_mesh(config.domain)),
        curvature(make_curvature(mesh, config.curvature)),
        out(config.out_dir) {
    fs::create_directories(out);
  }
  Workspace(const Workspace&) = delete;
};

int command_mesh(const RunConfig& config) {
  Workspace ws(config);
  export_obj(ws.mesh, (ws.out / "mesh.obj").string(),
             (ws.out / "mesh_loops.csv").string());
  write_text(ws.out / "mesh.json", mesh_summary_json(ws.mesh) + "\n");
  return 0;
}

int command_classify(const RunConfig& config) {
  Workspace ws(config);
  BoundaryClassification cls = classify_boundary_lenient(
      ws.mesh, ws.curvature, config.problem.kappa_min);
  write_text(ws.out / "classification.json", cls.to_json() + "\n");
  if (!cls.h2) {
    // Re-run strictly for the verbose offending-vertex message.
    classify_boundary(ws.mesh, ws.curvature, config.problem.kappa_min);
  }
  return 0;
}

int command_solve(const RunConfig& config) {
  Workspace ws(config);
  require_h1(ws.curvature);
  const double rho = resolve_rho(config.problem, ws.mesh);
  ProblemSpec spec(ws.mesh, ws.curvature, rho);
  ScalarField u0 = make_initial(ws.mesh, config.initial);
  SolveResult result = config.solver.method == "minimize"
                           ? minimize(spec, u0, config.solver.minimize)
                           : newton_solve(spec, u0, config.solver.newton);
  export_field_csv(result.u, (ws.out / "solution.csv").string());
  write_text(ws.out / "result.json", result.to_json() + "\n");
  return 0;
}

int command_sweep(const RunConfig& config) {
  Workspace ws(config);
  require_h1(ws.curvature);
  if (config.problem.rho_grid.empty())
    fail(ErrorCode::ConfigParse, "sweep needs a non-empty problem.rho_grid");
  ProblemSpec spec(ws.mesh, ws.curvature, config.problem.rho_grid.front());
  PathConfig path = make_path_config(config, ws.curvature);
  SweepCurve partial;
  try {
    SweepCurve curve = rho_continuation(spec, config.problem.rho_grid, path,
                                        config.solver.newton, &partial);
    write_text(ws.out / "sweep.csv", curve.to_csv());
    write_text(ws.out / "sweep.json", curve.to_json() + "\n");
    if (!curve.solutions.empty())
      export_field_csv(curve.solutions.back(),
                       (ws.out / "solution.csv").string());
  } catch (const Error&) {
    write_text(ws.out / "sweep.csv", partial.to_csv());
    write_text(ws.out / "sweep.json", partial.to_json() + "\n");
    throw;
  }
  return 0;
}

int command_bubble_scan(const RunConfig& config) {
  Workspace ws(config);
  const double rho = resolve_rho(config.problem, ws.mesh);
  ProblemSpec spec(ws.mesh, ws.curvature, rho);
  Placement placement = config.bubbles.placement == "interior"
                            ? Placement::Interior
                            : Placement::Boundary;
  AsymptoticsTable table = asymptotics_scan(spec, config.bubbles.center,
                                            placement,
                                            config.bubbles.lambdas);
  write_text(ws.out / "bubble_scan.csv", table.to_csv());
  JsonWriter w;
  w.field("energy_slope", table.energy_slope);
  w.field("dirichlet_slope", table.dirichlet_slope);
  w.field("snapped_vertex", table.snapped_vertex);
  w.field("center", std::vector<double>{table.center.x(), table.center.y(),
                                        table.center.z()});
  w.field("rho", rho);
  write_text(ws.out / "bubble_scan.json", w.str() + "\n");
  return 0;
}

int command_mt_check(const RunConfig& config) {
  Workspace ws(config);
  StiffnessMatrix stiffness = assemble_stiffness(ws.mesh);
  LumpedMass mass = assemble_lumped_mass(ws.mesh);
  Placement placement = config.bubbles.placement == "interior"
                            ? Placement::Interior
                            : Placement::Boundary;
  const int snapped = snap_center(ws.mesh, config.bubbles.center, placement);
  std::vector<ScalarField> family;
  for (double lambda : config.bubbles.lambdas)
    family.push_back(
        bubble_field(ws.mesh, {ws.mesh.vertices[snapped], lambda}));
  const double alpha = config.mt.alpha * config.mt.alpha_scale;
  MtScanResult scan =
      mt_gap_scan(stiffness, mass, family, config.bubbles.lambdas, alpha);
  write_text(ws.out / "mt.csv", scan.to_csv());
  JsonWriter w;
  w.field("alpha", alpha);
  w.field("max_gap", scan.max_gap);
  const std::size_t n = scan.rows.size();
  w.field("last_gap_spread",
          n >= 2 ? std::abs(scan.rows[n - 1].gap - scan.rows[n - 2].gap) : 0.0);
  w.field("snapped_vertex", snapped);
  write_text(ws.out / "mt.json", w.str() + "\n");
  return 0;
}

int command_report(const RunConfig& config) {
  Workspace ws(config);
  const double rho = resolve_rho(config.problem, ws.mesh);
  ProblemSpec spec(ws.mesh, ws.curvature, rho);
  ScalarField u = make_initial(ws.mesh, config.initial);
  BoundaryClassification cls = classify_boundary_lenient(
      ws.mesh, ws.curvature, config.problem.kappa_min);
  ConcentrationReport report =
      concentration_report(ws.mesh, spec.mass, ws.curvature, u, cls);
  JsonWriter w;
  w.field("rho", rho);
  w.raw("mesh", mesh_summary_json(ws.mesh));
  w.raw("classification", cls.to_json());
  w.raw("energy", energy(spec, u).to_json());
  w.raw("concentration", report.to_json());
  write_text(ws.out / "report.json", w.str() + "\n");
  return 0;
}

}  // namespace

bool is_known_command(const std::string& command) {
  static const std::set<std::string> known = {
      "mesh",     "solve",    "sweep", "bubble-scan",
      "mt-check", "classify", "report"};
  return known.count(command) > 0;
}

int execute(const std::string& command, const RunConfig& config) {
  const fs::path out = config.out_dir;
  try {
    if (command == "mesh") return command_mesh(config);
    if (command == "classify") return command_classify(config);
    if (command == "solve") return command_solve(config);
    if (command == "sweep") return command_sweep(config);
    if (command == "bubble-scan") return command_bubble_scan(config);
    if (command == "mt-check") return command_mt_check(config);
    if (command == "report") return command_report(config);
    fail(ErrorCode::InvalidArgument, "unknown command: " + command);
  } catch (const Error& err) {
    write_errors(out, error_code_name(err.code()), err.what());
    return err.is_nonconvergence() ? 1 : 2;
  } catch (const std::exception& err) {
    write_errors(out, "internal", err.what());
    return 2;
  }
}

}  // namespace pgc
