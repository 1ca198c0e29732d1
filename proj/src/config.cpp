#include "pgc/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "pgc/bubbles.hpp"
#include "pgc/toml.hpp"

namespace pgc {
namespace {

constexpr double kPi = 3.14159265358979323846;

[[noreturn]] void config_fail(int line, const std::string& what) {
  std::ostringstream msg;
  msg << "line " << line << ": " << what;
  fail(ErrorCode::ConfigParse, msg.str());
}

/// One section's reader; tracks which keys the schema consumed so the
/// leftovers can be rejected by name.
class Section {
 public:
  Section(const toml::Document& doc, const std::string& name)
      : doc_(doc), name_(name) {}

  const toml::Value* find(const std::string& key) {
    seen_.insert(key);
    return doc_.find(name_, key);
  }

  double number(const std::string& key, double fallback) {
    const toml::Value* v = find(key);
    if (!v) return fallback;
    if (!v->is_number())
      config_fail(v->line, "key '" + key + "' expects a number");
    return v->number;
  }

  int integer(const std::string& key, int fallback) {
    const toml::Value* v = find(key);
    if (!v) return fallback;
    if (!v->is_number() || v->number != std::floor(v->number))
      config_fail(v->line, "key '" + key + "' expects an integer");
    return static_cast<int>(v->number);
  }

  std::string word(const std::string& key, const std::string& fallback,
                   const std::set<std::string>& allowed) {
    const toml::Value* v = find(key);
    if (!v) return fallback;
    if (!v->is_string())
      config_fail(v->line, "key '" + key + "' expects a string");
    if (!allowed.count(v->text)) {
      std::string options;
      for (const auto& a : allowed) options += (options.empty() ? "" : ", ") + a;
      config_fail(v->line, "key '" + key + "' must be one of: " + options);
    }
    return v->text;
  }

  std::vector<double> numbers(const std::string& key,
                              std::vector<double> fallback) {
    const toml::Value* v = find(key);
    if (!v) return fallback;
    if (!v->is_array())
      config_fail(v->line, "key '" + key + "' expects an array of numbers");
    std::vector<double> out;
    for (const auto& item : v->items) {
      if (!item.is_number())
        config_fail(item.line, "key '" + key + "' expects an array of numbers");
      out.push_back(item.number);
    }
    return out;
  }

  Vec3 point(const std::string& key, const Vec3& fallback) {
    const toml::Value* v = find(key);
    if (!v) return fallback;
    std::vector<double> xyz = numbers(key, {});
    if (xyz.size() != 3)
      config_fail(v->line, "key '" + key + "' expects [x, y, z]");
    Vec3 p(xyz[0], xyz[1], xyz[2]);
    if (p.norm() == 0.0) config_fail(v->line, "key '" + key + "' is zero");
    return p.normalized();
  }

  void reject_unknown() {
    auto sec = doc_.sections.find(name_);
    if (sec == doc_.sections.end()) return;
    for (const auto& [key, value] : sec->second)
      if (!seen_.count(key))
        config_fail(value.line, "unknown key '" + key + "'" +
                                    (name_.empty() ? "" : " in [" + name_ + "]"));
  }

 private:
  const toml::Document& doc_;
  std::string name_;
  std::set<std::string> seen_;
};

void check_positive(double value, const char* what, int line) {
  if (!(value > 0.0)) config_fail(line, std::string(what) + " must be > 0");
}

int line_of(const toml::Document& doc, const std::string& section,
            const std::string& key) {
  const toml::Value* v = doc.find(section, key);
  return v ? v->line : 0;
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  toml::Document doc = toml::parse(text);
  RunConfig config;

  const std::set<std::string> known_sections = {
      "",     "domain", "curvature", "initial", "problem",
      "solver", "path",   "bubbles",   "mt"};
  for (const auto& [name, table] : doc.sections) {
    (void)table;
    if (!known_sections.count(name))
      config_fail(doc.section_lines.at(name), "unknown section [" + name + "]");
  }

  {
    Section root(doc, "");
    config.seed = root.integer("seed", 0);
    config.threads = root.integer("threads", 1);
    if (config.threads < 1) config_fail(line_of(doc, "", "threads"),
                                        "threads must be >= 1");
    const toml::Value* out = root.find("out");
    if (out) {
      if (!out->is_string()) config_fail(out->line, "key 'out' expects a string");
      config.out_dir = out->text;
    }
    root.reject_unknown();
  }

  {
    Section domain(doc, "domain");
    std::string kind = domain.word("kind", "cap", {"cap", "band"});
    double h = domain.number("h", 0.1);
    check_positive(h, "domain.h", line_of(doc, "domain", "h"));
    if (kind == "cap") {
      double theta = domain.number("theta", kPi / 3.0);
      if (!(theta > 0.0 && theta < kPi))
        config_fail(line_of(doc, "domain", "theta"),
                    "cap theta must lie in (0, pi)");
      config.domain = DomainSpec::cap(theta, h);
    } else {
      double theta1 = domain.number("theta1", kPi / 4.0);
      double theta2 = domain.number("theta2", 3.0 * kPi / 4.0);
      if (!(theta1 > 0.0 && theta1 < theta2 && theta2 < kPi))
        config_fail(line_of(doc, "domain", "theta1"),
                    "band needs 0 < theta1 < theta2 < pi");
      config.domain = DomainSpec::band(theta1, theta2, h);
    }
    const toml::Value* refine = domain.find("refine");
    if (refine) {
      if (!refine->is_array())
        config_fail(refine->line,
                    "key 'refine' expects [[colatitude, radius, h], ...]");
      for (const auto& rule : refine->items) {
        if (!rule.is_array() || rule.items.size() != 3 ||
            !rule.items[0].is_number() || !rule.items[1].is_number() ||
            !rule.items[2].is_number())
          config_fail(rule.line,
                      "each refine rule is [colatitude, radius, h]");
        const double colat = rule.items[0].number;
        if (!(colat >= 0.0 && colat <= kPi))
          config_fail(rule.line, "refine colatitude must lie in [0, pi]");
        RefinementRule r;
        r.center = Vec3(std::sin(colat), 0.0, std::cos(colat));
        r.radius = rule.items[1].number;
        r.h = rule.items[2].number;
        check_positive(r.radius, "refine radius", rule.line);
        check_positive(r.h, "refine h", rule.line);
        config.domain.refine.push_back(r);
      }
    }
    domain.reject_unknown();
  }

  {
    Section curvature(doc, "curvature");
    config.curvature.preset = curvature.word(
        "preset", "const", {"const", "affine-z", "product-z"});
    config.curvature.c = curvature.number("c", 1.0);
    config.curvature.a = curvature.number("a", 0.0);
    config.curvature.b = curvature.number("b", 1.0);
    curvature.reject_unknown();
  }

  {
    Section initial(doc, "initial");
    config.initial.preset =
        initial.word("preset", "zero", {"zero", "affine-z", "bubble"});
    config.initial.a = initial.number("a", 0.0);
    config.initial.b = initial.number("b", 0.1);
    config.initial.lambda = initial.number("lambda", 32.0);
    check_positive(config.initial.lambda, "initial.lambda",
                   line_of(doc, "initial", "lambda"));
    config.initial.center = initial.point("center", Vec3(0, 0, 1));
    config.initial.placement =
        initial.word("placement", "boundary", {"boundary", "interior"});
    initial.reject_unknown();
  }

  {
    Section problem(doc, "problem");
    const toml::Value* rho = problem.find("rho");
    if (rho) {
      if (rho->is_string()) {
        if (rho->text != "geometric")
          config_fail(rho->line, "rho must be a number or \"geometric\"");
        config.problem.geometric = true;
      } else if (rho->is_number()) {
        check_positive(rho->number, "problem.rho", rho->line);
        config.problem.geometric = false;
        config.problem.rho = rho->number;
      } else {
        config_fail(rho->line, "rho must be a number or \"geometric\"");
      }
    }
    config.problem.rho_grid = problem.numbers("rho_grid", {});
    for (std::size_t i = 1; i < config.problem.rho_grid.size(); ++i)
      if (!(config.problem.rho_grid[i] > config.problem.rho_grid[i - 1]))
        config_fail(line_of(doc, "problem", "rho_grid"),
                    "rho_grid must be strictly increasing");
    config.problem.kappa_min = problem.number("kappa_min", 1e-3);
    check_positive(config.problem.kappa_min, "problem.kappa_min",
                   line_of(doc, "problem", "kappa_min"));
    problem.reject_unknown();
  }

  {
    Section solver(doc, "solver");
    config.solver.method =
        solver.word("method", "newton", {"newton", "minimize"});
    config.solver.newton.tol = solver.number("tol", 1e-10);
    config.solver.minimize.tol = config.solver.newton.tol != 1e-10
                                     ? config.solver.newton.tol
                                     : 1e-8;
    config.solver.newton.max_iterations =
        solver.integer("max_iterations", 60);
    config.solver.minimize.max_iterations =
        solver.integer("descent_max_iterations", 50000);
    config.solver.newton.cg_rtol = solver.number("cg_rtol", 1e-10);
    config.solver.newton.cg_max_iterations =
        solver.integer("cg_max_iterations", 40000);
    config.solver.minimize.blow_up_threshold =
        solver.number("blow_up_threshold", 25.0);
    check_positive(config.solver.newton.tol, "solver.tol",
                   line_of(doc, "solver", "tol"));
    solver.reject_unknown();
    config.solver.minimize.kappa_min = config.problem.kappa_min;
    config.solver.newton.kappa_min = config.problem.kappa_min;
  }

  {
    Section path(doc, "path");
    config.path.nodes = path.integer("nodes", 16);
    config.path.max_sweeps = path.integer("max_sweeps", 200);
    config.path.step_fraction = path.number("step_fraction", 0.2);
    config.path.samples_per_loop = path.integer("samples_per_loop", 8);
    config.path.lambda = path.number("lambda", 16.0);
    config.path.vertex = path.word("vertex", "zero", {"zero", "curvature"});
    config.path.stagnation_tol = path.number("stagnation_tol", 1e-7);
    config.path.stagnation_sweeps = path.integer("stagnation_sweeps", 15);
    if (config.path.nodes < 4)
      config_fail(line_of(doc, "path", "nodes"), "path.nodes must be >= 4");
    check_positive(config.path.lambda, "path.lambda",
                   line_of(doc, "path", "lambda"));
    if (!(config.path.step_fraction > 0.0 && config.path.step_fraction <= 1.0))
      config_fail(line_of(doc, "path", "step_fraction"),
                  "path.step_fraction must lie in (0, 1]");
    path.reject_unknown();
  }

  {
    Section bubbles(doc, "bubbles");
    config.bubbles.lambdas = bubbles.numbers("lambdas", {8.0, 16.0, 32.0});
    if (config.bubbles.lambdas.empty())
      config_fail(line_of(doc, "bubbles", "lambdas"),
                  "bubbles.lambdas must be non-empty");
    for (std::size_t i = 0; i < config.bubbles.lambdas.size(); ++i) {
      check_positive(config.bubbles.lambdas[i], "bubble lambda",
                     line_of(doc, "bubbles", "lambdas"));
      if (i && !(config.bubbles.lambdas[i] > config.bubbles.lambdas[i - 1]))
        config_fail(line_of(doc, "bubbles", "lambdas"),
                    "bubbles.lambdas must be strictly increasing");
    }
    config.bubbles.placement =
        bubbles.word("placement", "boundary", {"boundary", "interior"});
    config.bubbles.center = bubbles.point("center", Vec3(0, 0, 1));
    bubbles.reject_unknown();
  }

  {
    Section mt(doc, "mt");
    config.mt.alpha = mt.number("alpha", 1.0 / (8.0 * kPi));
    config.mt.alpha_scale = mt.number("alpha_scale", 1.0);
    check_positive(config.mt.alpha, "mt.alpha", line_of(doc, "mt", "alpha"));
    check_positive(config.mt.alpha_scale, "mt.alpha_scale",
                   line_of(doc, "mt", "alpha_scale"));
    mt.reject_unknown();
  }

  return config;
}

RunConfig parse_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

ScalarField make_curvature(const SurfaceMesh& mesh, const CurvatureConfig& c) {
  ScalarField K(mesh, 0.0);
  for (int i = 0; i < mesh.vertex_count(); ++i) {
    const double z = mesh.vertices[i].z();
    if (c.preset == "const") K.values[i] = c.c;
    else if (c.preset == "affine-z") K.values[i] = c.a + c.b * z;
    else if (c.preset == "product-z") K.values[i] = z * (c.a + c.b * z);
    else fail(ErrorCode::ConfigParse, "unknown curvature preset " + c.preset);
  }
  return K;
}

ScalarField make_initial(const SurfaceMesh& mesh, const InitialConfig& c) {
  if (c.preset == "zero") return ScalarField(mesh, 0.0);
  if (c.preset == "affine-z") {
    ScalarField u(mesh, 0.0);
    for (int i = 0; i < mesh.vertex_count(); ++i)
      u.values[i] = c.a + c.b * mesh.vertices[i].z();
    return u;
  }
  if (c.preset == "bubble") {
    Placement placement = c.placement == "interior" ? Placement::Interior
                                                    : Placement::Boundary;
    int snapped = snap_center(mesh, c.center, placement);
    return bubble_field(mesh, {mesh.vertices[snapped], c.lambda});
  }
  fail(ErrorCode::ConfigParse, "unknown initial preset " + c.preset);
}

PathConfig make_path_config(const RunConfig& config, const ScalarField& K) {
  PathConfig path;
  path.nodes = config.path.nodes;
  path.max_sweeps = config.path.max_sweeps;
  path.step_fraction = config.path.step_fraction;
  path.samples_per_loop = config.path.samples_per_loop;
  path.lambda = config.path.lambda;
  path.stagnation_tol = config.path.stagnation_tol;
  path.stagnation_sweeps = config.path.stagnation_sweeps;
  path.kappa_min = config.problem.kappa_min;
  path.polish = config.solver.newton;
  if (config.path.vertex == "curvature") path.vertex = K;
  return path;
}

double resolve_rho(const ProblemConfig& problem, const SurfaceMesh& mesh) {
  return problem.geometric ? rho_geometric(mesh) : problem.rho;
}

}  // namespace pgc
