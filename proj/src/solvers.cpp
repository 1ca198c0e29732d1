#include "pgc/solvers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/SparseCholesky>

#include "pgc/errors.hpp"
#include "pgc/json_writer.hpp"

namespace pgc {
namespace {

constexpr double kPi = 3.14159265358979323846;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

double dual_norm_sq(const LumpedMass& mass, const Eigen::VectorXd& g) {
  return (g.array().square() / mass.weights.array()).sum();
}

Eigen::VectorXd mass_inverse(const LumpedMass& mass, const Eigen::VectorXd& g) {
  return (g.array() / mass.weights.array()).matrix();
}

double max_minus_mean(const LumpedMass& mass, const Eigen::VectorXd& u) {
  return u.maxCoeff() - mass.weights.dot(u) / mass.total;
}

double m_norm(const LumpedMass& mass, const Eigen::VectorXd& v) {
  return std::sqrt(v.dot(mass.weights.cwiseProduct(v)));
}

/// Hessian of the energy at a fixed state, with the exp weights cached.
struct HessianOperator {
  const ProblemSpec* spec = nullptr;
  Eigen::VectorXd w;  // m K e^{u - shift}
  double total = 0.0;

  HessianOperator(const ProblemSpec& s, const Eigen::VectorXd& u) : spec(&s) {
    const double shift = u.maxCoeff();
    w = (s.mass.weights.array() * s.curvature.values.array() *
         (u.array() - shift).exp())
            .matrix();
    total = w.sum();
    if (!(total > 0.0)) fail(ErrorCode::NotInX, "state left X");
  }

  Eigen::VectorXd apply(const Eigen::VectorXd& v) const {
    const double rho = spec->rho;
    Eigen::VectorXd hv = spec->stiffness.matrix * v;
    hv -= (rho / total) * w.cwiseProduct(v);
    hv += (rho * w.dot(v) / (total * total)) * w;
    return hv;
  }

  Eigen::VectorXd diagonal() const {
    const double rho = spec->rho;
    Eigen::VectorXd d = spec->stiffness.matrix.diagonal();
    d -= (rho / total) * w;
    d += (rho / (total * total)) * w.cwiseProduct(w);
    return d;
  }
};

void project_constants(Eigen::VectorXd& v) { v.array() -= v.mean(); }

struct CgOutcome {
  Eigen::VectorXd x;
  bool converged = false;
  bool negative_curvature = false;
};

/// Jacobi-PCG for op(x) = b on the complement of constants. `diag` is a
/// positive preconditioner surrogate; indefiniteness is reported rather
/// than fought.
template <typename Op>
CgOutcome projected_pcg(const Op& op, const Eigen::VectorXd& b,
                        const Eigen::VectorXd& diag, double rtol,
                        int max_iterations) {
  CgOutcome out;
  out.x = Eigen::VectorXd::Zero(b.size());
  Eigen::VectorXd r = b;
  project_constants(r);
  const double b_norm = r.norm();
  if (b_norm == 0.0) {
    out.converged = true;
    return out;
  }
  Eigen::VectorXd z = (r.array() / diag.array()).matrix();
  project_constants(z);
  Eigen::VectorXd p = z;
  double rz = r.dot(z);
  for (int it = 0; it < max_iterations; ++it) {
    Eigen::VectorXd hp = op(p);
    project_constants(hp);
    const double php = p.dot(hp);
    if (!(php > 1e-300 * p.squaredNorm())) {
      out.negative_curvature = true;
      return out;
    }
    const double step = rz / php;
    out.x += step * p;
    r -= step * hp;
    if (r.norm() <= rtol * b_norm) {
      out.converged = true;
      return out;
    }
    z = (r.array() / diag.array()).matrix();
    project_constants(z);
    const double rz_next = r.dot(z);
    p = z + (rz_next / rz) * p;
    rz = rz_next;
  }
  return out;
}

/// Newton step direction with the downgrade ladder: PCG on H, then CG on
/// the normal equations H^2 d = -H g, then the lumped gradient direction.
/// Returns the number of downgrades taken (0, 1, or 2).
int newton_direction(const ProblemSpec& spec, const HessianOperator& hess,
                     const Eigen::VectorXd& g, const NewtonConfig& config,
                     Eigen::VectorXd& direction) {
  Eigen::VectorXd rhs = -g;
  Eigen::VectorXd diag = hess.diagonal();
  const double floor = 1e-12 * diag.cwiseAbs().maxCoeff() + 1e-300;
  for (int i = 0; i < diag.size(); ++i)
    diag[i] = std::max(std::abs(diag[i]), floor);

  auto apply_h = [&hess](const Eigen::VectorXd& v) { return hess.apply(v); };
  CgOutcome direct = projected_pcg(apply_h, rhs, diag, config.cg_rtol,
                                   config.cg_max_iterations);
  if (direct.converged) {
    direction = direct.x;
    return 0;
  }

  auto apply_h2 = [&hess](const Eigen::VectorXd& v) {
    return hess.apply(hess.apply(v));
  };
  Eigen::VectorXd rhs2 = hess.apply(rhs);
  Eigen::VectorXd diag2 = diag.cwiseProduct(diag);
  CgOutcome normal =
      projected_pcg(apply_h2, rhs2, diag2, std::max(config.cg_rtol, 1e-12),
                    config.cg_max_iterations);
  if (normal.converged && normal.x.norm() > 0.0) {
    direction = normal.x;
    return 1;
  }

  direction = mass_inverse(spec.mass, rhs);
  return 2;
}

struct LineSearchResult {
  Eigen::VectorXd u;
  double merit = 0.0;
  double step = 0.0;
  bool ok = false;
};

/// Backtracking on a merit function (energy or residual norm); trial
/// states must stay inside X.
template <typename Merit>
LineSearchResult backtrack(const ProblemSpec& spec, const Eigen::VectorXd& u,
                           const Eigen::VectorXd& direction, double merit0,
                           double decrease_rate, const Merit& merit,
                           double step0 = 1.0) {
  LineSearchResult result;
  double step = step0;
  for (int trial = 0; trial < 60; ++trial) {
    Eigen::VectorXd candidate = u + step * direction;
    ScalarField field(*spec.mesh, candidate);
    WeightedExpIntegral mass_int =
        integrate_weighted_exp(spec.mass, spec.curvature, field);
    if (mass_int.value > 0.0) {
      const double value = merit(candidate);
      if (std::isfinite(value) && value <= merit0 - decrease_rate * step) {
        result.u = std::move(candidate);
        result.merit = value;
        result.step = step;
        result.ok = true;
        return result;
      }
    }
    step *= 0.5;
  }
  return result;
}

ConcentrationReport make_report(const ProblemSpec& spec,
                                const Eigen::VectorXd& u, double kappa_min) {
  BoundaryClassification cls =
      classify_boundary_lenient(*spec.mesh, spec.curvature, kappa_min);
  return concentration_report(*spec.mesh, spec.mass, spec.curvature,
                              ScalarField(*spec.mesh, u), cls);
}

void finish(SolveResult& result, const ProblemSpec& spec, Eigen::VectorXd u,
            double kappa_min, Clock::time_point start) {
  ScalarField field =
      gauge_fix(spec.mass, ScalarField(*spec.mesh, std::move(u)));
  result.energy = energy(spec, field);
  result.concentration = make_report(spec, field.values, kappa_min);
  result.u = std::move(field);
  result.wall_seconds = seconds_since(start);
}

bool in_x(const ProblemSpec& spec, const ScalarField& u) {
  return integrate_weighted_exp(spec.mass, spec.curvature, u).value > 0.0;
}

}  // namespace

const char* solve_status_name(SolveStatus status) {
  switch (status) {
    case SolveStatus::Converged: return "converged";
    case SolveStatus::BlowUpDetected: return "blow-up-detected";
    case SolveStatus::MaxIterations: return "max-iterations";
    case SolveStatus::NotInX: return "not-in-x";
  }
  return "unknown";
}

std::string SolveResult::to_json() const {
  JsonWriter w;
  w.field("status", solve_status_name(status));
  w.field("residual", residual);
  w.field("iterations", iterations);
  w.field("fallbacks", fallbacks);
  w.raw("energy", energy.to_json());
  w.raw("concentration", concentration.to_json());
  return w.str();
}

SolveResult minimize(const ProblemSpec& spec, const ScalarField& u0,
                     const MinimizeConfig& config) {
  const auto start = Clock::now();
  require_field(*spec.mesh, u0);
  SolveResult result;
  Eigen::VectorXd u = u0.values;

  EnergyBreakdown current = energy(spec, ScalarField(*spec.mesh, u));
  if (!current.in_x)
    fail(ErrorCode::NotInX, "initial state has non-positive weighted mass");

  // Descend along the Sobolev gradient -(S + M)^{-1} g. The H1 metric
  // absorbs the stiffness of S, so the contraction rate does not degrade
  // under mesh refinement the way the lumped direction -M^{-1} g does.
  Eigen::SparseMatrix<double> metric = spec.stiffness.matrix;
  for (int i = 0; i < metric.rows(); ++i)
    metric.coeffRef(i, i) += spec.mass.weights[i];
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> h1(metric);
  if (h1.info() != Eigen::Success)
    fail(ErrorCode::NoConvergence, "H1 metric factorization failed");

  double step = 1.0;
  for (int it = 0; it < config.max_iterations; ++it) {
    Eigen::VectorXd g = energy_gradient(spec, ScalarField(*spec.mesh, u)).values;
    const double dual_sq = dual_norm_sq(spec.mass, g);
    result.residual = std::sqrt(dual_sq);
    result.iterations = it;
    if (result.residual <= config.tol) {
      result.status = SolveStatus::Converged;
      finish(result, spec, std::move(u), config.kappa_min, start);
      return result;
    }

    Eigen::VectorXd direction = -h1.solve(g);
    const double h1_sq = -direction.dot(g);  // g^T (S+M)^{-1} g
    auto merit = [&](const Eigen::VectorXd& candidate) {
      return energy(spec, ScalarField(*spec.mesh, candidate)).total;
    };
    LineSearchResult ls = backtrack(spec, u, direction, current.total,
                                    config.armijo_slope * h1_sq, merit, step);
    if (!ls.ok) {
      std::ostringstream msg;
      msg << "descent line search stagnated at iteration " << it
          << " (residual " << result.residual << ", max-mean "
          << max_minus_mean(spec.mass, u) << ")";
      fail(ErrorCode::NoConvergence, msg.str());
    }
    u = std::move(ls.u);
    current.total = ls.merit;
    step = std::min(ls.step * 2.0, 1e6);

    if (max_minus_mean(spec.mass, u) > config.blow_up_threshold) {
      result.status = SolveStatus::BlowUpDetected;
      result.iterations = it + 1;
      Eigen::VectorXd g_now =
          energy_gradient(spec, ScalarField(*spec.mesh, u)).values;
      result.residual = std::sqrt(dual_norm_sq(spec.mass, g_now));
      finish(result, spec, std::move(u), config.kappa_min, start);
      return result;
    }
  }

  result.status = SolveStatus::MaxIterations;
  result.iterations = config.max_iterations;
  Eigen::VectorXd g = energy_gradient(spec, ScalarField(*spec.mesh, u)).values;
  result.residual = std::sqrt(dual_norm_sq(spec.mass, g));
  finish(result, spec, std::move(u), config.kappa_min, start);
  return result;
}

SolveResult newton_try(const ProblemSpec& spec, const ScalarField& u0,
                       const NewtonConfig& config) {
  const auto start = Clock::now();
  require_field(*spec.mesh, u0);
  SolveResult result;
  Eigen::VectorXd u = u0.values;

  if (!in_x(spec, u0))
    fail(ErrorCode::NotInX, "initial state has non-positive weighted mass");

  Eigen::VectorXd g = energy_gradient(spec, ScalarField(*spec.mesh, u)).values;
  double merit0 = std::sqrt(dual_norm_sq(spec.mass, g));
  for (int it = 0; it < config.max_iterations; ++it) {
    result.residual = merit0;
    result.iterations = it;
    if (merit0 <= config.tol) {
      result.status = SolveStatus::Converged;
      finish(result, spec, std::move(u), config.kappa_min, start);
      return result;
    }

    HessianOperator hess(spec, u);
    Eigen::VectorXd direction;
    result.fallbacks += newton_direction(spec, hess, g, config, direction);

    auto merit = [&](const Eigen::VectorXd& candidate) {
      Eigen::VectorXd gc =
          energy_gradient(spec, ScalarField(*spec.mesh, candidate)).values;
      return std::sqrt(dual_norm_sq(spec.mass, gc));
    };
    LineSearchResult ls = backtrack(spec, u, direction, merit0,
                                    config.armijo_slope * merit0, merit);
    if (!ls.ok) {
      // Newton direction unusable for the residual merit; try plain
      // steepest descent in the lumped metric before giving up.
      Eigen::VectorXd fallback = -mass_inverse(spec.mass, g);
      ls = backtrack(spec, u, fallback, merit0, config.armijo_slope * merit0,
                     merit);
      result.fallbacks += 1;
      if (!ls.ok) {
        result.status = SolveStatus::MaxIterations;
        result.iterations = it;
        finish(result, spec, std::move(u), config.kappa_min, start);
        return result;
      }
    }
    u = std::move(ls.u);
    u.array() -= spec.mass.weights.dot(u) / spec.mass.total;
    g = energy_gradient(spec, ScalarField(*spec.mesh, u)).values;
    merit0 = std::sqrt(dual_norm_sq(spec.mass, g));
  }

  result.residual = merit0;
  result.iterations = config.max_iterations;
  result.status = SolveStatus::MaxIterations;
  finish(result, spec, std::move(u), config.kappa_min, start);
  return result;
}

SolveResult newton_solve(const ProblemSpec& spec, const ScalarField& u0,
                         const NewtonConfig& config) {
  SolveResult result = newton_try(spec, u0, config);
  if (result.status != SolveStatus::Converged) {
    std::ostringstream msg;
    msg << "newton stalled after " << result.iterations
        << " iterations at residual " << result.residual;
    fail(ErrorCode::NoConvergence, msg.str());
  }
  return result;
}

ProblemSpec with_rho(const ProblemSpec& spec, double rho) {
  if (!(rho > 0.0)) fail(ErrorCode::InvalidSpec, "rho must be positive");
  ProblemSpec copy = spec;
  copy.rho = rho;
  copy.c_lin = rho / copy.mass.total;
  return copy;
}

namespace {

std::vector<int> sample_loop(const std::vector<int>& loop, int samples) {
  std::vector<int> picks;
  const int n = static_cast<int>(loop.size());
  const int count = std::min(std::max(samples, 1), n);
  for (int k = 0; k < count; ++k) {
    int idx = static_cast<int>(static_cast<long long>(k) * n / count);
    picks.push_back(loop[idx]);
  }
  std::sort(picks.begin(), picks.end());
  picks.erase(std::unique(picks.begin(), picks.end()), picks.end());
  return picks;
}

/// Combined node spacing metric: lumped-L2 arclength plus normalized
/// energy variation, so nodes cluster where the landscape moves fastest.
std::vector<double> segment_lengths(const ProblemSpec& spec,
                                    const PathState& path) {
  const int n = static_cast<int>(path.nodes.size());
  const double energy_span =
      *std::max_element(path.energies.begin(), path.energies.end()) -
      *std::min_element(path.energies.begin(), path.energies.end());
  const double energy_scale = energy_span > 1e-12 ? energy_span : 1.0;
  std::vector<double> lengths(n - 1);
  for (int j = 0; j + 1 < n; ++j) {
    Eigen::VectorXd diff = path.nodes[j + 1].values - path.nodes[j].values;
    const double arc = m_norm(spec.mass, diff) / std::sqrt(spec.mass.total);
    const double de =
        std::abs(path.energies[j + 1] - path.energies[j]) / energy_scale;
    lengths[j] = arc + de + 1e-12;
  }
  return lengths;
}

ScalarField blend(const ScalarField& a, const ScalarField& b, double t) {
  return log_convex_combine({a, b}, {1.0 - t, t});
}

void refresh_energies(const ProblemSpec& spec, PathState& path) {
  path.max_energy = -std::numeric_limits<double>::infinity();
  path.argmax = 0;
  for (int j = 0; j < static_cast<int>(path.nodes.size()); ++j) {
    EnergyBreakdown e = energy(spec, path.nodes[j]);
    if (!e.in_x)
      fail(ErrorCode::PathRepair, "path node left X after deformation");
    path.energies[j] = e.total;
    if (e.total > path.max_energy) {
      path.max_energy = e.total;
      path.argmax = j;
    }
  }
}

/// Resample interior nodes at equal combined-metric spacing by piecewise
/// log-convex interpolation along the current polygon.
void equidistribute(const ProblemSpec& spec, PathState& path) {
  const int n = static_cast<int>(path.nodes.size());
  std::vector<double> lengths = segment_lengths(spec, path);
  std::vector<double> cum(n, 0.0);
  for (int j = 0; j + 1 < n; ++j) cum[j + 1] = cum[j] + lengths[j];
  const double total = cum[n - 1];
  std::vector<ScalarField> fresh;
  fresh.reserve(n);
  fresh.push_back(path.nodes.front());
  int seg = 0;
  for (int j = 1; j + 1 < n; ++j) {
    const double target = total * j / (n - 1);
    while (seg + 2 < n && cum[seg + 1] < target) ++seg;
    const double t = (target - cum[seg]) / lengths[seg];
    ScalarField node =
        blend(path.nodes[seg], path.nodes[seg + 1], std::clamp(t, 0.0, 1.0));
    if (!in_x(spec, node)) {
      // Log-blending toward a kept neighbor restores positivity.
      for (int attempt = 0; attempt < 40 && !in_x(spec, node); ++attempt)
        node = blend(node, path.nodes[seg], 0.5);
      if (!in_x(spec, node))
        fail(ErrorCode::PathRepair, "could not repair a path node into X");
    }
    fresh.push_back(std::move(node));
  }
  fresh.push_back(path.nodes.back());
  path.nodes = std::move(fresh);
  refresh_energies(spec, path);
}

}  // namespace

std::string MountainPassResult::to_json() const {
  std::vector<std::string> rows;
  for (const auto& s : samples) {
    JsonWriter row;
    row.field("vertex", s.vertex);
    row.field("alpha", s.alpha);
    row.field("residual", s.residual);
    row.field("polished", s.polished);
    row.field("failure", s.failure);
    rows.push_back(row.str());
  }
  JsonWriter w;
  w.field("alpha", alpha);
  w.field("sample_vertex", sample_vertex);
  w.raw("result", result.to_json());
  w.raw("samples", JsonWriter::array(rows));
  return w.str();
}

MountainPassResult mountain_pass(const ProblemSpec& spec,
                                 const PathConfig& config) {
  const auto start = Clock::now();
  if (!(spec.rho > 4.0 * kPi) || !(spec.rho < 8.0 * kPi)) {
    std::ostringstream msg;
    msg << "rho = " << spec.rho << " outside the one-bubble window (4pi, 8pi)";
    fail(ErrorCode::WrongRegime, msg.str());
  }
  if (config.nodes < 4)
    fail(ErrorCode::InvalidArgument, "path needs at least 4 nodes");

  BoundaryClassification cls =
      classify_boundary(*spec.mesh, spec.curvature, config.kappa_min);
  if (cls.omega_plus.empty())
    fail(ErrorCode::WrongRegime, "no positive boundary loop to concentrate on");

  ScalarField vertex =
      config.vertex ? *config.vertex : ScalarField(*spec.mesh, 0.0);
  require_field(*spec.mesh, vertex);
  if (!in_x(spec, vertex))
    fail(ErrorCode::NotInX, "cone vertex field is outside X");

  MountainPassResult best;
  best.alpha = std::numeric_limits<double>::infinity();
  double best_residual = std::numeric_limits<double>::infinity();
  double best_energy = std::numeric_limits<double>::infinity();

  for (int loop_index : cls.omega_plus) {
    const std::vector<int>& loop = spec.mesh->boundary_loops[loop_index];
    for (int v : sample_loop(loop, config.samples_per_loop)) {
      MountainPassSample sample;
      sample.vertex = v;
      ScalarField bubble =
          bubble_field(*spec.mesh, {spec.mesh->vertices[v], config.lambda});
      if (!in_x(spec, bubble)) {
        sample.failure = "bubble endpoint outside X";
        best.samples.push_back(std::move(sample));
        continue;
      }

      PathState path;
      path.nodes.reserve(config.nodes);
      path.energies.assign(config.nodes, 0.0);
      for (int j = 0; j < config.nodes; ++j) {
        double t = static_cast<double>(j) / (config.nodes - 1);
        ScalarField node = blend(vertex, bubble, t);
        for (int attempt = 0; attempt < 40 && !in_x(spec, node); ++attempt)
          node = blend(node, vertex, 0.5);
        path.nodes.push_back(std::move(node));
      }
      double alpha = std::numeric_limits<double>::infinity();
      PathState best_path;
      try {
        refresh_energies(spec, path);
        alpha = path.max_energy;
        best_path = path;
        int stagnant = 0;
        std::vector<double> steps(config.nodes, 1.0);
        for (int sweep = 0; sweep < config.max_sweeps; ++sweep) {
          for (int j = 1; j + 1 < config.nodes; ++j) {
            Eigen::VectorXd g = energy_gradient(spec, path.nodes[j]).values;
            const double dual_sq = dual_norm_sq(spec.mass, g);
            if (dual_sq == 0.0) continue;
            Eigen::VectorXd direction = -mass_inverse(spec.mass, g);
            auto merit = [&](const Eigen::VectorXd& candidate) {
              return energy(spec, ScalarField(*spec.mesh, candidate)).total;
            };
            LineSearchResult ls =
                backtrack(spec, path.nodes[j].values, direction,
                          path.energies[j], 1e-4 * dual_sq, merit, steps[j]);
            if (!ls.ok) continue;
            steps[j] = std::min(ls.step * 2.0, 1e6);
            // Damped move keeps the polygon a path instead of running
            // every node into the wells.
            Eigen::VectorXd damped = path.nodes[j].values +
                                     config.step_fraction * ls.step * direction;
            ScalarField moved(*spec.mesh, std::move(damped));
            EnergyBreakdown e = energy(spec, moved);
            if (e.in_x && e.total <= path.energies[j]) {
              path.nodes[j] = std::move(moved);
              path.energies[j] = e.total;
            } else {
              path.nodes[j] = ScalarField(*spec.mesh, std::move(ls.u));
              path.energies[j] = ls.merit;
            }
          }
          equidistribute(spec, path);
          const double level = path.max_energy;
          if (level < alpha - config.stagnation_tol * (1.0 + std::abs(alpha))) {
            alpha = level;
            best_path = path;
            stagnant = 0;
          } else {
            if (level < alpha) {
              alpha = level;
              best_path = path;
            }
            if (++stagnant >= config.stagnation_sweeps) break;
          }
        }
      } catch (const Error& err) {
        sample.failure = err.what();
        best.samples.push_back(std::move(sample));
        continue;
      }
      sample.alpha = alpha;

      SolveResult polish =
          newton_try(spec, best_path.nodes[best_path.argmax], config.polish);
      sample.residual = polish.residual;
      sample.polished = polish.status == SolveStatus::Converged;
      if (!sample.polished) sample.failure = "polish did not converge";

      const double polished_energy = polish.energy.total;
      const bool better =
          polish.residual < best_residual ||
          (polish.residual == best_residual && polished_energy < best_energy);
      if (better) {
        best_residual = polish.residual;
        best_energy = polished_energy;
        best.alpha = alpha;
        best.sample_vertex = v;
        best.result = std::move(polish);
      }
      best.samples.push_back(std::move(sample));
    }
  }

  if (best.sample_vertex < 0)
    fail(ErrorCode::NoConvergence,
         "every mountain-pass sample failed before polish");
  best.result.wall_seconds = seconds_since(start);
  return best;
}

double SweepCurve::monotonicity_violation() const {
  double worst = 0.0;
  const SweepPoint* prev = nullptr;
  for (const auto& p : points) {
    if (p.status != SolveStatus::Converged) continue;
    if (prev) {
      const double drop = p.alpha / p.rho - prev->alpha / prev->rho;
      worst = std::max(worst, drop);
    }
    prev = &p;
  }
  return worst;
}

std::string SweepCurve::to_csv() const {
  std::ostringstream out;
  out << "rho,alpha,energy,residual,iterations,status\n";
  for (const auto& p : points) {
    out << JsonWriter::number(p.rho) << "," << JsonWriter::number(p.alpha)
        << "," << JsonWriter::number(p.energy) << ","
        << JsonWriter::number(p.residual) << "," << p.iterations << ","
        << solve_status_name(p.status) << "\n";
  }
  return out.str();
}

std::string SweepCurve::to_json() const {
  std::vector<std::string> rows;
  for (const auto& p : points) {
    JsonWriter row;
    row.field("rho", p.rho);
    row.field("alpha", p.alpha);
    row.field("energy", p.energy);
    row.field("residual", p.residual);
    row.field("iterations", p.iterations);
    row.field("status", solve_status_name(p.status));
    rows.push_back(row.str());
  }
  std::vector<std::string> suspect_rows;
  for (const auto& s : suspects) suspect_rows.push_back(s.to_json());
  JsonWriter w;
  w.raw("points", JsonWriter::array(rows));
  w.raw("suspects", JsonWriter::array(suspect_rows));
  w.field("geo_form_residual", geo_form_residual);
  w.field("monotonicity_violation", monotonicity_violation());
  return w.str();
}

namespace {

/// Dual residual of S u' + 2 m - 2 m K e^{u'} after shifting u by
/// log(rho / (2 T)); zero (to rounding) when rho matches the geometric
/// value 2 |Sigma|.
double curvature_form_residual(const ProblemSpec& spec, const ScalarField& u) {
  WeightedExpIntegral total =
      integrate_weighted_exp(spec.mass, spec.curvature, u);
  if (!(total.value > 0.0)) fail(ErrorCode::NotInX, "state left X");
  const double shift = std::log(spec.rho / (2.0 * total.value));
  Eigen::VectorXd shifted = u.values.array() + shift;
  Eigen::VectorXd residual = spec.stiffness.matrix * shifted;
  residual += 2.0 * spec.mass.weights;
  residual -= 2.0 * (spec.mass.weights.array() *
                     spec.curvature.values.array() * shifted.array().exp())
                        .matrix();
  return std::sqrt(dual_norm_sq(spec.mass, residual));
}

}  // namespace

SweepCurve rho_continuation(const ProblemSpec& base,
                            const std::vector<double>& rho_grid,
                            const PathConfig& path_config,
                            const NewtonConfig& newton_config,
                            SweepCurve* partial) {
  if (rho_grid.empty()) fail(ErrorCode::InvalidArgument, "empty rho grid");
  for (std::size_t i = 1; i < rho_grid.size(); ++i)
    if (!(rho_grid[i] > rho_grid[i - 1]))
      fail(ErrorCode::InvalidArgument, "rho grid must be strictly increasing");
  if (!(rho_grid.front() > 4.0 * kPi) || !(rho_grid.back() < 8.0 * kPi))
    fail(ErrorCode::WrongRegime, "rho grid leaves the window (4pi, 8pi)");

  SweepCurve curve;
  const double rho_geo = rho_geometric(*base.mesh);

  ScalarField carried(*base.mesh, 0.0);
  for (std::size_t i = 0; i < rho_grid.size(); ++i) {
    ProblemSpec spec = with_rho(base, rho_grid[i]);
    SweepPoint point;
    point.rho = rho_grid[i];
    if (i == 0) {
      MountainPassResult pass = mountain_pass(spec, path_config);
      point.alpha = pass.alpha;
      point.energy = pass.result.energy.total;
      point.residual = pass.result.residual;
      point.iterations = pass.result.iterations;
      point.status = pass.result.status;
      carried = pass.result.u;
    } else {
      SolveResult solved = newton_try(spec, carried, newton_config);
      point.alpha = solved.energy.total;
      point.energy = solved.energy.total;
      point.residual = solved.residual;
      point.iterations = solved.iterations;
      point.status = solved.status;
      carried = solved.u;  // stalled iterate still feeds diagnostics
    }

    curve.points.push_back(point);
    curve.solutions.push_back(carried);
    if (point.status != SolveStatus::Converged) {
      std::vector<std::pair<ScalarField, double>> seq;
      seq.emplace_back(carried, point.rho);
      std::vector<QuantizationEntry> entries = quantization_monitor(
          *spec.mesh, spec.mass, spec.curvature, seq, 0.3);
      curve.suspects.insert(curve.suspects.end(), entries.begin(),
                            entries.end());
      if (partial) *partial = curve;
      std::ostringstream msg;
      msg << "continuation stalled at rho = " << point.rho << " (residual "
          << point.residual << ")";
      fail(ErrorCode::NoConvergence, msg.str());
    }
    if (std::abs(point.rho - rho_geo) <= 1e-12 * (1.0 + rho_geo))
      curve.geo_form_residual = curvature_form_residual(spec, carried);
  }
  return curve;
}

double smallest_hessian_eigenvalue(const ProblemSpec& spec,
                                   const ScalarField& u, int steps) {
  require_field(*spec.mesh, u);
  const int n = static_cast<int>(spec.mass.weights.size());
  HessianOperator hess(spec, u.values);
  const Eigen::VectorXd& m = spec.mass.weights;
  const double area = spec.mass.total;

  auto project_m = [&](Eigen::VectorXd& v) { v.array() -= m.dot(v) / area; };
  auto rayleigh = [&](const Eigen::VectorXd& v) {
    return v.dot(hess.apply(v)) / v.dot(m.cwiseProduct(v));
  };

  // Deterministic seed with no symmetry alignment.
  Eigen::VectorXd seed(n);
  for (int i = 0; i < n; ++i)
    seed[i] = std::sin(1.0 + i) + 0.25 * std::cos(3.0 * i);
  project_m(seed);

  // Spectral scale of the pencil from a short power iteration.
  double scale = 1.0;
  {
    Eigen::VectorXd y = seed;
    for (int it = 0; it < 15; ++it) {
      y = (hess.apply(y).array() / m.array()).matrix();
      project_m(y);
      const double norm = m_norm(spec.mass, y);
      if (norm == 0.0) break;
      y /= norm;
    }
    scale = std::max(std::abs(rayleigh(y)), 1e-8);
  }

  const Eigen::VectorXd diag_h = hess.diagonal();
  const int budget = std::min(4 * n + 200, 20000);

  // Walk the shift down until H - sigma M (with the rank-one term that
  // keeps constants in the kernel) is positive definite on the mean-zero
  // complement; that brackets the bottom of the spectrum near sigma.
  double sigma = -1e-7 * scale;
  for (int attempt = 0; attempt < 80; ++attempt, sigma *= 2.0) {
    auto shifted = [&](const Eigen::VectorXd& v) {
      Eigen::VectorXd out = hess.apply(v) - sigma * m.cwiseProduct(v);
      out += (sigma * m.dot(v) / area) * m;
      return out;
    };
    Eigen::VectorXd diag =
        diag_h - sigma * m + (sigma / area) * m.cwiseProduct(m);
    const double floor = 1e-12 * diag.cwiseAbs().maxCoeff() + 1e-300;
    for (int i = 0; i < n; ++i) diag[i] = std::max(diag[i], floor);

    Eigen::VectorXd vec = seed / m_norm(spec.mass, seed);
    bool definite = true;
    for (int it = 0; it < std::max(steps, 2); ++it) {
      Eigen::VectorXd rhs = m.cwiseProduct(vec);
      CgOutcome out = projected_pcg(shifted, rhs, diag, 1e-10, budget);
      if (out.negative_curvature || !out.converged) {
        definite = false;
        break;
      }
      vec = out.x;
      project_m(vec);
      const double norm = m_norm(spec.mass, vec);
      if (norm == 0.0) {
        definite = false;
        break;
      }
      vec /= norm;
    }
    if (definite) return rayleigh(vec);
  }
  fail(ErrorCode::NoConvergence,
       "could not bracket the bottom of the Hessian spectrum");
}

}  // namespace pgc
