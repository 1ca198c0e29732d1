#include "pgc/variational.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

namespace pgc {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

/// Shifted weights w_i = m_i K_i e^{u_i - shift} and their sum. Dividing
/// any two of these quantities cancels the shift.
struct ShiftedWeights {
  double shift = 0.0;
  Eigen::VectorXd w;
  double total = 0.0;  // sum w = e^{-shift} * integral of K e^u
};

ShiftedWeights shifted_weights(const ProblemSpec& spec, const ScalarField& u) {
  ShiftedWeights sw;
  sw.shift = u.values.maxCoeff();
  sw.w = spec.mass.weights.array() * spec.curvature.values.array() *
         (u.values.array() - sw.shift).exp();
  sw.total = sw.w.sum();
  return sw;
}

void require_problem_field(const ProblemSpec& spec, const ScalarField& u) {
  if (spec.mesh == nullptr) fail(ErrorCode::InvalidArgument, "empty problem");
  require_field(*spec.mesh, u);
  require_finite(u, "problem field");
}

}  // namespace

ProblemSpec::ProblemSpec(const SurfaceMesh& m, ScalarField K, double rho_value)
    : mesh(&m),
      stiffness(assemble_stiffness(m)),
      mass(assemble_lumped_mass(m)),
      curvature(std::move(K)),
      rho(rho_value) {
  require_field(m, curvature);
  require_finite(curvature, "curvature");
  if (!(rho > 0.0)) fail(ErrorCode::InvalidSpec, "rho must be positive");
  c_lin = rho / mass.total;
}

EnergyBreakdown energy(const ProblemSpec& spec, const ScalarField& u) {
  require_problem_field(spec, u);
  EnergyBreakdown e;
  e.dirichlet = 0.5 * dirichlet_energy(spec.stiffness, u);
  e.linear = spec.c_lin * spec.mass.weights.dot(u.values);
  const auto integral = integrate_weighted_exp(spec.mass, spec.curvature, u);
  e.in_x = integral.value > 0.0;
  if (e.in_x) {
    e.log_term = spec.rho * integral.log_abs;
    e.total = e.dirichlet + e.linear - e.log_term;
  } else {
    e.log_term = kNan;
    e.total = kNan;
  }
  return e;
}

ScalarField energy_gradient(const ProblemSpec& spec, const ScalarField& u) {
  require_problem_field(spec, u);
  const ShiftedWeights sw = shifted_weights(spec, u);
  if (!(sw.total > 0.0))
    fail(ErrorCode::NotInX, "integral of K e^u is not positive");
  ScalarField g(*spec.mesh, 0.0);
  g.values = spec.stiffness.matrix * u.values +
             spec.c_lin * spec.mass.weights -
             (spec.rho / sw.total) * sw.w;
  return g;
}

ScalarField hessian_apply(const ProblemSpec& spec, const ScalarField& u,
                          const ScalarField& v) {
  require_problem_field(spec, u);
  require_field(*spec.mesh, v);
  const ShiftedWeights sw = shifted_weights(spec, u);
  if (!(sw.total > 0.0))
    fail(ErrorCode::NotInX, "integral of K e^u is not positive");
  const double wv = sw.w.dot(v.values);
  ScalarField h(*spec.mesh, 0.0);
  h.values = spec.stiffness.matrix * v.values -
             (spec.rho / sw.total) * sw.w.cwiseProduct(v.values) +
             (spec.rho * wv / (sw.total * sw.total)) * sw.w;
  return h;
}

Vec3 center_of_mass(const SurfaceMesh& mesh, const LumpedMass& mass,
                    const ScalarField& u) {
  require_field(mesh, u);
  require_finite(u, "center_of_mass");
  const double shift = u.values.maxCoeff();
  Vec3 num = Vec3::Zero();
  double den = 0.0;
  for (int i = 0; i < u.size(); ++i) {
    const double w = mass.weights[i] * std::exp(u.values[i] - shift);
    num += w * mesh.vertices[i];
    den += w;
  }
  return num / den;
}

ScalarField gauge_fix(const LumpedMass& mass, const ScalarField& u) {
  ScalarField out(*u.mesh, 0.0);
  out.values = u.values.array() - lumped_mean(mass, u);
  return out;
}

double residual_norm(const LumpedMass& mass, const ScalarField& g) {
  return std::sqrt(
      (g.values.array().square() / mass.weights.array()).sum());
}

ScaledEnergyPair scaled_energy_identity(const ProblemSpec& spec_a,
                                        const ProblemSpec& spec_b,
                                        const ScalarField& u) {
  if (spec_a.mesh != spec_b.mesh)
    fail(ErrorCode::InvalidArgument, "specs live on different meshes");
  if ((spec_a.curvature.values - spec_b.curvature.values).cwiseAbs().maxCoeff() != 0.0)
    fail(ErrorCode::InvalidArgument, "specs use different curvature fields");
  const EnergyBreakdown ea = energy(spec_a, u);
  const EnergyBreakdown eb = energy(spec_b, u);
  if (!ea.in_x || !eb.in_x)
    fail(ErrorCode::NotInX, "field is outside X");
  ScaledEnergyPair p;
  p.lhs = ea.total / spec_a.rho - eb.total / spec_b.rho;
  p.rhs = 0.5 * (1.0 / spec_a.rho - 1.0 / spec_b.rho) *
          dirichlet_energy(spec_a.stiffness, u);
  return p;
}

std::string EnergyBreakdown::to_json() const {
  const auto num = [](double x) {
    if (!std::isfinite(x)) return std::string("null");
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return std::string(buf);
  };
  std::string s = "{";
  s += "\"dirichlet\": " + num(dirichlet) + ", ";
  s += "\"linear\": " + num(linear) + ", ";
  s += "\"log_term\": " + num(log_term) + ", ";
  s += "\"total\": " + num(total) + ", ";
  s += std::string("\"in_x\": ") + (in_x ? "true" : "false") + "}";
  return s;
}

}  // namespace pgc
