#include "pgc/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <sstream>

#include "pgc/json_writer.hpp"

namespace pgc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

BoundaryClassification classify_boundary_lenient(const SurfaceMesh& mesh,
                                                 const ScalarField& K,
                                                 double kappa_min) {
  require_field(mesh, K);
  if (!(kappa_min > 0.0))
    fail(ErrorCode::InvalidArgument, "kappa_min must be positive");
  BoundaryClassification cls;
  cls.kappa_min = kappa_min;
  cls.h1 = (K.values.array() > 0.0).any();
  cls.h2 = true;
  for (std::size_t l = 0; l < mesh.boundary_loops.size(); ++l) {
    const auto& loop = mesh.boundary_loops[l];
    bool all_pos = true, all_neg = true;
    std::vector<int> bad;
    for (int v : loop) {
      const double k = K.values[v];
      if (!(k >= kappa_min)) all_pos = false;
      if (!(k <= -kappa_min)) all_neg = false;
      if (std::abs(k) < kappa_min) bad.push_back(v);
    }
    int sign = 0;
    if (all_pos)
      sign = 1;
    else if (all_neg)
      sign = -1;
    if (sign == 0) {
      cls.h2 = false;
      if (bad.empty()) {
        // mixed-sign loop: every vertex clears kappa_min but signs differ
        for (int v : loop)
          if ((K.values[v] > 0.0) != (K.values[loop.front()] > 0.0))
            bad.push_back(v);
        if (bad.empty()) bad.push_back(loop.front());
      }
    }
    cls.loop_sign.push_back(sign);
    cls.offending.push_back(std::move(bad));
    if (sign == 1) cls.omega_plus.push_back(static_cast<int>(l));
  }
  return cls;
}

BoundaryClassification classify_boundary(const SurfaceMesh& mesh,
                                         const ScalarField& K,
                                         double kappa_min) {
  BoundaryClassification cls = classify_boundary_lenient(mesh, K, kappa_min);
  if (!cls.h2) {
    std::string msg =
        "curvature has no determinate sign on some boundary loop; offending "
        "vertices:";
    for (std::size_t l = 0; l < cls.loop_sign.size(); ++l) {
      if (cls.loop_sign[l] != 0) continue;
      msg += " loop " + std::to_string(l) + ": [";
      const auto& bad = cls.offending[l];
      for (std::size_t k = 0; k < bad.size() && k < 16; ++k) {
        if (k) msg += ", ";
        msg += std::to_string(bad[k]);
      }
      if (bad.size() > 16) msg += ", ...";
      msg += "]";
    }
    fail(ErrorCode::H2Violation, msg);
  }
  return cls;
}

ConcentrationReport concentration_report(const SurfaceMesh& mesh,
                                         const LumpedMass& mass,
                                         const ScalarField& K,
                                         const ScalarField& u,
                                         const BoundaryClassification& cls) {
  require_field(mesh, u);
  require_field(mesh, K);
  require_finite(u, "concentration_report");
  ConcentrationReport rep;
  // Modal vertex of the measure m e^u: compare in log space.
  double best = -kInf;
  for (int i = 0; i < u.size(); ++i) {
    const double score = std::log(mass.weights[i]) + u.values[i];
    if (score > best) {
      best = score;
      rep.mode_vertex = i;
    }
  }
  const Vec3& mode = mesh.vertices[rep.mode_vertex];
  const double shift = u.values.maxCoeff();
  double total = 0.0;
  std::vector<double> in_ball(rep.ball_radius.size(), 0.0);
  for (int i = 0; i < u.size(); ++i) {
    const double w = mass.weights[i] * std::exp(u.values[i] - shift);
    total += w;
    const double d = geodesic_distance(mesh.vertices[i], mode);
    for (std::size_t r = 0; r < rep.ball_radius.size(); ++r)
      if (d < rep.ball_radius[r]) in_ball[r] += w;
  }
  for (double m : in_ball) rep.ball_mass.push_back(m / total);
  rep.center = center_of_mass(mesh, mass, u);
  rep.dist_to_omega_plus = kInf;
  for (int l : cls.omega_plus)
    for (int v : mesh.boundary_loops[l]) {
      const double d = (rep.center - mesh.vertices[v]).norm();
      if (d < rep.dist_to_omega_plus) {
        rep.dist_to_omega_plus = d;
        rep.nearest_boundary_vertex = v;
      }
    }
  rep.curvature_at_nearest = rep.nearest_boundary_vertex >= 0
                                 ? K.values[rep.nearest_boundary_vertex]
                                 : std::numeric_limits<double>::quiet_NaN();
  rep.max_minus_mean = u.values.maxCoeff() - lumped_mean(mass, u);
  return rep;
}

MtScanResult mt_gap_scan(const StiffnessMatrix& stiffness,
                         const LumpedMass& mass,
                         const std::vector<ScalarField>& family,
                         const std::vector<double>& labels, double alpha) {
  if (family.empty() || family.size() != labels.size())
    fail(ErrorCode::InvalidArgument, "need one label per family member");
  if (!(alpha > 0.0))
    fail(ErrorCode::InvalidArgument, "alpha must be positive");
  MtScanResult out;
  out.alpha = alpha;
  out.max_gap = -kInf;
  const ScalarField ones(*stiffness.mesh, 1.0);
  for (std::size_t k = 0; k < family.size(); ++k) {
    const ScalarField v = gauge_fix(mass, family[k]);
    MtGapRow row;
    row.label = labels[k];
    row.log_mass = integrate_weighted_exp(mass, ones, v).log_abs;
    row.dirichlet = dirichlet_energy(stiffness, v);
    row.gap = row.log_mass - alpha * row.dirichlet;
    out.max_gap = std::max(out.max_gap, row.gap);
    out.rows.push_back(row);
  }
  return out;
}

double dirichlet_on_subset(const SurfaceMesh& mesh, const ScalarField& u,
                           const std::vector<int>& vertex_set) {
  require_field(mesh, u);
  std::vector<char> in(mesh.vertex_count(), 0);
  for (int v : vertex_set) in[v] = 1;
  double acc = 0.0;
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const auto& tr = mesh.triangles[t];
    if (!in[tr[0]] || !in[tr[1]] || !in[tr[2]]) continue;
    const Vec3& p0 = mesh.vertices[tr[0]];
    const Vec3& p1 = mesh.vertices[tr[1]];
    const Vec3& p2 = mesh.vertices[tr[2]];
    const Vec3 n = (p1 - p0).cross(p2 - p0);
    const double two_area = n.norm();
    const Vec3 nn = n / two_area;
    // grad of the P1 interpolant: sum_k u_k (nn x opposite_edge) / (2A)
    const Vec3 grad = (u.values[tr[0]] * nn.cross(p2 - p1) +
                       u.values[tr[1]] * nn.cross(p0 - p2) +
                       u.values[tr[2]] * nn.cross(p1 - p0)) /
                      two_area;
    acc += grad.squaredNorm() * 0.5 * two_area;
  }
  return acc;
}

MtScanResult localized_mt_scan(const StiffnessMatrix& stiffness,
                               const LumpedMass& mass,
                               const std::vector<int>& sigma1, double delta,
                               const std::vector<ScalarField>& family,
                               const std::vector<double>& labels,
                               double coeff, double epsilon) {
  if (family.empty() || family.size() != labels.size())
    fail(ErrorCode::InvalidArgument, "need one label per family member");
  if (sigma1.empty())
    fail(ErrorCode::InvalidArgument, "Sigma1 must not be empty");
  const SurfaceMesh& mesh = *stiffness.mesh;
  const auto enlarged = parallel_set(mesh, sigma1, delta);
  const bool interior_variant = coeff > 12.0 * std::numbers::pi;
  if (interior_variant) {
    std::vector<char> grown(mesh.vertex_count(), 0);
    for (int v : enlarged) grown[v] = 1;
    for (int b : boundary_vertices(mesh))
      if (grown[b])
        fail(ErrorCode::InvalidArgument,
             "interior variant requires Sigma1 at distance > delta from the "
             "boundary (boundary vertex " +
                 std::to_string(b) + " is inside Sigma1^delta)");
  }
  std::vector<char> in1(mesh.vertex_count(), 0);
  for (int v : sigma1) in1[v] = 1;
  MtScanResult out;
  out.alpha = coeff;
  out.max_gap = -kInf;
  for (std::size_t k = 0; k < family.size(); ++k) {
    const ScalarField v = gauge_fix(mass, family[k]);
    // log of the e^u mass restricted to Sigma1, with max-shift.
    double shift = -kInf;
    for (int i = 0; i < v.size(); ++i)
      if (in1[i]) shift = std::max(shift, v.values[i]);
    double acc = 0.0;
    for (int i = 0; i < v.size(); ++i)
      if (in1[i]) acc += mass.weights[i] * std::exp(v.values[i] - shift);
    MtGapRow row;
    row.label = labels[k];
    row.log_mass = shift + std::log(acc);
    row.dirichlet = dirichlet_on_subset(mesh, v, enlarged);
    const double full = dirichlet_energy(stiffness, v);
    row.gap = coeff * row.log_mass - (row.dirichlet + epsilon * full);
    out.max_gap = std::max(out.max_gap, row.gap);
    out.rows.push_back(row);
  }
  return out;
}

std::vector<QuantizationEntry> quantization_monitor(
    const SurfaceMesh& mesh, const LumpedMass& mass, const ScalarField& K,
    const std::vector<std::pair<ScalarField, double>>& sequence, double tau) {
  require_field(mesh, K);
  if (!(tau > 0.0)) fail(ErrorCode::InvalidArgument, "tau must be positive");
  std::vector<QuantizationEntry> out;
  for (const auto& [u, rho] : sequence) {
    require_field(mesh, u);
    QuantizationEntry q;
    q.rho = rho;
    double best = -kInf;
    for (int i = 0; i < u.size(); ++i) {
      const double score = std::log(mass.weights[i]) + u.values[i];
      if (score > best) {
        best = score;
        q.mode_vertex = i;
      }
    }
    const Vec3& mode = mesh.vertices[q.mode_vertex];
    const double shift = u.values.maxCoeff();
    double total = 0.0, local = 0.0;
    for (int i = 0; i < u.size(); ++i) {
      const double w =
          mass.weights[i] * K.values[i] * std::exp(u.values[i] - shift);
      total += w;
      if (geodesic_distance(mesh.vertices[i], mode) < tau) local += w;
    }
    q.inadmissible = !(total > 0.0) || K.values[q.mode_vertex] < 0.0;
    q.fraction = total != 0.0 ? local / total
                              : std::numeric_limits<double>::quiet_NaN();
    q.local_mass = rho * q.fraction;
    q.dist_to_quantum = kInf;
    for (int k = 1; k <= 3; ++k) {
      const double d = std::abs(q.local_mass - 4.0 * std::numbers::pi * k);
      if (d < q.dist_to_quantum) {
        q.dist_to_quantum = d;
        q.nearest_k = k;
      }
    }
    q.max_minus_mean = u.values.maxCoeff() - lumped_mean(mass, u);
    q.blow_up_flag =
        q.max_minus_mean > 25.0 && q.fraction >= 0.95 && !q.inadmissible;
    out.push_back(q);
  }
  return out;
}

std::string BoundaryClassification::to_json() const {
  std::vector<std::string> loops;
  for (std::size_t l = 0; l < loop_sign.size(); ++l) {
    JsonWriter w;
    w.field("loop", static_cast<int>(l));
    w.field("sign", loop_sign[l]);
    w.field("offending_vertices", offending[l]);
    loops.push_back(w.str());
  }
  JsonWriter w;
  w.field("kappa_min", kappa_min);
  w.raw("loops", JsonWriter::array(loops));
  w.field("omega_plus", omega_plus);
  w.field("h1", h1);
  w.field("h2", h2);
  return w.str();
}

std::string ConcentrationReport::to_json() const {
  JsonWriter w;
  w.field("mode_vertex", mode_vertex);
  w.field("ball_radius", ball_radius);
  w.field("ball_mass", ball_mass);
  w.field("center_of_mass",
          std::vector<double>{center.x(), center.y(), center.z()});
  w.field("dist_to_omega_plus", dist_to_omega_plus);
  w.field("nearest_boundary_vertex", nearest_boundary_vertex);
  w.field("curvature_at_nearest", curvature_at_nearest);
  w.field("max_minus_mean", max_minus_mean);
  return w.str();
}

std::string QuantizationEntry::to_json() const {
  JsonWriter w;
  w.field("rho", rho);
  w.field("mode_vertex", mode_vertex);
  w.field("fraction", fraction);
  w.field("local_mass", local_mass);
  w.field("dist_to_quantum", dist_to_quantum);
  w.field("nearest_k", nearest_k);
  w.field("max_minus_mean", max_minus_mean);
  w.field("blow_up_flag", blow_up_flag);
  w.field("inadmissible", inadmissible);
  return w.str();
}

std::string MtScanResult::to_csv() const {
  std::string s = "label,log_mass,dirichlet,gap\n";
  char buf[200];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", r.label,
                  r.log_mass, r.dirichlet, r.gap);
    s += buf;
  }
  return s;
}

}  // namespace pgc
