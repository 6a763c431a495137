#include "foliate/foliation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <mutex>
#include <thread>

#include "json.hpp"

namespace foliate {

namespace {

// Fitted quantities below this are solver roundoff (Newton tolerance is
// 1e-9 on the residual, and unknowns inherit that scale through the
// Jacobian), not asymptotics; exponent fits on them are meaningless and
// reported as at_noise_floor instead. Genuine asymptotic defects in the
// fitted windows are >= 1e-6.
constexpr double kNoiseFloor = 1e-9;

Vector3d direction(double theta, double phi) {
  const double s = std::sin(theta);
  return Vector3d(s * std::cos(phi), s * std::sin(phi), std::cos(theta));
}

void angles_of(const Vector3d& u, double& theta, double& phi) {
  theta = std::acos(std::clamp(u.z(), -1.0, 1.0));
  phi = std::atan2(u.y(), u.x());
}

// Orthonormal tangent basis at u.
void tangent_basis(const Vector3d& u, Vector3d& e1, Vector3d& e2) {
  const Vector3d seed = std::abs(u.z()) < 0.9 ? Vector3d::UnitZ() : Vector3d::UnitX();
  e1 = seed.cross(u).normalized();
  e2 = u.cross(e1);
}

// Least squares of q against c + s*t; returns slope and R^2.
void linear_fit(const std::vector<double>& t, const std::vector<double>& q, double& slope,
                double& r2) {
  const int n = static_cast<int>(t.size());
  double tm = 0.0, qm = 0.0;
  for (int i = 0; i < n; ++i) {
    tm += t[i];
    qm += q[i];
  }
  tm /= n;
  qm /= n;
  double stt = 0.0, stq = 0.0, sqq = 0.0;
  for (int i = 0; i < n; ++i) {
    stt += (t[i] - tm) * (t[i] - tm);
    stq += (t[i] - tm) * (q[i] - qm);
    sqq += (q[i] - qm) * (q[i] - qm);
  }
  slope = stq / stt;
  r2 = sqq > 0.0 ? (stq * stq) / (stt * sqq) : 1.0;
}

OrderFit order_fit(const std::vector<double>& rs, const std::vector<double>& qs) {
  OrderFit fit;
  double qmax = 0.0;
  for (double q : qs) qmax = std::max(qmax, q);
  if (qmax < kNoiseFloor) {
    fit.at_noise_floor = true;
    return fit;
  }
  std::vector<double> lt, lq;
  for (size_t i = 0; i < rs.size(); ++i) {
    if (qs[i] > 0.0) {
      lt.push_back(std::log(rs[i]));
      lq.push_back(std::log(qs[i]));
    }
  }
  if (lt.size() < 3) {
    fit.at_noise_floor = true;
    return fit;
  }
  linear_fit(lt, lq, fit.order, fit.r2);
  fit.reliable = fit.r2 >= 0.98;
  return fit;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

} // namespace

HarmonicField radial_profile(const MetricSpec& spec, const Frame& p_frame, const Leaf& leaf,
                             GridPtr grid) {
  const double r = leaf.r;
  const int nodes = grid->nodes();

  // Centered leaf: the surface is a graph over geodesics from p itself,
  // so log_p of the point at direction u is rho(u) u by construction
  // and beta is the identity.
  if (leaf.tau.norm() <= 1e-11) {
    VectorXd rho(nodes);
    if (leaf.phi.L == grid->L) {
      rho = (1.0 + r * r * synthesize(leaf.phi, *grid).array()).matrix() * r;
    } else {
      for (int n = 0; n < nodes; ++n)
        rho[n] = r * (1.0 + r * r * eval_field(leaf.phi, grid->theta[n / grid->nph],
                                               grid->phi[n % grid->nph]));
    }
    return analyze(*grid, rho);
  }

  const Frame frame = parallel_frame(spec, p_frame, leaf.tau);
  const Matrix3d to_frame = p_frame.vectors.inverse();

  auto psi_at = [&](const Vector3d& u) -> Vector3d {
    double th, ph;
    angles_of(u, th, ph);
    const double rho = r * (1.0 + r * r * eval_field(leaf.phi, th, ph));
    const Vector3d pos = exp_map(spec, frame.base, rho * (frame.vectors * u));
    return to_frame * log_map(spec, p_frame.base, pos);
  };

  const double fd_step = 1e-6;
  VectorXd eta(nodes);
  for (int n = 0; n < nodes; ++n) {
    const Vector3d x = grid->xs.row(n).transpose();
    Vector3d u = x;
    bool done = false;
    for (int it = 0; it < 40 && !done; ++it) {
      const Vector3d psi = psi_at(u);
      const double nrm = psi.norm();
      if (nrm < 1e-14)
        throw LogMapFailure("leaf passes through the center point");
      const Vector3d beta = psi / nrm;
      if ((beta - x).norm() <= 1e-10) {
        eta[n] = nrm;
        done = true;
        break;
      }
      Vector3d e1, e2;
      tangent_basis(u, e1, e2);
      Eigen::Matrix2d jac;
      for (int k = 0; k < 2; ++k) {
        const Vector3d ek = k == 0 ? e1 : e2;
        const Vector3d up = (u + fd_step * ek).normalized();
        const Vector3d psik = psi_at(up);
        const Vector3d dbeta = (psik / psik.norm() - beta) / fd_step;
        jac(0, k) = e1.dot(dbeta);
        jac(1, k) = e2.dot(dbeta);
      }
      if (std::abs(jac.determinant()) < 1e-10)
        throw BetaNotInvertible("direction-map Jacobian singular at a grid node");
      const Eigen::Vector2d rhs(e1.dot(beta - x), e2.dot(beta - x));
      Eigen::Vector2d step = jac.partialPivLu().solve(-rhs);
      const double cap = 0.5;
      if (step.norm() > cap) step *= cap / step.norm();
      u = (u + step[0] * e1 + step[1] * e2).normalized();
    }
    if (!done)
      throw BetaNotInvertible("direction-map inversion did not converge at a grid node");
  }
  return analyze(*grid, eta);
}

FoliationReport check_foliation(const MetricSpec& spec, const Frame& p_frame,
                                const Family& family, int workers) {
  const auto& leaves = family.leaves;
  const int n = static_cast<int>(leaves.size());
  if (n < 6)
    throw InsufficientLeaves("need at least 6 leaves, have " + std::to_string(n));
  for (int i = 1; i < n; ++i)
    if (!(leaves[i].r > leaves[i - 1].r))
      throw InsufficientLeaves("leaves must be sorted by increasing r");
  if (leaves.back().r < 3.0 * leaves.front().r)
    throw InsufficientLeaves("radius range must span at least a factor of 3");

  GridPtr grid = build_grid(leaves.front().phi.L);
  const int nodes = grid->nodes();

  FoliationReport rep;
  rep.leaf_eta.resize(n);
  std::vector<VectorXd> eta(n);
  {
    workers = std::clamp(workers, 1, n);
    std::atomic<int> next{0};
    std::exception_ptr first_error;
    std::mutex err_mu;
    auto worker = [&] {
      for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
        try {
          eta[i] = synthesize(radial_profile(spec, p_frame, leaves[i], grid), *grid);
        } catch (...) {
          std::lock_guard<std::mutex> lock(err_mu);
          if (!first_error) first_error = std::current_exception();
          return;
        }
      }
    };
    std::vector<std::thread> pool;
    for (int t = 1; t < workers; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
  }
  for (int i = 0; i < n; ++i) {
    LeafEta& le = rep.leaf_eta[i];
    le.r = leaves[i].r;
    le.eta_mean = integrate(*grid, eta[i]) / (4.0 * M_PI);
    le.eta_min = eta[i].minCoeff();
    le.eta_max = eta[i].maxCoeff();
    le.gap_to_next = std::numeric_limits<double>::quiet_NaN();
  }

  rep.eta_min_gap = std::numeric_limits<double>::infinity();
  for (int i = 0; i + 1 < n; ++i) {
    double gap = std::numeric_limits<double>::infinity();
    for (int k = 0; k < nodes; ++k) gap = std::min(gap, eta[i + 1][k] - eta[i][k]);
    rep.leaf_eta[i].gap_to_next = gap;
    rep.eta_min_gap = std::min(rep.eta_min_gap, gap);
  }
  rep.disjoint = rep.eta_min_gap > 0.0;

  {
    std::vector<double> rs, means;
    for (int i = 0; i < 3; ++i) {
      rs.push_back(leaves[i].r);
      means.push_back(rep.leaf_eta[i].eta_mean);
    }
    double r2;
    linear_fit(rs, means, rep.eta_r_slope_at_small_r, r2);
  }

  const double r0 = leaves[0].r, r1 = leaves[1].r;
  rep.lambda_limit =
      (r1 * r1 * leaves[0].lambda - r0 * r0 * leaves[1].lambda) / (r1 * r1 - r0 * r0);

  const CurvaturePoint curv =
      curvature_point(metric_jet(spec, p_frame.base, 4), &p_frame.vectors);

  // a'(r) by central difference at the smallest interior leaf,
  // normalized by 8 pi at the midpoint radius.
  rep.area_rate_coef = (leaves[2].area - leaves[0].area) / (leaves[2].r - leaves[0].r) /
                       (8.0 * M_PI * 0.5 * (leaves[0].r + leaves[2].r));

  // Order fits over the asymptotic window: largest leaf dropped.
  std::vector<double> rs, tau_q, lam_q, area_q, en_q;
  for (int i = 0; i + 1 < n; ++i) {
    const Leaf& lf = leaves[i];
    rs.push_back(lf.r);
    tau_q.push_back(lf.tau.norm());
    lam_q.push_back(std::abs(lf.lambda + curv.sc / 3.0));
    area_q.push_back(std::abs(lf.area - 4.0 * M_PI * lf.r * lf.r));
    en_q.push_back(std::abs(lf.energy - 4.0 * M_PI));
  }
  rep.tau_order = order_fit(rs, tau_q);
  rep.lambda_order = order_fit(rs, lam_q);
  rep.area_defect_order = order_fit(rs, area_q);
  rep.energy_defect_order = order_fit(rs, en_q);
  return rep;
}

void emit_report(const FoliationReport& report, const Family& family, const std::string& path) {
  if (family.leaves.empty()) throw InsufficientLeaves("cannot emit a report for an empty family");
  using json = nlohmann::ordered_json;

  auto fit_json = [](const OrderFit& f) {
    return json{{"order", f.order},
                {"r2", f.r2},
                {"reliable", f.reliable},
                {"at_noise_floor", f.at_noise_floor}};
  };

  json j;
  j["kind"] = "foliation_report";
  j["metric"] = {{"id", family.spec.id},
                 {"params", family.spec.params},
                 {"chart_radius", family.spec.chart_radius}};
  j["provenance"] = family.provenance;
  j["critical_point"] = {
      {"location", {family.critical_point.location[0], family.critical_point.location[1],
                    family.critical_point.location[2]}},
      {"gradient_norm", family.critical_point.gradient_norm},
      {"min_abs_eigenvalue", family.critical_point.min_abs_eigenvalue}};
  j["leaf_count"] = family.leaves.size();
  j["report"] = {{"eta_min_gap", report.eta_min_gap},
                 {"disjoint", report.disjoint},
                 {"eta_r_slope_at_small_r", report.eta_r_slope_at_small_r},
                 {"lambda_limit", report.lambda_limit},
                 {"area_rate_coef", report.area_rate_coef},
                 {"tau_order", fit_json(report.tau_order)},
                 {"lambda_order", fit_json(report.lambda_order)},
                 {"area_defect_order", fit_json(report.area_defect_order)},
                 {"energy_defect_order", fit_json(report.energy_defect_order)}};
  json jl = json::array();
  for (size_t i = 0; i < family.leaves.size(); ++i) {
    const Leaf& lf = family.leaves[i];
    const LeafEta* le = i < report.leaf_eta.size() ? &report.leaf_eta[i] : nullptr;
    json one = {{"r", lf.r},          {"lambda", lf.lambda}, {"tau_norm", lf.tau.norm()},
                {"area", lf.area},    {"energy", lf.energy}, {"residual_linf", lf.residual_linf},
                {"newton_iters", lf.newton_iters}};
    if (le) {
      one["eta_mean"] = le->eta_mean;
      one["eta_min"] = le->eta_min;
      one["eta_max"] = le->eta_max;
      one["eta_gap"] = std::isnan(le->gap_to_next) ? json(nullptr) : json(le->gap_to_next);
    }
    jl.push_back(one);
  }
  j["leaves"] = jl;

  {
    std::ofstream out(path + ".json", std::ios::binary);
    if (!out) throw IoError("cannot open " + path + ".json for writing");
    out << j.dump(2) << "\n";
    if (!out) throw IoError("write failed: " + path + ".json");
  }
  {
    std::ofstream out(path + ".csv", std::ios::binary);
    if (!out) throw IoError("cannot open " + path + ".csv for writing");
    out << "r,lambda,tau_norm,area,energy,eta_gap,eta_mean,eta_min,eta_max\n";
    for (size_t i = 0; i < family.leaves.size(); ++i) {
      const Leaf& lf = family.leaves[i];
      out << fmt(lf.r) << ',' << fmt(lf.lambda) << ',' << fmt(lf.tau.norm()) << ','
          << fmt(lf.area) << ',' << fmt(lf.energy) << ',';
      if (i < report.leaf_eta.size()) {
        const LeafEta& le = report.leaf_eta[i];
        if (!std::isnan(le.gap_to_next)) out << fmt(le.gap_to_next);
        out << ',' << fmt(le.eta_mean) << ',' << fmt(le.eta_min) << ',' << fmt(le.eta_max);
      } else {
        out << ",,,";
      }
      out << '\n';
    }
    if (!out) throw IoError("write failed: " + path + ".csv");
  }
}

} // namespace foliate
