// Acceptance gate: one pass/fail line per criterion, nonzero exit if
// any criterion fails. Intended wall time is a few minutes on one core;
// the family run in criterion 5 dominates.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <vector>

#include "foliate/foliation.hpp"
#include "test_util.hpp"

using namespace foliate;
using testutil::bump_spec;
using testutil::loglog_slope;
using testutil::round_spec;

namespace {

int g_failures = 0;

void report(int criterion, const char* what, bool ok, const std::string& detail) {
  std::printf("%s  criterion %d: %s%s%s\n", ok ? "PASS" : "FAIL", criterion, what,
              detail.empty() ? "" : " -- ", detail.c_str());
  std::fflush(stdout);
  if (!ok) ++g_failures;
}

std::string fmt(const char* f, double a, double b = 0.0) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), f, a, b);
  return buf;
}

// Quantities that vanish to solver/quadrature precision satisfy any
// order bound; a log-log fit through roundoff would be meaningless.
constexpr double kFloor = 1e-9;

bool slope_or_floor(const std::vector<double>& rs, const std::vector<double>& qs,
                    double want, std::string& detail) {
  // fit only samples resolved above the noise floor: a difference that
  // has already vanished to roundoff at small r satisfies the bound
  // there, and including it would corrupt the exponent
  std::vector<double> fr, fq;
  for (size_t i = 0; i < qs.size(); ++i)
    if (qs[i] >= 3.0 * kFloor) {
      fr.push_back(rs[i]);
      fq.push_back(qs[i]);
    }
  if (fr.size() < 2) {
    detail = fmt("at noise floor (max %.1e)", *std::max_element(qs.begin(), qs.end()));
    return true;
  }
  const double s = loglog_slope(fr, fq);
  detail = fmt("slope %.2f (%g pts)", s, double(fr.size()));
  return s >= want;
}

// --- 1: closed-form expansions vs direct surface geometry ------------

void criterion_expansion() {
  GridPtr grid = build_grid(16);
  const std::vector<double> rs = {0.02, 0.0297, 0.0441, 0.0655, 0.0973};
  bool ok = true;
  std::string worst;
  double worst_slope = 1e9;
  const auto t0 = std::chrono::steady_clock::now();
  for (const MetricSpec& sp : {round_spec(), bump_spec()}) {
    for (const Vector3d& tau : {Vector3d(0, 0, 0), Vector3d(0.05, 0, 0)}) {
      Frame frame = parallel_frame(sp, anchor_frame(sp, Vector3d::Zero()), tau);
      CurvaturePoint curv = curvature_point(metric_jet(sp, frame.base, 4), &frame.vectors);
      GeodesicFan fan = build_fan(sp, frame, grid, 0.12);
      // per-radius differences for the residual (two lambdas) and the
      // four individual geometric quantities
      std::vector<std::vector<double>> diffs(6);
      for (double r : rs) {
        SurfaceState st = embed_surface(sp, frame, r, HarmonicField(16), grid, &fan);
        int q = 0;
        for (double lambda : {0.0, -curv.sc / 3.0}) {
          const VectorXd num = synthesize(willmore_residual(st, lambda), *grid);
          const VectorXd exact = synthesize(expansion_residual(curv, lambda, r, *grid), *grid);
          diffs[q++].push_back((num - exact).cwiseAbs().maxCoeff());
        }
        diffs[2].push_back(
            (r * st.mean_curv - expansion_mean_curv(curv, r, *grid)).cwiseAbs().maxCoeff());
        diffs[3].push_back((r * r * st.shape_det - expansion_shape_det(curv, r, *grid))
                               .cwiseAbs()
                               .maxCoeff());
        diffs[4].push_back((r * r * st.traceless_sq - expansion_traceless_sq(curv, r, *grid))
                               .cwiseAbs()
                               .maxCoeff());
        diffs[5].push_back(
            (r * r * r * st.lap_H - expansion_lap_h(curv, r, *grid)).cwiseAbs().maxCoeff());
      }
      static const char* names[6] = {"residual(0)", "residual(-Sc/3)", "H",
                                     "shape_det",   "traceless_sq",    "lap_H"};
      for (int q = 0; q < 6; ++q) {
        std::string detail;
        const bool pass = slope_or_floor(rs, diffs[q], 4.5, detail);
        ok = ok && pass;
        const double top = *std::max_element(diffs[q].begin(), diffs[q].end());
        if (top >= kFloor) {
          const double s = loglog_slope(rs, diffs[q]);
          if (s < worst_slope) {
            worst_slope = s;
            worst = std::string(sp.id) + (tau.norm() > 0 ? "/tau" : "") + " " + names[q] +
                    " " + detail;
          }
        }
      }
    }
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  ok = ok && secs <= 120.0;
  report(1, "expansion order fits >= 4.5 for residual, H, shape_det, |A-ring|^2, lap H", ok,
         "worst " + worst + fmt(", %.0f s", secs));
}

// --- 2: round-sphere closed forms ------------------------------------

void criterion_round() {
  const MetricSpec sp = round_spec();
  GridPtr grid = build_grid(16);
  const double r = 0.3;
  SurfaceState st =
      embed_surface(sp, anchor_frame(sp, Vector3d::Zero()), r, HarmonicField(16), grid);
  const double cot = std::cos(r) / std::sin(r);
  double err = (st.mean_curv.array() - 2.0 * cot).abs().maxCoeff();
  err = std::max(err, std::abs(surface_area(st) - 4.0 * M_PI * std::sin(r) * std::sin(r)));
  err = std::max(err, st.traceless_sq.cwiseAbs().maxCoeff());
  for (double lambda : {0.0, 0.7, -2.0}) {
    const double exact = 2.0 * r * cot * (2.0 * r * r + lambda * r * r);
    err = std::max(
        err,
        (synthesize(willmore_residual(st, lambda), *grid).array() - exact).abs().maxCoeff());
  }
  report(2, "round-sphere closed forms (H, area, |A-ring|^2, residual) at r=0.3", err <= 1e-8,
         fmt("max error %.2e", err));
}

// --- 3: flat spectrum of the assembled Jacobian ----------------------

void criterion_flat_spectrum() {
  const MetricSpec sp;
  bool ok = true;
  std::string detail;
  {
    // K-perp block at r = 0.02; documented scaling is -r^2 times the
    // flat spectrum l(l+1)(l(l+1)-2).
    GridPtr grid = build_grid(8);
    const double r = 0.02;
    JacobianOptions opts;
    opts.freeze_tau = true;
    LinearizedSystem sys =
        assemble_jacobian(sp, anchor_frame(sp, Vector3d::Zero()), r, HarmonicField(8), 0.0,
                          grid, opts);
    const int n = sys.perp_size();
    Eigen::MatrixXd perp = -sys.matrix.block(1, 1, n, n) / (r * r);
    Eigen::VectorXd eigs = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(
                               0.5 * (perp + perp.transpose()))
                               .eigenvalues();
    std::vector<double> expected;
    for (int l = 2; l <= 8; ++l)
      for (int m = -l; m <= l; ++m) expected.push_back(double(l * (l + 1) * (l * (l + 1) - 2)));
    std::sort(expected.begin(), expected.end());
    double rel = 0.0;
    int checked = 0;
    for (int i = 0; i < n && expected[i] <= 360.0; ++i, ++checked)  // l <= 4
      rel = std::max(rel, std::abs(eigs[i] - expected[i]) / expected[i]);
    ok = ok && checked == 21 && rel <= 1e-3;
    detail = fmt("K-perp rel err %.1e", rel);
  }
  {
    // Unprojected operator at L = 8: the full coefficient-to-coefficient
    // derivative of the residual must have exactly four near-zero modes
    // (radius change + three translations).
    GridPtr grid = build_grid(8);
    const double r = 0.02, h = 1e-6;
    Frame anchor = anchor_frame(sp, Vector3d::Zero());
    const int n = grid->ncoef();
    Eigen::MatrixXd J(n, n);
    for (int j = 0; j < n; ++j) {
      HarmonicField pp(8), pm(8);
      pp.a[j] = h;
      pm.a[j] = -h;
      const HarmonicField rp = willmore_residual(embed_surface(sp, anchor, r, pp, grid), 0.0);
      const HarmonicField rm = willmore_residual(embed_surface(sp, anchor, r, pm, grid), 0.0);
      J.col(j) = (rp.a - rm.a) / (2.0 * h);
    }
    J /= -(r * r);  // rescaled units, l=2 eigenvalue 24
    Eigen::VectorXcd eigs = Eigen::EigenSolver<Eigen::MatrixXd>(J, false).eigenvalues();
    int near_zero = 0;
    for (int i = 0; i < n; ++i)
      if (std::abs(eigs[i]) <= 1e-6 * 24.0) ++near_zero;
    ok = ok && near_zero == 4;
    detail += fmt(", near-zero modes %g/4", double(near_zero));
  }
  report(3, "flat spectrum of the assembled operator", ok, detail);
}

// --- 4: zeroth graph correction closed form --------------------------

void criterion_phi_zero() {
  CurvaturePoint curv;
  curv.ric = Vector3d(1.0, 2.0, 3.0).asDiagonal();
  curv.sc = 6.0;
  GridPtr grid = build_grid(12);
  const VectorXd num = synthesize(phi_zero(curv, *grid), *grid);
  VectorXd exact(grid->nodes());
  for (int i = 0; i < grid->nodes(); ++i) {
    const Vector3d x = grid->xs.row(i).transpose();
    exact[i] = (x.dot(curv.ric * x) - curv.sc / 3.0) / 6.0;
  }
  const double err = (num - exact).cwiseAbs().maxCoeff();
  report(4, "phi_zero matches (1/6)(Ric_pq x^p x^q - Sc/3)", err <= 1e-10,
         fmt("max error %.2e", err));
}

// --- 5: the foliation run ---------------------------------------------

void criterion_foliation() {
  const auto t0 = std::chrono::steady_clock::now();
  const MetricSpec sp = bump_spec();
  GridPtr grid = build_grid(24);
  CriticalPoint cp = find_scalar_critical(sp, Vector3d::Zero());
  Frame anchor = anchor_frame(sp, cp.location);
  const double sc = scalar_curvature(sp, cp.location);

  std::vector<double> schedule(12);
  for (int i = 0; i < 12; ++i) schedule[i] = 0.05 * std::pow(6.0, i / 11.0);
  Family fam = continue_family(sp, anchor, schedule, grid);

  bool ok = fam.complete();
  double worst_res = 0.0;
  for (const Leaf& leaf : fam.leaves) worst_res = std::max(worst_res, leaf.residual_linf);
  ok = ok && worst_res <= 1e-8;

  std::string detail = fmt("residual %.1e", worst_res);
  if (fam.complete()) {
    FoliationReport rep = check_foliation(sp, anchor, fam, 2);
    const bool tau_ok = rep.tau_order.at_noise_floor || rep.tau_order.order >= 1.8;
    const bool lam_ok = rep.lambda_order.at_noise_floor || rep.lambda_order.order >= 1.8;
    const bool lim_ok = std::abs(rep.lambda_limit + sc / 3.0) <= 1e-4;
    const bool area_ok =
        rep.area_defect_order.at_noise_floor || rep.area_defect_order.order >= 3.5;
    const bool rate_ok = rep.area_rate_coef >= 0.98 && rep.area_rate_coef <= 1.02;
    const bool energy_ok =
        rep.energy_defect_order.at_noise_floor || rep.energy_defect_order.order >= 1.8;
    const bool nest_ok = rep.disjoint && rep.eta_min_gap > 0.0;
    const bool slope_ok =
        rep.eta_r_slope_at_small_r >= 0.9 && rep.eta_r_slope_at_small_r <= 1.1;
    ok = ok && tau_ok && lam_ok && lim_ok && area_ok && rate_ok && energy_ok && nest_ok &&
         slope_ok;
    detail += fmt(", tau %.2f", rep.tau_order.order) +
              (rep.tau_order.at_noise_floor ? " (floor)" : "") +
              fmt(", lambda %.2f", rep.lambda_order.order) +
              fmt(", |limit + Sc/3| %.1e", std::abs(rep.lambda_limit + sc / 3.0)) +
              fmt(", area %.2f, rate %.4f", rep.area_defect_order.order, rep.area_rate_coef) +
              fmt(", energy %.2f", rep.energy_defect_order.order) +
              fmt(", gap %.2e, slope %.3f", rep.eta_min_gap, rep.eta_r_slope_at_small_r);
  } else {
    detail += ", family incomplete: " + fam.error;
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  ok = ok && secs <= 600.0;
  detail += fmt(", %.0f s", secs);
  report(5, "conformal_bump foliation at L=24, 12 leaves in [0.05, 0.3]", ok, detail);
}

// --- 6: parity and small-r order of the linearized operator ----------

void criterion_parity() {
  const MetricSpec sp = bump_spec();
  GridPtr grid = build_grid(10);
  Frame anchor = anchor_frame(sp, Vector3d::Zero());
  HarmonicField f(10);  // even test field
  f.coeff(0, 0) = 0.4;
  f.coeff(2, 1) = 1.0;
  f.coeff(4, -2) = 0.6;
  auto apply_at = [&](const MetricSpec& m, double r) {
    SurfaceState st =
        embed_surface(m, anchor_frame(m, Vector3d::Zero()), r, HarmonicField(10), grid);
    return apply_linearized(st, 0.0, f);  // already in rescaled units
  };
  bool ok = true;
  std::string detail;
  {
    const double r0 = 0.1, h = 0.02;
    HarmonicField d2 = apply_at(sp, r0);
    d2.a = apply_at(sp, r0 + h).a - 2.0 * d2.a + apply_at(sp, r0 - h).a;
    double odd = 0.0;
    for (int l = 1; l <= 10; l += 2)
      for (int m = -l; m <= l; ++m) odd = std::max(odd, std::abs(d2.coeff(l, m)));
    ok = ok && odd <= 1e-6 * d2.a.norm();
    detail = fmt("odd leakage %.1e", odd / d2.a.norm());
  }
  {
    const MetricSpec flat;
    std::vector<double> rs = {0.02, 0.04, 0.08, 0.16}, ds;
    for (double r : rs) ds.push_back((apply_at(sp, r).a - apply_at(flat, r).a).norm());
    const double s = loglog_slope(rs, ds);
    ok = ok && s >= 1.8;
    detail += fmt(", flat-deviation order %.2f", s);
  }
  report(6, "even parity of the second r-derivative; O(r^2) flat deviation", ok, detail);
}

// --- 7: perturbed-restart basin check ---------------------------------

void criterion_basin() {
  const MetricSpec sp = bump_spec();
  GridPtr grid = build_grid(10);
  CriticalPoint cp = find_scalar_critical(sp, Vector3d::Zero());
  Frame anchor = anchor_frame(sp, cp.location);
  const double r = 0.1;
  SolveOptions opts;
  opts.tol = 1e-10;
  CurvaturePoint curv = curvature_point(metric_jet(sp, cp.location, 4), &anchor.vectors);
  const InitialGuess base = initial_guess(curv, *grid);
  const Leaf ref = solve_leaf(sp, anchor, r, base, grid, opts);

  std::mt19937_64 rng(20260826);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst = 0.0;
  bool ok = true;
  for (int trial = 0; trial < 20; ++trial) {
    InitialGuess init = base;
    HarmonicField noise(grid->L);
    for (int l = 2; l <= grid->L; ++l)
      for (int m = -l; m <= l; ++m) noise.coeff(l, m) = u(rng);
    noise.a *= 0.1 / noise.a.norm();  // ||delta phi||_{L^2} = 0.1
    init.phi.a += noise.a;
    init.tau += 0.2 * r * Vector3d(u(rng), u(rng), u(rng)).normalized() * std::abs(u(rng));
    try {
      const Leaf leaf = solve_leaf(sp, anchor, r, init, grid, opts);
      const double dist =
          std::max({std::abs(leaf.lambda - ref.lambda), (leaf.tau - ref.tau).norm() / r,
                    (leaf.phi.a - ref.phi.a).norm()});
      worst = std::max(worst, dist);
      ok = ok && dist <= 1e-8;
    } catch (const Error& e) {
      ok = false;
    }
  }
  report(7, "20 perturbed restarts reach the same leaf at r=0.1", ok,
         fmt("max coefficient distance %.2e", worst));
}

// --- 8: numerical infrastructure --------------------------------------

void criterion_infrastructure() {
  bool ok = true;
  std::string detail;
  GridPtr grid = build_grid(16);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  {
    HarmonicField f(16);
    for (int i = 0; i < f.a.size(); ++i) f.a[i] = u(rng);
    const double err = (analyze(*grid, synthesize(f, *grid)).a - f.a).cwiseAbs().maxCoeff();
    ok = ok && err <= 1e-11;
    detail = fmt("round trip %.1e", err);
  }
  {
    double err = 0.0;
    for (int i = 0; i < 3; ++i)
      for (int p = 0; p < 3; ++p) {
        const VectorXd prod =
            grid->xs.col(i).cwiseProduct(grid->xs.col(p));
        const double exact = (i == p) ? 4.0 * M_PI / 3.0 : 0.0;
        err = std::max(err, std::abs(integrate(*grid, prod) - exact));
      }
    ok = ok && err <= 1e-12;
    detail += fmt(", moments %.1e", err);
  }
  {
    const MetricSpec sp = bump_spec();
    HarmonicField phi(16);
    for (int l = 2; l <= 4; ++l)
      for (int m = -l; m <= l; ++m) phi.coeff(l, m) = 0.1 * u(rng);
    SurfaceState st =
        embed_surface(sp, anchor_frame(sp, Vector3d::Zero()), 0.15, phi, grid);
    const double cod = codazzi_residual(st);
    ok = ok && cod <= 1e-6;
    detail += fmt(", codazzi %.1e", cod);
  }
  {
    // contracted second Bianchi: sum_p Ric_pr;p = (1/2) Sc_;r
    const MetricSpec sp = bump_spec();
    CurvaturePoint curv =
        curvature_point(metric_jet(sp, Vector3d(0.1, -0.05, 0.2), 4));
    double err = 0.0;
    for (int r = 0; r < 3; ++r) {
      double div = 0.0;
      for (int p = 0; p < 3; ++p) div += curv.dric[p](p, r);
      err = std::max(err, std::abs(div - 0.5 * curv.dsc[r]));
    }
    ok = ok && err <= 1e-8;
    detail += fmt(", bianchi %.1e", err);
  }
  {
    const MetricSpec sp = bump_spec();
    double err = 0.0;
    for (int trial = 0; trial < 5; ++trial) {
      const Vector3d base(0.1 * u(rng), 0.1 * u(rng), 0.1 * u(rng));
      const Vector3d v(0.2 * u(rng), 0.2 * u(rng), 0.2 * u(rng));
      err = std::max(err, (log_map(sp, base, exp_map(sp, base, v)) - v).norm());
    }
    ok = ok && err <= 1e-9;
    detail += fmt(", exp/log %.1e", err);
  }
  report(8, "spectral, quadrature, Codazzi, Bianchi, exp/log infrastructure", ok, detail);
}

} // namespace

int main() {
  criterion_expansion();
  criterion_round();
  criterion_flat_spectrum();
  criterion_phi_zero();
  criterion_foliation();
  criterion_parity();
  criterion_basin();
  criterion_infrastructure();
  std::printf("%d/8 criteria passed\n", 8 - g_failures);
  return g_failures == 0 ? 0 : 1;
}
