#include "foliate/solver.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/LU>

namespace foliate {

namespace {

struct Evaluation {
  SurfaceState state;
  HarmonicField residual;
  double linf = 0.0;
};

// Embed + residual at one iterate. The fan is keyed on tau: rebuilt
// only when the frame moves.
struct Evaluator {
  const MetricSpec& spec;
  const Frame& anchor;
  GridPtr grid;
  double r;
  GeodesicFan fan;
  Vector3d fan_tau = Vector3d::Zero();
  bool fan_ready = false;

  Evaluation eval(const Vector3d& tau, double lambda, const HarmonicField& phi) {
    if (!fan_ready || tau != fan_tau) {
      const Frame frame = tau.isZero() ? anchor : parallel_frame(spec, anchor, tau);
      fan = build_fan(spec, frame, grid, 1.5 * r);
      fan_tau = tau;
      fan_ready = true;
    }
    Evaluation ev;
    ev.state = embed_surface(spec, fan.frame, r, phi, grid, &fan);
    ev.residual = willmore_residual(ev.state, lambda);
    ev.linf = synthesize(ev.residual, *grid).cwiseAbs().maxCoeff();
    return ev;
  }
};

} // namespace

InitialGuess initial_guess(const CurvaturePoint& curv, const SphereGrid& grid) {
  InitialGuess g;
  g.lambda = -curv.sc / 3.0;
  g.phi = phi_zero(curv, grid);
  return g;
}

Leaf solve_leaf(const MetricSpec& spec, const Frame& anchor, double r,
                const InitialGuess& init, GridPtr grid, const SolveOptions& opts) {
  if (!(r > 0.0) || !std::isfinite(r)) throw OutOfRange("leaf radius must be positive");
  if (!init.phi.a.allFinite() || !std::isfinite(init.lambda) || !init.tau.allFinite())
    throw OutOfRange("initial guess not finite");

  const int ncoef = grid->ncoef();
  Vector3d tau = init.tau;
  double lambda = init.lambda;
  HarmonicField phi(grid->L);
  // keep only the K-perp content of the seed
  if (init.phi.L == grid->L) phi.a.tail(ncoef - 4) = init.phi.a.tail(ncoef - 4);

  Evaluator ev{spec, anchor, grid, r};
  Evaluation cur = ev.eval(tau, lambda, phi);

  LinearizedSystem sys;
  Eigen::PartialPivLU<MatrixXd> lu;
  bool have_jac = false;
  bool jac_fresh = false;  // assembled at the current iterate

  int iters = 0;
  while (cur.linf > opts.tol) {
    if (iters >= opts.max_iters)
      throw NoConvergence("leaf at r=" + std::to_string(r) + " after " +
                          std::to_string(iters) + " iterations, residual " +
                          std::to_string(cur.linf));
    if (!have_jac) {
      JacobianOptions jo;
      jo.freeze_tau = opts.freeze_tau;
      jo.tau = tau;
      jo.phi_step = opts.phi_step;
      jo.tau_step = opts.tau_step;
      jo.cond_limit = opts.cond_limit;
      if (tau == ev.fan_tau && ev.fan_ready) jo.fan = &ev.fan;
      sys = assemble_jacobian(spec, anchor, r, phi, lambda, grid, jo);
      lu.compute(sys.matrix);
      have_jac = true;
      jac_fresh = true;
    }
    const VectorXd rhs = project_rows(cur.residual, opts.freeze_tau);
    const VectorXd delta = lu.solve(-rhs);

    double step = 1.0;
    bool accepted = false;
    for (int halvings = 0; halvings <= opts.max_halvings; ++halvings) {
      const double lambda_try = lambda + step * delta[0];
      Vector3d tau_try = tau;
      if (!opts.freeze_tau) tau_try += step * delta.segment<3>(1);
      HarmonicField phi_try = phi;
      phi_try.a.tail(ncoef - 4) += step * delta.tail(ncoef - 4);
      try {
        Evaluation next = ev.eval(tau_try, lambda_try, phi_try);
        if (next.linf < cur.linf) {
          lambda = lambda_try;
          tau = tau_try;
          phi = phi_try;
          cur = std::move(next);
          accepted = true;
          jac_fresh = false;
          break;
        }
      } catch (const GraphDegenerate&) {
        // overshoot; halve
      }
      step *= 0.5;
    }
    ++iters;
    if (!accepted) {
      // stale Jacobian is the usual cause; rebuild at the current
      // iterate, then give up
      if (!jac_fresh) {
        have_jac = false;
        continue;
      }
      throw NoConvergence("step halving exhausted at r=" + std::to_string(r) +
                          ", residual " + std::to_string(cur.linf));
    }
  }

  Leaf leaf;
  leaf.r = r;
  leaf.tau = tau;
  leaf.lambda = lambda;
  leaf.phi = phi;
  leaf.area = surface_area(cur.state);
  leaf.energy = willmore_energy(cur.state);
  leaf.residual_linf = cur.linf;
  leaf.newton_iters = iters;
  return leaf;
}

Family continue_family(const MetricSpec& spec, const Frame& anchor,
                       const std::vector<double>& r_schedule, GridPtr grid,
                       const SolveOptions& opts) {
  if (r_schedule.empty()) throw OutOfRange("empty radius schedule");
  std::vector<double> rs = r_schedule;
  std::sort(rs.begin(), rs.end());
  for (double r : rs)
    if (!(r > 0.0) || r >= spec.chart_radius / 2.0)
      throw OutOfRange("radius " + std::to_string(r) + " outside (0, chart_radius/2)");
  for (size_t i = 1; i < rs.size(); ++i)
    if (rs[i] == rs[i - 1]) throw OutOfRange("duplicate radius in schedule");

  Family fam;
  fam.spec = spec;
  fam.anchor = anchor;
  const CurvaturePoint curv =
      curvature_point(metric_jet(spec, anchor.base, 4), &anchor.vectors);
  fam.critical_point.location = anchor.base;
  fam.critical_point.hessian = curv.d2sc;
  fam.critical_point.gradient_norm = curv.dsc.norm();
  {
    Eigen::SelfAdjointEigenSolver<Matrix3d> es(curv.d2sc);
    fam.critical_point.min_abs_eigenvalue = es.eigenvalues().cwiseAbs().minCoeff();
  }

  InitialGuess seed = initial_guess(curv, *grid);
  for (size_t i = 0; i < rs.size(); ++i) {
    try {
      Leaf leaf = solve_leaf(spec, anchor, rs[i], seed, grid, opts);
      seed.tau = leaf.tau;
      seed.lambda = leaf.lambda;
      seed.phi = leaf.phi;
      fam.leaves.push_back(std::move(leaf));
    } catch (const Error& e) {
      fam.failed_index = static_cast<int>(i);
      fam.error = e.what();
      break;
    }
  }
  return fam;
}

Leaf leaf_at_area(const Family& family, double a, GridPtr grid, const SolveOptions& opts) {
  const auto& leaves = family.leaves;
  if (leaves.size() < 2) throw InsufficientLeaves("need at least two leaves for r(a)");
  for (size_t i = 1; i < leaves.size(); ++i)
    if (!(leaves[i].area > leaves[i - 1].area))
      throw MonotonicityViolation("leaf areas not strictly increasing at index " +
                                  std::to_string(i));
  if (a < leaves.front().area || a > leaves.back().area)
    throw AreaOutOfRange("target area " + std::to_string(a) + " outside [" +
                         std::to_string(leaves.front().area) + ", " +
                         std::to_string(leaves.back().area) + "]");

  // bracketing pair and linear r(a) interpolant
  size_t hi = 1;
  while (leaves[hi].area < a) ++hi;
  const Leaf& lo_leaf = leaves[hi - 1];
  const Leaf& hi_leaf = leaves[hi];
  double r_lo = lo_leaf.r, a_lo = lo_leaf.area;
  double r_hi = hi_leaf.r, a_hi = hi_leaf.area;
  double r_try = r_lo + (r_hi - r_lo) * (a - a_lo) / (a_hi - a_lo);

  InitialGuess seed{lo_leaf.tau, lo_leaf.lambda, lo_leaf.phi};
  Leaf best;
  bool have = false;
  for (int it = 0; it < 80; ++it) {
    Leaf trial = solve_leaf(family.spec, family.anchor, r_try, seed, grid, opts);
    seed = InitialGuess{trial.tau, trial.lambda, trial.phi};
    if (!have || std::abs(trial.area - a) < std::abs(best.area - a)) {
      best = trial;
      have = true;
    }
    if (std::abs(trial.area - a) <= 1e-8 * a) return trial;
    if (trial.area < a)
      r_lo = r_try, a_lo = trial.area;
    else
      r_hi = r_try, a_hi = trial.area;
    // secant within the bracket, bisection fallback
    double next = r_lo + (r_hi - r_lo) * (a - a_lo) / (a_hi - a_lo);
    if (!(next > r_lo && next < r_hi)) next = 0.5 * (r_lo + r_hi);
    if (std::abs(next - r_try) < 1e-15 * r_try) break;
    r_try = next;
  }
  throw NoConvergence("area bisection stalled; best |area - a|/a = " +
                      std::to_string(std::abs(best.area - a) / a));
}

} // namespace foliate
