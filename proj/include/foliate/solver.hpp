#pragma once

#include <string>
#include <vector>

#include "foliate/linearized.hpp"

namespace foliate {

/// One constrained-Willmore sphere: radius parameter, frame offset,
/// Lagrange multiplier (physical), and the l >= 2 graph coefficients.
struct Leaf {
  double r = 0.0;
  Vector3d tau = Vector3d::Zero();
  double lambda = 0.0;
  HarmonicField phi;
  double area = 0.0;
  double energy = 0.0;
  double residual_linf = 0.0;
  int newton_iters = 0;
};

struct InitialGuess {
  Vector3d tau = Vector3d::Zero();
  double lambda = 0.0;
  HarmonicField phi;
};

/// Leading-order seed at the critical point: tau = 0, lambda = -Sc/3,
/// phi = the flat fourth-order graph correction.
InitialGuess initial_guess(const CurvaturePoint& curv, const SphereGrid& grid);

struct SolveOptions {
  double tol = 1e-9;      // sup norm of the rescaled residual
  int max_iters = 30;
  int max_halvings = 8;
  bool freeze_tau = false;
  double phi_step = 1e-6;
  double tau_step = 1e-4;
  double cond_limit = 1e12;
};

/// Damped Newton on (lambda, tau, phi_{l>=2}) against the projected
/// residual rows; the Jacobian is assembled once per leaf and
/// reassembled only if step halving exhausts.
Leaf solve_leaf(const MetricSpec& spec, const Frame& anchor, double r,
                const InitialGuess& init, GridPtr grid, const SolveOptions& opts = {});

/// Solved leaves by increasing r. `error` is empty on full success;
/// otherwise it names the first failure and `failed_index` the leaf.
struct Family {
  MetricSpec spec;
  Frame anchor;
  CriticalPoint critical_point;
  std::string provenance;
  std::vector<Leaf> leaves;
  int failed_index = -1;
  std::string error;

  bool complete() const { return error.empty(); }
};

/// Zeroth-order continuation over the schedule (validated strictly
/// increasing, below chart_radius/2 before any solve); the first leaf
/// is seeded by initial_guess, each later one by its predecessor.
Family continue_family(const MetricSpec& spec, const Frame& anchor,
                       const std::vector<double>& r_schedule, GridPtr grid,
                       const SolveOptions& opts = {});

/// Leaf whose area matches `a` to 1e-8 relative: monotone
/// interpolation of r(a) from the family, then secant/bisection on r
/// with a full solve per trial.
Leaf leaf_at_area(const Family& family, double a, GridPtr grid, const SolveOptions& opts = {});

} // namespace foliate
