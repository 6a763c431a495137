#pragma once

#include "foliate/surface.hpp"

namespace foliate {

/// Discrete derivative of the projected residual with respect to the
/// unknowns (lambda; tau; phi coefficients with l >= 2). Rows carry the
/// same splitting as the equations: the constant mode (K0), the three
/// linear modes (K1), then the K-perp coefficients. With frozen_tau the
/// K1 rows and tau columns are dropped and the K1 residual is only
/// monitored.
struct LinearizedSystem {
  int L = 0;
  bool frozen_tau = false;
  MatrixXd matrix;      // rows [K0, (K1 x3), Kperp]; cols [lambda, (tau x3), phi]
  VectorXd rhs;         // projected residual at the expansion point
  Vector3d k1_residual = Vector3d::Zero();
  double cond = 0.0;

  int kernel_rows() const { return frozen_tau ? 1 : 4; }
  int perp_size() const { return (L + 1) * (L + 1) - 4; }
  int size() const { return kernel_rows() + perp_size(); }
};

struct JacobianOptions {
  bool freeze_tau = false;
  Vector3d tau = Vector3d::Zero();  // expansion point, anchor-frame components
  double cond_limit = 1e12;
  double phi_step = 1e-6;           // scaled by max(1, |phi|)
  double tau_step = 1e-4;           // scaled by r
  const GeodesicFan* fan = nullptr; // must cover the frame at tau
};

/// Linearized constrained Willmore operator on the state's surface,
/// acting on a normal-speed function f; returns r^4 W_lambda f, the
/// derivative of the residual under inward normal speed f (flat-limit
/// spectrum l(l+1)(l(l+1)-2) >= 0). The divergence-form terms are
/// expanded with the traced Codazzi identity div Å = 1/2 dH + omega,
/// so only scalar fields are differentiated spectrally; ambient terms
/// come from the jets cached in the state.
HarmonicField apply_linearized(const SurfaceState& state, double lambda,
                               const HarmonicField& f);

/// Jacobian of the projected residual at (r, tau, phi, lambda).
/// `anchor` is the frame at the critical point; the surface frame is
/// parallel_frame(spec, anchor, tau), re-run for the tau columns
/// (central differences). phi columns are one-sided differences of the
/// full residual, the lambda column is analytic (the residual is affine
/// in lambda with slope r^3 H).
LinearizedSystem assemble_jacobian(const MetricSpec& spec, const Frame& anchor, double r,
                                   const HarmonicField& phi, double lambda, GridPtr grid,
                                   const JacobianOptions& opts = {});

/// Stack a residual field as (p0, [p1], l >= 2 coefficients).
VectorXd project_rows(const HarmonicField& field, bool frozen_tau);

} // namespace foliate
