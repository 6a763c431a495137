#pragma once

#include "foliate/chart.hpp"
#include "foliate/sphere.hpp"

namespace foliate {

/// Geodesic rays from a frame along every grid direction, integrated
/// once to t_max and reused for any radius below that.
struct GeodesicFan {
  Frame frame;
  GridPtr grid;
  double t_max = 0.0;
  std::vector<Geodesic> rays;
};

GeodesicFan build_fan(const MetricSpec& spec, const Frame& frame, GridPtr grid, double t_max);

/// An embedded graph sphere with every geometric quantity the Willmore
/// residual and its linearization consume, sampled on the grid.
/// Coordinate indices a,b range over (theta, phi); pairs are stored as
/// [0]=tt, [1]=tp, [2]=pp.
struct SurfaceState {
  MetricSpec spec;
  Frame frame;
  GridPtr grid;
  double r = 0.0;
  HarmonicField phi;

  MatrixXd position;       // nodes x 3 chart coordinates
  MatrixXd tan_t, tan_p;   // tangents d(position)/d theta, /d phi
  MatrixXd normal;         // outward unit normal (chart components)
  VectorXd h[3], hinv[3];  // induced metric and inverse
  VectorXd second_ff[3];   // A_ab
  VectorXd gamma[2][3];    // induced Christoffels gamma^c_ab, [c][ab]
  VectorXd mean_curv;      // H (physical)
  HarmonicField mean_curv_coef;
  VectorXd traceless_sq;   // |Å|²
  VectorXd shape_det;      // det of the shape operator
  VectorXd lap_H;          // Delta_Sigma H
  VectorXd ric_nn;         // ambient Ric(nu, nu)
  VectorXd dric_nnn;       // ambient covariant (grad Ric)(nu, nu, nu)
  VectorXd omega[2];       // omega_a = Ric(nu, tan_a)
  VectorXd Tten[3];        // T_ab = Rm(tan_a, nu, nu, tan_b)
  VectorXd area_element;   // sqrt(det h), coordinate measure
};

/// Geodesic graph sphere over the frame: position(x) =
/// exp_base(r (1 + r^2 phi(x)) x^j e_j). Fan (if given) must cover the
/// needed radii and match (frame, grid).
SurfaceState embed_surface(const MetricSpec& spec, const Frame& frame, double r,
                           const HarmonicField& phi, GridPtr grid,
                           const GeodesicFan* fan = nullptr);

/// r^3 (Delta H + H|Å|^2 + H Ric(nu,nu) + lambda H), analyzed.
HarmonicField willmore_residual(const SurfaceState& state, double lambda);

/// Closed-form expansion of the rescaled residual on the unit sphere
/// through the r^4 terms (no remainder).
HarmonicField expansion_residual(const CurvaturePoint& curv, double lambda, double r,
                                 const SphereGrid& grid);

/// Individual closed-form expansions (rescaled unit-sphere quantities),
/// used as oracles: rescaled H, shape determinant, |Å|^2, Delta H.
VectorXd expansion_mean_curv(const CurvaturePoint& curv, double r, const SphereGrid& grid);
VectorXd expansion_shape_det(const CurvaturePoint& curv, double r, const SphereGrid& grid);
VectorXd expansion_traceless_sq(const CurvaturePoint& curv, double r, const SphereGrid& grid);
VectorXd expansion_lap_h(const CurvaturePoint& curv, double r, const SphereGrid& grid);

double willmore_energy(const SurfaceState& state);
double surface_area(const SurfaceState& state);

/// Sup norm of (div Å)_a - 1/2 dH_a - omega_a over the grid (the
/// traced Codazzi identity; spectrally small on smooth graphs).
double codazzi_residual(const SurfaceState& state);

} // namespace foliate
