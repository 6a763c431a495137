#pragma once

#include <vector>

#include "foliate/metric.hpp"

namespace foliate {

/// Orthonormal frame at exp_p(tau): base point in chart coordinates,
/// columns of `vectors` are the parallel-transported frame vectors.
struct Frame {
  Vector3d base = Vector3d::Zero();
  Matrix3d vectors = Matrix3d::Identity();
  Vector3d tau = Vector3d::Zero();
};

/// Dense-output geodesic path: position/velocity at any t in [0, t_max]
/// via quintic Hermite interpolation between accepted integrator steps.
class Geodesic {
public:
  struct Segment {
    double t0, t1;
    Vector3d y0, v0, a0, y1, v1, a1;
  };

  void eval(double t, Vector3d& y, Vector3d* v = nullptr) const;
  double t_max() const { return t_end_; }
  const std::vector<Segment>& segments() const { return segs_; }

private:
  std::vector<Segment> segs_;
  double t_end_ = 0.0;
  friend Geodesic integrate_geodesic(const MetricSpec&, const Vector3d&, const Vector3d&,
                                     double, double);
};

/// Solve the geodesic equation from (y0, v0) to time t_end with an
/// adaptive embedded Runge-Kutta pair (abs/rel tolerance `tol`).
Geodesic integrate_geodesic(const MetricSpec& spec, const Vector3d& y0, const Vector3d& v0,
                            double t_end, double tol = 1e-12);

/// Geodesic endpoint exp_base(v) in chart coordinates.
Vector3d exp_map(const MetricSpec& spec, const Vector3d& base, const Vector3d& v);

/// Inverse of exp_map by damped Newton shooting; residual <= 1e-10.
Vector3d log_map(const MetricSpec& spec, const Vector3d& base, const Vector3d& y);

/// The frame at p itself (tau = 0): columns g^{-1/2}(p).
Frame anchor_frame(const MetricSpec& spec, const Vector3d& p);

/// Parallel transport of `anchor` along t -> exp_p(t tau), tau given in
/// anchor-frame components.
Frame parallel_frame(const MetricSpec& spec, const Frame& anchor, const Vector3d& tau);

/// Anchored at the chart origin.
Frame parallel_frame(const MetricSpec& spec, const Vector3d& tau);

/// Normal-coordinate metric expansion through the sigma^4 term
/// (curvature data in the frame of `curv`); oracle only.
Matrix3d lee_parker_metric(const CurvaturePoint& curv, const Vector3d& x, double sigma);

/// Numerically pulled-back rescaled metric at x: components of
/// sigma^{-2} (F_frame o scale_sigma)^* g in the frame chart, computed
/// by finite differences of exp_map (oracle for lee_parker_metric).
Matrix3d pulled_back_metric(const MetricSpec& spec, const Frame& frame, double sigma,
                            const Vector3d& x);

} // namespace foliate
