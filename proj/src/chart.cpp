#include "foliate/chart.hpp"

#include <algorithm>
#include <cmath>

namespace foliate {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double A21 = 1.0 / 5;
constexpr double A31 = 3.0 / 40, A32 = 9.0 / 40;
constexpr double A41 = 44.0 / 45, A42 = -56.0 / 15, A43 = 32.0 / 9;
constexpr double A51 = 19372.0 / 6561, A52 = -25360.0 / 2187, A53 = 64448.0 / 6561,
                 A54 = -212.0 / 729;
constexpr double A61 = 9017.0 / 3168, A62 = -355.0 / 33, A63 = 46732.0 / 5247,
                 A64 = 49.0 / 176, A65 = -5103.0 / 18656;
constexpr double B1 = 35.0 / 384, B3 = 500.0 / 1113, B4 = 125.0 / 192, B5 = -2187.0 / 6784,
                 B6 = 11.0 / 84;
constexpr double E1 = 71.0 / 57600, E3 = -71.0 / 16695, E4 = 71.0 / 1920,
                 E5 = -17253.0 / 339200, E6 = 22.0 / 525, E7 = -1.0 / 40;
constexpr double C2 = 1.0 / 5, C3 = 3.0 / 10, C4 = 4.0 / 5, C5 = 8.0 / 9;

// Adaptive DOPRI5 on fixed-size state; rhs(t-independent autonomous).
// on_step(t0, t1, x0, x1, f0, f1) is called for every accepted step
// (f = rhs at the endpoints, FSAL makes f1 free).
template <int N, typename Rhs, typename OnStep>
void dopri5(const Rhs& rhs, Eigen::Matrix<double, N, 1> x, double t_end, double tol,
            const OnStep& on_step) {
  using Vec = Eigen::Matrix<double, N, 1>;
  if (t_end == 0.0) return;
  double t = 0.0;
  double h = t_end * 0.05;
  Vec k1 = rhs(x);
  int steps = 0;
  while (t < t_end) {
    if (++steps > 100000) throw IntegratorFailure("step count exceeded");
    if (t + h > t_end) h = t_end - t;
    Vec k2 = rhs(x + h * (A21 * k1));
    Vec k3 = rhs(x + h * (A31 * k1 + A32 * k2));
    Vec k4 = rhs(x + h * (A41 * k1 + A42 * k2 + A43 * k3));
    Vec k5 = rhs(x + h * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4));
    Vec k6 = rhs(x + h * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5));
    Vec x1 = x + h * (B1 * k1 + B3 * k3 + B4 * k4 + B5 * k5 + B6 * k6);
    Vec k7 = rhs(x1);
    Vec err = h * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7);
    double scale = 0.0;
    for (int i = 0; i < N; ++i) {
      double s = tol + tol * std::max(std::abs(x[i]), std::abs(x1[i]));
      scale = std::max(scale, std::abs(err[i]) / s);
    }
    if (scale <= 1.0) {
      on_step(t, t + h, x, x1, k1, k7);
      t += h;
      x = x1;
      k1 = k7; // FSAL
      if (t >= t_end) break;
    }
    double fac = 0.9 * std::pow(std::max(scale, 1e-10), -0.2);
    h *= std::clamp(fac, 0.2, 5.0);
    if (std::abs(h) < 1e-14 * std::abs(t_end))
      throw IntegratorFailure("step size underflow");
    (void)C2; (void)C3; (void)C4; (void)C5;
  }
}

// geodesic RHS: state (y, v), y' = v, v^k' = -Gamma^k_ij v^i v^j
struct GeodesicRhs {
  const MetricSpec& spec;
  Eigen::Matrix<double, 6, 1> operator()(const Eigen::Matrix<double, 6, 1>& s) const {
    Vector3d y = s.head<3>(), v = s.tail<3>();
    if (y.norm() >= spec.chart_radius) throw LeftChart("geodesic left the chart");
    Tensor3 G = christoffel_symbols(metric_jet(spec, y, 1));
    Eigen::Matrix<double, 6, 1> d;
    d.head<3>() = v;
    for (int k = 0; k < 3; ++k) d[3 + k] = -v.dot(G[k] * v);
    return d;
  }
};

} // namespace

void Geodesic::eval(double t, Vector3d& y, Vector3d* v) const {
  if (segs_.empty()) throw IntegratorFailure("empty geodesic");
  if (t < -1e-12 || t > t_end_ * (1.0 + 1e-12) + 1e-12)
    throw OutOfRange("geodesic parameter outside integrated range");
  // binary search for the segment containing t
  int lo = 0, hi = (int)segs_.size() - 1;
  while (lo < hi) {
    int mid = (lo + hi) / 2;
    if (t <= segs_[mid].t1) hi = mid; else lo = mid + 1;
  }
  const Segment& s = segs_[lo];
  const double h = s.t1 - s.t0;
  const double u = std::clamp((t - s.t0) / h, 0.0, 1.0);
  // quintic Hermite basis on [0,1] for values f0,f1, derivs d0,d1 (×h),
  // second derivs c0,c1 (×h²)
  const double u2 = u * u, u3 = u2 * u, u4 = u3 * u, u5 = u4 * u;
  const double H0 = 1 - 10 * u3 + 15 * u4 - 6 * u5;
  const double H1 = u - 6 * u3 + 8 * u4 - 3 * u5;
  const double H2 = 0.5 * u2 - 1.5 * u3 + 1.5 * u4 - 0.5 * u5;
  const double H3 = 0.5 * u3 - u4 + 0.5 * u5;
  const double H4 = -4 * u3 + 7 * u4 - 3 * u5;
  const double H5 = 10 * u3 - 15 * u4 + 6 * u5;
  y = H5 * s.y1 + H0 * s.y0 + h * (H1 * s.v0 + H4 * s.v1) + h * h * (H2 * s.a0 + H3 * s.a1);
  if (v) {
    const double d0 = -30 * u2 + 60 * u3 - 30 * u4;
    const double d1 = 1 - 18 * u2 + 32 * u3 - 15 * u4;
    const double d2 = u - 4.5 * u2 + 6 * u3 - 2.5 * u4;
    const double d3 = 1.5 * u2 - 4 * u3 + 2.5 * u4;
    const double d4 = -12 * u2 + 28 * u3 - 15 * u4;
    const double d5 = 30 * u2 - 60 * u3 + 30 * u4;
    *v = (d5 * s.y1 + d0 * s.y0) / h + (d1 * s.v0 + d4 * s.v1) + h * (d2 * s.a0 + d3 * s.a1);
  }
}

Geodesic integrate_geodesic(const MetricSpec& spec, const Vector3d& y0, const Vector3d& v0,
                            double t_end, double tol) {
  if (y0.norm() >= spec.chart_radius) throw OutOfChart("geodesic start outside chart");
  Geodesic g;
  g.t_end_ = t_end;
  if (t_end == 0.0) {
    Geodesic::Segment s{0, 0, y0, v0, Vector3d::Zero(), y0, v0, Vector3d::Zero()};
    g.segs_.push_back(s);
    return g;
  }
  GeodesicRhs rhs{spec};
  using Vec6 = Eigen::Matrix<double, 6, 1>;
  Vec6 x;
  x << y0, v0;
  dopri5<6>(rhs, x, t_end, tol,
            [&](double t0, double t1, const Vec6& s0, const Vec6& s1, const Vec6& f0,
                const Vec6& f1) {
              Geodesic::Segment s;
              s.t0 = t0;
              s.t1 = t1;
              s.y0 = s0.head<3>();
              s.v0 = s0.tail<3>();
              s.a0 = f0.tail<3>();
              s.y1 = s1.head<3>();
              s.v1 = s1.tail<3>();
              s.a1 = f1.tail<3>();
              g.segs_.push_back(s);
            });
  return g;
}

Vector3d exp_map(const MetricSpec& spec, const Vector3d& base, const Vector3d& v) {
  if (v.norm() == 0.0) return base;
  Geodesic g = integrate_geodesic(spec, base, v, 1.0);
  return g.segments().back().y1;
}

Vector3d log_map(const MetricSpec& spec, const Vector3d& base, const Vector3d& y) {
  Vector3d v = y - base;
  if (v.norm() < 1e-14) return v;
  Vector3d res = exp_map(spec, base, v) - y;
  const double tol = 1e-10;
  Matrix3d J;
  bool have_J = false;
  for (int it = 0; it < 60 && res.norm() > tol; ++it) {
    if (!have_J) {
      const double h = 1e-6 * std::max(1.0, v.norm());
      for (int m = 0; m < 3; ++m) {
        Vector3d vp = v, vm = v;
        vp[m] += h;
        vm[m] -= h;
        J.col(m) = (exp_map(spec, base, vp) - exp_map(spec, base, vm)) / (2.0 * h);
      }
      have_J = true;
    }
    Vector3d step = J.fullPivLu().solve(-res);
    double damp = 1.0;
    Vector3d v_new, res_new;
    int halvings = 0;
    for (;; ++halvings) {
      v_new = v + damp * step;
      res_new = exp_map(spec, base, v_new) - y;
      if (res_new.norm() < res.norm() || halvings >= 10) break;
      damp *= 0.5;
    }
    if (halvings >= 10)
      throw OutOfNormalNeighborhood("log_map cannot reduce shooting residual");
    if (res_new.norm() > 0.25 * res.norm()) have_J = false; // slow progress: refresh
    v = v_new;
    res = res_new;
  }
  if (res.norm() > tol) throw NoConvergence("log_map shooting did not converge");
  return v;
}

Frame anchor_frame(const MetricSpec& spec, const Vector3d& p) {
  Frame f;
  f.base = p;
  f.vectors = orthonormal_frame(metric_jet(spec, p, 0).g);
  f.tau = Vector3d::Zero();
  return f;
}

Frame parallel_frame(const MetricSpec& spec, const Frame& anchor, const Vector3d& tau) {
  Frame out;
  out.tau = tau;
  if (tau.norm() == 0.0) {
    out.base = anchor.base;
    out.vectors = anchor.vectors;
    return out;
  }
  // state: (y, v) geodesic + three transported vectors
  using Vec15 = Eigen::Matrix<double, 15, 1>;
  Vec15 x;
  const Vector3d v0 = anchor.vectors * tau;
  x.head<3>() = anchor.base;
  x.segment<3>(3) = v0;
  for (int a = 0; a < 3; ++a) x.segment<3>(6 + 3 * a) = anchor.vectors.col(a);
  auto rhs = [&spec](const Vec15& s) {
    Vector3d y = s.head<3>(), v = s.segment<3>(3);
    if (y.norm() >= spec.chart_radius) throw LeftChart("transport left the chart");
    Tensor3 G = christoffel_symbols(metric_jet(spec, y, 1));
    Vec15 d;
    d.head<3>() = v;
    for (int k = 0; k < 3; ++k) d[3 + k] = -v.dot(G[k] * v);
    for (int a = 0; a < 3; ++a) {
      Vector3d w = s.segment<3>(6 + 3 * a);
      for (int k = 0; k < 3; ++k) d[6 + 3 * a + k] = -v.dot(G[k] * w);
    }
    return d;
  };
  Vec15 xf = x;
  dopri5<15>(rhs, x, 1.0, 1e-12,
             [&](double, double, const Vec15&, const Vec15& s1, const Vec15&, const Vec15&) {
               xf = s1;
             });
  out.base = xf.head<3>();
  for (int a = 0; a < 3; ++a) out.vectors.col(a) = xf.segment<3>(6 + 3 * a);
  // orthonormality check (invariant, not a re-orthonormalization)
  Matrix3d g = metric_jet(spec, out.base, 0).g;
  if ((out.vectors.transpose() * g * out.vectors - Matrix3d::Identity()).norm() > 1e-9)
    throw IntegratorFailure("transported frame lost orthonormality");
  return out;
}

Frame parallel_frame(const MetricSpec& spec, const Vector3d& tau) {
  return parallel_frame(spec, anchor_frame(spec, Vector3d::Zero()), tau);
}

Matrix3d lee_parker_metric(const CurvaturePoint& curv, const Vector3d& x, double sigma) {
  Matrix3d g = Matrix3d::Identity();
  const double s2 = sigma * sigma, s3 = s2 * sigma, s4 = s3 * sigma;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double v = 0.0;
      for (int p = 0; p < 3; ++p)
        for (int q = 0; q < 3; ++q) {
          double t2 = curv.R(i, p, q, j);
          double t3 = 0.0, t4 = 0.0;
          for (int r = 0; r < 3; ++r) {
            t3 += curv.dR(i, p, q, j, r) * x[r];
            for (int s = 0; s < 3; ++s) {
              double quad = 0.0;
              for (int t = 0; t < 3; ++t) quad += curv.R(i, p, q, t) * curv.R(j, r, s, t);
              t4 += (curv.d2R(i, p, q, j, r, s) / 20.0 + (2.0 / 45.0) * quad) * x[r] * x[s];
            }
          }
          v += (s2 / 3.0 * t2 + s3 / 6.0 * t3 + s4 * t4) * x[p] * x[q];
        }
      g(i, j) += v;
    }
  return g;
}

Matrix3d pulled_back_metric(const MetricSpec& spec, const Frame& frame, double sigma,
                            const Vector3d& x) {
  // F(x) = exp_base(sigma x^k e_k); dF/dx^i by 4th-order central differences
  auto F = [&](const Vector3d& z) {
    return exp_map(spec, frame.base, sigma * (frame.vectors * z));
  };
  const double h = 1e-2;
  Matrix3d dF;
  for (int i = 0; i < 3; ++i) {
    Vector3d e = Vector3d::Unit(i);
    dF.col(i) = (-F(x + 2 * h * e) + 8 * F(x + h * e) - 8 * F(x - h * e) + F(x - 2 * h * e)) /
                (12.0 * h);
  }
  Matrix3d g = metric_jet(spec, F(x), 0).g;
  return (dF.transpose() * g * dF) / (sigma * sigma);
}

} // namespace foliate
