#pragma once

#include <Eigen/Dense>
#include <array>
#include <map>
#include <string>

#include "foliate/errors.hpp"
#include "foliate/taylor3.hpp"

namespace foliate {

using Eigen::Matrix3d;
using Eigen::Vector3d;

/// Selects a catalog metric with its parameters.
///
/// Catalog ids:
///   euclidean                 (no parameters)
///   round_s3                  k > 0, sectional curvature; normal chart at a point
///   conformal_bump            g = e^{2u} delta, u = eps (a1 y1^2 + a2 y2^2 + a3 y3^2) chi(|y|^2),
///                             chi(s) = exp(-s / w^2), params epsilon, a1..a3, cutoff_width w
///   product_perturbation      reserved, not implemented
struct MetricSpec {
  std::string id = "euclidean";
  std::map<std::string, double> params;
  double chart_radius = 1.0;

  double param(const std::string& key, double fallback) const {
    auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
  }
};

/// Metric components and partial derivatives at a chart point.
/// dN[...] are plain partial derivatives (symmetric in the
/// differentiation indices); d4 is present only when order == 4.
struct MetricJet {
  Vector3d point = Vector3d::Zero();
  int order = 0;
  Matrix3d g = Matrix3d::Identity();
  std::array<Matrix3d, 3> d1{};                 // d1[m](i,j) = g_ij,m
  std::array<std::array<Matrix3d, 3>, 3> d2{};  // d2[m][n]
  std::array<std::array<std::array<Matrix3d, 3>, 3>, 3> d3{};
  std::array<std::array<std::array<std::array<Matrix3d, 3>, 3>, 3>, 3> d4{};

  // see CurvaturePoint: explicit zeroing, Eigen members are not
  // value-initialized by {}
  MetricJet() {
    for (int m = 0; m < 3; ++m) {
      d1[m].setZero();
      for (int n = 0; n < 3; ++n) {
        d2[m][n].setZero();
        for (int p = 0; p < 3; ++p) {
          d3[m][n][p].setZero();
          for (int q = 0; q < 3; ++q) d4[m][n][p][q].setZero();
        }
      }
    }
  }
};

using Tensor3 = std::array<Matrix3d, 3>;                 // T[k](i,j)
using Tensor4 = std::array<std::array<Matrix3d, 3>, 3>;  // T[k][l](i,j)

/// Full curvature data at a point, components in the orthonormal
/// frame `frame` (columns are frame vectors in chart coordinates).
/// riemann(i,p,q,j) follows the convention that makes the normal
/// coordinate expansion g_ij = delta_ij + (1/3) R_ipqj x^p x^q hold;
/// with it, Ric_ij = -R^t_ijt.
struct CurvaturePoint {
  Vector3d point = Vector3d::Zero();
  Matrix3d frame = Matrix3d::Identity();

  std::array<std::array<Matrix3d, 3>, 3> riemann{};  // riemann[i][p](q,j)
  Matrix3d ric = Matrix3d::Zero();
  double sc = 0.0;
  Tensor3 dric{};    // Ric_pq;r -> dric[r](p,q)
  Vector3d dsc = Vector3d::Zero();
  Tensor4 d2ric{};   // Ric_pq;rs -> d2ric[r][s](p,q)  (inner deriv r, outer s)
  Matrix3d d2sc = Matrix3d::Zero();
  Matrix3d lap_ric = Matrix3d::Zero();
  // Covariant derivatives of the Riemann tensor, needed by the
  // normal-coordinate metric expansion.
  std::array<std::array<std::array<Matrix3d, 3>, 3>, 3> driemann{};    // [r][i][p](q,j)
  std::array<std::array<std::array<std::array<Matrix3d, 3>, 3>, 3>, 3> d2riemann{}; // [r][s][i][p](q,j)

  double R(int i, int p, int q, int j) const { return riemann[i][p](q, j); }
  double dR(int i, int p, int q, int j, int r) const { return driemann[r][i][p](q, j); }
  double d2R(int i, int p, int q, int j, int r, int s) const { return d2riemann[r][s][i][p](q, j); }

  // Eigen matrices inside std::array are not zeroed by {}; a freshly
  // constructed CurvaturePoint must describe flat space.
  CurvaturePoint() {
    for (int r = 0; r < 3; ++r) {
      dric[r].setZero();
      for (int s = 0; s < 3; ++s) {
        riemann[r][s].setZero();
        d2ric[r][s].setZero();
        for (int i = 0; i < 3; ++i) {
          driemann[r][s][i].setZero();
          for (int p = 0; p < 3; ++p) d2riemann[r][s][i][p].setZero();
        }
      }
    }
  }
};

/// A located critical point of the scalar curvature.
struct CriticalPoint {
  Vector3d location = Vector3d::Zero();
  Matrix3d hessian = Matrix3d::Zero();   // covariant Hessian of Sc
  double min_abs_eigenvalue = 0.0;
  double gradient_norm = 0.0;
};

void validate_spec(const MetricSpec& spec);

/// Metric components as Taylor3 scalars at y (the evaluation backbone).
std::array<std::array<Taylor3, 3>, 3> metric_taylor(const MetricSpec& spec, const Vector3d& y,
                                                    int order);

MetricJet metric_jet(const MetricSpec& spec, const Vector3d& y, int order);

/// Curvature data from an order-4 jet. If `frame_override` is given it
/// must be g-orthonormal at the point and is used instead of the
/// symmetric-normalization frame g^{-1/2}.
CurvaturePoint curvature_point(const MetricJet& jet, const Matrix3d* frame_override = nullptr);

/// Scalar curvature and its chart-coordinate gradient (order-3 jet data).
double scalar_curvature(const MetricSpec& spec, const Vector3d& y, Vector3d* grad = nullptr);

CriticalPoint find_scalar_critical(const MetricSpec& spec, const Vector3d& guess);

/// g^{-1/2} at y: a deterministic orthonormal frame (columns).
Matrix3d orthonormal_frame(const Matrix3d& g);

/// Christoffel symbols G[k](i,j) = Gamma^k_ij from an order >= 1 jet.
Tensor3 christoffel_symbols(const MetricJet& jet);

/// Pointwise ambient curvature in chart components, for evaluation along
/// embedded surfaces (no frame transport, no second derivatives).
struct ChartCurvature {
  Matrix3d ric;           // Ric_{jk}
  Tensor3 dric;           // dric[m](j,k) = Ric_{jk;m} (covariant)
  double rm[3][3][3][3];  // Rm_{ijkl} = g(R(d_i,d_j)d_k, d_l)
};

/// Needs an order >= 3 jet (order >= 2 fills ric/rm only, dric zero).
ChartCurvature chart_curvature(const MetricJet& jet);

} // namespace foliate
