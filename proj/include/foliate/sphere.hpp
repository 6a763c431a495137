#pragma once

#include <memory>

#include "foliate/metric.hpp"

namespace foliate {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Pseudospectral grid on S²: Gauss-Legendre colatitudes x equispaced
/// longitudes, with real orthonormal spherical-harmonic tables through
/// third theta/phi derivatives.
///
/// Node (i,j) is flattened as i*nph + j. Coefficient layout is
/// idx(l,m) = l*l + l + m; m > 0 holds the cos(m phi) branch, m < 0 the
/// sin(|m| phi) branch (no Condon-Shortley phase), so that
/// x1 = sqrt(4pi/3) Y_{1,1}, x2 = sqrt(4pi/3) Y_{1,-1},
/// x3 = sqrt(4pi/3) Y_{1,0}.
struct SphereGrid {
  int L = 0;
  int nth = 0, nph = 0;
  VectorXd theta;              // size nth (Gauss-Legendre in cos theta)
  VectorXd phi;                // size nph
  VectorXd w;                  // per-node quadrature weight, size nodes()
  MatrixXd xs;                 // nodes() x 3, unit vectors
  // nodes() x ncoef() synthesis tables: value and derivatives
  MatrixXd Y, Yt, Yp, Ytt, Ytp, Ypp, Yttt, Yttp, Ytpp, Yppp;
  MatrixXd analysis;           // ncoef() x nodes() (= Y^T diag(w))

  int nodes() const { return nth * nph; }
  int ncoef() const { return (L + 1) * (L + 1); }
  static int idx(int l, int m) { return l * l + l + m; }
};

using GridPtr = std::shared_ptr<const SphereGrid>;

GridPtr build_grid(int L);

/// Scalar field on S² as real spherical-harmonic coefficients.
struct HarmonicField {
  int L = 0;
  VectorXd a;  // size (L+1)^2

  HarmonicField() = default;
  explicit HarmonicField(int L_) : L(L_), a(VectorXd::Zero((L_ + 1) * (L_ + 1))) {}
  double coeff(int l, int m) const { return a[SphereGrid::idx(l, m)]; }
  double& coeff(int l, int m) { return a[SphereGrid::idx(l, m)]; }
  double norm() const { return a.norm(); }
};

HarmonicField analyze(const SphereGrid& grid, const VectorXd& values);
VectorXd synthesize(const HarmonicField& field, const SphereGrid& grid);
/// Synthesize d^{dt+dp} f / d theta^dt d phi^dp on the grid (dt+dp <= 3).
VectorXd synthesize_deriv(const HarmonicField& field, const SphereGrid& grid, int dt, int dp);

/// Pointwise evaluation at an arbitrary direction (for off-grid use).
double eval_field(const HarmonicField& field, double theta, double phi);

double integrate(const SphereGrid& grid, const VectorXd& values);

HarmonicField laplacian_s2(const HarmonicField& field);

struct KernelSplit {
  double p0 = 0.0;
  Vector3d p1 = Vector3d::Zero();
  HarmonicField rem;
};

/// L²-orthogonal split against span{1} + span{x¹,x²,x³}:
/// p0 = (1/4pi) ∫f, p1_i = (3/4pi) ∫ f x^i, rem = f - p0 - p1·x.
KernelSplit project_kernel(const HarmonicField& field);

/// Inverse of the flat operator (-Δ)(-Δ-2) on the orthogonal complement
/// of its kernel: divide degree-l coefficients by l(l+1)(l(l+1)-2).
HarmonicField invert_flat_willmore(const HarmonicField& rhs);

/// Unique zero-mean graph correction solving the flat fourth-order
/// equation with right side -(4/3)Sc + 4 Ric_pq x^p x^q.
HarmonicField phi_zero(const CurvaturePoint& curv, const SphereGrid& grid);

} // namespace foliate
