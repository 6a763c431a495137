#include "foliate/sphere.hpp"

#include <cmath>

namespace foliate {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Gauss-Legendre nodes/weights on [-1, 1] by Newton on P_n.
void gauss_legendre(int n, VectorXd& x, VectorXd& w) {
  x.resize(n);
  w.resize(n);
  for (int i = 0; i < n; ++i) {
    double z = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        double p2 = p1;
        p1 = p0;
        p0 = ((2 * j + 1) * z * p1 - j * p2) / (j + 1);
      }
      pp = n * (z * p0 - p1) / (z * z - 1.0);
      double dz = p0 / pp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    x[i] = z;
    w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
  }
}

// Fully normalized associated Legendre values and first three theta
// derivatives at colatitude theta, for all l <= L, m <= l (no
// Condon-Shortley phase): int_0^pi Pbar^2 sin(theta) d theta = 1.
// Output arrays indexed [l][m] flattened as l*(l+1)/2 + m.
struct LegendreTable {
  int L;
  std::vector<double> p, d1, d2, d3;
  static int at(int l, int m) { return l * (l + 1) / 2 + m; }
};

LegendreTable legendre_table(int L, double theta) {
  LegendreTable T;
  T.L = L;
  const int n = (L + 1) * (L + 2) / 2;
  T.p.assign(n, 0.0);
  T.d1.assign(n, 0.0);
  T.d2.assign(n, 0.0);
  T.d3.assign(n, 0.0);
  const double x = std::cos(theta), s = std::sin(theta);
  // values
  T.p[LegendreTable::at(0, 0)] = std::sqrt(0.5);
  for (int m = 1; m <= L; ++m)
    T.p[LegendreTable::at(m, m)] =
        T.p[LegendreTable::at(m - 1, m - 1)] * s * std::sqrt((2.0 * m + 1) / (2.0 * m));
  for (int m = 0; m <= L; ++m) {
    if (m + 1 <= L)
      T.p[LegendreTable::at(m + 1, m)] =
          std::sqrt(2.0 * m + 3) * x * T.p[LegendreTable::at(m, m)];
    for (int l = m + 2; l <= L; ++l) {
      double al = std::sqrt((4.0 * l * l - 1.0) / (double(l) * l - double(m) * m));
      double al1 =
          std::sqrt((4.0 * (l - 1.0) * (l - 1.0) - 1.0) / ((l - 1.0) * (l - 1.0) - double(m) * m));
      T.p[LegendreTable::at(l, m)] =
          al * (x * T.p[LegendreTable::at(l - 1, m)] - T.p[LegendreTable::at(l - 2, m)] / al1);
    }
  }
  // first derivative: d/dtheta Pbar_l^m = (l x Pbar_l^m - c_l^m Pbar_{l-1}^m)/sin
  for (int l = 0; l <= L; ++l)
    for (int m = 0; m <= l; ++m) {
      double c = (l > m) ? std::sqrt((double(l) * l - double(m) * m) * (2.0 * l + 1) / (2.0 * l - 1))
                         : 0.0;
      double below = (l > 0 && m <= l - 1) ? T.p[LegendreTable::at(l - 1, m)] : 0.0;
      T.d1[LegendreTable::at(l, m)] = (l * x * T.p[LegendreTable::at(l, m)] - c * below) / s;
    }
  // second/third via the associated Legendre ODE:
  //   p'' = -cot(theta) p' - (l(l+1) - m^2/sin^2) p
  const double cot = x / s, csc2 = 1.0 / (s * s);
  for (int l = 0; l <= L; ++l)
    for (int m = 0; m <= l; ++m) {
      const int k = LegendreTable::at(l, m);
      const double ll = double(l) * (l + 1), mm = double(m) * m;
      T.d2[k] = -cot * T.d1[k] - (ll - mm * csc2) * T.p[k];
      T.d3[k] = -cot * T.d2[k] + csc2 * T.d1[k] - (ll - mm * csc2) * T.d1[k] -
                2.0 * mm * cot * csc2 * T.p[k];
    }
  return T;
}

} // namespace

GridPtr build_grid(int L) {
  if (L < 8) throw LTooSmall("harmonic degree must be at least 8");
  auto g = std::make_shared<SphereGrid>();
  g->L = L;
  g->nth = L + 1;
  g->nph = 2 * L + 2;
  VectorXd gx, gw;
  gauss_legendre(g->nth, gx, gw);
  g->theta.resize(g->nth);
  for (int i = 0; i < g->nth; ++i) g->theta[i] = std::acos(gx[i]);
  g->phi.resize(g->nph);
  for (int j = 0; j < g->nph; ++j) g->phi[j] = 2.0 * kPi * j / g->nph;

  const int N = g->nodes(), NC = g->ncoef();
  g->w.resize(N);
  g->xs.resize(N, 3);
  g->Y.resize(N, NC);
  g->Yt.resize(N, NC);
  g->Yp.resize(N, NC);
  g->Ytt.resize(N, NC);
  g->Ytp.resize(N, NC);
  g->Ypp.resize(N, NC);
  g->Yttt.resize(N, NC);
  g->Yttp.resize(N, NC);
  g->Ytpp.resize(N, NC);
  g->Yppp.resize(N, NC);

  const double wphi = 2.0 * kPi / g->nph;
  for (int i = 0; i < g->nth; ++i) {
    LegendreTable T = legendre_table(L, g->theta[i]);
    const double st = std::sin(g->theta[i]), ct = std::cos(g->theta[i]);
    for (int j = 0; j < g->nph; ++j) {
      const int n = i * g->nph + j;
      g->w[n] = gw[i] * wphi;
      const double ph = g->phi[j];
      g->xs(n, 0) = st * std::cos(ph);
      g->xs(n, 1) = st * std::sin(ph);
      g->xs(n, 2) = ct;
      for (int l = 0; l <= L; ++l)
        for (int m = -l; m <= l; ++m) {
          const int c = SphereGrid::idx(l, m);
          const int am = std::abs(m);
          const int k = LegendreTable::at(l, am);
          // azimuthal factor and phi-derivatives
          double f[4];
          if (m == 0) {
            f[0] = 1.0 / std::sqrt(2.0 * kPi);
            f[1] = f[2] = f[3] = 0.0;
          } else {
            const double nrm = 1.0 / std::sqrt(kPi);
            const double cm = std::cos(am * ph), sm = std::sin(am * ph);
            if (m > 0) {
              f[0] = nrm * cm;
              f[1] = -nrm * am * sm;
              f[2] = -nrm * am * am * cm;
              f[3] = nrm * am * am * am * sm;
            } else {
              f[0] = nrm * sm;
              f[1] = nrm * am * cm;
              f[2] = -nrm * am * am * sm;
              f[3] = -nrm * am * am * am * cm;
            }
          }
          g->Y(n, c) = T.p[k] * f[0];
          g->Yt(n, c) = T.d1[k] * f[0];
          g->Yp(n, c) = T.p[k] * f[1];
          g->Ytt(n, c) = T.d2[k] * f[0];
          g->Ytp(n, c) = T.d1[k] * f[1];
          g->Ypp(n, c) = T.p[k] * f[2];
          g->Yttt(n, c) = T.d3[k] * f[0];
          g->Yttp(n, c) = T.d2[k] * f[1];
          g->Ytpp(n, c) = T.d1[k] * f[2];
          g->Yppp(n, c) = T.p[k] * f[3];
        }
    }
  }
  g->analysis = g->Y.transpose() * g->w.asDiagonal();
  return g;
}

HarmonicField analyze(const SphereGrid& grid, const VectorXd& values) {
  if (values.size() != grid.nodes())
    throw ShapeMismatch("value vector does not match the grid");
  HarmonicField f(grid.L);
  f.a = grid.analysis * values;
  return f;
}

VectorXd synthesize(const HarmonicField& field, const SphereGrid& grid) {
  if (field.a.size() != grid.ncoef())
    throw ShapeMismatch("coefficient vector does not match the grid");
  return grid.Y * field.a;
}

VectorXd synthesize_deriv(const HarmonicField& field, const SphereGrid& grid, int dt, int dp) {
  if (field.a.size() != grid.ncoef())
    throw ShapeMismatch("coefficient vector does not match the grid");
  const MatrixXd* tab = nullptr;
  if (dt == 0 && dp == 0) tab = &grid.Y;
  else if (dt == 1 && dp == 0) tab = &grid.Yt;
  else if (dt == 0 && dp == 1) tab = &grid.Yp;
  else if (dt == 2 && dp == 0) tab = &grid.Ytt;
  else if (dt == 1 && dp == 1) tab = &grid.Ytp;
  else if (dt == 0 && dp == 2) tab = &grid.Ypp;
  else if (dt == 3 && dp == 0) tab = &grid.Yttt;
  else if (dt == 2 && dp == 1) tab = &grid.Yttp;
  else if (dt == 1 && dp == 2) tab = &grid.Ytpp;
  else if (dt == 0 && dp == 3) tab = &grid.Yppp;
  else throw OrderUnsupported("derivative order beyond 3 not tabulated");
  return *tab * field.a;
}

double eval_field(const HarmonicField& field, double theta, double phi) {
  const int L = field.L;
  LegendreTable T = legendre_table(L, theta);
  double v = 0.0;
  for (int l = 0; l <= L; ++l)
    for (int m = -l; m <= l; ++m) {
      const double a = field.a[SphereGrid::idx(l, m)];
      if (a == 0.0) continue;
      const int am = std::abs(m);
      double f;
      if (m == 0) f = 1.0 / std::sqrt(2.0 * kPi);
      else if (m > 0) f = std::cos(am * phi) / std::sqrt(kPi);
      else f = std::sin(am * phi) / std::sqrt(kPi);
      v += a * T.p[LegendreTable::at(l, am)] * f;
    }
  return v;
}

double integrate(const SphereGrid& grid, const VectorXd& values) {
  if (values.size() != grid.nodes()) throw ShapeMismatch("value vector does not match the grid");
  return grid.w.dot(values);
}

HarmonicField laplacian_s2(const HarmonicField& field) {
  HarmonicField out(field.L);
  for (int l = 0; l <= field.L; ++l) {
    const double ev = -double(l) * (l + 1);
    for (int m = -l; m <= l; ++m)
      out.a[SphereGrid::idx(l, m)] = ev * field.a[SphereGrid::idx(l, m)];
  }
  return out;
}

KernelSplit project_kernel(const HarmonicField& field) {
  KernelSplit ks;
  ks.p0 = field.coeff(0, 0) / std::sqrt(4.0 * kPi);
  const double c = std::sqrt(3.0 / (4.0 * kPi));
  ks.p1 = Vector3d(c * field.coeff(1, 1), c * field.coeff(1, -1), c * field.coeff(1, 0));
  ks.rem = field;
  ks.rem.coeff(0, 0) = 0.0;
  ks.rem.coeff(1, -1) = 0.0;
  ks.rem.coeff(1, 0) = 0.0;
  ks.rem.coeff(1, 1) = 0.0;
  return ks;
}

HarmonicField invert_flat_willmore(const HarmonicField& rhs) {
  const double scale = rhs.norm();
  if (scale < 1e-12) return HarmonicField(rhs.L);  // zero up to roundoff
  double low = 0.0;
  for (int c = 0; c < 4 && c < rhs.a.size(); ++c) low = std::max(low, std::abs(rhs.a[c]));
  if (low > 1e-10 * scale)
    throw KernelComponent("right side has degree <= 1 content");
  HarmonicField out(rhs.L);
  for (int l = 2; l <= rhs.L; ++l) {
    const double ll = double(l) * (l + 1);
    const double ev = ll * (ll - 2.0);
    for (int m = -l; m <= l; ++m)
      out.a[SphereGrid::idx(l, m)] = rhs.a[SphereGrid::idx(l, m)] / ev;
  }
  return out;
}

HarmonicField phi_zero(const CurvaturePoint& curv, const SphereGrid& grid) {
  VectorXd rhs(grid.nodes());
  for (int n = 0; n < grid.nodes(); ++n) {
    Vector3d x = grid.xs.row(n);
    rhs[n] = -4.0 / 3.0 * curv.sc + 4.0 * x.dot(curv.ric * x);
  }
  return invert_flat_willmore(analyze(grid, rhs));
}

} // namespace foliate
