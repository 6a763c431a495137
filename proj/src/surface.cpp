#include "foliate/surface.hpp"

#include <cmath>

#include "foliate/errors.hpp"

namespace foliate {

GeodesicFan build_fan(const MetricSpec& spec, const Frame& frame, GridPtr grid,
                      double t_max) {
  GeodesicFan fan;
  fan.frame = frame;
  fan.grid = std::move(grid);
  fan.t_max = t_max;
  const int n = fan.grid->nodes();
  fan.rays.reserve(n);
  for (int i = 0; i < n; ++i) {
    const Vector3d v = frame.vectors * fan.grid->xs.row(i).transpose();
    fan.rays.push_back(integrate_geodesic(spec, frame.base, v, t_max));
  }
  return fan;
}

namespace {

constexpr int kTT = 0, kTP = 1, kPP = 2;

} // namespace

SurfaceState embed_surface(const MetricSpec& spec, const Frame& frame, double r,
                           const HarmonicField& phi, GridPtr grid,
                           const GeodesicFan* fan) {
  if (phi.L != grid->L) throw ShapeMismatch("graph function band limit does not match grid");
  const int N = grid->nodes();

  SurfaceState st;
  st.spec = spec;
  st.frame = frame;
  st.grid = grid;
  st.r = r;
  st.phi = phi;

  const VectorXd phig = synthesize(phi, *grid);
  VectorXd rho(N);
  for (int n = 0; n < N; ++n) {
    const double s = 1.0 + r * r * phig[n];
    if (s <= 0.5) throw GraphDegenerate("graph factor 1 + r^2 phi dropped below 1/2");
    rho[n] = r * s;
  }
  const double rho_max = rho.maxCoeff();

  GeodesicFan local;
  if (fan) {
    if (fan->grid.get() != grid.get()) throw ShapeMismatch("fan built on a different grid");
    if ((fan->frame.base - frame.base).norm() + (fan->frame.vectors - frame.vectors).norm() >
        1e-14)
      throw ShapeMismatch("fan built on a different frame");
    if (fan->t_max < rho_max) throw OutOfRange("fan rays shorter than the requested radius");
  } else {
    local = build_fan(spec, frame, grid, rho_max);
    fan = &local;
  }

  st.position.resize(N, 3);
  Vector3d y;
  for (int n = 0; n < N; ++n) {
    fan->rays[n].eval(rho[n], y);
    st.position.row(n) = y.transpose();
  }

  // Chart components of the embedding are smooth scalars on S^2;
  // everything tensorial is assembled pointwise from their spectral
  // derivatives (coordinate components of tensors are pole-singular and
  // are never differentiated directly).
  HarmonicField cy[3];
  MatrixXd ytt(N, 3), ytp(N, 3), ypp(N, 3);
  st.tan_t.resize(N, 3);
  st.tan_p.resize(N, 3);
  for (int i = 0; i < 3; ++i) {
    cy[i] = analyze(*grid, st.position.col(i));
    st.tan_t.col(i) = synthesize_deriv(cy[i], *grid, 1, 0);
    st.tan_p.col(i) = synthesize_deriv(cy[i], *grid, 0, 1);
    ytt.col(i) = synthesize_deriv(cy[i], *grid, 2, 0);
    ytp.col(i) = synthesize_deriv(cy[i], *grid, 1, 1);
    ypp.col(i) = synthesize_deriv(cy[i], *grid, 0, 2);
  }

  st.normal.resize(N, 3);
  for (auto* f : {&st.mean_curv, &st.traceless_sq, &st.shape_det, &st.ric_nn, &st.dric_nnn,
                  &st.area_element})
    f->resize(N);
  for (int ab = 0; ab < 3; ++ab) {
    st.h[ab].resize(N);
    st.hinv[ab].resize(N);
    st.second_ff[ab].resize(N);
    st.Tten[ab].resize(N);
    st.gamma[0][ab].resize(N);
    st.gamma[1][ab].resize(N);
  }
  st.omega[0].resize(N);
  st.omega[1].resize(N);

  for (int n = 0; n < N; ++n) {
    const Vector3d pos = st.position.row(n).transpose();
    const MetricJet jet = metric_jet(spec, pos, 3);
    const Tensor3 G = christoffel_symbols(jet);
    const ChartCurvature cc = chart_curvature(jet);
    const Matrix3d ginv = jet.g.inverse();

    const Vector3d tt = st.tan_t.row(n).transpose(), tp = st.tan_p.row(n).transpose();
    const Vector3d dth[2] = {tt, tp};
    const Vector3d dd[3] = {Vector3d(ytt.row(n).transpose()), Vector3d(ytp.row(n).transpose()),
                            Vector3d(ypp.row(n).transpose())};

    const double htt = tt.dot(jet.g * tt);
    const double htp = tt.dot(jet.g * tp);
    const double hpp = tp.dot(jet.g * tp);
    const double det = htt * hpp - htp * htp;
    if (det <= 0.0) throw GraphDegenerate("induced metric degenerated");
    st.h[kTT][n] = htt;
    st.h[kTP][n] = htp;
    st.h[kPP][n] = hpp;
    st.hinv[kTT][n] = hpp / det;
    st.hinv[kTP][n] = -htp / det;
    st.hinv[kPP][n] = htt / det;
    st.area_element[n] = std::sqrt(det);

    // Outward normal: the covector eps_ijk tt^j tp^k annihilates the
    // tangents; raise and normalize.
    const Vector3d ncov = tt.cross(tp);
    Vector3d nu = ginv * ncov;
    nu /= std::sqrt(ncov.dot(nu));
    st.normal.row(n) = nu.transpose();
    const Vector3d gnu = jet.g * nu;

    // A_ab = -g(D_a tan_b, nu) with the ambient connection.
    double A[3];
    for (int ab = 0; ab < 3; ++ab) {
      const int a = ab == kPP ? 1 : 0, b = ab == kTT ? 0 : 1;
      Vector3d c = dd[ab];
      for (int k = 0; k < 3; ++k) c[k] += dth[a].dot(G[k] * dth[b]);
      A[ab] = -c.dot(gnu);
      st.second_ff[ab][n] = A[ab];
    }
    const double H = st.hinv[kTT][n] * A[kTT] + 2.0 * st.hinv[kTP][n] * A[kTP] +
                     st.hinv[kPP][n] * A[kPP];
    st.mean_curv[n] = H;
    st.shape_det[n] = (A[kTT] * A[kPP] - A[kTP] * A[kTP]) / det;
    {
      const double att = A[kTT] - 0.5 * H * htt;
      const double atp = A[kTP] - 0.5 * H * htp;
      const double app = A[kPP] - 0.5 * H * hpp;
      const double i00 = st.hinv[kTT][n], i01 = st.hinv[kTP][n], i11 = st.hinv[kPP][n];
      // trace of (h^{-1} Åh^{-1} Å)
      const double m00 = i00 * att + i01 * atp, m01 = i00 * atp + i01 * app;
      const double m10 = i01 * att + i11 * atp, m11 = i01 * atp + i11 * app;
      st.traceless_sq[n] = m00 * m00 + 2.0 * m01 * m10 + m11 * m11;
    }

    // d_a h_bc from second embedding derivatives and the metric jet,
    // then the induced Christoffels.
    double dh[2][3];
    auto dgdir = [&](const Vector3d& v) {
      Matrix3d m = v[0] * jet.d1[0] + v[1] * jet.d1[1] + v[2] * jet.d1[2];
      return m;
    };
    const Matrix3d dgt = dgdir(tt), dgp = dgdir(tp);
    dh[0][kTT] = tt.dot(dgt * tt) + 2.0 * dd[kTT].dot(jet.g * tt);
    dh[0][kTP] = tt.dot(dgt * tp) + dd[kTT].dot(jet.g * tp) + tt.dot(jet.g * dd[kTP]);
    dh[0][kPP] = tp.dot(dgt * tp) + 2.0 * dd[kTP].dot(jet.g * tp);
    dh[1][kTT] = tt.dot(dgp * tt) + 2.0 * dd[kTP].dot(jet.g * tt);
    dh[1][kTP] = tt.dot(dgp * tp) + dd[kTP].dot(jet.g * tp) + tt.dot(jet.g * dd[kPP]);
    dh[1][kPP] = tp.dot(dgp * tp) + 2.0 * dd[kPP].dot(jet.g * tp);
    auto pair = [](int a, int b) { return a + b; };  // (0,0)->tt, (0,1)->tp, (1,1)->pp
    const double hi[2][2] = {{st.hinv[kTT][n], st.hinv[kTP][n]},
                             {st.hinv[kTP][n], st.hinv[kPP][n]}};
    for (int c = 0; c < 2; ++c)
      for (int a = 0; a < 2; ++a)
        for (int b = a; b < 2; ++b) {
          double v = 0.0;
          for (int d = 0; d < 2; ++d)
            v += 0.5 * hi[c][d] *
                 (dh[a][pair(d, b)] + dh[b][pair(d, a)] - dh[d][pair(a, b)]);
          st.gamma[c][pair(a, b)][n] = v;
        }

    st.ric_nn[n] = nu.dot(cc.ric * nu);
    double dn = 0.0;
    for (int m = 0; m < 3; ++m) dn += nu[m] * nu.dot(cc.dric[m] * nu);
    st.dric_nnn[n] = dn;
    st.omega[0][n] = nu.dot(cc.ric * tt);
    st.omega[1][n] = nu.dot(cc.ric * tp);
    for (int ab = 0; ab < 3; ++ab) {
      const int a = ab == kPP ? 1 : 0, b = ab == kTT ? 0 : 1;
      double t4 = 0.0;
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
          for (int k = 0; k < 3; ++k)
            for (int l = 0; l < 3; ++l)
              t4 += cc.rm[i][j][k][l] * dth[a][i] * nu[j] * nu[k] * dth[b][l];
      st.Tten[ab][n] = t4;
    }
  }

  st.mean_curv_coef = analyze(*grid, st.mean_curv);
  const VectorXd Ht = synthesize_deriv(st.mean_curv_coef, *grid, 1, 0);
  const VectorXd Hp = synthesize_deriv(st.mean_curv_coef, *grid, 0, 1);
  const VectorXd Htt = synthesize_deriv(st.mean_curv_coef, *grid, 2, 0);
  const VectorXd Htp = synthesize_deriv(st.mean_curv_coef, *grid, 1, 1);
  const VectorXd Hpp = synthesize_deriv(st.mean_curv_coef, *grid, 0, 2);
  st.lap_H.resize(N);
  for (int n = 0; n < N; ++n) {
    const double d2[3] = {Htt[n], Htp[n], Hpp[n]};
    double v = 0.0;
    for (int ab = 0; ab < 3; ++ab) {
      const double mult = ab == kTP ? 2.0 : 1.0;
      v += mult * st.hinv[ab][n] *
           (d2[ab] - st.gamma[0][ab][n] * Ht[n] - st.gamma[1][ab][n] * Hp[n]);
    }
    st.lap_H[n] = v;
  }
  return st;
}

HarmonicField willmore_residual(const SurfaceState& st, double lambda) {
  const double r3 = st.r * st.r * st.r;
  const VectorXd v =
      r3 * (st.lap_H.array() +
            st.mean_curv.array() * (st.traceless_sq.array() + st.ric_nn.array() + lambda))
               .matrix();
  return analyze(*st.grid, v);
}

double willmore_energy(const SurfaceState& st) {
  const int N = st.grid->nodes();
  VectorXd f(N);
  for (int n = 0; n < N; ++n) {
    const double s = std::sin(st.grid->theta[n / st.grid->nph]);
    f[n] = 0.25 * st.mean_curv[n] * st.mean_curv[n] * st.area_element[n] / s;
  }
  return integrate(*st.grid, f);
}

double surface_area(const SurfaceState& st) {
  const int N = st.grid->nodes();
  VectorXd f(N);
  for (int n = 0; n < N; ++n)
    f[n] = st.area_element[n] / std::sin(st.grid->theta[n / st.grid->nph]);
  return integrate(*st.grid, f);
}

double codazzi_residual(const SurfaceState& st) {
  const SphereGrid& grid = *st.grid;
  const int N = grid.nodes();

  // Spectral derivatives of the smooth chart-component fields.
  HarmonicField cn[3], cy[3];
  MatrixXd nt(N, 3), np(N, 3);
  MatrixXd ytt(N, 3), ytp(N, 3), ypp(N, 3);
  MatrixXd yttt(N, 3), yttp(N, 3), ytpp(N, 3), yppp(N, 3);
  for (int i = 0; i < 3; ++i) {
    cn[i] = analyze(grid, st.normal.col(i));
    nt.col(i) = synthesize_deriv(cn[i], grid, 1, 0);
    np.col(i) = synthesize_deriv(cn[i], grid, 0, 1);
    cy[i] = analyze(grid, st.position.col(i));
    ytt.col(i) = synthesize_deriv(cy[i], grid, 2, 0);
    ytp.col(i) = synthesize_deriv(cy[i], grid, 1, 1);
    ypp.col(i) = synthesize_deriv(cy[i], grid, 0, 2);
    yttt.col(i) = synthesize_deriv(cy[i], grid, 3, 0);
    yttp.col(i) = synthesize_deriv(cy[i], grid, 2, 1);
    ytpp.col(i) = synthesize_deriv(cy[i], grid, 1, 2);
    yppp.col(i) = synthesize_deriv(cy[i], grid, 0, 3);
  }
  const VectorXd Ht = synthesize_deriv(st.mean_curv_coef, grid, 1, 0);
  const VectorXd Hp = synthesize_deriv(st.mean_curv_coef, grid, 0, 1);

  double worst = 0.0;
  for (int n = 0; n < N; ++n) {
    const Vector3d pos = st.position.row(n).transpose();
    const MetricJet jet = metric_jet(st.spec, pos, 2);
    const Tensor3 G = christoffel_symbols(jet);
    std::array<Tensor3, 3> dG;
    {
      // d_m Gamma^k_ij = d(g^{-1}) [ij,l] + g^{-1} d[ij,l].
      const Matrix3d ginv = jet.g.inverse();
      std::array<Matrix3d, 3> dgi;
      for (int m = 0; m < 3; ++m) dgi[m] = -ginv * jet.d1[m] * ginv;
      auto low = [&](int i, int j, int l) {
        return 0.5 * (jet.d1[i](j, l) + jet.d1[j](i, l) - jet.d1[l](i, j));
      };
      auto dlow = [&](int i, int j, int l, int m) {
        return 0.5 * (jet.d2[i][m](j, l) + jet.d2[j][m](i, l) - jet.d2[l][m](i, j));
      };
      for (int m = 0; m < 3; ++m)
        for (int k = 0; k < 3; ++k)
          for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
              double v = 0.0;
              for (int l = 0; l < 3; ++l)
                v += dgi[m](k, l) * low(i, j, l) + ginv(k, l) * dlow(i, j, l, m);
              dG[m][k](i, j) = v;
            }
    }

    const Vector3d tt = st.tan_t.row(n).transpose(), tp = st.tan_p.row(n).transpose();
    const Vector3d dth[2] = {tt, tp};
    const Vector3d dd[3] = {Vector3d(ytt.row(n).transpose()), Vector3d(ytp.row(n).transpose()),
                            Vector3d(ypp.row(n).transpose())};
    const Vector3d d3[4] = {Vector3d(yttt.row(n).transpose()), Vector3d(yttp.row(n).transpose()),
                            Vector3d(ytpp.row(n).transpose()), Vector3d(yppp.row(n).transpose())};
    const Vector3d nu = st.normal.row(n).transpose();
    const Vector3d dnu[2] = {Vector3d(nt.row(n).transpose()), Vector3d(np.row(n).transpose())};
    const Vector3d gnu = jet.g * nu;
    const double H = st.mean_curv[n];
    const double dH[2] = {Ht[n], Hp[n]};

    auto pair2 = [](int a, int b) { return a + b; };
    auto triple = [](int a, int b, int c) { return a + b + c; };  // ttt..ppp

    // d_c A_ab with A_ab = -(dd_ab + Gamma(t_a, t_b)) . g nu.
    double dA[2][3];
    for (int c = 0; c < 2; ++c)
      for (int a = 0; a < 2; ++a)
        for (int b = a; b < 2; ++b) {
          Vector3d vec = dd[pair2(a, b)];
          for (int k = 0; k < 3; ++k) vec[k] += dth[a].dot(G[k] * dth[b]);
          Vector3d dvec = d3[triple(a, b, c)];
          for (int k = 0; k < 3; ++k) {
            dvec[k] += dd[pair2(a, c)].dot(G[k] * dth[b]) +
                       dth[a].dot(G[k] * dd[pair2(b, c)]);
            for (int m = 0; m < 3; ++m)
              dvec[k] += dth[c][m] * dth[a].dot(dG[m][k] * dth[b]);
          }
          const Matrix3d dgc = dth[c][0] * jet.d1[0] + dth[c][1] * jet.d1[1] +
                               dth[c][2] * jet.d1[2];
          dA[c][pair2(a, b)] =
              -(dvec.dot(gnu) + vec.dot(dgc * nu) + vec.dot(jet.g * dnu[c]));
        }

    // d_c h_ab (as in embed_surface).
    double dh[2][3];
    for (int c = 0; c < 2; ++c) {
      const Matrix3d dgc =
          dth[c][0] * jet.d1[0] + dth[c][1] * jet.d1[1] + dth[c][2] * jet.d1[2];
      for (int a = 0; a < 2; ++a)
        for (int b = a; b < 2; ++b)
          dh[c][pair2(a, b)] = dth[a].dot(dgc * dth[b]) +
                               dd[pair2(a, c)].dot(jet.g * dth[b]) +
                               dth[a].dot(jet.g * dd[pair2(b, c)]);
    }

    const double hi[2][2] = {{st.hinv[kTT][n], st.hinv[kTP][n]},
                             {st.hinv[kTP][n], st.hinv[kPP][n]}};
    const double hm[2][2] = {{st.h[kTT][n], st.h[kTP][n]},
                             {st.h[kTP][n], st.h[kPP][n]}};
    auto gam = [&](int c, int a, int b) { return st.gamma[c][pair2(a, b)][n]; };
    auto Aab = [&](int a, int b) { return st.second_ff[pair2(a, b)][n]; };
    auto Aring = [&](int a, int b) { return Aab(a, b) - 0.5 * H * hm[a][b]; };
    auto dAring = [&](int c, int a, int b) {
      return dA[c][pair2(a, b)] - 0.5 * (dH[c] * hm[a][b] + H * dh[c][pair2(a, b)]);
    };

    double res[2];
    for (int a = 0; a < 2; ++a) {
      // (div Å)_a = h^{bc} (d_b Å_ca - gamma^d_bc Å_da - gamma^d_ba Å_cd)
      double div = 0.0;
      for (int b = 0; b < 2; ++b)
        for (int c = 0; c < 2; ++c) {
          double v = dAring(b, c, a);
          for (int d = 0; d < 2; ++d)
            v -= gam(d, b, c) * Aring(d, a) + gam(d, b, a) * Aring(c, d);
          div += hi[b][c] * v;
        }
      res[a] = div - 0.5 * dH[a] - st.omega[a][n];
    }
    // Pointwise h-norm of the one-form residual.
    double sq = 0.0;
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) sq += hi[a][b] * res[a] * res[b];
    worst = std::max(worst, std::sqrt(std::max(0.0, sq)));
  }
  return worst;
}

namespace {

// Shared contraction helpers for the closed-form expansions; all
// curvature components are in the orthonormal frame of `curv`.
struct ExpansionTerms {
  const CurvaturePoint& c;
  Vector3d x;

  double ric_xx() const { return x.dot(c.ric * x); }
  double dsc_x() const { return c.dsc.dot(x); }
  double dric_xxx() const {
    double v = 0.0;
    for (int s = 0; s < 3; ++s) v += x[s] * x.dot(c.dric[s] * x);
    return v;
  }
  double d2sc_xx() const { return x.dot(c.d2sc * x); }
  double lap_ric_xx() const { return x.dot(c.lap_ric * x); }
  double ric_sq_xx() const { return x.dot(c.ric * c.ric * x); }
  // Ric^{kl} R_{kxxl} = sum_{kl} Ric_kl R(k,p,q,l) x^p x^q
  double ric_r_xx() const {
    double v = 0.0;
    for (int k = 0; k < 3; ++k)
      for (int l = 0; l < 3; ++l) {
        double a = 0.0;
        for (int p = 0; p < 3; ++p)
          for (int q = 0; q < 3; ++q) a += c.R(k, p, q, l) * x[p] * x[q];
        v += c.ric(k, l) * a;
      }
    return v;
  }
  // Quadratic Riemann invariant from tracing the Hessian of the
  // quartic R(i,p,q,t)R(i,r,s,t)x^px^qx^rx^s: the four slot assignments
  // give two copies each of the straight and mixed contractions,
  // (1/2) sum_{klm} [ (R(k,l,p,m)x^p)^2 + R(k,l,p,m)x^p R(k,q,l,m)x^q ].
  // (Vanishes appropriately on constant curvature; the straight
  // contraction alone does not.)
  double rr_xx() const {
    double v = 0.0;
    for (int k = 0; k < 3; ++k)
      for (int l = 0; l < 3; ++l)
        for (int m = 0; m < 3; ++m) {
          double a = 0.0, b = 0.0;
          for (int p = 0; p < 3; ++p) {
            a += c.R(k, l, p, m) * x[p];
            b += c.R(k, p, l, m) * x[p];
          }
          v += 0.5 * (a * a + a * b);
        }
    return v;
  }
  double d2ric_xxxx() const {
    double v = 0.0;
    for (int r = 0; r < 3; ++r)
      for (int s = 0; s < 3; ++s) v += x[r] * x[s] * x.dot(c.d2ric[r][s] * x);
    return v;
  }
  // R^{k}{}_{xx}{}^{l} R_{kxxl} with x in the middle slots of both
  double rxxr_xxxx() const {
    double v = 0.0;
    for (int k = 0; k < 3; ++k)
      for (int l = 0; l < 3; ++l) {
        double a = 0.0;
        for (int p = 0; p < 3; ++p)
          for (int q = 0; q < 3; ++q) a += c.R(k, p, q, l) * x[p] * x[q];
        v += a * a;
      }
    return v;
  }
  double ric_xx_sq() const {
    const double v = ric_xx();
    return v * v;
  }
};

} // namespace

HarmonicField expansion_residual(const CurvaturePoint& curv, double lambda, double r,
                                 const SphereGrid& grid) {
  const int N = grid.nodes();
  const double r2 = r * r, r3 = r2 * r, r4 = r2 * r2;
  VectorXd out(N);
  for (int n = 0; n < N; ++n) {
    ExpansionTerms t{curv, Vector3d(grid.xs.row(n).transpose())};
    double v = r2 * (2.0 * lambda - (2.0 / 3.0) * curv.sc) + 4.0 * r2 * t.ric_xx() -
               r3 * t.dsc_x() + 5.0 * r3 * t.dric_xxx();
    v -= r4 * ((lambda / 3.0) * t.ric_xx() + (3.0 / 5.0) * t.d2sc_xx() +
               (1.0 / 5.0) * t.lap_ric_xx() - (2.0 / 45.0) * t.ric_sq_xx() +
               (4.0 / 45.0) * t.ric_r_xx() + (8.0 / 45.0) * t.rr_xx());
    v += r4 * (3.0 * t.d2ric_xxxx() + (2.0 / 3.0) * t.rxxr_xxxx() -
               (2.0 / 3.0) * t.ric_xx_sq());
    out[n] = v;
  }
  return analyze(grid, out);
}

VectorXd expansion_mean_curv(const CurvaturePoint& curv, double r, const SphereGrid& grid) {
  const int N = grid.nodes();
  const double r2 = r * r, r3 = r2 * r, r4 = r2 * r2;
  VectorXd out(N);
  for (int n = 0; n < N; ++n) {
    ExpansionTerms t{curv, Vector3d(grid.xs.row(n).transpose())};
    out[n] = 2.0 - (1.0 / 3.0) * r2 * t.ric_xx() - 0.25 * r3 * t.dric_xxx() -
             r4 * (0.1 * t.d2ric_xxxx() + (1.0 / 45.0) * t.rxxr_xxxx());
  }
  return out;
}

VectorXd expansion_shape_det(const CurvaturePoint& curv, double r, const SphereGrid& grid) {
  const int N = grid.nodes();
  const double r2 = r * r, r3 = r2 * r, r4 = r2 * r2;
  VectorXd out(N);
  for (int n = 0; n < N; ++n) {
    ExpansionTerms t{curv, Vector3d(grid.xs.row(n).transpose())};
    out[n] = 1.0 - (1.0 / 3.0) * r2 * t.ric_xx() - 0.25 * r3 * t.dric_xxx() +
             r4 * (-0.1 * t.d2ric_xxxx() - (7.0 / 90.0) * t.rxxr_xxxx() +
                   (1.0 / 18.0) * t.ric_xx_sq());
  }
  return out;
}

VectorXd expansion_traceless_sq(const CurvaturePoint& curv, double r,
                                const SphereGrid& grid) {
  const int N = grid.nodes();
  const double r4 = r * r * r * r;
  VectorXd out(N);
  for (int n = 0; n < N; ++n) {
    ExpansionTerms t{curv, Vector3d(grid.xs.row(n).transpose())};
    out[n] = r4 * ((1.0 / 9.0) * t.rxxr_xxxx() - (1.0 / 18.0) * t.ric_xx_sq());
  }
  return out;
}

VectorXd expansion_lap_h(const CurvaturePoint& curv, double r, const SphereGrid& grid) {
  const int N = grid.nodes();
  const double r2 = r * r, r3 = r2 * r, r4 = r2 * r2;
  VectorXd out(N);
  for (int n = 0; n < N; ++n) {
    ExpansionTerms t{curv, Vector3d(grid.xs.row(n).transpose())};
    double v = -(2.0 / 3.0) * r2 * curv.sc + 2.0 * r2 * t.ric_xx() - r3 * t.dsc_x() +
               3.0 * r3 * t.dric_xxx();
    v -= r4 * ((3.0 / 5.0) * t.d2sc_xx() + (1.0 / 5.0) * t.lap_ric_xx() -
               (2.0 / 45.0) * t.ric_sq_xx() + (4.0 / 45.0) * t.ric_r_xx() +
               (8.0 / 45.0) * t.rr_xx());
    v += r4 * (2.0 * t.d2ric_xxxx() + (4.0 / 9.0) * t.rxxr_xxxx() -
               (2.0 / 9.0) * t.ric_xx_sq());
    out[n] = v;
  }
  return out;
}

} // namespace foliate
