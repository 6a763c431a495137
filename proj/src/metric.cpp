#include "foliate/metric.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace foliate {

// ---------------------------------------------------------------- Taylor3

namespace {

struct MIdx {
  int i, j, k;
  int deg() const { return i + j + k; }
};

const std::vector<MIdx>& midx_list() {
  static const std::vector<MIdx> list = [] {
    std::vector<MIdx> v;
    for (int d = 0; d <= Taylor3::kMaxOrder; ++d)
      for (int i = d; i >= 0; --i)
        for (int j = d - i; j >= 0; --j) v.push_back({i, j, d - i - j});
    return v;
  }();
  return list;
}

int midx_pos(int i, int j, int k) {
  const auto& list = midx_list();
  for (int t = 0; t < (int)list.size(); ++t)
    if (list[t].i == i && list[t].j == j && list[t].k == k) return t;
  return -1;
}

} // namespace

int Taylor3::index(int i, int j, int k) {
  static int table[5][5][5];
  static const bool init = [] {
    for (int t = 0; t < (int)midx_list().size(); ++t) {
      const MIdx& m = midx_list()[t];
      table[m.i][m.j][m.k] = t;
    }
    return true;
  }();
  (void)init;
  return table[i][j][k];
}

const Taylor3::MulTable& Taylor3::mul_table() {
  static const MulTable table = [] {
    MulTable mt;
    const auto& list = midx_list();
    for (int a = 0; a < (int)list.size(); ++a)
      for (int b = 0; b < (int)list.size(); ++b) {
        const int i = list[a].i + list[b].i;
        const int j = list[a].j + list[b].j;
        const int k = list[a].k + list[b].k;
        if (i + j + k > kMaxOrder) continue;
        mt.entries.push_back({(std::uint8_t)a, (std::uint8_t)b,
                              (std::uint8_t)midx_pos(i, j, k),
                              (std::uint8_t)(i + j + k)});
      }
    std::stable_sort(mt.entries.begin(), mt.entries.end(),
                     [](const MulEntry& x, const MulEntry& y) { return x.deg < y.deg; });
    return mt;
  }();
  return table;
}

// ----------------------------------------------------------- metric catalog

namespace {

constexpr int kSeries = 40;

// Coefficients of h(u) = (1 - cos(2 sqrt(u))) / (2u) = sum c_n u^n;
// the round-sphere normal-coordinate tangential profile sin^2(rho)/rho^2
// equals h(rho^2).
const std::array<double, kSeries>& round_series() {
  static const std::array<double, kSeries> c = [] {
    std::array<double, kSeries> a{};
    for (int n = 0; n < kSeries; ++n) {
      // c_n = (-1)^n 4^{n+1} / (2 (2n+2)!)
      double v = 0.5;
      for (int m = 0; m < n + 1; ++m) v *= 4.0;
      for (int m = 2; m <= 2 * n + 2; ++m) v /= m;
      a[n] = (n % 2 == 0) ? v : -v;
    }
    return a;
  }();
  return c;
}

// Derivatives f, f', ..., f'''' of an entire series sum c_n u^n at u0.
std::array<double, 5> series_derivs(const std::array<double, kSeries>& c, double u0) {
  std::array<double, 5> d{};
  for (int k = 0; k <= 4; ++k) {
    double sum = 0.0, pw = 1.0;
    for (int n = k; n < kSeries; ++n) {
      double fall = 1.0;
      for (int m = 0; m < k; ++m) fall *= (n - m);
      sum += c[n] * fall * pw;
      pw *= u0;
    }
    d[k] = sum;
  }
  return d;
}

using TMat = std::array<std::array<Taylor3, 3>, 3>;

TMat euclidean_taylor(int order) {
  TMat g;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) g[i][j] = Taylor3(i == j ? 1.0 : 0.0, order);
  return g;
}

// Normal-coordinate chart of the round 3-sphere of curvature k about a
// point: g_ij = A(s) delta_ij + B(s) y_i y_j with s = |y|^2,
// A(s) = h(k s), B(s) = k (1 - h(k s)) / (k s).
TMat round_s3_taylor(double k, const Vector3d& y0, int order) {
  std::array<Taylor3, 3> y;
  for (int v = 0; v < 3; ++v) y[v] = Taylor3::variable(y0[v], v, order);
  Taylor3 s = y[0] * y[0] + y[1] * y[1] + y[2] * y[2];

  const auto& c = round_series();
  // p(u) = (1 - h(u))/u = sum (-c_{n+1}) u^n
  static const std::array<double, kSeries> cp = [] {
    std::array<double, kSeries> a{};
    for (int n = 0; n + 1 < kSeries; ++n) a[n] = -round_series()[n + 1];
    return a;
  }();

  const double u0 = k * s.value();
  auto hd = series_derivs(c, u0);
  auto pd = series_derivs(cp, u0);
  // chain rule u = k s
  std::array<double, 5> hA{}, hP{};
  double kp = 1.0;
  for (int n = 0; n <= 4; ++n) {
    hA[n] = hd[n] * kp;
    hP[n] = pd[n] * kp;
    kp *= k;
  }
  Taylor3 A = s.compose(hA);
  Taylor3 B = s.compose(hP);
  B *= k;

  TMat g;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      g[i][j] = B * (y[i] * y[j]);
      if (i == j) g[i][j] += A;
    }
  return g;
}

TMat conformal_bump_taylor(double eps, const Vector3d& a, double w, const Vector3d& y0,
                           int order) {
  std::array<Taylor3, 3> y;
  for (int v = 0; v < 3; ++v) y[v] = Taylor3::variable(y0[v], v, order);
  Taylor3 s = y[0] * y[0] + y[1] * y[1] + y[2] * y[2];
  Taylor3 q = a[0] * (y[0] * y[0]) + a[1] * (y[1] * y[1]) + a[2] * (y[2] * y[2]);

  // chi(s) = exp(-s/w^2)
  const double iw2 = 1.0 / (w * w);
  Taylor3 chi = ((-iw2) * s).exp();
  Taylor3 u = eps * (q * chi);
  Taylor3 conf = (u + u).exp();

  TMat g;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) g[i][j] = (i == j) ? conf : Taylor3(0.0, order);
  return g;
}

} // namespace

void validate_spec(const MetricSpec& spec) {
  if (spec.chart_radius <= 0.0) throw ConfigError("chart_radius must be > 0");
  auto allow = [&](std::initializer_list<const char*> keys) {
    for (const auto& kv : spec.params) {
      bool ok = false;
      for (const char* k : keys)
        if (kv.first == k) ok = true;
      if (!ok) throw ConfigError("metric '" + spec.id + "' has no parameter '" + kv.first + "'");
    }
  };
  if (spec.id == "euclidean") {
    allow({});
  } else if (spec.id == "round_s3") {
    allow({"k"});
    if (spec.param("k", 1.0) <= 0.0) throw ConfigError("round_s3 requires k > 0");
  } else if (spec.id == "conformal_bump") {
    allow({"epsilon", "a1", "a2", "a3", "cutoff_width"});
    if (spec.param("cutoff_width", 1.0) <= 0.0)
      throw ConfigError("conformal_bump requires cutoff_width > 0");
  } else if (spec.id == "product_perturbation") {
    throw UnknownMetric("catalog entry 'product_perturbation' is reserved");
  } else {
    throw UnknownMetric("'" + spec.id + "' is not in the catalog");
  }
}

std::array<std::array<Taylor3, 3>, 3> metric_taylor(const MetricSpec& spec, const Vector3d& y,
                                                    int order) {
  if (spec.id == "euclidean") return euclidean_taylor(order);
  if (spec.id == "round_s3") return round_s3_taylor(spec.param("k", 1.0), y, order);
  if (spec.id == "conformal_bump") {
    Vector3d a(spec.param("a1", 1.0), spec.param("a2", 1.0), spec.param("a3", 1.0));
    return conformal_bump_taylor(spec.param("epsilon", 0.0), a, spec.param("cutoff_width", 1.0),
                                 y, order);
  }
  validate_spec(spec); // throws UnknownMetric
  return euclidean_taylor(order);
}

MetricJet metric_jet(const MetricSpec& spec, const Vector3d& y, int order) {
  validate_spec(spec);
  if (order < 0 || order > 4) throw OrderUnsupported("order must be in 0..4");
  if (y.norm() >= spec.chart_radius)
    throw OutOfChart("|y| = " + std::to_string(y.norm()) + " >= chart_radius");

  TMat gt = metric_taylor(spec, y, order);
  MetricJet jet;
  jet.point = y;
  jet.order = order;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      jet.g(i, j) = gt[i][j].value();
      auto d = [&](int m, int n, int p) {
        int e[3] = {0, 0, 0};
        e[m]++;
        if (n >= 0) e[n]++;
        if (p >= 0) e[p]++;
        return gt[i][j].deriv(e[0], e[1], e[2]);
      };
      if (order >= 1)
        for (int m = 0; m < 3; ++m) jet.d1[m](i, j) = d(m, -1, -1);
      if (order >= 2)
        for (int m = 0; m < 3; ++m)
          for (int n = 0; n < 3; ++n) jet.d2[m][n](i, j) = d(m, n, -1);
      if (order >= 3)
        for (int m = 0; m < 3; ++m)
          for (int n = 0; n < 3; ++n)
            for (int p = 0; p < 3; ++p) jet.d3[m][n][p](i, j) = d(m, n, p);
      if (order >= 4)
        for (int m = 0; m < 3; ++m)
          for (int n = 0; n < 3; ++n)
            for (int p = 0; p < 3; ++p)
              for (int q = 0; q < 3; ++q) {
                int e[3] = {0, 0, 0};
                e[m]++;
                e[n]++;
                e[p]++;
                e[q]++;
                jet.d4[m][n][p][q](i, j) = gt[i][j].deriv(e[0], e[1], e[2]);
              }
    }
  return jet;
}

Matrix3d orthonormal_frame(const Matrix3d& g) {
  Eigen::SelfAdjointEigenSolver<Matrix3d> es(g);
  if (es.eigenvalues().minCoeff() <= 0.0)
    throw DegenerateMetric("metric not positive definite");
  return es.operatorInverseSqrt();
}

// -------------------------------------------------------------- curvature

namespace {

// Christoffel symbols and their chart partials from a jet.
// G[k](i,j) = Gamma^k_ij; dG[m][k](i,j) = d_m Gamma^k_ij; etc.
struct Christoffel {
  Tensor3 G{};
  std::array<Tensor3, 3> dG{};
  std::array<std::array<Tensor3, 3>, 3> d2G{};
  std::array<std::array<std::array<Tensor3, 3>, 3>, 3> d3G{};
};

Christoffel christoffel(const MetricJet& jet) {
  const Matrix3d ginv = jet.g.inverse();
  std::array<Matrix3d, 3> dgi;
  for (int m = 0; m < 3; ++m) dgi[m] = -ginv * jet.d1[m] * ginv;
  std::array<std::array<Matrix3d, 3>, 3> d2gi{};
  if (jet.order >= 2)
    for (int m = 0; m < 3; ++m)
      for (int n = 0; n < 3; ++n)
        d2gi[m][n] = -dgi[n] * jet.d1[m] * ginv - ginv * jet.d2[m][n] * ginv -
                     ginv * jet.d1[m] * dgi[n];
  std::array<std::array<std::array<Matrix3d, 3>, 3>, 3> d3gi{};
  if (jet.order >= 3)
    for (int m = 0; m < 3; ++m)
      for (int n = 0; n < 3; ++n)
        for (int p = 0; p < 3; ++p)
          d3gi[m][n][p] = -d2gi[n][p] * jet.d1[m] * ginv - dgi[n] * jet.d2[m][p] * ginv -
                          dgi[n] * jet.d1[m] * dgi[p] - dgi[p] * jet.d2[m][n] * ginv -
                          ginv * jet.d3[m][n][p] * ginv - ginv * jet.d2[m][n] * dgi[p] -
                          dgi[p] * jet.d1[m] * dgi[n] - ginv * jet.d2[m][p] * dgi[n] -
                          ginv * jet.d1[m] * d2gi[n][p];

  // Lowered symbols [ij,l] = (g_jl,i + g_il,j - g_ij,l)/2 and their partials.
  auto low = [&](int i, int j, int l) {
    return 0.5 * (jet.d1[i](j, l) + jet.d1[j](i, l) - jet.d1[l](i, j));
  };
  auto dlow = [&](int i, int j, int l, int m) {
    return 0.5 * (jet.d2[i][m](j, l) + jet.d2[j][m](i, l) - jet.d2[l][m](i, j));
  };
  auto d2low = [&](int i, int j, int l, int m, int n) {
    return 0.5 * (jet.d3[i][m][n](j, l) + jet.d3[j][m][n](i, l) - jet.d3[l][m][n](i, j));
  };
  auto d3low = [&](int i, int j, int l, int m, int n, int p) {
    return 0.5 * (jet.d4[i][m][n][p](j, l) + jet.d4[j][m][n][p](i, l) -
                  jet.d4[l][m][n][p](i, j));
  };

  Christoffel ch;
  for (int k = 0; k < 3; ++k)
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        double v = 0.0;
        for (int l = 0; l < 3; ++l) v += ginv(k, l) * low(i, j, l);
        ch.G[k](i, j) = v;
      }
  if (jet.order >= 2)
    for (int m = 0; m < 3; ++m)
      for (int k = 0; k < 3; ++k)
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 3; ++j) {
            double v = 0.0;
            for (int l = 0; l < 3; ++l)
              v += dgi[m](k, l) * low(i, j, l) + ginv(k, l) * dlow(i, j, l, m);
            ch.dG[m][k](i, j) = v;
          }
  if (jet.order >= 3)
    for (int m = 0; m < 3; ++m)
      for (int n = 0; n < 3; ++n)
        for (int k = 0; k < 3; ++k)
          for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
              double v = 0.0;
              for (int l = 0; l < 3; ++l)
                v += d2gi[m][n](k, l) * low(i, j, l) + dgi[m](k, l) * dlow(i, j, l, n) +
                     dgi[n](k, l) * dlow(i, j, l, m) + ginv(k, l) * d2low(i, j, l, m, n);
              ch.d2G[m][n][k](i, j) = v;
            }
  if (jet.order >= 4)
    for (int m = 0; m < 3; ++m)
      for (int n = 0; n < 3; ++n)
        for (int p = 0; p < 3; ++p)
          for (int k = 0; k < 3; ++k)
            for (int i = 0; i < 3; ++i)
              for (int j = 0; j < 3; ++j) {
                double v = 0.0;
                for (int l = 0; l < 3; ++l)
                  v += d3gi[m][n][p](k, l) * low(i, j, l) +
                       d2gi[m][n](k, l) * dlow(i, j, l, p) +
                       d2gi[m][p](k, l) * dlow(i, j, l, n) +
                       d2gi[n][p](k, l) * dlow(i, j, l, m) +
                       dgi[m](k, l) * d2low(i, j, l, n, p) +
                       dgi[n](k, l) * d2low(i, j, l, m, p) +
                       dgi[p](k, l) * d2low(i, j, l, m, n) +
                       ginv(k, l) * d3low(i, j, l, m, n, p);
                ch.d3G[m][n][p][k](i, j) = v;
              }
  return ch;
}

// R^l_{ijk} = d_i G^l_jk - d_j G^l_ik + G^l_is G^s_jk - G^l_js G^s_ik,
// meaning R(d_i, d_j) d_k = R^l_{ijk} d_l; plus first/second partials.
struct RiemannChart {
  double up[3][3][3][3];          // [l][i][j][k]
  double dup[3][3][3][3][3];      // [m][l][i][j][k]
  double d2up[3][3][3][3][3][3];  // [m][n][l][i][j][k]
};

void riemann_chart(const Christoffel& ch, int order, RiemannChart& rc) {
  for (int l = 0; l < 3; ++l)
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k) {
          double v = ch.dG[i][l](j, k) - ch.dG[j][l](i, k);
          for (int s = 0; s < 3; ++s)
            v += ch.G[l](i, s) * ch.G[s](j, k) - ch.G[l](j, s) * ch.G[s](i, k);
          rc.up[l][i][j][k] = v;
        }
  if (order >= 3)
    for (int m = 0; m < 3; ++m)
      for (int l = 0; l < 3; ++l)
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k) {
              double v = ch.d2G[i][m][l](j, k) - ch.d2G[j][m][l](i, k);
              for (int s = 0; s < 3; ++s)
                v += ch.dG[m][l](i, s) * ch.G[s](j, k) + ch.G[l](i, s) * ch.dG[m][s](j, k) -
                     ch.dG[m][l](j, s) * ch.G[s](i, k) - ch.G[l](j, s) * ch.dG[m][s](i, k);
              rc.dup[m][l][i][j][k] = v;
            }
  if (order >= 4)
    for (int m = 0; m < 3; ++m)
      for (int n = 0; n < 3; ++n)
        for (int l = 0; l < 3; ++l)
          for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
              for (int k = 0; k < 3; ++k) {
                double v = ch.d3G[i][m][n][l](j, k) - ch.d3G[j][m][n][l](i, k);
                for (int s = 0; s < 3; ++s)
                  v += ch.d2G[m][n][l](i, s) * ch.G[s](j, k) +
                       ch.dG[m][l](i, s) * ch.dG[n][s](j, k) +
                       ch.dG[n][l](i, s) * ch.dG[m][s](j, k) +
                       ch.G[l](i, s) * ch.d2G[m][n][s](j, k) -
                       ch.d2G[m][n][l](j, s) * ch.G[s](i, k) -
                       ch.dG[m][l](j, s) * ch.dG[n][s](i, k) -
                       ch.dG[n][l](j, s) * ch.dG[m][s](i, k) -
                       ch.G[l](j, s) * ch.d2G[m][n][s](i, k);
                rc.d2up[m][n][l][i][j][k] = v;
              }
}

} // namespace

Tensor3 christoffel_symbols(const MetricJet& jet) {
  if (jet.order < 1) throw JetOrderTooLow("christoffel_symbols needs an order >= 1 jet");
  return christoffel(jet).G;
}

ChartCurvature chart_curvature(const MetricJet& jet) {
  if (jet.order < 2) throw JetOrderTooLow("chart_curvature needs an order >= 2 jet");
  const Christoffel ch = christoffel(jet);
  static thread_local RiemannChart rc;
  riemann_chart(ch, std::min(jet.order, 3), rc);

  ChartCurvature out{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l) {
          double v = 0.0;
          for (int s = 0; s < 3; ++s) v += jet.g(l, s) * rc.up[s][i][j][k];
          out.rm[i][j][k][l] = v;
        }
  for (int j = 0; j < 3; ++j)
    for (int k = 0; k < 3; ++k) {
      double v = 0.0;
      for (int i = 0; i < 3; ++i) v += rc.up[i][i][j][k];
      out.ric(j, k) = v;
    }
  if (jet.order >= 3)
    for (int m = 0; m < 3; ++m)
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k) {
          double v = 0.0;
          for (int i = 0; i < 3; ++i) v += rc.dup[m][i][i][j][k];
          for (int s = 0; s < 3; ++s)
            v -= ch.G[s](m, j) * out.ric(s, k) + ch.G[s](m, k) * out.ric(j, s);
          out.dric[m](j, k) = v;
        }
  return out;
}

CurvaturePoint curvature_point(const MetricJet& jet, const Matrix3d* frame_override) {
  if (jet.order < 4) throw JetOrderTooLow("curvature_point needs an order-4 jet");
  Eigen::SelfAdjointEigenSolver<Matrix3d> es(jet.g);
  if (es.eigenvalues().minCoeff() <= 0.0)
    throw DegenerateMetric("metric not positive definite at the point");

  const Christoffel ch = christoffel(jet);
  static thread_local RiemannChart rc;
  riemann_chart(ch, jet.order, rc);

  // Lowered tensor Rm_{ijkl} = g(R(d_i,d_j)d_k, d_l) and chart partials.
  static thread_local double Rm[3][3][3][3], dRm[3][3][3][3][3], d2Rm[3][3][3][3][3][3];
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l) {
          double v = 0.0, dv[3] = {0, 0, 0};
          for (int s = 0; s < 3; ++s) {
            v += jet.g(l, s) * rc.up[s][i][j][k];
            for (int m = 0; m < 3; ++m)
              dv[m] += jet.d1[m](l, s) * rc.up[s][i][j][k] + jet.g(l, s) * rc.dup[m][s][i][j][k];
          }
          Rm[i][j][k][l] = v;
          for (int m = 0; m < 3; ++m) dRm[m][i][j][k][l] = dv[m];
          for (int m = 0; m < 3; ++m)
            for (int n = 0; n < 3; ++n) {
              double w = 0.0;
              for (int s = 0; s < 3; ++s)
                w += jet.d2[m][n](l, s) * rc.up[s][i][j][k] +
                     jet.d1[m](l, s) * rc.dup[n][s][i][j][k] +
                     jet.d1[n](l, s) * rc.dup[m][s][i][j][k] +
                     jet.g(l, s) * rc.d2up[m][n][s][i][j][k];
              d2Rm[m][n][i][j][k][l] = w;
            }
        }

  // First covariant derivative C1[m][ijkl] = Rm_{ijkl;m}.
  static thread_local double C1[3][3][3][3][3];
  auto corr1 = [&](int m, int i, int j, int k, int l) {
    double v = 0.0;
    for (int t = 0; t < 3; ++t)
      v += ch.G[t](m, i) * Rm[t][j][k][l] + ch.G[t](m, j) * Rm[i][t][k][l] +
           ch.G[t](m, k) * Rm[i][j][t][l] + ch.G[t](m, l) * Rm[i][j][k][t];
    return v;
  };
  for (int m = 0; m < 3; ++m)
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k)
          for (int l = 0; l < 3; ++l)
            C1[m][i][j][k][l] = dRm[m][i][j][k][l] - corr1(m, i, j, k, l);

  // Chart partial of C1 (needed inside the second covariant derivative).
  auto dC1 = [&](int n, int m, int i, int j, int k, int l) {
    double v = d2Rm[m][n][i][j][k][l];
    for (int t = 0; t < 3; ++t)
      v -= ch.dG[n][t](m, i) * Rm[t][j][k][l] + ch.G[t](m, i) * dRm[n][t][j][k][l] +
           ch.dG[n][t](m, j) * Rm[i][t][k][l] + ch.G[t](m, j) * dRm[n][i][t][k][l] +
           ch.dG[n][t](m, k) * Rm[i][j][t][l] + ch.G[t](m, k) * dRm[n][i][j][t][l] +
           ch.dG[n][t](m, l) * Rm[i][j][k][t] + ch.G[t](m, l) * dRm[n][i][j][k][t];
    return v;
  };

  // Second covariant derivative C2[n][m][ijkl] = Rm_{ijkl;mn}.
  static thread_local double C2[3][3][3][3][3][3];
  for (int n = 0; n < 3; ++n)
    for (int m = 0; m < 3; ++m)
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
          for (int k = 0; k < 3; ++k)
            for (int l = 0; l < 3; ++l) {
              double v = dC1(n, m, i, j, k, l);
              for (int t = 0; t < 3; ++t)
                v -= ch.G[t](n, m) * C1[t][i][j][k][l] + ch.G[t](n, i) * C1[m][t][j][k][l] +
                     ch.G[t](n, j) * C1[m][i][t][k][l] + ch.G[t](n, k) * C1[m][i][j][t][l] +
                     ch.G[t](n, l) * C1[m][i][j][k][t];
              C2[n][m][i][j][k][l] = v;
            }

  // Orthonormal frame (columns e_a in chart coordinates).
  Matrix3d E = frame_override ? *frame_override : orthonormal_frame(jet.g);
  {
    Matrix3d gram = E.transpose() * jet.g * E;
    if ((gram - Matrix3d::Identity()).norm() > 1e-10)
      throw DegenerateMetric("frame_override is not g-orthonormal");
  }

  // Transform everything to frame components.
  static thread_local double RmF[3][3][3][3], C1F[3][3][3][3][3], C2F[3][3][3][3][3][3];
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      for (int c = 0; c < 3; ++c)
        for (int d = 0; d < 3; ++d) {
          double v = 0.0;
          for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
              for (int k = 0; k < 3; ++k)
                for (int l = 0; l < 3; ++l)
                  v += E(i, a) * E(j, b) * E(k, c) * E(l, d) * Rm[i][j][k][l];
          RmF[a][b][c][d] = v;
        }
  for (int r = 0; r < 3; ++r)
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        for (int c = 0; c < 3; ++c)
          for (int d = 0; d < 3; ++d) {
            double v = 0.0;
            for (int m = 0; m < 3; ++m)
              for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j)
                  for (int k = 0; k < 3; ++k)
                    for (int l = 0; l < 3; ++l)
                      v += E(m, r) * E(i, a) * E(j, b) * E(k, c) * E(l, d) * C1[m][i][j][k][l];
            C1F[r][a][b][c][d] = v;
          }
  // Contract the 6-tensor one index at a time to keep it cheap.
  {
    static thread_local double T1[3][3][3][3][3][3], T2[3][3][3][3][3][3];
    auto contract_last = [&](const double* in, double* out, int rank) {
      // both arrays viewed as flat [3^rank]; rotate: out[a, I] = sum_i E(i,a) in[I, i]
      const int stride = 1;
      (void)stride;
      int outer = 1;
      for (int t = 0; t < rank - 1; ++t) outer *= 3;
      for (int a = 0; a < 3; ++a)
        for (int I = 0; I < outer; ++I) {
          double v = 0.0;
          for (int i = 0; i < 3; ++i) v += E(i, a) * in[I * 3 + i];
          out[a * outer + I] = v;
        }
    };
    const double* src = &C2[0][0][0][0][0][0];
    double* dst = &T1[0][0][0][0][0][0];
    double* alt = &T2[0][0][0][0][0][0];
    for (int pass = 0; pass < 6; ++pass) {
      contract_last(src, dst, 6);
      src = dst;
      std::swap(dst, alt);
    }
    std::copy(src, src + 729, &C2F[0][0][0][0][0][0]);
  }

  CurvaturePoint cp;
  cp.point = jet.point;
  cp.frame = E;

  // Sign convention: riemann[i][p](q,j) = RmF[p][i][q][j], so that
  // Ric_ij = -sum_t riemann[t][i](j,t) is the usual Ricci tensor.
  for (int i = 0; i < 3; ++i)
    for (int p = 0; p < 3; ++p)
      for (int q = 0; q < 3; ++q)
        for (int j = 0; j < 3; ++j) cp.riemann[i][p](q, j) = RmF[p][i][q][j];
  for (int r = 0; r < 3; ++r)
    for (int i = 0; i < 3; ++i)
      for (int p = 0; p < 3; ++p)
        for (int q = 0; q < 3; ++q)
          for (int j = 0; j < 3; ++j) cp.driemann[r][i][p](q, j) = C1F[r][p][i][q][j];
  for (int r = 0; r < 3; ++r)
    for (int s = 0; s < 3; ++s)
      for (int i = 0; i < 3; ++i)
        for (int p = 0; p < 3; ++p)
          for (int q = 0; q < 3; ++q)
            for (int j = 0; j < 3; ++j) cp.d2riemann[r][s][i][p](q, j) = C2F[s][r][p][i][q][j];

  for (int j = 0; j < 3; ++j)
    for (int k = 0; k < 3; ++k) {
      double v = 0.0;
      for (int i = 0; i < 3; ++i) v += RmF[i][j][k][i];
      cp.ric(j, k) = v;
    }
  cp.sc = cp.ric.trace();
  for (int r = 0; r < 3; ++r) {
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) {
        double v = 0.0;
        for (int i = 0; i < 3; ++i) v += C1F[r][i][j][k][i];
        cp.dric[r](j, k) = v;
      }
    cp.dsc[r] = cp.dric[r].trace();
  }
  cp.lap_ric.setZero();
  for (int r = 0; r < 3; ++r)
    for (int s = 0; s < 3; ++s) {
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k) {
          double v = 0.0;
          for (int i = 0; i < 3; ++i) v += C2F[s][r][i][j][k][i];
          cp.d2ric[r][s](j, k) = v;
        }
      cp.d2sc(r, s) = cp.d2ric[r][s].trace();
      if (r == s) cp.lap_ric += cp.d2ric[r][s];
    }
  return cp;
}

double scalar_curvature(const MetricSpec& spec, const Vector3d& y, Vector3d* grad) {
  MetricJet jet = metric_jet(spec, y, grad ? 3 : 2);
  const Matrix3d ginv = jet.g.inverse();
  const Christoffel ch = christoffel(jet);
  static thread_local RiemannChart rc;
  riemann_chart(ch, jet.order, rc);

  // Ric_{jk} = R^i_{ijk}; Sc = g^{jk} Ric_jk.
  Matrix3d ric;
  for (int j = 0; j < 3; ++j)
    for (int k = 0; k < 3; ++k) {
      double v = 0.0;
      for (int i = 0; i < 3; ++i) v += rc.up[i][i][j][k];
      ric(j, k) = v;
    }
  const double sc = (ginv * ric).trace();
  if (grad) {
    std::array<Matrix3d, 3> dgi;
    for (int m = 0; m < 3; ++m) dgi[m] = -ginv * jet.d1[m] * ginv;
    for (int m = 0; m < 3; ++m) {
      Matrix3d dric;
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k) {
          double v = 0.0;
          for (int i = 0; i < 3; ++i) v += rc.dup[m][i][i][j][k];
          dric(j, k) = v;
        }
      (*grad)[m] = (dgi[m] * ric).trace() + (ginv * dric).trace();
    }
  }
  return sc;
}

CriticalPoint find_scalar_critical(const MetricSpec& spec, const Vector3d& guess) {
  validate_spec(spec);
  Vector3d y = guess;
  const double h = 1e-4 * spec.chart_radius;
  const double tol = 1e-12;

  auto gradient = [&](const Vector3d& x) {
    Vector3d g;
    scalar_curvature(spec, x, &g);
    return g;
  };

  bool converged = false;
  for (int it = 0; it < 50; ++it) {
    Vector3d g = gradient(y);
    if (g.norm() < tol) {
      converged = true;
      break;
    }
    Matrix3d J;
    for (int m = 0; m < 3; ++m) {
      Vector3d yp = y, ym = y;
      yp[m] += h;
      ym[m] -= h;
      J.col(m) = (gradient(yp) - gradient(ym)) / (2.0 * h);
    }
    Eigen::FullPivLU<Matrix3d> lu(J);
    if (!lu.isInvertible()) throw DegenerateHessian("singular curvature gradient Jacobian");
    Vector3d step = lu.solve(-g);
    // keep the iterate inside the chart
    double cap = 0.5 * spec.chart_radius;
    if (step.norm() > cap) step *= cap / step.norm();
    y += step;
    if (y.norm() >= 0.9 * spec.chart_radius)
      throw NoConvergence("critical point search left the chart");
  }
  if (!converged && gradient(y).norm() >= tol)
    throw NoConvergence("critical point search did not converge");

  CurvaturePoint cp = curvature_point(metric_jet(spec, y, 4));
  CriticalPoint out;
  out.location = y;
  out.hessian = 0.5 * (cp.d2sc + cp.d2sc.transpose());
  out.gradient_norm = cp.dsc.norm();
  Eigen::SelfAdjointEigenSolver<Matrix3d> hs(out.hessian);
  out.min_abs_eigenvalue = hs.eigenvalues().cwiseAbs().minCoeff();
  if (out.min_abs_eigenvalue < 1e-6)
    throw DegenerateHessian("scalar curvature Hessian is (near-)degenerate");
  return out;
}

} // namespace foliate
