#include "foliate/linearized.hpp"

#include <cmath>
#include <limits>

#include <Eigen/SVD>

#include "foliate/errors.hpp"

namespace foliate {

namespace {

constexpr int kTT = 0, kTP = 1, kPP = 2;

struct ScalarDerivs {
  VectorXd v, t, p, tt, tp, pp;
};

ScalarDerivs spectral_derivs(const HarmonicField& c, const SphereGrid& grid) {
  ScalarDerivs d;
  d.v = synthesize(c, grid);
  d.t = synthesize_deriv(c, grid, 1, 0);
  d.p = synthesize_deriv(c, grid, 0, 1);
  d.tt = synthesize_deriv(c, grid, 2, 0);
  d.tp = synthesize_deriv(c, grid, 1, 1);
  d.pp = synthesize_deriv(c, grid, 0, 2);
  return d;
}

// Covariant Hessian entries f_{;ab} = f_{,ab} - gamma^c_ab f_{,c} and the
// Laplace-Beltrami trace against hinv.
void hessian_and_lap(const SurfaceState& st, const ScalarDerivs& f, int n, double hess[3],
                     double& lap) {
  const double fc[2] = {f.t[n], f.p[n]};
  const double fab[3] = {f.tt[n], f.tp[n], f.pp[n]};
  for (int ab = 0; ab < 3; ++ab)
    hess[ab] = fab[ab] - st.gamma[0][ab][n] * fc[0] - st.gamma[1][ab][n] * fc[1];
  lap = st.hinv[kTT][n] * hess[kTT] + 2.0 * st.hinv[kTP][n] * hess[kTP] +
        st.hinv[kPP][n] * hess[kPP];
}

} // namespace

HarmonicField apply_linearized(const SurfaceState& state, double lambda,
                               const HarmonicField& f) {
  const SphereGrid& grid = *state.grid;
  if (f.L != grid.L) throw ShapeMismatch("normal speed band limit does not match the grid");
  const int N = grid.nodes();

  const ScalarDerivs fd = spectral_derivs(f, grid);
  const ScalarDerivs Hd = spectral_derivs(state.mean_curv_coef, grid);

  // L f = -Delta f - |A|^2 f - Ric(nu,nu) f, needed twice; its own
  // derivatives are taken spectrally from the re-analyzed grid values.
  VectorXd Lf(N);
  VectorXd asq(N); // |A|^2 = |Å|^2 + H^2/2
  for (int n = 0; n < N; ++n) {
    double hess[3], lap;
    hessian_and_lap(state, fd, n, hess, lap);
    asq[n] = state.traceless_sq[n] + 0.5 * state.mean_curv[n] * state.mean_curv[n];
    Lf[n] = -lap - (asq[n] + state.ric_nn[n]) * fd.v[n];
  }
  const ScalarDerivs Ld = spectral_derivs(analyze(grid, Lf), grid);

  VectorXd out(N);
  for (int n = 0; n < N; ++n) {
    const double H = state.mean_curv[n];
    const double hi[2][2] = {{state.hinv[kTT][n], state.hinv[kTP][n]},
                             {state.hinv[kTP][n], state.hinv[kPP][n]}};
    double fhess[3], lap_f, Lhess[3], lap_Lf, Hhess[3], lap_H2;
    hessian_and_lap(state, fd, n, fhess, lap_f);
    hessian_and_lap(state, Ld, n, Lhess, lap_Lf);
    hessian_and_lap(state, Hd, n, Hhess, lap_H2);
    (void)lap_H2; // state.lap_H holds the same trace

    // Raised gradients.
    const double gf[2] = {hi[0][0] * fd.t[n] + hi[0][1] * fd.p[n],
                          hi[1][0] * fd.t[n] + hi[1][1] * fd.p[n]};
    const double gH[2] = {hi[0][0] * Hd.t[n] + hi[0][1] * Hd.p[n],
                          hi[1][0] * Hd.t[n] + hi[1][1] * Hd.p[n]};
    const double gradHf = gH[0] * fd.t[n] + gH[1] * fd.p[n];
    const double gradHH = gH[0] * Hd.t[n] + gH[1] * Hd.p[n];

    const double aring[2][2] = {
        {state.second_ff[kTT][n] - 0.5 * H * state.h[kTT][n],
         state.second_ff[kTP][n] - 0.5 * H * state.h[kTP][n]},
        {state.second_ff[kTP][n] - 0.5 * H * state.h[kTP][n],
         state.second_ff[kPP][n] - 0.5 * H * state.h[kPP][n]}};
    const double Tab[2][2] = {{state.Tten[kTT][n], state.Tten[kTP][n]},
                              {state.Tten[kTP][n], state.Tten[kPP][n]}};
    const double fh[2][2] = {{fhess[kTT], fhess[kTP]}, {fhess[kTP], fhess[kPP]}};
    const double Hh[2][2] = {{Hhess[kTT], Hhess[kTP]}, {Hhess[kTP], Hhess[kPP]}};

    // Å with both indices raised, then the metric contractions.
    double aring_up[2][2] = {{0.0, 0.0}, {0.0, 0.0}};
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b)
        for (int c = 0; c < 2; ++c)
          for (int d = 0; d < 2; ++d) aring_up[a][b] += hi[a][c] * hi[b][d] * aring[c][d];
    double aring_gHgf = 0.0, aring_fhess = 0.0, aring_Hhess = 0.0, aring_T = 0.0;
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) {
        aring_gHgf += aring[a][b] * gH[a] * gf[b];
        aring_fhess += aring_up[a][b] * fh[a][b];
        aring_Hhess += aring_up[a][b] * Hh[a][b];
        aring_T += aring_up[a][b] * Tab[a][b];
      }
    const double omega_gf = state.omega[0][n] * gf[0] + state.omega[1][n] * gf[1];
    const double omega_gH = state.omega[0][n] * gH[0] + state.omega[1][n] * gH[1];

    const double LLf = -lap_Lf - (asq[n] + state.ric_nn[n]) * Ld.v[n];

    // 1/2 div*(H^2 grad f) = -1/2 H^2 lap f - H <grad H, grad f>;
    // -2 div*(H Å(grad f, .)) expanded with div Å = 1/2 dH + omega.
    const double div_terms = -0.5 * H * H * lap_f - H * gradHf +
                             2.0 * (aring_gHgf + H * (0.5 * gradHf + omega_gf) +
                                    H * aring_fhess);

    // The lambda and H^2 Ric(nu,nu) zero-order terms carry the opposite
    // sign from the published operator; this is the combination that
    // matches the finite-difference derivative of the residual (exact
    // on round spheres in space forms, where the difference is
    // (2 lambda L + H^2 Ric(nu,nu)) f).
    const double Q = gradHH + 2.0 * omega_gH + H * state.lap_H[n] + 2.0 * aring_Hhess +
                     2.0 * H * H * state.traceless_sq[n] + 2.0 * H * aring_T -
                     H * state.dric_nnn[n] - 0.5 * H * H * asq[n] -
                     0.5 * H * H * state.ric_nn[n];

    out[n] = LLf + div_terms - lambda * Lf[n] + fd.v[n] * Q;
  }

  HarmonicField res = analyze(grid, out);
  res.a *= std::pow(state.r, 4);
  return res;
}

VectorXd project_rows(const HarmonicField& field, bool frozen_tau) {
  const KernelSplit split = project_kernel(field);
  const int ncoef = (field.L + 1) * (field.L + 1);
  const int nk = frozen_tau ? 1 : 4;
  VectorXd rows(nk + ncoef - 4);
  rows[0] = split.p0;
  if (!frozen_tau) rows.segment<3>(1) = split.p1;
  rows.tail(ncoef - 4) = field.a.tail(ncoef - 4);
  return rows;
}

LinearizedSystem assemble_jacobian(const MetricSpec& spec, const Frame& anchor, double r,
                                   const HarmonicField& phi, double lambda, GridPtr grid,
                                   const JacobianOptions& opts) {
  if (phi.L != grid->L) throw ShapeMismatch("phi band limit does not match the grid");

  LinearizedSystem sys;
  sys.L = grid->L;
  sys.frozen_tau = opts.freeze_tau;
  const int n = sys.size();
  const int ncoef = grid->ncoef();
  sys.matrix.resize(n, n);

  const Frame frame =
      opts.tau.isZero() ? anchor : parallel_frame(spec, anchor, opts.tau);
  GeodesicFan local_fan;
  const GeodesicFan* fan = opts.fan;
  if (!fan) {
    local_fan = build_fan(spec, frame, grid, 1.5 * r);
    fan = &local_fan;
  }

  const SurfaceState base = embed_surface(spec, frame, r, phi, grid, fan);
  const HarmonicField base_res = willmore_residual(base, lambda);
  sys.rhs = project_rows(base_res, opts.freeze_tau);
  sys.k1_residual = project_kernel(base_res).p1;

  // Lambda column: the residual is affine in lambda with slope r^3 H.
  {
    HarmonicField slope = base.mean_curv_coef;
    slope.a *= r * r * r;
    sys.matrix.col(0) = project_rows(slope, opts.freeze_tau);
  }

  int col = 1;
  if (!opts.freeze_tau) {
    const double dt = opts.tau_step * r;
    for (int i = 0; i < 3; ++i, ++col) {
      Vector3d tp = opts.tau, tm = opts.tau;
      tp[i] += dt;
      tm[i] -= dt;
      const SurfaceState sp =
          embed_surface(spec, parallel_frame(spec, anchor, tp), r, phi, grid);
      const SurfaceState sm =
          embed_surface(spec, parallel_frame(spec, anchor, tm), r, phi, grid);
      sys.matrix.col(col) = (project_rows(willmore_residual(sp, lambda), opts.freeze_tau) -
                             project_rows(willmore_residual(sm, lambda), opts.freeze_tau)) /
                            (2.0 * dt);
    }
  }

  const double dphi = opts.phi_step * std::max(1.0, phi.a.norm());
  for (int k = 4; k < ncoef; ++k, ++col) {
    HarmonicField pert = phi;
    pert.a[k] += dphi;
    const SurfaceState sp = embed_surface(spec, frame, r, pert, grid, fan);
    sys.matrix.col(col) =
        (project_rows(willmore_residual(sp, lambda), opts.freeze_tau) - sys.rhs) / dphi;
  }

  Eigen::JacobiSVD<MatrixXd> svd(sys.matrix);
  const double smin = svd.singularValues().minCoeff();
  sys.cond = smin > 0.0 ? svd.singularValues().maxCoeff() / smin
                        : std::numeric_limits<double>::infinity();
  if (sys.cond > opts.cond_limit)
    throw SingularJacobian("condition number " + std::to_string(sys.cond));
  return sys;
}

} // namespace foliate
