#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <random>

#include "CLI11.hpp"
#include "json.hpp"

#include "foliate/config.hpp"
#include "foliate/foliation.hpp"
#include "foliate/io.hpp"

namespace {

using foliate::Family;
using foliate::Frame;
using foliate::HarmonicField;
using foliate::Leaf;
using foliate::RunConfig;
using foliate::Vector3d;
using json = nlohmann::ordered_json;

json vec_json(const Vector3d& v) { return json{v[0], v[1], v[2]}; }

json mat_json(const foliate::Matrix3d& m) {
  json rows = json::array();
  for (int i = 0; i < 3; ++i) rows.push_back(json{m(i, 0), m(i, 1), m(i, 2)});
  return rows;
}

json header(const RunConfig& cfg, const char* command) {
  return json{{"command", command}, {"config_hash", cfg.hash}};
}

// Anchor frame for a run: at the located scalar-curvature critical
// point, or at the chart origin when tau is frozen (the search is
// degenerate on homogeneous metrics, where any center works).
Frame locate_anchor(const RunConfig& cfg) {
  if (cfg.solve.freeze_tau) return anchor_frame(cfg.metric, Vector3d::Zero());
  const foliate::CriticalPoint cp = find_scalar_critical(cfg.metric, Vector3d::Zero());
  return anchor_frame(cfg.metric, cp.location);
}

std::string ensure_outdir(const RunConfig& cfg, const std::string& out_override) {
  const std::string dir = out_override.empty() ? cfg.output_dir : out_override;
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw foliate::IoError("cannot create output directory " + dir + ": " + ec.message());
  return dir;
}

int cmd_curvature(const RunConfig& cfg) {
  const foliate::CurvaturePoint curv =
      foliate::curvature_point(foliate::metric_jet(cfg.metric, Vector3d::Zero(), 4));
  json j = header(cfg, "curvature");
  j["curvature_at_origin"] = {{"sc", curv.sc},
                              {"dsc", vec_json(curv.dsc)},
                              {"ric", mat_json(curv.ric)},
                              {"d2sc", mat_json(curv.d2sc)}};
  try {
    const foliate::CriticalPoint cp = find_scalar_critical(cfg.metric, Vector3d::Zero());
    Eigen::SelfAdjointEigenSolver<foliate::Matrix3d> hs(cp.hessian);
    j["critical_point"] = {{"location", vec_json(cp.location)},
                           {"gradient_norm", cp.gradient_norm},
                           {"hessian", mat_json(cp.hessian)},
                           {"hessian_eigenvalues", vec_json(hs.eigenvalues())},
                           {"min_abs_eigenvalue", cp.min_abs_eigenvalue}};
    std::cout << j.dump(2) << "\n";
    return 0;
  } catch (const foliate::DegenerateHessian& e) {
    j["warning"] = std::string("no nondegenerate critical point: ") + e.what();
    std::cout << j.dump(2) << "\n";
    return 3;
  }
}

int cmd_expand_check(const RunConfig& cfg) {
  if (cfg.L < 8)
    throw foliate::LTooSmall("expansion check needs L >= 8 (got " + std::to_string(cfg.L) + ")");
  const foliate::GridPtr grid = foliate::build_grid(cfg.L);
  const Frame anchor = anchor_frame(cfg.metric, Vector3d::Zero());
  const foliate::CurvaturePoint curv =
      foliate::curvature_point(foliate::metric_jet(cfg.metric, anchor.base, 4), &anchor.vectors);
  const HarmonicField zero(cfg.L);

  std::vector<double> rs;
  for (int i = 0; i < 6; ++i) rs.push_back(0.02 * std::pow(5.0, i / 5.0));

  json j = header(cfg, "expand-check");
  json fits = json::array();
  for (double lambda : {0.0, -curv.sc / 3.0}) {
    std::vector<double> ds;
    double dmax = 0.0;
    for (double r : rs) {
      const foliate::SurfaceState st =
          foliate::embed_surface(cfg.metric, anchor, r, zero, grid);
      const HarmonicField num = foliate::willmore_residual(st, lambda);
      const HarmonicField cf = foliate::expansion_residual(curv, lambda, r, *grid);
      HarmonicField diff = num;
      diff.a -= cf.a;
      ds.push_back(synthesize(diff, *grid).cwiseAbs().maxCoeff());
      dmax = std::max(dmax, ds.back());
    }
    json one = {{"lambda", lambda}, {"max_difference", dmax}};
    if (dmax < 1e-9) {
      one["skipped"] = "difference identically zero to roundoff";
    } else {
      double st_ = 0, sq = 0, stt = 0, stq = 0;
      const int n = static_cast<int>(rs.size());
      for (int i = 0; i < n; ++i) {
        st_ += std::log(rs[i]);
        sq += std::log(ds[i]);
      }
      st_ /= n;
      sq /= n;
      for (int i = 0; i < n; ++i) {
        stt += (std::log(rs[i]) - st_) * (std::log(rs[i]) - st_);
        stq += (std::log(rs[i]) - st_) * (std::log(ds[i]) - sq);
      }
      one["slope"] = stq / stt;
    }
    fits.push_back(one);
  }
  j["fits"] = fits;
  std::cout << j.dump(2) << "\n";
  return 0;
}

Family run_solve(const RunConfig& cfg) {
  if (cfg.r_schedule.empty()) throw foliate::ConfigError("missing required key 'r_schedule'");
  const Frame anchor = locate_anchor(cfg);
  const foliate::GridPtr grid = foliate::build_grid(cfg.L);
  Family fam = continue_family(cfg.metric, anchor, cfg.r_schedule, grid, cfg.solve);
  fam.provenance = "config:" + cfg.hash;
  return fam;
}

json family_summary(const Family& fam) {
  json leaves = json::array();
  for (const Leaf& lf : fam.leaves)
    leaves.push_back(json{{"r", lf.r},
                          {"lambda", lf.lambda},
                          {"tau_norm", lf.tau.norm()},
                          {"area", lf.area},
                          {"energy", lf.energy},
                          {"residual_linf", lf.residual_linf},
                          {"newton_iters", lf.newton_iters}});
  return json{{"complete", fam.complete()},
              {"failed_index", fam.failed_index},
              {"error", fam.error},
              {"leaves", leaves}};
}

int cmd_solve(const RunConfig& cfg, const std::string& out_override) {
  const std::string dir = ensure_outdir(cfg, out_override);
  const Family fam = run_solve(cfg);
  save_family(fam, dir + "/family.json");
  json j = header(cfg, "solve");
  j["family_file"] = dir + "/family.json";
  j["family"] = family_summary(fam);
  std::cout << j.dump(2) << "\n";
  return fam.complete() ? 0 : 3;
}

int cmd_foliation_check(const RunConfig& cfg, const std::string& family_file,
                        const std::string& out_override, int workers) {
  const std::string dir = ensure_outdir(cfg, out_override);
  const Family fam = family_file.empty() ? run_solve(cfg) : foliate::load_family(family_file);
  if (!fam.complete())
    throw foliate::NoConvergence("family incomplete (" + fam.error + "); cannot check foliation");
  const foliate::FoliationReport rep =
      check_foliation(fam.spec, fam.anchor, fam, workers);
  if (family_file.empty()) save_family(fam, dir + "/family.json");
  emit_report(rep, fam, dir + "/foliation_report");

  json j = header(cfg, "foliation-check");
  j["report_file"] = dir + "/foliation_report.json";
  j["eta_min_gap"] = rep.eta_min_gap;
  j["disjoint"] = rep.disjoint;
  j["eta_r_slope_at_small_r"] = rep.eta_r_slope_at_small_r;
  j["lambda_limit"] = rep.lambda_limit;
  std::cout << j.dump(2) << "\n";
  return 0;
}

int cmd_uniqueness_check(const RunConfig& cfg) {
  if (!(cfg.r > 0.0))
    throw foliate::ConfigError("uniqueness check needs a positive 'r'");
  const Frame anchor = locate_anchor(cfg);
  const foliate::GridPtr grid = foliate::build_grid(cfg.L);
  const foliate::CurvaturePoint curv =
      foliate::curvature_point(foliate::metric_jet(cfg.metric, anchor.base, 4), &anchor.vectors);
  const foliate::InitialGuess base_init = initial_guess(curv, *grid);
  const Leaf base = solve_leaf(cfg.metric, anchor, cfg.r, base_init, grid, cfg.solve);

  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const int ncoef = grid->ncoef();
  int converged = 0, agreeing = 0;
  double worst = 0.0;
  json failures = json::array();
  for (int k = 0; k < cfg.n_perturbations; ++k) {
    foliate::InitialGuess init = base_init;
    init.lambda += cfg.perturbation_size * unit(rng);
    for (int i = 0; i < 3; ++i) init.tau[i] += cfg.perturbation_size * cfg.r * unit(rng);
    for (int c = 4; c < ncoef; ++c) init.phi.a[c] += cfg.perturbation_size * unit(rng);
    if (cfg.solve.freeze_tau) init.tau.setZero();
    try {
      const Leaf leaf = solve_leaf(cfg.metric, anchor, cfg.r, init, grid, cfg.solve);
      ++converged;
      const double dist =
          std::max({std::abs(leaf.lambda - base.lambda), (leaf.tau - base.tau).norm() / cfg.r,
                    (leaf.phi.a - base.phi.a).norm()});
      worst = std::max(worst, dist);
      if (dist <= 1e-6) ++agreeing;
    } catch (const foliate::Error& e) {
      failures.push_back(json{{"perturbation", k}, {"error", e.name()}, {"what", e.what()}});
    }
  }

  json j = header(cfg, "uniqueness-check");
  j["r"] = cfg.r;
  j["n_perturbations"] = cfg.n_perturbations;
  j["perturbation_size"] = cfg.perturbation_size;
  j["base_leaf"] = {{"lambda", base.lambda},
                    {"tau_norm", base.tau.norm()},
                    {"area", base.area},
                    {"newton_iters", base.newton_iters}};
  j["converged"] = converged;
  j["agreeing"] = agreeing;
  j["max_distance"] = worst;
  j["failures"] = failures;
  j["unique_basin"] = converged == cfg.n_perturbations && agreeing == converged;
  std::cout << j.dump(2) << "\n";
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"area-constrained Willmore sphere foliation solver"};
  app.require_subcommand(1);
  app.fallthrough();  // global options may follow the subcommand name

  std::string config_path, out_override, family_file;
  int workers = 1;
  app.add_option("--workers", workers, "worker threads for independent per-leaf work")
      ->check(CLI::PositiveNumber);
  app.add_option("--out", out_override, "output directory (overrides config output_dir)");

  auto add_config = [&](CLI::App* sub, bool required) {
    auto* opt = sub->add_option("--config", config_path, "run configuration file");
    if (required) opt->required();
  };

  CLI::App* c_curv = app.add_subcommand("curvature", "curvature and critical point at p");
  add_config(c_curv, true);
  CLI::App* c_exp = app.add_subcommand("expand-check", "residual-expansion order fit");
  add_config(c_exp, true);
  CLI::App* c_solve = app.add_subcommand("solve", "continue the leaf family over r_schedule");
  add_config(c_solve, true);
  CLI::App* c_fol = app.add_subcommand("foliation-check", "profile and verify a family");
  add_config(c_fol, false);
  c_fol->add_option("--family", family_file, "previously saved family file");
  CLI::App* c_uni = app.add_subcommand("uniqueness-check", "perturbed-restart basin test");
  add_config(c_uni, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    RunConfig cfg;
    if (!config_path.empty()) {
      cfg = foliate::load_config(config_path);
    } else if (c_fol->parsed() && !family_file.empty()) {
      cfg.hash = "none";
      cfg.output_dir = ".";
    } else {
      throw foliate::ConfigError("--config is required");
    }
    if (c_curv->parsed()) return cmd_curvature(cfg);
    if (c_exp->parsed()) return cmd_expand_check(cfg);
    if (c_solve->parsed()) return cmd_solve(cfg, out_override);
    if (c_fol->parsed()) return cmd_foliation_check(cfg, family_file, out_override, workers);
    if (c_uni->parsed()) return cmd_uniqueness_check(cfg);
  } catch (const foliate::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.kind() == foliate::ErrorKind::Validation ? 2 : 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 2;
}
