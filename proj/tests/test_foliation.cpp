#include "doctest.h"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "foliate/foliation.hpp"
#include "test_util.hpp"

using namespace foliate;
using testutil::bump_spec;
using testutil::round_spec;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Exact flat family of round spheres centered at the origin.
Family flat_family(const std::vector<double>& rs, int L) {
  MetricSpec sp;
  Family fam;
  fam.spec = sp;
  fam.anchor = anchor_frame(sp, Vector3d::Zero());
  fam.provenance = "synthetic";
  for (double r : rs) {
    Leaf leaf;
    leaf.r = r;
    leaf.phi = HarmonicField(L);
    leaf.area = 4.0 * M_PI * r * r;
    leaf.energy = 4.0 * M_PI;
    fam.leaves.push_back(leaf);
  }
  return fam;
}

} // namespace

TEST_CASE("radial profiles") {
  GridPtr grid = build_grid(8);
  SUBCASE("centered flat sphere has constant profile r") {
    MetricSpec sp;
    Leaf leaf;
    leaf.r = 0.1;
    leaf.phi = HarmonicField(8);
    const VectorXd eta =
        synthesize(radial_profile(sp, anchor_frame(sp, Vector3d::Zero()), leaf, grid), *grid);
    CHECK((eta.array() - 0.1).abs().maxCoeff() <= 1e-13);
  }
  SUBCASE("offset flat sphere matches the closed form") {
    // sphere of radius r centered at tau: eta(x) solves |eta x - tau| = r
    MetricSpec sp;
    Leaf leaf;
    leaf.r = 0.1;
    leaf.tau = Vector3d(0.02, -0.01, 0.015);
    leaf.phi = HarmonicField(8);
    const VectorXd eta =
        synthesize(radial_profile(sp, anchor_frame(sp, Vector3d::Zero()), leaf, grid), *grid);
    double worst = 0.0;
    for (int n = 0; n < grid->nodes(); ++n) {
      const Vector3d x = grid->xs.row(n).transpose();
      const double tx = leaf.tau.dot(x);
      const double exact =
          tx + std::sqrt(leaf.r * leaf.r - leaf.tau.squaredNorm() + tx * tx);
      worst = std::max(worst, std::abs(eta[n] - exact));
    }
    CHECK(worst <= 1e-9);
  }
  SUBCASE("round geodesic spheres have constant profile") {
    MetricSpec sp = round_spec();
    Frame anchor = anchor_frame(sp, Vector3d::Zero());
    SolveOptions opts;
    opts.freeze_tau = true;
    CurvaturePoint curv = curvature_point(metric_jet(sp, Vector3d::Zero(), 4), &anchor.vectors);
    Leaf leaf = solve_leaf(sp, anchor, 0.25, initial_guess(curv, *grid), grid, opts);
    const VectorXd eta = synthesize(radial_profile(sp, anchor, leaf, grid), *grid);
    CHECK((eta.array() - 0.25).abs().maxCoeff() <= 1e-8);
  }
  SUBCASE("bump leaf profile deviates from r only at second order") {
    MetricSpec sp = bump_spec();
    Frame anchor = anchor_frame(sp, Vector3d::Zero());
    CurvaturePoint curv = curvature_point(metric_jet(sp, Vector3d::Zero(), 4), &anchor.vectors);
    const double r = 0.1;
    Leaf leaf = solve_leaf(sp, anchor, r, initial_guess(curv, *grid), grid);
    const VectorXd eta = synthesize(radial_profile(sp, anchor, leaf, grid), *grid);
    CHECK((eta.array() - r).abs().maxCoeff() <= r * r);
  }
}

TEST_CASE("foliation report on solved families") {
  GridPtr grid = build_grid(8);
  SUBCASE("round family: exact geodesic-sphere foliation") {
    MetricSpec sp = round_spec();
    Frame anchor = anchor_frame(sp, Vector3d::Zero());
    SolveOptions opts;
    opts.freeze_tau = true;
    Family fam =
        continue_family(sp, anchor, {0.05, 0.07, 0.09, 0.12, 0.16, 0.22, 0.3}, grid, opts);
    REQUIRE(fam.complete());
    FoliationReport rep = check_foliation(sp, anchor, fam);
    CHECK(rep.disjoint);
    CHECK(rep.eta_min_gap == doctest::Approx(0.02).epsilon(1e-8));
    CHECK(std::abs(rep.lambda_limit + 2.0) <= 1e-6);
    CHECK(rep.eta_r_slope_at_small_r == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(rep.lambda_order.at_noise_floor);  // lambda = -2 exactly at every r
  }
  SUBCASE("bump family: all asymptotic orders") {
    MetricSpec sp = bump_spec();
    Frame anchor = anchor_frame(sp, Vector3d::Zero());
    std::vector<double> rs;
    for (int i = 0; i < 8; ++i) rs.push_back(0.05 * std::pow(6.0, i / 7.0));
    Family fam = continue_family(sp, anchor, rs, grid);
    REQUIRE(fam.complete());
    FoliationReport rep = check_foliation(sp, anchor, fam, 2);
    CHECK(rep.disjoint);
    CHECK(rep.eta_min_gap > 0.0);
    CHECK(rep.eta_r_slope_at_small_r >= 0.9);
    CHECK(rep.eta_r_slope_at_small_r <= 1.1);
    CHECK(rep.tau_order.at_noise_floor);  // the bump metric is even in y
    CHECK(rep.lambda_order.order >= 1.8);
    CHECK(rep.lambda_order.reliable);
    CHECK(rep.area_defect_order.order >= 3.5);
    CHECK(rep.energy_defect_order.order >= 1.8);
    CHECK(rep.area_rate_coef >= 0.98);
    CHECK(rep.area_rate_coef <= 1.02);
    const double sc = curvature_point(metric_jet(sp, Vector3d::Zero(), 4)).sc;
    CHECK(std::abs(rep.lambda_limit + sc / 3.0) <= 1e-4);
  }
  SUBCASE("insufficient families are rejected") {
    Family few = flat_family({0.05, 0.1, 0.15, 0.2, 0.3}, 8);
    CHECK_THROWS_AS(check_foliation(few.spec, few.anchor, few), InsufficientLeaves);
    Family narrow = flat_family({0.10, 0.11, 0.12, 0.13, 0.14, 0.15}, 8);
    CHECK_THROWS_AS(check_foliation(narrow.spec, narrow.anchor, narrow), InsufficientLeaves);
  }
}

TEST_CASE("report emission") {
  Family fam = flat_family({0.05, 0.08, 0.11, 0.14, 0.17, 0.2}, 8);
  FoliationReport rep = check_foliation(fam.spec, fam.anchor, fam);
  CHECK(rep.disjoint);
  CHECK(rep.area_defect_order.at_noise_floor);
  CHECK(rep.lambda_limit == 0.0);

  const std::string base = std::string(std::getenv("TMPDIR") ? std::getenv("TMPDIR") : "/tmp") +
                           "/foliate_test_report";
  SUBCASE("deterministic output") {
    emit_report(rep, fam, base);
    const std::string j1 = slurp(base + ".json"), c1 = slurp(base + ".csv");
    emit_report(rep, fam, base);
    CHECK(slurp(base + ".json") == j1);
    CHECK(slurp(base + ".csv") == c1);
    CHECK(c1.substr(0, c1.find('\n')) ==
          "r,lambda,tau_norm,area,energy,eta_gap,eta_mean,eta_min,eta_max");
  }
  SUBCASE("golden snapshot") {
    emit_report(rep, fam, base);
    CHECK(slurp(base + ".json") == slurp(std::string(GOLDEN_DIR) + "/flat_report.json"));
    CHECK(slurp(base + ".csv") == slurp(std::string(GOLDEN_DIR) + "/flat_report.csv"));
  }
  SUBCASE("empty families are rejected") {
    Family empty;
    CHECK_THROWS_AS(emit_report(rep, empty, base), InsufficientLeaves);
  }
}
