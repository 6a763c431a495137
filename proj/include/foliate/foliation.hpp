#pragma once

#include <string>

#include "foliate/solver.hpp"

namespace foliate {

/// Radial profile of one leaf about the family's center: eta(x) is the
/// geodesic distance from p to the leaf point whose log-direction is x,
/// i.e. eta = |Psi| composed with the inverse of beta = Psi/|Psi| where
/// Psi(u) = log_p(leaf position at direction u) in anchor-frame
/// components. beta is inverted per grid node by Newton on S^2
/// (initial guess the node itself, tolerance 1e-10).
HarmonicField radial_profile(const MetricSpec& spec, const Frame& p_frame, const Leaf& leaf,
                             GridPtr grid);

/// One log-log least-squares exponent fit. `at_noise_floor` marks
/// quantities that vanish identically up to roundoff (the fit slope is
/// then meaningless and `order` is left at zero); `reliable` requires
/// R^2 >= 0.98 over the fitting window.
struct OrderFit {
  double order = 0.0;
  double r2 = 0.0;
  bool reliable = false;
  bool at_noise_floor = false;
};

/// Per-leaf summary of the radial profile; `gap_to_next` is
/// min_x(eta_next - eta) against the next-larger leaf (NaN on the
/// largest leaf).
struct LeafEta {
  double r = 0.0;
  double eta_mean = 0.0;
  double eta_min = 0.0;
  double eta_max = 0.0;
  double gap_to_next = 0.0;
};

struct FoliationReport {
  double eta_min_gap = 0.0;          // min over consecutive pairs and x
  bool disjoint = false;             // eta_min_gap > 0
  double eta_r_slope_at_small_r = 0.0;  // d(mean eta)/dr, three smallest leaves
  double lambda_limit = 0.0;         // Richardson-extrapolated lambda(0)
  double area_rate_coef = 0.0;       // central-difference a'(r) / (8 pi r), smallest interior leaf
  OrderFit tau_order;                // |tau(r)|
  OrderFit lambda_order;             // |lambda(r) + Sc(p)/3|
  OrderFit area_defect_order;        // |a(r) - 4 pi r^2|
  OrderFit energy_defect_order;      // |energy(r) - 4 pi|
  std::vector<LeafEta> leaf_eta;
};

/// Profile every leaf, verify disjointness, and fit every asymptotic
/// order over the family's radius range (largest leaf dropped from the
/// fits). Requires >= 6 leaves spanning at least a factor 3 in r.
/// Profiles are computed on `workers` threads; the result does not
/// depend on the worker count.
FoliationReport check_foliation(const MetricSpec& spec, const Frame& p_frame,
                                const Family& family, int workers = 1);

/// Write <path>.json (full report + provenance) and <path>.csv
/// (columns r,lambda,tau_norm,area,energy,eta_gap,eta_mean,eta_min,
/// eta_max); output is byte-deterministic.
void emit_report(const FoliationReport& report, const Family& family, const std::string& path);

} // namespace foliate
