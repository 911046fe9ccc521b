#pragma once

// Typed experiment drivers shared by the command line runner and the
// acceptance suite.

#include <vector>

#include "harnack_lab/barriers.hpp"
#include "harnack_lab/coefficients.hpp"
#include "harnack_lab/ensemble.hpp"
#include "harnack_lab/estimators.hpp"

namespace hlab {

// ---------------------------------------------------------------- counterexample

struct CounterexampleSetup {
  CounterexampleParams params{};
  double h = 1.0 / 256;
  double tau = 1.0 / 256;
  /// Spatial half-width of the simulation box; time runs over [0, 1 - tau].
  double half_width = 1.0;
  std::vector<double> check_times{0.5, 0.9};
  /// Hoelder fits at (0, 1 - tau) with these depths.
  double holder_radius = 0.5;
  std::vector<int> depths{2, 3, 4, 5, 6};
};

struct CounterexampleResult {
  CounterexampleDrift drift;
  double l2_quadrature = 0.0;
  double min_admissible_C = 0.0;
  double printed_C = 0.0;
  bool printed_C_admissible = false;
  VerifyReport sub;    ///< v on {x > 0}
  VerifyReport super;  ///< v on {x < 0}
  /// Trap: min over {x>0} of u - v and max over {x<0} of u - v.
  double trap_pos = 0.0;
  double trap_neg = 0.0;
  /// Every level: t, oscillation of u over B_r(t)(0), 2E(t).
  std::vector<double> t, osc, bound;
  std::vector<double> check_osc, check_bound;
  std::vector<double> exponents;
};

/// Rejects alpha >= 1/2 ("-2 alpha > -1 violated").
CounterexampleResult counterexample_experiment(const CounterexampleSetup& setup);

// ---------------------------------------------------------------- growth

struct GrowthSetup {
  Point Y = Point::at(0.0, 0.0);
  double r = 1.0;
  double h = 1.0 / 32;
  double tau = 1.0 / 1024;
  /// Scale of the nonnegative forcing used to make strict sub/supersolutions.
  double forcing = 0.25;
  /// Target fractions of {u > 0} (GT1/GT3) and {v >= 1} (COR) swept per instance.
  std::vector<double> levels{0.01, 0.02, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  /// mu for the corollary's measure condition.
  double mu = 0.5;
  /// GT2 disk radius as a fraction of r.
  double disk_fraction = 0.25;
  /// Infimum growth disks.
  std::vector<double> rho_ladder{0.5, 0.25, 0.125};
  double hgap = 0.5;
  std::vector<double> ks{2.0, 4.0};
  std::vector<double> bin_edges{0.0, 0.02, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
};

struct GrowthSample {
  int instance = 0;
  GrowthKind kind = GrowthKind::GT1;
  double mu_hat = 0.0;
  double ratio = 0.0;
  double K = 0.0;
  std::string flag;
};

struct GrowthSweep {
  std::vector<GrowthSample> samples;
  /// Max ratio per mu_hat bin (NaN for empty bins).
  std::vector<double> gt1_bin_max, gt3_bin_max;
  double gt1_slope = 0.0;  ///< least-squares slope of bin max vs bin midpoint
  bool gt1_nondecreasing = false;
  bool gt3_nondecreasing = false;
  bool gt3_below_one = false;
  int cor_condition = 0;            ///< samples meeting the measure condition
  double cor_min = 0.0;             ///< min of the lower bound over those samples
  double gt2_min = 0.0, gt2_max = 0.0;
  double gamma_max = 0.0;
  bool gamma_finite = false;
  /// Max |ratio_k - ratio| over GT2 samples and |gamma_k - gamma| over growth samples.
  double covariance_gap = 0.0;
  int verified = 0;
  int verify_failed = 0;
  int skipped = 0;
};

GrowthSweep growth_sweep(const std::vector<Instance>& ensemble, const GrowthSetup& setup,
                         const EstimatorOptions& opt = {});

// ---------------------------------------------------------------- maximum / comparison principles

struct PrincipleSweep {
  int solves = 0;
  int skipped = 0;
  double worst_excess = 0.0;      ///< max interior_excess / scale
  double worst_difference = 0.0;  ///< min (u - v) / scale over ordered pairs
  int max_failures = 0;
  int comparison_failures = 0;
};

/// Caloric solves with random data (max principle) and ordered pairs (comparison) over the
/// ensemble's region.
PrincipleSweep principle_sweep(const std::vector<Instance>& ensemble, const ParabolicCylinder& domain, double h,
                               double tau, const EstimatorOptions& opt = {});

}  // namespace hlab
