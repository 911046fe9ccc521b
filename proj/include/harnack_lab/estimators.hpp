#pragma once

// Empirical constants: ABP ratios, Green's function integrability, growth
// theorem decay factors, propagation and infimum growth, mean value and
// Harnack ratios, Hoelder exponents.

#include <optional>
#include <string>
#include <vector>

#include "harnack_lab/barriers.hpp"
#include "harnack_lab/ensemble.hpp"
#include "harnack_lab/geometry.hpp"
#include "harnack_lab/solver.hpp"

namespace hlab {

struct ConstantEstimate {
  std::string name;
  /// The estimand: max over the ensemble.
  double value = 0.0;
  double min = 0.0;
  double median = 0.0;
  double max = 0.0;
  int count = 0;
  int skipped = 0;
  int n = 1;
  double nu = 0.0;  ///< max certified nu over instances
  double S = 0.0;   ///< max measured S over instances
  double mu = 0.0;
  double h = 0.0;
  double tau = 0.0;
  std::vector<std::string> flags;

  /// Throws std::invalid_argument on an empty sample.
  static ConstantEstimate from(const std::string& name, std::vector<double> samples);
};

/// One row of an ensemble experiment.
struct InstanceRow {
  int instance = 0;
  std::string name;
  double value = 0.0;
  std::string flag;
};

struct EstimatorOptions {
  Exec exec = Exec::parallel;
  /// Keep instances whose operator failed the monotone sign pattern.
  bool include_nonmonotone = false;
};

/// (sum |f|^p w)^(1/p) over active nodes.
double lp_norm(const GridFunction& f, double p);
/// Same for |b| sampled at the nodes.
double drift_lp_norm(const DriftField& b, GridPtr grid, double p);
/// max(spatial diameter, sqrt(time extent)) of the bounding box of the footprint.
double parabolic_diameter(const SpaceTimeGrid& grid);

// ---------------------------------------------------------------- ABP

enum class AbpVariant { standard, variant };
const char* to_string(AbpVariant v);

struct AbpSetup {
  ParabolicCylinder domain = ParabolicCylinder::make(Point::at(0.0, 0.0), 1.0);
  double h = 1.0 / 16;
  double tau = 1.0 / 256;
  double p = 2.0;  ///< variant only
  AbpVariant variant = AbpVariant::standard;
  /// Forcing amplitude; f = scale * positive data.
  double forcing_scale = 1.0;
};

struct AbpRatio {
  double sup_u = 0.0;
  double denominator = 0.0;
  double ratio = 0.0;
  bool skipped = false;
};

/// One instance: solves -u_t + L u = -f, u = 0 on the boundary, and forms the ratio.
AbpRatio abp_ratio(const DiscreteOperator& op, const GridFunction& f, AbpVariant variant, double p);

ConstantEstimate abp_constant(const std::vector<Instance>& ensemble, const AbpSetup& setup,
                              const EstimatorOptions& opt = {}, std::vector<InstanceRow>* rows = nullptr);

// ---------------------------------------------------------------- Green

struct GreenSetup {
  SpaceTimeBox box{};
  std::vector<Point> anchors;
  /// Resolutions, finest last; tau = tau_coefficient * h^2.
  std::vector<double> hs;
  double tau_coefficient = 1.0;
  std::vector<double> q_ladder{1.5, 2.0, 2.25, 2.5, 2.75, 3.0, 3.5, 4.0};
  std::vector<double> rho_ladder{0.5, 0.25, 0.125};
  double stability = 0.05;
};

struct GreenAnchorReport {
  Point anchor{};
  bool skipped = false;
  std::string reason;
  /// [resolution][rho]
  std::vector<std::vector<double>> rh;
  /// [resolution][q]
  std::vector<std::vector<double>> norms;
  std::vector<bool> stable;
  double q_star = 0.0;
  double min_value = 0.0;  ///< finest resolution
  double mass = 0.0;       ///< sum G w on the finest resolution
  double max_rh_change = 0.0;
};

struct GreenReport {
  std::vector<double> hs;
  std::vector<double> q_ladder;
  std::vector<double> rho_ladder;
  std::vector<GreenAnchorReport> anchors;
  /// min over non-skipped anchors; 0 when no q is stable.
  double q_star = 0.0;
  /// q*/(q*-1); +inf when q* <= 1.
  double p_star = 0.0;
  double min_value = 0.0;
  std::vector<std::string> flags;
};

/// RH(rho) = (int_{Q_rho} G^{(n+1)/n})^{n/(n+1)} / (rho^{-(n+2)/(n+1)} int_{Q_rho/2} G) at the slice's anchor.
double reverse_holder_quotient(const GreenSlice& g, double rho);
/// ||G||_{L^q} over the grid.
double green_norm(const GreenSlice& g, double q);

using OperatorFactory = std::function<DiscreteOperator(GridPtr)>;

GreenReport green_integrability(const OperatorFactory& make_operator, const GreenSetup& setup,
                                Exec exec = Exec::parallel);

// ---------------------------------------------------------------- growth

enum class GrowthKind { GT1, GT2, GT3, COR };
const char* to_string(GrowthKind k);
GrowthKind parse_growth_kind(const std::string& s);

struct GrowthGeometry {
  Point Y{};
  double r = 1.0;
  /// GT2: disk D_rho = B_rho(z) x {tau}.
  SpaceVec z{0.0, 0.0};
  double rho = 0.0;
  double tau = 0.0;
  /// GT3 / COR: mu of the measure condition (ignored when >= 1).
  double mu = 1.0;
  /// Sign tolerance used for "u <= 0" and "v >= 0" checks.
  double tol = 1e-12;
};

struct GrowthResult {
  double mu_hat = 0.0;
  double ratio = 0.0;
  /// GT2: max(rho |y - z| / (s - tau), (s - tau) / rho^2).
  double K = 0.0;
  std::string flag;
};

/// Max of u_+ over grid nodes in the closed cylinder.
double positive_max(const GridFunction& u, const ParabolicCylinder& q);

/// Rejections throw std::invalid_argument naming the violated inequality.
GrowthResult growth_check(GrowthKind kind, const GridFunction& u, const GrowthGeometry& g);

// ---------------------------------------------------------------- propagation

/// u_+(Y)^p |Q_r| / int_{Q_r} u_+^p with the discrete measure in both places.
struct MeanValue {
  double ratio = 0.0;
  std::string flag;
};
MeanValue mean_value_p(const GridFunction& u, const Point& Y, double r, double p);

struct BottomPropagation {
  double bottom_min = 0.0;
  double top_min = 0.0;
  double value = 0.0;  ///< top_min / ell
};

/// Box B_r(0) x (-r^2, (alpha-1) r^2): plate minima on the first and last levels of the box.
/// Rejects u < ell on the bottom plate.
BottomPropagation bottom_propagation(const GridFunction& u, double r, double eps, double alpha, double ell);

struct PowerFit {
  double C1 = 0.0;
  double m = 0.0;
  double residual = 0.0;
};
/// value ~ C1 eps^m by least squares in log-log.
PowerFit fit_power_law(const std::vector<double>& eps, const std::vector<double>& values);

struct SlantedRatio {
  double ratio = 0.0;  ///< u(Y) / sup_{V_r(Y)} u_+
  double K = 0.0;      ///< max(r |y| / s, s / r^2)
  std::string flag;
};
/// Requires u <= tol on B_r(0) x {0}.
SlantedRatio slanted_ratio(const GridFunction& u, const Point& Y, double r, double tol = 1e-12);

struct InfGrowth {
  double inf_small = 0.0;  ///< inf over D_rho
  double inf_top = 0.0;    ///< inf over D0
  double gamma = 0.0;
};
/// D_rho = B_rho(z) x {tau}, D0 = B_{r/2}(y) x {sigma}; hgap is the h of the time window.
InfGrowth inf_growth(const GridFunction& v, const Point& Y, double r, const SpaceVec& z, double rho, double tau,
                     double sigma, double hgap);

// ---------------------------------------------------------------- Harnack / Hoelder

/// sup over the lower cylinder / inf over Q_r(Y). Throws when the infimum is not positive.
double harnack_ratio(const GridFunction& u, const Point& Y, double r);

struct HarnackSetup {
  Point Y = Point::at(0.0, 0.0);
  double r = 0.5;
  double h = 1.0 / 32;
  double tau = 1.0 / 1024;
  /// Grid-aligned rescaling factors for the companion runs.
  std::vector<double> ks;
};

struct HarnackReport {
  ConstantEstimate N;
  std::vector<double> ratios;
  /// Per k: |N_k - N| / N with N_k the estimate on the rescaled instances.
  std::vector<double> ks;
  std::vector<double> gaps;
};

HarnackReport harnack_constant(const std::vector<Instance>& ensemble, const HarnackSetup& setup,
                               const EstimatorOptions& opt = {}, std::vector<InstanceRow>* rows = nullptr);

struct HoelderFit {
  bool flat = false;
  double exponent = 0.0;
  double residual = 0.0;
  std::vector<double> radii;
  std::vector<double> osc;
};

/// osc_j over Q_{r 2^-j}(Y) for j = 0..depth; slope of log osc vs log radius over j = 1..depth.
HoelderFit holder_exponent(const GridFunction& u, const Point& Y, double r, int depth);

/// max - min of u over nodes in the closed cylinder.
double cylinder_oscillation(const GridFunction& u, const ParabolicCylinder& q);

/// Operator of an instance on a grid.
DiscreteOperator instance_operator(const Instance& inst, GridPtr grid);
/// The instance with every field and the data pulled back by X -> (k x, k^2 t).
Instance rescale(const Instance& inst, double k);

}  // namespace hlab
