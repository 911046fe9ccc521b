#pragma once

// Diffusion and drift fields, parabolicity certificates, Morrey norms over
// parabolic cylinders, criticality classification, the scaling map b -> k b(kx, k^2 t)
// and the supercritical two-sided drift.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "harnack_lab/geometry.hpp"
#include "harnack_lab/parallel.hpp"

namespace hlab {

using Matrix2 = std::array<std::array<double, 2>, 2>;

struct DiffusionField {
  int dim = 1;
  std::string name;
  std::function<Matrix2(const Point&)> eval;
  /// Certified parabolicity constant; 0 until certify_parabolicity has run.
  double nu = 0.0;

  static DiffusionField constant(int dim, Matrix2 a);
  static DiffusionField identity(int dim);
};

struct DriftField {
  int dim = 1;
  std::string name;
  std::function<SpaceVec(const Point&)> eval;
  /// Optional exact value of the integral of |b|^p over a cylinder; empty when unknown.
  std::function<std::optional<double>(const ParabolicCylinder&, double p)> power_integral;

  static DriftField zero(int dim);
  static DriftField constant(int dim, SpaceVec c);
  /// b scaled by c > 0 (closed-form integral carried along).
  DriftField scaled(double c) const;
};

double euclid_norm(const SpaceVec& v, int dim);

/// Smallest nu with nu^-1 |xi|^2 <= a xi.xi and sum a_ij^2 <= nu^2 over every active node
/// of `samples` (coefficients sampled at the nodes), rounded up by 1e-12.
/// Throws std::runtime_error naming the first node with a non-positive-definite symmetric part.
double certify_parabolicity(const DiffusionField& a, const SpaceTimeGrid& samples);
/// Same, storing the result in a copy of the field.
DiffusionField certified(DiffusionField a, const SpaceTimeGrid& samples);

struct MorreyParams {
  int n = 1;
  double p = 2.0;
  double q = 2.0;
  double alpha = 0.5;

  /// Checks p, q >= 1, alpha >= 0 and n/p + 2/q - alpha = 1 within 1e-12.
  static MorreyParams make(int n, double p, double q, double alpha);
  /// p = q = n + 1, alpha = 1/(n+1).
  static MorreyParams critical(int n);
};

/// Region Omega over which cylinders are placed: a cylinder or a box.
struct MorreyRegion {
  bool is_cylinder = true;
  ParabolicCylinder cylinder{};
  SpaceTimeBox box{};

  static MorreyRegion of(const ParabolicCylinder& q);
  static MorreyRegion of(const SpaceTimeBox& b);
  int dim() const { return is_cylinder ? cylinder.dim : box.dim; }
  SpaceTimeBox bounds() const { return is_cylinder ? SpaceTimeBox::bounding(cylinder) : box; }
  bool admits(const ParabolicCylinder& q) const;
};

MorreyRegion rescale(const MorreyRegion& r, double k);

struct MorreyOptions {
  /// Centers: this many lattice points per axis over the region's bounding box.
  int centers_per_axis = 9;
  /// Midpoint cells per radius in space; time uses time_cells cells over (s - r^2, s).
  int cells_per_radius = 8;
  int time_cells = 32;
  /// Use DriftField::power_integral when available (p = q only).
  bool use_closed_form = true;
  Exec exec = Exec::parallel;
};

struct ScaleQuotient {
  double r = 0.0;
  double quotient = 0.0;
  Point argmax{};
};

struct MorreyReport {
  MorreyParams params{};
  /// sup of r^-alpha ||b||_{L^p_x L^q_t(Q_r(Y))}; S = norm^q.
  double norm = 0.0;
  double S = 0.0;
  ParabolicCylinder argmax{};
  /// Sorted by increasing r; only scales with an admissible cylinder.
  std::vector<ScaleQuotient> table;
  std::vector<double> skipped_scales;
  /// Least-squares slope of log quotient vs log r; NaN when the table is too short.
  double slope = 0.0;
};

/// r^-alpha times the mixed norm of b on one cylinder.
double morrey_quotient(const DriftField& b, const ParabolicCylinder& q, const MorreyParams& params,
                       const MorreyOptions& opt = {});

MorreyReport morrey_norm(const DriftField& b, const MorreyRegion& omega, const MorreyParams& params,
                         const std::vector<double>& scales, const MorreyOptions& opt = {});

/// r_max * 2^-j for j = 0 .. count-1.
std::vector<double> dyadic_scales(double r_max, int count);

enum class Criticality { subcritical, critical, supercritical };
const char* to_string(Criticality c);

struct Classification {
  Criticality kind = Criticality::critical;
  double slope = 0.0;
};

/// Requires >= 4 scales spanning at least one decade with positive quotients.
Classification criticality_classify(const MorreyReport& report, double tolerance = 0.05);

/// Least-squares slope of log y vs log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

/// b~(x, t) = k b(k x, k^2 t).
DriftField drift_rescale(const DriftField& b, double k);
/// a~(x, t) = a(k x, k^2 t), the companion map for the diffusion matrix.
DiffusionField diffusion_rescale(const DiffusionField& a, double k);

struct CounterexampleDrift {
  double alpha = 0.0;
  double beta = 0.0;
  /// b as written for u_t + b u_x - u_xx = 0.
  DriftField field;
  /// -b: the same equation in the form -u_t + u_xx + b u_x = 0.
  DriftField canonical;
  double integrability_exponent = 0.0;  ///< alpha - 2 beta, needs > -1
  double profile_exponent = 0.0;        ///< -2 alpha, needs > -1
  double supercritical_exponent = 0.0;  ///< 1 - alpha - beta, needs < 0
  bool integrability_ok = false;
  bool profile_ok = false;
  bool supercritical_ok = false;
  /// Closed-form squared L^2 norm over R x [0,1]: 2/(1 + alpha - 2 beta), +inf if divergent.
  double l2_squared = 0.0;
};

/// b(x,t) = (1-t)^-beta * (+1 on -r(t) <= x < 0, -1 on 0 < x <= r(t)), r(t) = (1-t)^alpha,
/// zero for t outside [0,1).
CounterexampleDrift counterexample_drift(double alpha, double beta);

/// Squared L^2 norm over R x [0,1] of a counterexample drift by quadrature of its time slices.
double counterexample_l2_squared_quadrature(const CounterexampleDrift& c);

/// c (1 + theta sin(omega phi)) / rho along `direction`, rho = (|x|^4 + t^2)^(1/4),
/// phi = atan2(t, |x|^2): invariant under b -> k b(kx, k^2 t).
DriftField pullback_drift(int dim, double c, double theta, double omega, SpaceVec direction);

}  // namespace hlab
