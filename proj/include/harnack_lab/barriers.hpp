#pragma once

// Explicit comparison functions: the psi barrier family, the first growth
// theorem auxiliary, the odd counterexample profile, sub/supersolution
// verification and oscillation.

#include <functional>
#include <string>

#include "harnack_lab/geometry.hpp"
#include "harnack_lab/solver.hpp"

namespace hlab {

struct BarrierParams {
  double alpha = 1.0;  ///< time stretch
  double eps = 0.5;
  double r = 1.0;
  double q = 2.0;
  double nu = 1.0;
  int n = 1;

  static BarrierParams make(double alpha, double eps, double r, double q, double nu, int n);
  double F1() const { return 2.0 / alpha + 8.0 * n / nu; }
  double lambda() const { return 1.0 / nu; }
  /// (1 - eps^2) / alpha
  double A() const { return (1.0 - eps * eps) / alpha; }
};

/// Smallest q >= 2 with A q xi^2 - F xi + c >= 0 on [xi_lo, xi_hi] (xi_hi may be +inf),
/// given the linear coefficient F and constant c > 0.
double quadratic_minimal_q(double A, double F, double c, double xi_lo, double xi_hi);

/// Smallest q >= 2 with ((1-eps^2) q/alpha) xi^2 - F1 xi + 8/nu >= 0 on the interval,
/// F1 = 2/alpha + 8 n/nu.
double minimal_q(double alpha, double eps, double nu, int n, double xi_lo = 0.0, double xi_hi = 1.0);

/// Same closed form with the linear coefficient obtained by expanding -psi_t + a_ij D_ij psi
/// for a constant matrix with smallest eigenvalue lambda_min and trace `trace`:
/// A q xi^2 - (2A + 4 trace + 8 lambda_min) xi + 8 lambda_min.
double operator_minimal_q(double alpha, double eps, double lambda_min, double trace, double xi_lo = 0.0,
                          double xi_hi = 1.0);

/// The value 2 + alpha / (32 (1 - eps^2)).
double printed_q(double alpha, double eps);

struct BarrierField {
  BarrierParams params;
  GridFunction psi0, psi1, psi;
  /// (eps r)^(-2q+4), bound for psi on the bottom for |x| <= eps r.
  double bottom_bound = 0.0;
  /// (9/16) r^(-2q+4), lower bound on the top for |x| <= r/2 and along x = 0.
  double top_bound = 0.0;
  /// Grid values of the three facts.
  double bottom_max = 0.0;
  double top_min = 0.0;
  double axis_min = 0.0;
  /// q below minimal_q for the parameters.
  bool q_tagged = false;
};

/// Box B_r x (-r^2, (alpha-1) r^2) (bounding square for n = 2).
SpaceTimeBox barrier_box(const BarrierParams& p);

BarrierField barrier_psi(const BarrierParams& p, GridPtr grid);

/// Unknown nodes whose stencil (and one more cell around it, in space and time) stays
/// strictly inside {psi1 > 0}.
NodeSet barrier_verify_region(const BarrierField& b, const DiscreteOperator& op);

enum class Sign { sub, super };

struct VerifyReport {
  /// min (sub) or max (super) of apply(op, u) over the region.
  double margin = 0.0;
  std::size_t node = 0;
  Point where{};
  double lipschitz = 0.0;  ///< c in tol = c (h + tau)
  double tol = 0.0;
  bool pass = false;
};

/// Throws std::invalid_argument when the region is empty.
VerifyReport verify_signed_solution(const GridFunction& u, const DiscreteOperator& op, const NodeSet& region,
                                    Sign sign);

/// Local truncation constant of the scheme on `region`: half the max |u_tt| plus half
/// the max |b_i| |u_ii| plus the max a_ii Lip(u_ii), from divided differences of u.
double truncation_constant(const GridFunction& u, const DiscreteOperator& op, const NodeSet& region);

/// v = u + t - s - |x - y|^2 with Y = (y, s).
GridFunction gt1_auxiliary(const GridFunction& u, const Point& Y);

struct CounterexampleParams {
  double alpha = 5.0 / 12.0;
  double beta = 2.0 / 3.0;
  /// Profile constant; the smallest admissible value is (pi/2)^2.
  double C = 2.4674011002723395;
};

/// phi(z) = sin(pi z / 2) for |z| <= 1, sign(z) beyond.
double profile_phi(double z);
/// I(t) = int_0^t (1-s)^(-2 alpha) ds = (1 - (1-t)^(1 - 2 alpha)) / (1 - 2 alpha).
double profile_time_integral(double alpha, double t);
/// E(t) = exp(-C I(t)).
double profile_envelope(const CounterexampleParams& p, double t);
/// Half-width r(t) = (1-t)^alpha.
double profile_radius(const CounterexampleParams& p, double t);

struct CounterexampleProfile {
  CounterexampleParams params;
  GridFunction v;
  /// max over (0,1) of -phi''/phi, the smallest admissible profile constant.
  double min_admissible_C = 0.0;
  /// The constant (2/pi)^2 and whether it satisfies -phi'' <= C phi.
  double printed_C = 0.0;
  bool printed_C_admissible = false;
};

/// v(x,t) = E(t) phi(x / r(t)) on the grid. Rejects alpha >= 1/2 ("-2 alpha > -1 violated").
CounterexampleProfile counterexample_profile(const CounterexampleParams& p, GridPtr grid);

/// max - min of u over active nodes in B_radius(center) on the level nearest `time`.
double oscillation(const GridFunction& u, const SpaceVec& center, double radius, double time);

}  // namespace hlab
