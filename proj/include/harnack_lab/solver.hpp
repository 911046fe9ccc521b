#pragma once

// Implicit monotone finite differences for -u_t + a_ij D_ij u + b_i D_i u,
// Dirichlet solves marching bottom to top, discrete Green's functions and
// maximum/comparison principle checks.

#include <functional>
#include <string>
#include <vector>

#include "harnack_lab/coefficients.hpp"
#include "harnack_lab/geometry.hpp"
#include "harnack_lab/parallel.hpp"

namespace hlab {

struct AssembleOptions {
  /// Centered drift differences (second order, not monotone in general).
  bool centered_drift = false;
};

/// Spatial part at each unknown node i: (L u)_i = sum_j w_ij (u_j - u_i), j on the same level.
/// The time derivative is the backward difference (u_i - u_below(i)) / tau, so data flows
/// from the bottom of the domain upward.
struct DiscreteOperator {
  GridPtr grid;
  DiffusionField a;
  DriftField b;
  /// Stencil rows in CSR layout over all nodes (rows of non-unknown nodes are empty).
  std::vector<std::size_t> row_start;
  std::vector<std::size_t> cols;
  std::vector<double> weights;
  bool monotone = true;
  bool centered_drift = false;
  std::vector<std::string> diagnostics;

  std::size_t below(std::size_t node) const;
  double diagonal(std::size_t node) const;
};

/// Coefficients are sampled at (x_i, t_k - tau/2). Requires a certified diffusion field.
DiscreteOperator assemble(const DiffusionField& a, const DriftField& b, GridPtr grid,
                          const AssembleOptions& opt = {});

/// -u_t + L u at unknown nodes; zero elsewhere.
GridFunction apply(const DiscreteOperator& op, const GridFunction& u);

struct Solution {
  GridFunction u;
  /// "non-monotone" when the operator failed the sign pattern.
  std::vector<std::string> tags;
  bool tagged(const std::string& t) const;
};

/// Solves -u_t + L u = rhs at unknown nodes with u = g on the parabolic boundary.
/// One linear system per level (tridiagonal for n=1, sparse LU for n=2), each checked to
/// relative residual <= 1e-10; a failing level throws std::runtime_error naming it.
Solution solve_dirichlet(const DiscreteOperator& op, const GridFunction& rhs, const GridFunction& g);
/// g sampled from a function.
Solution solve_dirichlet(const DiscreteOperator& op, const GridFunction& rhs,
                         const std::function<double(const Point&)>& g);

struct GreenSlice {
  Point anchor{};
  std::size_t anchor_node = 0;
  /// G(anchor; y, s) per node; sum G f weight = u(anchor) for -u_t + L u = -f, u = 0 on the boundary.
  GridFunction values;
};

/// One adjoint solve, marching from the anchor level down to the bottom.
GreenSlice green_slice(const DiscreteOperator& op, const Point& anchor);
std::vector<GreenSlice> green_slices(const DiscreteOperator& op, const std::vector<Point>& anchors,
                                     Exec exec = Exec::parallel);

struct PrincipleReport {
  /// max(sup over the domain - sup over the parabolic boundary, 0) for u.
  double interior_excess = 0.0;
  /// min(u - v) over the domain (NaN when no v was given).
  double min_difference = 0.0;
  double scale = 0.0;
  /// min of apply(op, u) over unknown nodes (subsolution precondition for the excess).
  double min_residual_u = 0.0;
  /// max of apply(u) - apply(v) (comparison precondition; <= tol expected).
  double residual_gap = 0.0;
  /// min of u - v on the parabolic boundary.
  double boundary_gap = 0.0;
  bool max_principle_ok = false;
  bool comparison_ok = false;
};

/// Throws std::invalid_argument on non-finite values.
PrincipleReport check_principles(const DiscreteOperator& op, const GridFunction& u,
                                 const GridFunction* v = nullptr, double rel_tol = 1e-12);

enum class TauRule { linear, quadratic };

struct ConvergenceStudy {
  std::function<double(const Point&)> exact;
  /// Continuum value of -u_t + L u on the exact solution.
  std::function<double(const Point&)> rhs;
  std::function<DiscreteOperator(GridPtr)> make_operator;
  SpaceTimeBox box{};
  std::vector<double> hs;
  TauRule tau_rule = TauRule::quadratic;
  double tau_coefficient = 1.0;
};

struct ConvergenceReport {
  std::vector<double> h, tau, error;
  double space_order = 0.0;
  double time_order = 0.0;
  bool exact = false;
  bool monotone_decay = true;
  std::vector<std::string> flags;
};

/// Needs >= 3 resolutions with halving h.
ConvergenceReport convergence_order(const ConvergenceStudy& study);

/// Max |u - v| over active nodes (grids must match).
double max_abs_difference(const GridFunction& u, const GridFunction& v);
double sup_norm(const GridFunction& u);

}  // namespace hlab
