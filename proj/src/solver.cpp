#include "harnack_lab/solver.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <sstream>
#include <stdexcept>

namespace hlab {

namespace {

bool same_grid(const GridPtr& a, const GridPtr& b) {
  if (a == b) return true;
  if (!a || !b || a->size() != b->size()) return false;
  const auto &ba = a->bounds(), &bb = b->bounds();
  return ba.dim == bb.dim && ba.lo == bb.lo && ba.hi == bb.hi && ba.t0 == bb.t0 && ba.t1 == bb.t1 &&
         a->h() == b->h() && a->tau() == b->tau() && a->active_mask() == b->active_mask();
}

void require_grid(const DiscreteOperator& op, const GridFunction& u, const char* what) {
  if (!same_grid(op.grid, u.grid)) {
    throw std::invalid_argument(std::string(what) + ": grid does not match the operator's grid");
  }
}

std::size_t plane_size(const SpaceTimeGrid& g) {
  return static_cast<std::size_t>(g.nx(0)) * g.nx(1);
}

// Unknowns of one time level with the level's matrix rows. Row m of the matrix is
// (1/tau + sum w) x_m - sum_{j unknown} w x_j; couplings to boundary nodes go to `bnd`.
struct LevelSystem {
  std::vector<std::size_t> nodes;
  std::vector<long> local;  // node offset within the level -> local index, -1 if not unknown
  std::vector<double> diag;
  // flat rows: (local col, -w) and (boundary node, w)
  std::vector<std::size_t> off_start, bnd_start;
  std::vector<std::pair<long, double>> off;
  std::vector<std::pair<std::size_t, double>> bnd;

  std::span<const std::pair<long, double>> row(std::size_t i) const {
    return {off.data() + off_start[i], off_start[i + 1] - off_start[i]};
  }
  std::span<const std::pair<std::size_t, double>> boundary(std::size_t i) const {
    return {bnd.data() + bnd_start[i], bnd_start[i + 1] - bnd_start[i]};
  }
};

LevelSystem level_system(const DiscreteOperator& op, int k) {
  const SpaceTimeGrid& g = *op.grid;
  const std::size_t plane = plane_size(g);
  const std::size_t base = static_cast<std::size_t>(k) * plane;
  LevelSystem ls;
  ls.local.assign(plane, -1);
  for (std::size_t off = 0; off < plane; ++off) {
    if (g.unknown(base + off)) {
      ls.local[off] = static_cast<long>(ls.nodes.size());
      ls.nodes.push_back(base + off);
    }
  }
  const std::size_t m = ls.nodes.size();
  ls.diag.assign(m, 1.0 / g.tau());
  ls.off_start.assign(m + 1, 0);
  ls.bnd_start.assign(m + 1, 0);
  ls.off.reserve(2 * m);
  for (std::size_t r = 0; r < m; ++r) {
    const std::size_t node = ls.nodes[r];
    ls.off_start[r] = ls.off.size();
    ls.bnd_start[r] = ls.bnd.size();
    for (std::size_t e = op.row_start[node]; e < op.row_start[node + 1]; ++e) {
      const std::size_t j = op.cols[e];
      const double w = op.weights[e];
      ls.diag[r] += w;
      const long lj = ls.local[j - base];
      if (lj >= 0) {
        ls.off.push_back({lj, -w});
      } else {
        ls.bnd.push_back({j, w});
      }
    }
  }
  ls.off_start[m] = ls.off.size();
  ls.bnd_start[m] = ls.bnd.size();
  return ls;
}

double relative_residual(const LevelSystem& ls, const std::vector<double>& x, const std::vector<double>& d,
                         bool transpose) {
  const std::size_t m = ls.nodes.size();
  std::vector<double> r(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) r[i] += ls.diag[i] * x[i];
  for (std::size_t i = 0; i < m; ++i) {
    for (auto [j, a] : ls.row(i)) {
      if (transpose) {
        r[j] += a * x[i];
      } else {
        r[i] += a * x[j];
      }
    }
  }
  double rn = 0.0, dn = 0.0, xn = 0.0, an = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    rn = std::max(rn, std::abs(r[i] - d[i]));
    dn = std::max(dn, std::abs(d[i]));
    xn = std::max(xn, std::abs(x[i]));
    an = std::max(an, std::abs(ls.diag[i]));
  }
  const double scale = std::max({dn, an * xn, std::numeric_limits<double>::min()});
  return rn / scale;
}

// Thomas algorithm on the level's tridiagonal matrix (n = 1, unknowns sorted by x).
std::vector<double> solve_tridiagonal(const LevelSystem& ls, std::vector<double> d, bool transpose) {
  const std::size_t m = ls.nodes.size();
  std::vector<double> lower(m, 0.0), upper(m, 0.0), diag = ls.diag;
  for (std::size_t i = 0; i < m; ++i) {
    for (auto [j, a] : ls.row(i)) {
      const auto ju = static_cast<std::size_t>(j);
      std::size_t row = i, col = ju;
      if (transpose) std::swap(row, col);
      if (col + 1 == row) {
        lower[row] += a;
      } else if (row + 1 == col) {
        upper[row] += a;
      } else {
        throw std::logic_error("tridiagonal solve: coupling outside the band");
      }
    }
  }
  for (std::size_t i = 1; i < m; ++i) {
    const double w = lower[i] / diag[i - 1];
    diag[i] -= w * upper[i - 1];
    d[i] -= w * d[i - 1];
  }
  std::vector<double> x(m, 0.0);
  if (m == 0) return x;
  x[m - 1] = d[m - 1] / diag[m - 1];
  for (std::size_t i = m - 1; i-- > 0;) x[i] = (d[i] - upper[i] * x[i + 1]) / diag[i];
  return x;
}

std::vector<double> solve_sparse(const LevelSystem& ls, const std::vector<double>& d, bool transpose) {
  const long m = static_cast<long>(ls.nodes.size());
  std::vector<Eigen::Triplet<double>> trip;
  for (long i = 0; i < m; ++i) {
    trip.emplace_back(i, i, ls.diag[i]);
    for (auto [j, a] : ls.row(i)) {
      if (transpose) {
        trip.emplace_back(j, i, a);
      } else {
        trip.emplace_back(i, j, a);
      }
    }
  }
  Eigen::SparseMatrix<double> A(m, m);
  A.setFromTriplets(trip.begin(), trip.end());
  A.makeCompressed();
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
  lu.compute(A);
  if (lu.info() != Eigen::Success) return {};
  Eigen::Map<const Eigen::VectorXd> rhs(d.data(), m);
  Eigen::VectorXd x = lu.solve(rhs);
  if (lu.info() != Eigen::Success) return {};
  return std::vector<double>(x.data(), x.data() + m);
}

std::vector<double> solve_level(const DiscreteOperator& op, const LevelSystem& ls, const std::vector<double>& d,
                                bool transpose, int k) {
  if (ls.nodes.empty()) return {};
  auto x = op.grid->dim() == 1 ? solve_tridiagonal(ls, d, transpose) : solve_sparse(ls, d, transpose);
  bool finite = x.size() == ls.nodes.size();
  for (double v : x) finite = finite && std::isfinite(v);
  if (!finite || relative_residual(ls, x, d, transpose) > 1e-10) {
    throw std::runtime_error("linear solve did not converge at time level " + std::to_string(k));
  }
  return x;
}

}  // namespace

std::size_t DiscreteOperator::below(std::size_t node) const { return node - plane_size(*grid); }

double DiscreteOperator::diagonal(std::size_t node) const {
  double s = 0.0;
  for (std::size_t e = row_start[node]; e < row_start[node + 1]; ++e) s += weights[e];
  return s;
}

DiscreteOperator assemble(const DiffusionField& a, const DriftField& b, GridPtr grid, const AssembleOptions& opt) {
  if (!grid || !grid->classified()) throw std::invalid_argument("assemble: grid must be classified");
  if (!(a.nu > 0.0)) throw std::invalid_argument("assemble: parabolicity certificate missing");
  if (a.dim != grid->dim() || b.dim != grid->dim()) throw std::invalid_argument("assemble: dimension mismatch");
  DiscreteOperator op;
  op.grid = grid;
  op.a = a;
  op.b = b;
  op.centered_drift = opt.centered_drift;
  const SpaceTimeGrid& g = *grid;
  const int dim = g.dim();
  const double h = g.h(), h2 = h * h;
  op.row_start.assign(g.size() + 1, 0);

  std::size_t cross_violations = 0, negative_rows = 0, unknowns = 0;
  std::size_t first_cross = 0, first_negative = 0;
  std::vector<std::pair<int, double>> entries;  // (linear offset, weight)
  std::vector<std::pair<std::size_t, double>> row;
  for (std::size_t node = 0; node < g.size(); ++node) {
    op.row_start[node] = op.cols.size();
    if (!g.unknown(node)) continue;
    ++unknowns;
    auto [i, j, k] = g.coords(node);
    Point p = g.point(node);
    p.t -= 0.5 * g.tau();
    const Matrix2 m = a.eval(p);
    const SpaceVec bv = b.eval(p);
    row.clear();
    auto add = [&](int di, int dj, double w) { row.push_back({g.index(i + di, j + dj, k), w}); };

    if (dim == 1) {
      add(1, 0, m[0][0] / h2);
      add(-1, 0, m[0][0] / h2);
    } else {
      const double a12 = 0.5 * (m[0][1] + m[1][0]);
      const double c = std::abs(a12);
      if (c > std::min(m[0][0], m[1][1])) {
        if (cross_violations++ == 0) first_cross = node;
      }
      add(1, 0, (m[0][0] - c) / h2);
      add(-1, 0, (m[0][0] - c) / h2);
      add(0, 1, (m[1][1] - c) / h2);
      add(0, -1, (m[1][1] - c) / h2);
      if (c > 0.0) {
        if (a12 > 0.0) {
          add(1, 1, c / h2);
          add(-1, -1, c / h2);
        } else {
          add(1, -1, c / h2);
          add(-1, 1, c / h2);
        }
      }
    }
    for (int ax = 0; ax < dim; ++ax) {
      const int di = ax == 0 ? 1 : 0, dj = ax == 1 ? 1 : 0;
      const double bi = bv[ax];
      if (opt.centered_drift) {
        add(di, dj, 0.5 * bi / h);
        add(-di, -dj, -0.5 * bi / h);
      } else if (bi > 0.0) {
        add(di, dj, bi / h);
      } else if (bi < 0.0) {
        add(-di, -dj, -bi / h);
      }
    }
    // Merge duplicates so each neighbor appears once.
    std::sort(row.begin(), row.end());
    bool negative = false;
    for (std::size_t e = 0; e < row.size();) {
      std::size_t col = row[e].first;
      double w = 0.0;
      for (; e < row.size() && row[e].first == col; ++e) w += row[e].second;
      if (!std::isfinite(w)) {
        std::ostringstream msg;
        msg << "assemble: non-finite stencil weight at node " << node;
        throw std::invalid_argument(msg.str());
      }
      negative = negative || w < 0.0;
      op.cols.push_back(col);
      op.weights.push_back(w);
    }
    if (negative && negative_rows++ == 0) first_negative = node;
  }
  op.row_start[g.size()] = op.cols.size();

  if (cross_violations > 0) {
    std::ostringstream msg;
    msg << "cross term |a12| > min(a11, a22) at " << cross_violations << " of " << unknowns
        << " unknown nodes (first: node " << first_cross << ")";
    op.diagnostics.push_back(msg.str());
  }
  if (negative_rows > 0) {
    std::ostringstream msg;
    msg << "negative off-diagonal stencil weight at " << negative_rows << " of " << unknowns
        << " unknown nodes (first: node " << first_negative << ")";
    op.diagnostics.push_back(msg.str());
  }
  if (opt.centered_drift) op.diagnostics.push_back("centered drift differences");
  op.monotone = negative_rows == 0 && cross_violations == 0 && !opt.centered_drift;
  return op;
}

GridFunction apply(const DiscreteOperator& op, const GridFunction& u) {
  require_grid(op, u, "apply");
  const SpaceTimeGrid& g = *op.grid;
  GridFunction r(op.grid, 0.0);
  const double inv_tau = 1.0 / g.tau();
  for (std::size_t node = 0; node < g.size(); ++node) {
    if (!g.unknown(node)) continue;
    double s = -(u.values[node] - u.values[op.below(node)]) * inv_tau;
    for (std::size_t e = op.row_start[node]; e < op.row_start[node + 1]; ++e) {
      s += op.weights[e] * (u.values[op.cols[e]] - u.values[node]);
    }
    r.values[node] = s;
  }
  return r;
}

bool Solution::tagged(const std::string& t) const {
  return std::find(tags.begin(), tags.end(), t) != tags.end();
}

Solution solve_dirichlet(const DiscreteOperator& op, const GridFunction& rhs, const GridFunction& g) {
  require_grid(op, rhs, "solve_dirichlet");
  require_grid(op, g, "solve_dirichlet");
  const SpaceTimeGrid& grid = *op.grid;
  Solution sol{GridFunction(op.grid, 0.0), {}};
  auto& u = sol.u.values;
  for (std::size_t node = 0; node < grid.size(); ++node) {
    if (grid.on_parabolic_boundary(node)) u[node] = g.values[node];
  }
  const double inv_tau = 1.0 / grid.tau();
  for (int k = 1; k < grid.nt(); ++k) {
    const LevelSystem ls = level_system(op, k);
    std::vector<double> d(ls.nodes.size());
    for (std::size_t r = 0; r < ls.nodes.size(); ++r) {
      const std::size_t node = ls.nodes[r];
      double v = u[op.below(node)] * inv_tau - rhs.values[node];
      for (auto [j, w] : ls.boundary(r)) v += w * u[j];
      d[r] = v;
    }
    const auto x = solve_level(op, ls, d, false, k);
    for (std::size_t r = 0; r < ls.nodes.size(); ++r) u[ls.nodes[r]] = x[r];
  }
  if (!op.monotone) sol.tags.push_back("non-monotone");
  return sol;
}

Solution solve_dirichlet(const DiscreteOperator& op, const GridFunction& rhs,
                         const std::function<double(const Point&)>& g) {
  const SpaceTimeGrid& grid = *op.grid;
  GridFunction data(op.grid, 0.0);
  for (std::size_t node = 0; node < grid.size(); ++node) {
    if (grid.on_parabolic_boundary(node)) data[node] = g(grid.point(node));
  }
  return solve_dirichlet(op, rhs, data);
}

GreenSlice green_slice(const DiscreteOperator& op, const Point& anchor) {
  const SpaceTimeGrid& g = *op.grid;
  const auto node = g.locate(anchor);
  if (!node) throw std::invalid_argument("green_slice: anchor is not a grid node");
  if (!g.unknown(*node)) throw std::invalid_argument("green_slice: anchor lies on the parabolic boundary");
  GreenSlice gs;
  gs.anchor = g.point(*node);
  gs.anchor_node = *node;
  gs.values = GridFunction(op.grid, 0.0);
  auto& y = gs.values.values;  // holds the adjoint variable until the final division

  const std::size_t plane = plane_size(g);
  const int top = g.coords(*node)[2];
  const double inv_tau = 1.0 / g.tau();
  for (int k = top; k >= 1; --k) {
    const LevelSystem ls = level_system(op, k);
    std::vector<double> z(ls.nodes.size(), 0.0);
    for (std::size_t r = 0; r < ls.nodes.size(); ++r) {
      const std::size_t n = ls.nodes[r];
      if (k == top) {
        z[r] = n == *node ? 1.0 : 0.0;
      } else if (g.unknown(n + plane)) {
        z[r] = inv_tau * y[n + plane];
      }
    }
    const auto x = solve_level(op, ls, z, true, k);
    for (std::size_t r = 0; r < ls.nodes.size(); ++r) y[ls.nodes[r]] = x[r];
  }
  for (std::size_t n = 0; n < g.size(); ++n) {
    if (y[n] != 0.0) y[n] /= g.weight(n);
  }
  return gs;
}

std::vector<GreenSlice> green_slices(const DiscreteOperator& op, const std::vector<Point>& anchors, Exec exec) {
  std::vector<GreenSlice> out(anchors.size());
  const long n = static_cast<long>(anchors.size());
  if (exec == Exec::parallel) {
    std::vector<std::string> errors(anchors.size());
#pragma omp parallel for schedule(dynamic) num_threads(thread_count())
    for (long i = 0; i < n; ++i) {
      try {
        out[i] = green_slice(op, anchors[i]);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
    for (const auto& e : errors) {
      if (!e.empty()) throw std::invalid_argument(e);
    }
  } else {
    for (long i = 0; i < n; ++i) out[i] = green_slice(op, anchors[i]);
  }
  return out;
}

PrincipleReport check_principles(const DiscreteOperator& op, const GridFunction& u, const GridFunction* v,
                                 double rel_tol) {
  require_grid(op, u, "check_principles");
  if (v) require_grid(op, *v, "check_principles");
  const SpaceTimeGrid& g = *op.grid;
  for (std::size_t n = 0; n < g.size(); ++n) {
    if (!g.active(n)) continue;
    if (!std::isfinite(u.values[n]) || (v && !std::isfinite(v->values[n]))) {
      throw std::invalid_argument("check_principles: non-finite value at node " + std::to_string(n));
    }
  }
  PrincipleReport rep;
  const double ninf = -std::numeric_limits<double>::infinity();
  double sup_all = ninf, sup_bnd = ninf;
  rep.scale = sup_norm(u);
  if (v) rep.scale = std::max(rep.scale, sup_norm(*v));
  for (std::size_t n = 0; n < g.size(); ++n) {
    if (!g.active(n)) continue;
    sup_all = std::max(sup_all, u.values[n]);
    if (g.on_parabolic_boundary(n)) sup_bnd = std::max(sup_bnd, u.values[n]);
  }
  rep.interior_excess = std::max(sup_all - sup_bnd, 0.0);
  const GridFunction ru = apply(op, u);
  rep.min_residual_u = std::numeric_limits<double>::infinity();
  for (std::size_t n = 0; n < g.size(); ++n) {
    if (g.unknown(n)) rep.min_residual_u = std::min(rep.min_residual_u, ru.values[n]);
  }
  const double tol = rel_tol * std::max(rep.scale, std::numeric_limits<double>::min());
  rep.max_principle_ok = rep.interior_excess <= tol;
  if (v) {
    const GridFunction rv = apply(op, *v);
    rep.min_difference = std::numeric_limits<double>::infinity();
    rep.boundary_gap = std::numeric_limits<double>::infinity();
    rep.residual_gap = -std::numeric_limits<double>::infinity();
    for (std::size_t n = 0; n < g.size(); ++n) {
      if (!g.active(n)) continue;
      const double d = u.values[n] - v->values[n];
      rep.min_difference = std::min(rep.min_difference, d);
      if (g.on_parabolic_boundary(n)) rep.boundary_gap = std::min(rep.boundary_gap, d);
      if (g.unknown(n)) rep.residual_gap = std::max(rep.residual_gap, ru.values[n] - rv.values[n]);
    }
    rep.comparison_ok = rep.min_difference >= -tol;
  } else {
    rep.min_difference = std::numeric_limits<double>::quiet_NaN();
  }
  return rep;
}

double sup_norm(const GridFunction& u) {
  double s = 0.0;
  for (std::size_t n = 0; n < u.values.size(); ++n) {
    if (u.grid->active(n)) s = std::max(s, std::abs(u.values[n]));
  }
  return s;
}

double max_abs_difference(const GridFunction& u, const GridFunction& v) {
  if (!same_grid(u.grid, v.grid)) throw std::invalid_argument("max_abs_difference: grids differ");
  double s = 0.0;
  for (std::size_t n = 0; n < u.values.size(); ++n) {
    if (u.grid->active(n)) s = std::max(s, std::abs(u.values[n] - v.values[n]));
  }
  return s;
}

ConvergenceReport convergence_order(const ConvergenceStudy& study) {
  if (study.hs.size() < 3) throw std::invalid_argument("convergence_order needs at least 3 resolutions");
  for (std::size_t i = 1; i < study.hs.size(); ++i) {
    if (std::abs(study.hs[i] - 0.5 * study.hs[i - 1]) > 1e-12 * study.hs[i - 1]) {
      throw std::invalid_argument("convergence_order: each resolution must halve h");
    }
  }
  ConvergenceReport rep;
  double scale = 0.0;
  for (double h : study.hs) {
    const double tau = study.tau_rule == TauRule::linear ? study.tau_coefficient * h
                                                          : study.tau_coefficient * h * h;
    auto grid = std::make_shared<const SpaceTimeGrid>(SpaceTimeGrid::box(study.box, h, tau));
    const DiscreteOperator op = study.make_operator(grid);
    const auto rhs = GridFunction::sample(grid, study.rhs);
    const auto exact = GridFunction::sample(grid, study.exact);
    const auto sol = solve_dirichlet(op, rhs, exact);
    rep.h.push_back(h);
    rep.tau.push_back(tau);
    rep.error.push_back(max_abs_difference(sol.u, exact));
    scale = std::max(scale, sup_norm(exact));
  }
  const double floor = 1e-10 * std::max(scale, 1.0);
  rep.exact = std::all_of(rep.error.begin(), rep.error.end(), [floor](double e) { return e <= floor; });
  if (rep.exact) {
    rep.flags.push_back("exact");
    rep.space_order = rep.time_order = std::numeric_limits<double>::quiet_NaN();
    return rep;
  }
  for (std::size_t i = 1; i < rep.error.size(); ++i) {
    if (!(rep.error[i] < rep.error[i - 1])) rep.monotone_decay = false;
  }
  if (!rep.monotone_decay) rep.flags.push_back("non-monotone error decay");
  rep.space_order = loglog_slope(rep.h, rep.error);
  rep.time_order = loglog_slope(rep.tau, rep.error);
  return rep;
}

}  // namespace hlab
