#include "harnack_lab/barriers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace hlab {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

BarrierParams BarrierParams::make(double alpha, double eps, double r, double q, double nu, int n) {
  if (!(alpha > 0.0)) throw std::invalid_argument("barrier: alpha must be positive");
  if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("barrier: eps must lie in (0,1)");
  if (!(r > 0.0)) throw std::invalid_argument("barrier: r must be positive");
  if (!(q >= 2.0)) throw std::invalid_argument("barrier: q must be at least 2");
  if (!(nu >= 1.0)) throw std::invalid_argument("barrier: nu must be at least 1");
  if (n != 1 && n != 2) throw std::invalid_argument("barrier: n must be 1 or 2");
  return BarrierParams{alpha, eps, r, q, nu, n};
}

double quadratic_minimal_q(double A, double F, double c, double xi_lo, double xi_hi) {
  if (!(A > 0.0) || !(c > 0.0)) throw std::invalid_argument("minimal_q: need A > 0 and c > 0");
  if (!(xi_lo >= 0.0) || !(xi_hi >= xi_lo)) throw std::invalid_argument("minimal_q: bad xi interval");
  // q must dominate k(xi) = (F xi - c) / (A xi^2) on the interval; k peaks at xi* = 2c/F.
  auto k = [A, F, c](double xi) { return xi > 0.0 ? (F * xi - c) / (A * xi * xi) : -kInf; };
  double q = 2.0;
  const double xi_star = F > 0.0 ? 2.0 * c / F : kInf;
  if (xi_star >= xi_lo && xi_star <= xi_hi) {
    q = std::max(q, F * F / (4.0 * c * A));
  } else {
    q = std::max(q, k(xi_lo));
    if (std::isfinite(xi_hi)) q = std::max(q, k(xi_hi));
  }
  return q;
}

double minimal_q(double alpha, double eps, double nu, int n, double xi_lo, double xi_hi) {
  if (!(alpha > 0.0) || !(eps > 0.0 && eps < 1.0) || !(nu >= 1.0)) {
    throw std::invalid_argument("minimal_q: need alpha > 0, eps in (0,1), nu >= 1");
  }
  const double A = (1.0 - eps * eps) / alpha;
  const double F1 = 2.0 / alpha + 8.0 * n / nu;
  return quadratic_minimal_q(A, F1, 8.0 / nu, xi_lo, xi_hi);
}

double operator_minimal_q(double alpha, double eps, double lambda_min, double trace, double xi_lo,
                          double xi_hi) {
  const double A = (1.0 - eps * eps) / alpha;
  return quadratic_minimal_q(A, 2.0 * A + 4.0 * trace + 8.0 * lambda_min, 8.0 * lambda_min, xi_lo, xi_hi);
}

double printed_q(double alpha, double eps) { return 2.0 + alpha / (32.0 * (1.0 - eps * eps)); }

SpaceTimeBox barrier_box(const BarrierParams& p) {
  SpaceTimeBox b;
  b.dim = p.n;
  for (int i = 0; i < p.n; ++i) {
    b.lo[i] = -p.r;
    b.hi[i] = p.r;
  }
  b.t0 = -p.r * p.r;
  b.t1 = (p.alpha - 1.0) * p.r * p.r;
  return b;
}

BarrierField barrier_psi(const BarrierParams& p, GridPtr grid) {
  BarrierField f;
  f.params = p;
  const double A = p.A(), r2 = p.r * p.r, e2r2 = p.eps * p.eps * r2;
  f.psi0 = GridFunction(grid, 0.0);
  f.psi1 = GridFunction(grid, 0.0);
  f.psi = GridFunction(grid, 0.0);
  const SpaceTimeGrid& g = *grid;
  const double tb = -r2, tt = (p.alpha - 1.0) * r2;
  f.bottom_max = -kInf;
  f.top_min = kInf;
  f.axis_min = kInf;
  const double slack = 1e-9 * std::max(g.tau(), g.h() * g.h());
  for (std::size_t n = 0; n < g.size(); ++n) {
    if (!g.active(n)) continue;
    const Point x = g.point(n);
    const double x2 = x.x[0] * x.x[0] + x.x[1] * x.x[1];
    const double psi0 = A * (x.t + r2) + e2r2;
    const double psi1 = std::max(psi0 - x2, 0.0);
    const double psi = psi1 * psi1 * std::pow(psi0, -p.q);
    f.psi0[n] = psi0;
    f.psi1[n] = psi1;
    f.psi[n] = psi;
    const double dist = std::sqrt(x2);
    if (std::abs(x.t - tb) <= slack && dist <= p.eps * p.r * (1.0 + 1e-12)) f.bottom_max = std::max(f.bottom_max, psi);
    if (std::abs(x.t - tt) <= slack && dist <= 0.5 * p.r * (1.0 + 1e-12)) f.top_min = std::min(f.top_min, psi);
    if (dist == 0.0) f.axis_min = std::min(f.axis_min, psi);
  }
  f.bottom_bound = std::pow(p.eps * p.r, -2.0 * p.q + 4.0);
  f.top_bound = (9.0 / 16.0) * std::pow(p.r, -2.0 * p.q + 4.0);
  f.q_tagged = p.q < minimal_q(p.alpha, p.eps, p.nu, p.n) * (1.0 - 1e-12);
  return f;
}

NodeSet barrier_verify_region(const BarrierField& b, const DiscreteOperator& op) {
  const SpaceTimeGrid& g = *op.grid;
  const int dim = g.dim();
  const int reach = 2;
  return NodeSet::where(op.grid, [&](std::size_t node) {
    if (!g.unknown(node)) return false;
    const auto [i, j, k] = g.coords(node);
    const int jr = dim == 2 ? reach : 0;
    for (int dk = -reach; dk <= 0; ++dk) {
      for (int dj = -jr; dj <= jr; ++dj) {
        for (int di = -reach; di <= reach; ++di) {
          const int ii = i + di, jj = j + dj, kk = k + dk;
          if (ii < 0 || ii >= g.nx(0) || jj < 0 || jj >= g.nx(1) || kk < 0) return false;
          const std::size_t m = g.index(ii, jj, kk);
          if (!g.active(m) || !(b.psi1[m] > 0.0)) return false;
        }
      }
    }
    return true;
  });
}

double truncation_constant(const GridFunction& u, const DiscreteOperator& op, const NodeSet& region) {
  const SpaceTimeGrid& g = *op.grid;
  const int dim = g.dim();
  const double h = g.h(), tau = g.tau();
  auto val = [&](int i, int j, int k, double& out) {
    if (i < 0 || i >= g.nx(0) || j < 0 || j >= g.nx(1) || k < 0 || k >= g.nt()) return false;
    const std::size_t m = g.index(i, j, k);
    if (!g.active(m)) return false;
    out = u.values[m];
    return true;
  };
  // Second difference along an axis at (i,j,k); false if a neighbor is missing.
  auto d2 = [&](int i, int j, int k, int ax, double& out) {
    const int di = ax == 0 ? 1 : 0, dj = ax == 1 ? 1 : 0;
    double a, b, c;
    if (!val(i - di, j - dj, k, a) || !val(i, j, k, b) || !val(i + di, j + dj, k, c)) return false;
    out = a - 2.0 * b + c;
    return true;
  };
  double cmax = 0.0;
  for (std::size_t node = 0; node < g.size(); ++node) {
    if (!region.contains(node)) continue;
    const auto [i, j, k] = g.coords(node);
    Point p = g.point(node);
    p.t -= 0.5 * tau;
    const Matrix2 a = op.a.eval(p);
    const SpaceVec b = op.b.eval(p);
    double c = 0.0;
    double u0, u1, u2;
    if (val(i, j, k, u0) && val(i, j, k - 1, u1) && val(i, j, k - 2, u2)) {
      c += 0.5 * std::abs(u0 - 2.0 * u1 + u2) / (tau * tau);
    }
    double lip_sum = 0.0;
    for (int ax = 0; ax < dim; ++ax) {
      const int di = ax == 0 ? 1 : 0, dj = ax == 1 ? 1 : 0;
      double s0, sp, sm;
      if (d2(i, j, k, ax, s0)) c += 0.5 * std::abs(b[ax]) * std::abs(s0) / (h * h);
      if (d2(i + di, j + dj, k, ax, sp) && d2(i - di, j - dj, k, ax, sm)) {
        const double lip = std::abs(sp - sm) / (2.0 * h * h * h);
        c += a[ax][ax] * lip;
        lip_sum += lip;
      }
    }
    if (dim == 2) c += std::abs(0.5 * (a[0][1] + a[1][0])) * lip_sum;
    cmax = std::max(cmax, c);
  }
  return cmax;
}

VerifyReport verify_signed_solution(const GridFunction& u, const DiscreteOperator& op, const NodeSet& region,
                                    Sign sign) {
  if (region.count() == 0) throw std::invalid_argument("verify_signed_solution: region is empty");
  const SpaceTimeGrid& g = *op.grid;
  const GridFunction r = apply(op, u);
  VerifyReport rep;
  rep.margin = sign == Sign::sub ? kInf : -kInf;
  double usup = 0.0, dmax = 0.0;
  for (std::size_t n = 0; n < g.size(); ++n) {
    if (!region.contains(n) || !g.unknown(n)) continue;
    const double m = r.values[n];
    if ((sign == Sign::sub && m < rep.margin) || (sign == Sign::super && m > rep.margin)) {
      rep.margin = m;
      rep.node = n;
    }
    usup = std::max(usup, std::abs(u.values[n]));
    dmax = std::max(dmax, op.diagonal(n));
  }
  if (!std::isfinite(rep.margin)) throw std::invalid_argument("verify_signed_solution: region has no unknown nodes");
  rep.where = g.point(rep.node);
  rep.lipschitz = truncation_constant(u, op, region);
  // Rounding floor: the residual is a difference of terms of size |u| (1/tau + diagonal).
  const double floor = 1e-10 * usup * (1.0 / g.tau() + dmax);
  rep.tol = rep.lipschitz * (g.h() + g.tau()) + floor;
  rep.pass = sign == Sign::sub ? rep.margin >= -rep.tol : rep.margin <= rep.tol;
  return rep;
}

GridFunction gt1_auxiliary(const GridFunction& u, const Point& Y) {
  GridFunction v = u;
  const SpaceTimeGrid& g = *u.grid;
  for (std::size_t n = 0; n < g.size(); ++n) {
    if (!g.active(n)) continue;
    const Point x = g.point(n);
    const double d = space_distance(x, Y);
    v.values[n] = u.values[n] + x.t - Y.t - d * d;
  }
  return v;
}

double profile_phi(double z) {
  if (z >= 1.0) return 1.0;
  if (z <= -1.0) return -1.0;
  return std::sin(0.5 * std::numbers::pi * z);
}

double profile_time_integral(double alpha, double t) {
  const double e = 1.0 - 2.0 * alpha;
  return (1.0 - std::pow(1.0 - t, e)) / e;
}

double profile_envelope(const CounterexampleParams& p, double t) {
  return std::exp(-p.C * profile_time_integral(p.alpha, t));
}

double profile_radius(const CounterexampleParams& p, double t) { return std::pow(1.0 - t, p.alpha); }

CounterexampleProfile counterexample_profile(const CounterexampleParams& p, GridPtr grid) {
  if (!(p.alpha < 0.5)) throw std::invalid_argument("-2 alpha > -1 violated (alpha must be < 1/2)");
  if (!(p.alpha > 0.0)) throw std::invalid_argument("counterexample profile needs alpha > 0");
  if (grid->dim() != 1) throw std::invalid_argument("counterexample profile lives in one space dimension");
  if (grid->bounds().t1 >= 1.0) throw std::invalid_argument("counterexample profile grid must stop before t = 1");
  CounterexampleProfile out;
  out.params = p;
  out.v = GridFunction::sample(grid, [&p](const Point& x) {
    return profile_envelope(p, x.t) * profile_phi(x.x[0] / profile_radius(p, x.t));
  });
  // -phi''/phi = (pi/2)^2 at every z in (0,1).
  out.min_admissible_C = 0.25 * std::numbers::pi * std::numbers::pi;
  out.printed_C = 4.0 / (std::numbers::pi * std::numbers::pi);
  out.printed_C_admissible = out.printed_C >= out.min_admissible_C;
  return out;
}

double oscillation(const GridFunction& u, const SpaceVec& center, double radius, double time) {
  const SpaceTimeGrid& g = *u.grid;
  const int k = static_cast<int>(std::lround((time - g.bounds().t0) / g.tau()));
  if (k < 0 || k >= g.nt()) throw std::invalid_argument("oscillation: time outside the grid");
  double lo = kInf, hi = -kInf;
  Point c = Point::make(g.dim(), center, 0.0);
  const std::size_t plane = static_cast<std::size_t>(g.nx(0)) * g.nx(1);
  for (std::size_t off = 0; off < plane; ++off) {
    const std::size_t n = static_cast<std::size_t>(k) * plane + off;
    if (!g.active(n)) continue;
    if (space_distance(g.point(n), c) > radius * (1.0 + 1e-12)) continue;
    lo = std::min(lo, u.values[n]);
    hi = std::max(hi, u.values[n]);
  }
  if (lo > hi) throw std::invalid_argument("oscillation: ball does not meet the grid");
  return hi - lo;
}

}  // namespace hlab
