#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <memory>
#include <random>

#include "harnack_lab/barriers.hpp"

using namespace hlab;

namespace {

// smallest q >= 2 with g(xi) = A q xi^2 - F1 xi + 8/nu >= 0 on dense samples of [lo, hi]
double minimal_q_bisect(double alpha, double eps, double nu, int n, double lo, double hi) {
  const double A = (1 - eps * eps) / alpha, F1 = 2 / alpha + 8.0 * n / nu, c = 8 / nu;
  const int m = 20000;
  auto ok = [&](double q) {
    for (int i = 0; i <= m; ++i) {
      const double xi = lo + (hi - lo) * i / m;
      if (A * q * xi * xi - F1 * xi + c < -1e-13) return false;
    }
    // the vertex, in case it falls between samples
    const double v = F1 / (2 * A * q);
    if (v > lo && v < hi && A * q * v * v - F1 * v + c < -1e-13) return false;
    return true;
  };
  if (ok(2.0)) return 2.0;
  double a = 2.0, b = 4.0;
  while (!ok(b)) b *= 2;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (a + b);
    (ok(mid) ? b : a) = mid;
  }
  return b;
}

GridPtr barrier_grid(const BarrierParams& p, double h) {
  return std::make_shared<const SpaceTimeGrid>(SpaceTimeGrid::box(barrier_box(p), h, h * h));
}

DiscreteOperator heat(GridPtr g, DriftField b = DriftField::zero(1)) {
  return assemble(certified(DiffusionField::identity(g->dim()), *g), b, g);
}

}  // namespace

TEST(MinimalQ, DocumentedValues) {
  EXPECT_NEAR(minimal_q(1.0, 0.5, 1.0, 1), 8.0 / 3.0, 1e-12);
  EXPECT_NEAR(minimal_q(1.0, 0.5, 1.0, 1, 0.0, std::numeric_limits<double>::infinity()), 100.0 / 24.0, 1e-12);
  EXPECT_NEAR(printed_q(1.0, 0.5), 2.0 + 1.0 / 24.0, 1e-15);
}

TEST(MinimalQ, ClosedFormMatchesBisectionOn50Points) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int i = 0; i < 50; ++i) {
    const double alpha = 0.25 + 3.0 * U(rng), eps = 0.05 + 0.9 * U(rng), nu = 1.0 + 3.0 * U(rng);
    const int n = 1 + (i % 2);
    const double hi = U(rng) < 0.5 ? 1.0 : 0.5 + 2.0 * U(rng);
    const double want = minimal_q_bisect(alpha, eps, nu, n, 0.0, hi);
    EXPECT_NEAR(minimal_q(alpha, eps, nu, n, 0.0, hi), want, 1e-9 * std::max(1.0, want))
        << "alpha=" << alpha << " eps=" << eps << " nu=" << nu << " n=" << n;
  }
}

TEST(MinimalQ, IncreasesAsEpsTendsToOne) {
  double prev = 0.0;
  for (double eps : {0.5, 0.9, 0.99, 0.999}) {
    const double q = minimal_q(1.0, eps, 1.0, 1);
    EXPECT_GT(q, prev);
    prev = q;
  }
  EXPECT_GT(prev, 1e3);
}

TEST(Psi, AnalyticFacts) {
  const auto p = BarrierParams::make(1.0, 0.5, 1.0, 8.0 / 3.0, 1.0, 1);
  const auto g = barrier_grid(p, 1.0 / 64);
  const auto bf = barrier_psi(p, g);
  EXPECT_NEAR(bf.top_bound, 9.0 / 16.0, 1e-15);
  EXPECT_LE(bf.bottom_max, bf.bottom_bound * (1 + 1e-12));
  EXPECT_GE(bf.top_min, bf.top_bound * (1 - 1e-12));
  EXPECT_GE(bf.axis_min, bf.top_bound * (1 - 1e-12));
  // psi(0, 0) = psi0(0,0)^(2-q) = 1
  EXPECT_NEAR(bf.psi[*g->locate(Point::at(0.0, 0.0))], 1.0, 1e-12);
  for (std::size_t n = 0; n < g->size(); ++n) {
    if (bf.psi1[n] == 0.0) EXPECT_EQ(bf.psi[n], 0.0);
  }
  EXPECT_FALSE(bf.q_tagged);
  EXPECT_TRUE(barrier_psi(BarrierParams::make(1.0, 0.5, 1.0, 2.1, 1.0, 1), g).q_tagged);
}

TEST(Psi, PrintedExponentFailsVerification) {
  const auto p = BarrierParams::make(1.0, 0.5, 1.0, printed_q(1.0, 0.5), 1.0, 1);
  const auto g = barrier_grid(p, 1.0 / 64);
  const auto bf = barrier_psi(p, g);
  const auto op = heat(g);
  const auto rep = verify_signed_solution(bf.psi, op, barrier_verify_region(bf, op), Sign::sub);
  EXPECT_FALSE(rep.pass);
  EXPECT_LT(rep.margin, 0.0);
}

TEST(Psi, OperatorExponentPassesVerification) {
  const double q = operator_minimal_q(1.0, 0.5, 1.0, 1.0);
  const auto p = BarrierParams::make(1.0, 0.5, 1.0, q, 1.0, 1);
  const auto g = barrier_grid(p, 1.0 / 64);
  const auto bf = barrier_psi(p, g);
  const auto op = heat(g);
  const auto rep = verify_signed_solution(bf.psi, op, barrier_verify_region(bf, op), Sign::sub);
  EXPECT_TRUE(rep.pass);
  EXPECT_GE(rep.margin, 0.0);
}

TEST(Verify, ExactSolutionHasZeroMargin) {
  // u = x + b t solves -u_t + u_xx + b u_x = 0 exactly, also discretely
  SpaceTimeBox box;
  box.lo = {-1.0, 0.0};
  box.hi = {1.0, 0.0};
  box.t1 = 0.5;
  auto g = std::make_shared<const SpaceTimeGrid>(SpaceTimeGrid::box(box, 1.0 / 16, 1.0 / 64));
  const double b = 1.5;
  const auto op = heat(g, DriftField::constant(1, {b, 0.0}));
  const auto u = GridFunction::sample(g, [b](const Point& p) { return p.x[0] + b * p.t; });
  const auto region = NodeSet::where(g, [&](std::size_t n) { return g->unknown(n); });
  const auto sub = verify_signed_solution(u, op, region, Sign::sub);
  const auto sup = verify_signed_solution(u, op, region, Sign::super);
  EXPECT_NEAR(sub.margin, 0.0, 1e-11);
  EXPECT_NEAR(sup.margin, 0.0, 1e-11);
  EXPECT_TRUE(sub.pass && sup.pass);
  EXPECT_THROW(verify_signed_solution(u, op, NodeSet::empty(g), Sign::sub), std::invalid_argument);
}

TEST(Gt1Auxiliary, Identities) {
  SpaceTimeBox box;
  box.lo = {-1.0, 0.0};
  box.hi = {1.0, 0.0};
  box.t0 = -1.0;
  box.t1 = 0.0;
  auto g = std::make_shared<const SpaceTimeGrid>(SpaceTimeGrid::box(box, 1.0 / 16, 1.0 / 256));
  const Point Y = Point::at(0.0, 0.0);
  const auto u = GridFunction::sample(g, [](const Point& p) { return 0.3 * p.x[0] * p.x[0] - p.t + 0.2; });
  const auto v = gt1_auxiliary(u, Y);
  const std::size_t top = *g->locate(Y);
  EXPECT_DOUBLE_EQ(v[top], u[top]);
  for (std::size_t n = 0; n < g->size(); ++n) EXPECT_LE(v[n], u[n] + 1e-15);
  // drift-free: apply(v) = apply(u) - 1 - 2 trace(a), exact on quadratics
  const auto op = heat(g);
  const auto au = apply(op, u), av = apply(op, v);
  for (std::size_t n = 0; n < g->size(); ++n) {
    if (g->unknown(n)) EXPECT_NEAR(av[n], au[n] - 1.0 - 2.0, 1e-9);
  }
  // with drift the upwind difference of |x|^2 is off by at most |b| h
  const double b = 2.0;
  const auto opb = heat(g, DriftField::constant(1, {b, 0.0}));
  const auto bu = apply(opb, u), bv = apply(opb, v);
  for (std::size_t n = 0; n < g->size(); ++n) {
    if (!g->unknown(n)) continue;
    const double want = bu[n] - 1.0 - 2.0 - 2.0 * b * (g->point(n).x[0] - Y.x[0]);
    EXPECT_NEAR(bv[n], want, b * g->h() + 1e-9);
  }
}

TEST(Profile, ConstantsAndSymmetry) {
  CounterexampleParams cp;
  EXPECT_NEAR(profile_time_integral(cp.alpha, 1.0), 6.0, 1e-12);
  EXPECT_NEAR(profile_envelope(cp, 0.0), 1.0, 1e-15);
  SpaceTimeBox box;
  box.lo = {-1.0, 0.0};
  box.hi = {1.0, 0.0};
  box.t1 = 1.0 - 1.0 / 64;
  auto g = std::make_shared<const SpaceTimeGrid>(SpaceTimeGrid::box(box, 1.0 / 64, 1.0 / 64));
  const auto prof = counterexample_profile(cp, g);
  // -phi'' / phi = (pi/2)^2 identically; oracle by finite differences
  double worst = 0.0;
  const double dz = 1e-4;
  for (double z = 0.05; z < 0.95; z += 0.01) {
    const double d2 = (profile_phi(z + dz) - 2 * profile_phi(z) + profile_phi(z - dz)) / (dz * dz);
    worst = std::max(worst, -d2 / profile_phi(z));
  }
  EXPECT_NEAR(prof.min_admissible_C, M_PI * M_PI / 4, 1e-9);
  EXPECT_NEAR(worst, M_PI * M_PI / 4, 1e-5);
  EXPECT_FALSE(prof.printed_C_admissible);
  for (std::size_t n = 0; n < g->size(); ++n) {
    const auto [i, j, k] = g->coords(n);
    const std::size_t mirror = g->index(g->nx(0) - 1 - i, 0, k);
    EXPECT_EQ(prof.v[n], -prof.v[mirror]);
    if (g->coord(0, i) == 0.0) EXPECT_EQ(prof.v[n], 0.0);
  }
  CounterexampleParams bad;
  bad.alpha = 0.5;
  EXPECT_THROW(counterexample_profile(bad, g), std::invalid_argument);
}

TEST(Oscillation, SimpleFunctions) {
  SpaceTimeBox box;
  box.lo = {-1.0, 0.0};
  box.hi = {1.0, 0.0};
  box.t1 = 1.0;
  const double h = 1.0 / 32;
  auto g = std::make_shared<const SpaceTimeGrid>(SpaceTimeGrid::box(box, h, 1.0 / 16));
  EXPECT_EQ(oscillation(GridFunction(g, 3.0), {0.0, 0.0}, 1.0, 0.5), 0.0);
  const auto u = GridFunction::sample(g, [](const Point& p) { return p.x[0]; });
  EXPECT_NEAR(oscillation(u, {0.0, 0.0}, 1.0, 0.5), 2.0, 2 * h);
  EXPECT_THROW(oscillation(u, {5.0, 0.0}, 0.1, 0.5), std::invalid_argument);
}
