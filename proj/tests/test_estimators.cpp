#include <gtest/gtest.h>

#include <cmath>
#include <memory>

#include "harnack_lab/estimators.hpp"
#include "harnack_lab/experiments.hpp"

using namespace hlab;

namespace {

GridPtr cyl(const Point& Y, double r, double h, double tau) {
  return std::make_shared<const SpaceTimeGrid>(SpaceTimeGrid::cylinder(ParabolicCylinder::make(Y, r), h, tau));
}

GridPtr box(double lo, double hi, double t0, double t1, double h, double tau) {
  SpaceTimeBox b;
  b.lo = {lo, 0.0};
  b.hi = {hi, 0.0};
  b.t0 = t0;
  b.t1 = t1;
  return std::make_shared<const SpaceTimeGrid>(SpaceTimeGrid::box(b, h, tau));
}

EnsembleSpec heat_spec(int count, std::uint64_t seed) {
  EnsembleSpec s;
  s.seed = seed;
  s.count = count;
  return s;
}

}  // namespace

TEST(ConstantEstimate, Summary) {
  const auto e = ConstantEstimate::from("x", {3.0, 1.0, 2.0, 5.0});
  EXPECT_EQ(e.value, 5.0);
  EXPECT_EQ(e.max, 5.0);
  EXPECT_EQ(e.min, 1.0);
  EXPECT_EQ(e.median, 2.5);
  EXPECT_EQ(e.count, 4);
  EXPECT_THROW(ConstantEstimate::from("x", {}), std::invalid_argument);
}

TEST(Norms, LpOfConstantAndDiameter) {
  auto g = box(-1.0, 1.0, 0.0, 0.5, 1.0 / 16, 1.0 / 64);
  // |2|^3 over a box of measure 1: (8)^(1/3) = 2
  EXPECT_NEAR(lp_norm(GridFunction(g, 2.0), 3.0), 2.0, 1e-12);
  EXPECT_NEAR(drift_lp_norm(DriftField::constant(1, {-3.0, 0.0}), g, 2.0), 3.0, 1e-12);
  auto q = cyl(Point::at(0.0, 0.0), 1.0, 1.0 / 16, 1.0 / 256);
  EXPECT_NEAR(parabolic_diameter(*q), 2.0, 1e-12);
}

TEST(Abp, HeatRatioIsBoundedAndDeterministic) {
  const auto ens = generate_instances(heat_spec(6, 4));
  AbpSetup s;
  EstimatorOptions par, ser;
  ser.exec = Exec::serial;
  const auto a = abp_constant(ens, s, par);
  const auto b = abp_constant(ens, s, ser);
  EXPECT_EQ(a.value, b.value);
  EXPECT_EQ(a.median, b.median);
  EXPECT_GT(a.value, 0.0);
  EXPECT_TRUE(std::isfinite(a.value));
  s.variant = AbpVariant::variant;
  s.p = 1.5;
  EXPECT_TRUE(std::isfinite(abp_constant(ens, s).value));
}

TEST(Abp, ZeroForcingIsSkipped) {
  auto g = cyl(Point::at(0.0, 0.0), 1.0, 1.0 / 16, 1.0 / 256);
  const auto op = assemble(certified(DiffusionField::identity(1), *g), DriftField::zero(1), g);
  EXPECT_TRUE(abp_ratio(op, GridFunction(g, 0.0), AbpVariant::standard, 2.0).skipped);
}

TEST(Green, HeatExponentsAndMass) {
  GreenSetup s;
  s.box.lo = {-1.0, 0.0};
  s.box.hi = {1.0, 0.0};
  s.box.t0 = 0.0;
  s.box.t1 = 0.5;
  s.anchors = {Point::at(0.0, 0.5)};
  s.hs = {1.0 / 16, 1.0 / 32, 1.0 / 64};
  const auto rep = green_integrability(
      [](GridPtr g) { return assemble(certified(DiffusionField::identity(1), *g), DriftField::zero(1), g); }, s);
  ASSERT_EQ(rep.anchors.size(), 1u);
  EXPECT_GE(rep.min_value, -1e-12);
  EXPECT_LE(rep.anchors[0].mass, 0.5 + 1e-8);
  // the q = 1 norm of a nonnegative G is its mass
  auto g = box(-1.0, 1.0, 0.0, 0.5, 1.0 / 16, 1.0 / 256);
  const auto G = green_slice(assemble(certified(DiffusionField::identity(1), *g), DriftField::zero(1), g),
                             Point::at(0.0, 0.5));
  double mass = 0.0;
  for (std::size_t n = 0; n < g->size(); ++n) mass += G.values[n] * g->weight(n);
  EXPECT_NEAR(green_norm(G, 1.0), mass, 1e-12);
  EXPECT_LE(mass, 0.5 + 1e-8);
  EXPECT_GT(rep.q_star, 1.0);
  EXPECT_NEAR(rep.p_star, rep.q_star / (rep.q_star - 1.0), 1e-15);
}

TEST(Growth, RejectsViolatedHypotheses) {
  auto g = cyl(Point::at(0.0, 0.0), 1.0, 1.0 / 16, 1.0 / 256);
  GrowthGeometry geo;
  geo.Y = Point::at(0.0, 0.0);
  geo.r = 1.0;
  geo.mu = 0.5;
  // u > 0 everywhere: measure condition fails
  EXPECT_THROW(growth_check(GrowthKind::GT1, GridFunction(g, 1.0), geo), std::invalid_argument);
  geo.tau = 0.0;  // not in [s - r^2, s - r^2/4 - rho^2]
  geo.rho = 0.25;
  try {
    growth_check(GrowthKind::GT2, GridFunction(g, -1.0), geo);
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("tau"), std::string::npos);
  }
  EXPECT_THROW(growth_check(GrowthKind::COR, GridFunction(g, -1.0), geo), std::invalid_argument);
}

TEST(Growth, NegativeFunctionHasZeroRatio) {
  auto g = cyl(Point::at(0.0, 0.0), 1.0, 1.0 / 16, 1.0 / 256);
  GrowthGeometry geo;
  geo.Y = Point::at(0.0, 0.0);
  geo.r = 1.0;
  geo.mu = 0.5;
  const auto r = growth_check(GrowthKind::GT1, GridFunction(g, -1.0), geo);
  EXPECT_EQ(r.mu_hat, 0.0);
  EXPECT_EQ(r.ratio, 0.0);
  EXPECT_EQ(positive_max(GridFunction(g, -1.0), ParabolicCylinder::make(geo.Y, 1.0)), 0.0);
}

TEST(MeanValue, ConstantGivesOne) {
  auto g = cyl(Point::at(0.0, 0.0), 1.0, 1.0 / 16, 1.0 / 256);
  for (double p : {0.5, 1.0, 2.0}) EXPECT_NEAR(mean_value_p(GridFunction(g, 1.0), Point::at(0.0, 0.0), 0.5, p).ratio, 1.0, 1e-12);
}

TEST(PowerFit, RecoversExactLaw) {
  std::vector<double> e{0.1, 0.2, 0.3, 0.4}, v;
  for (double x : e) v.push_back(3.0 * std::pow(x, 2.5));
  const auto f = fit_power_law(e, v);
  EXPECT_NEAR(f.C1, 3.0, 1e-12);
  EXPECT_NEAR(f.m, 2.5, 1e-12);
  EXPECT_NEAR(f.residual, 0.0, 1e-12);
}

TEST(BottomPropagation, ConstantKeepsLevel) {
  auto g = box(-1.0, 1.0, -1.0, 0.0, 1.0 / 16, 1.0 / 64);
  const auto bp = bottom_propagation(GridFunction(g, 2.0), 1.0, 0.25, 1.0, 2.0);
  EXPECT_NEAR(bp.value, 1.0, 1e-15);
  EXPECT_THROW(bottom_propagation(GridFunction(g, 1.0), 1.0, 0.25, 1.0, 2.0), std::invalid_argument);
}

TEST(SlantedRatio, Bounds) {
  auto g = box(-2.0, 2.0, 0.0, 1.0, 1.0 / 16, 1.0 / 64);
  // u = t: zero on the base, ratio u(Y) / sup = 1 at the top
  const auto u = GridFunction::sample(g, [](const Point& p) { return p.t; });
  const auto r = slanted_ratio(u, Point::at(0.5, 1.0), 0.5);
  EXPECT_NEAR(r.ratio, 1.0, 1e-12);
  EXPECT_NEAR(r.K, std::max(0.5 * 0.5 / 1.0, 1.0 / 0.25), 1e-12);
  EXPECT_THROW(slanted_ratio(GridFunction(g, 1.0), Point::at(0.5, 1.0), 0.5), std::invalid_argument);
}

TEST(InfGrowth, ConstantHasZeroExponent) {
  auto g = cyl(Point::at(0.0, 0.0), 1.0, 1.0 / 16, 1.0 / 256);
  const auto ig = inf_growth(GridFunction(g, 0.7), Point::at(0.0, 0.0), 1.0, {0.0, 0.0}, 0.25, -0.75, 0.0, 0.5);
  EXPECT_NEAR(ig.gamma, 0.0, 1e-15);
  EXPECT_THROW(inf_growth(GridFunction(g, 0.0), Point::at(0.0, 0.0), 1.0, {0.0, 0.0}, 0.25, -0.75, 0.0, 0.5),
               std::invalid_argument);
}

TEST(Harnack, ConstantsGiveOne) {
  auto g = cyl(Point::at(0.0, 0.0), 1.0, 1.0 / 16, 1.0 / 256);
  EXPECT_DOUBLE_EQ(harnack_ratio(GridFunction(g, 4.2), Point::at(0.0, 0.0), 0.5), 1.0);
  EXPECT_THROW(harnack_ratio(GridFunction(g, 0.0), Point::at(0.0, 0.0), 0.5), std::invalid_argument);
}

TEST(Harnack, EnsembleIsDeterministicAndCovariant) {
  const auto ens = generate_instances(heat_spec(5, 7));
  HarnackSetup s;
  s.ks = {2.0, 4.0};
  EstimatorOptions ser;
  ser.exec = Exec::serial;
  const auto a = harnack_constant(ens, s);
  const auto b = harnack_constant(ens, s, ser);
  EXPECT_EQ(a.N.value, b.N.value);
  EXPECT_EQ(a.ratios, b.ratios);
  EXPECT_GE(a.N.value, 1.0);
  for (double gap : a.gaps) EXPECT_LE(gap, 1e-10);
}

TEST(Hoelder, LinearAndConstant) {
  auto g = cyl(Point::at(0.0, 0.0), 0.5, 1.0 / 128, 1.0 / 16384);
  const auto lin = holder_exponent(GridFunction::sample(g, [](const Point& p) { return p.x[0]; }), Point::at(0.0, 0.0), 0.5, 4);
  EXPECT_FALSE(lin.flat);
  EXPECT_NEAR(lin.exponent, 1.0, 0.05);
  EXPECT_TRUE(holder_exponent(GridFunction(g, 2.0), Point::at(0.0, 0.0), 0.5, 4).flat);
  // u = t oscillates like r^2 over Q_r
  const auto quad = holder_exponent(GridFunction::sample(g, [](const Point& p) { return p.t; }), Point::at(0.0, 0.0), 0.5, 4);
  EXPECT_NEAR(quad.exponent, 2.0, 0.05);
}

TEST(Rescale, InstancePullback) {
  EnsembleSpec s = heat_spec(1, 3);
  s.drift = DriftFamily::critical;
  s.target_S = 1.0;
  const auto inst = generate_instances(s)[0];
  const auto r = rescale(inst, 2.0);
  const Point p = Point::at(0.1, -0.05);
  EXPECT_DOUBLE_EQ(r.b.eval(p)[0], 2.0 * inst.b.eval(rescale(p, 0.5))[0]);
  EXPECT_DOUBLE_EQ(r.positive_data(p), inst.positive_data(rescale(p, 0.5)));
}

TEST(Principles, SweepOverHeatEnsemble) {
  const auto ens = generate_instances(heat_spec(4, 2));
  const auto sw = principle_sweep(ens, ParabolicCylinder::make(Point::at(0.0, 0.0), 1.0), 1.0 / 16, 1.0 / 256);
  EXPECT_EQ(sw.max_failures, 0);
  EXPECT_EQ(sw.comparison_failures, 0);
  EXPECT_LE(sw.worst_excess, 1e-12);
}
