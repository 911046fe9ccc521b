#include <gtest/gtest.h>

#include <cmath>

#include "harnack_lab/coefficients.hpp"
#include "harnack_lab/ensemble.hpp"
#include "harnack_lab/quadrature.hpp"

using namespace hlab;

namespace {

SpaceTimeGrid samples(int dim) {
  SpaceTimeBox b;
  b.dim = dim;
  b.lo = {-1.0, dim == 2 ? -1.0 : 0.0};
  b.hi = {1.0, dim == 2 ? 1.0 : 0.0};
  b.t0 = -1.0;
  b.t1 = 0.0;
  return SpaceTimeGrid::box(b, 0.25, 0.25);
}

MorreyOptions numeric() {
  MorreyOptions o;
  o.use_closed_form = false;
  o.cells_per_radius = 32;
  o.time_cells = 64;
  return o;
}

}  // namespace

TEST(Quadrature, SingularEndpoint) {
  // int_0^1 u^(-5/6) du = 6, singular factor written in the distance to the endpoint
  EXPECT_NEAR(integrate([](double u) { return std::pow(u, -5.0 / 6.0); }, 0.0, 1.0), 6.0, 1e-9);
  EXPECT_NEAR(power_integral_1mt(-5.0 / 6.0, 0.0, 1.0), 6.0, 1e-12);
  EXPECT_TRUE(std::isinf(power_integral_1mt(-1.5, 0.0, 1.0)));
  EXPECT_NEAR(power_integral_1mt(2.0, 0.0, 1.0), 1.0 / 3.0, 1e-14);
}

TEST(Parabolicity, IdentityAndConstantMatrix) {
  const auto g = samples(2);
  EXPECT_NEAR(certify_parabolicity(DiffusionField::identity(2), g), std::sqrt(2.0), 1e-9);
  // eigenvalues 1 and 3: nu >= 1/lambda_min = 1 and nu >= frobenius = sqrt(10)
  const auto a = DiffusionField::constant(2, Matrix2{{{2.0, 1.0}, {1.0, 2.0}}});
  EXPECT_NEAR(certify_parabolicity(a, g), std::sqrt(10.0), 1e-9);
  const auto bad = DiffusionField::constant(2, Matrix2{{{1.0, 2.0}, {2.0, 1.0}}});
  EXPECT_THROW(certify_parabolicity(bad, g), std::runtime_error);
}

TEST(Morrey, ParamsEnforceScalingRelation) {
  EXPECT_NO_THROW(MorreyParams::make(1, 2.0, 2.0, 0.5));
  EXPECT_THROW(MorreyParams::make(1, 2.0, 2.0, 0.4), std::invalid_argument);
  const auto c = MorreyParams::critical(2);
  EXPECT_DOUBLE_EQ(c.p, 3.0);
  EXPECT_DOUBLE_EQ(c.alpha, 1.0 / 3.0);
}

TEST(Morrey, ConstantDriftClosedForm) {
  // n = 1, p = q = 2: quotient on Q_r is c sqrt(2) r, so S over radii <= R is 2 c^2 R^2
  const double c = 1.5;
  const auto b = DriftField::constant(1, {c, 0.0});
  const auto params = MorreyParams::critical(1);
  for (double r : {0.125, 0.5, 1.0}) {
    const auto q = ParabolicCylinder::make(Point::at(0.0, 0.0), r);
    EXPECT_NEAR(morrey_quotient(b, q, params, numeric()), c * std::sqrt(2.0) * r, 1e-12);
  }
  const auto region = MorreyRegion::of(ParabolicCylinder::make(Point::at(0.0, 0.0), 1.0));
  const auto rep = morrey_norm(b, region, params, dyadic_scales(0.5, 6), numeric());
  EXPECT_NEAR(rep.S, 2 * c * c * 0.25, 1e-10);
  EXPECT_NEAR(criticality_classify(rep).slope, 1.0, 1e-10);
  EXPECT_EQ(criticality_classify(rep).kind, Criticality::subcritical);
}

TEST(Morrey, ParallelMatchesSerial) {
  const auto b = pullback_drift(2, 1.0, 0.5, 3.0, {1.0, 1.0});
  const auto region = MorreyRegion::of(ParabolicCylinder::make(Point::at(0.0, 0.0, 0.0), 1.0));
  MorreyOptions par, ser;
  par.exec = Exec::parallel;
  ser.exec = Exec::serial;
  const auto a = morrey_norm(b, region, MorreyParams::critical(2), dyadic_scales(0.5, 5), par);
  const auto s = morrey_norm(b, region, MorreyParams::critical(2), dyadic_scales(0.5, 5), ser);
  ASSERT_EQ(a.table.size(), s.table.size());
  for (std::size_t i = 0; i < a.table.size(); ++i) EXPECT_EQ(a.table[i].quotient, s.table[i].quotient);
  EXPECT_EQ(a.S, s.S);
}

TEST(Morrey, PullbackFamilyIsCritical) {
  const auto b = pullback_drift(1, 1.0, 0.5, 3.0, {1.0, 0.0});
  const auto region = MorreyRegion::of(ParabolicCylinder::make(Point::at(0.0, 0.0), 1.0));
  const auto rep = morrey_norm(b, region, MorreyParams::critical(1), dyadic_scales(0.5, 8));
  const auto c = criticality_classify(rep);
  EXPECT_EQ(c.kind, Criticality::critical);
  EXPECT_LE(std::abs(c.slope), 0.05);
}

TEST(Morrey, ClassifierRejectsShortTables) {
  const auto b = DriftField::constant(1, {1.0, 0.0});
  const auto region = MorreyRegion::of(ParabolicCylinder::make(Point::at(0.0, 0.0), 1.0));
  const auto rep = morrey_norm(b, region, MorreyParams::critical(1), dyadic_scales(0.5, 3));
  EXPECT_THROW(criticality_classify(rep), std::invalid_argument);
}

TEST(Rescaling, DriftMapIsScaleCovariantForMorrey) {
  // S is invariant when the region is rescaled along with the drift; the
  // piecewise field is not self-similar, so this also pins the direction of rescale()
  const auto region = MorreyRegion::of(ParabolicCylinder::make(Point::at(0.0, 0.0), 1.0));
  Rng rng(5, 0);
  SpaceTimeBox box = region.bounds();
  for (const auto& b : {pullback_drift(1, 0.7, 0.3, 2.0, {1.0, 0.0}), random_piecewise_drift(rng, box, 4, 3.0)}) {
    const auto S = morrey_norm(b, region, MorreyParams::critical(1), dyadic_scales(0.5, 4), numeric()).S;
    for (double k : {2.0, 4.0}) {
      const auto bk = drift_rescale(b, k);
      const auto Sk = morrey_norm(bk, rescale(region, k), MorreyParams::critical(1), dyadic_scales(0.5 / k, 4), numeric()).S;
      EXPECT_NEAR(Sk, S, 1e-10 * S);
    }
  }
}

TEST(Rescaling, DriftMapFormula) {
  const auto b = DriftField::constant(1, {2.0, 0.0});
  const auto bk = drift_rescale(b, 3.0);
  EXPECT_DOUBLE_EQ(bk.eval(Point::at(0.1, 0.2))[0], 6.0);
  const auto p = pullback_drift(1, 1.0, 0.0, 1.0, {1.0, 0.0});
  const auto pk = drift_rescale(p, 2.0);
  for (double x : {0.1, -0.3}) {
    EXPECT_NEAR(pk.eval(Point::at(x, -0.2))[0], p.eval(Point::at(x, -0.2))[0], 1e-12);
  }
}

TEST(Counterexample, ConstraintExponents) {
  const auto c = counterexample_drift(5.0 / 12.0, 2.0 / 3.0);
  EXPECT_NEAR(c.integrability_exponent, -11.0 / 12.0, 1e-15);
  EXPECT_NEAR(c.profile_exponent, -5.0 / 6.0, 1e-15);
  EXPECT_NEAR(c.supercritical_exponent, -1.0 / 12.0, 1e-15);
  EXPECT_TRUE(c.integrability_ok && c.profile_ok && c.supercritical_ok);
  EXPECT_NEAR(c.l2_squared, 24.0, 1e-12);
  EXPECT_NEAR(counterexample_l2_squared_quadrature(c), 24.0, 1e-6);
}

TEST(Counterexample, FieldShape) {
  const auto c = counterexample_drift(5.0 / 12.0, 2.0 / 3.0);
  const double t = 0.5, R = std::pow(0.5, 5.0 / 12.0), a = std::pow(0.5, -2.0 / 3.0);
  EXPECT_DOUBLE_EQ(c.field.eval(Point::at(-0.5 * R, t))[0], a);
  EXPECT_DOUBLE_EQ(c.field.eval(Point::at(0.5 * R, t))[0], -a);
  EXPECT_DOUBLE_EQ(c.field.eval(Point::at(1.01 * R, t))[0], 0.0);
  EXPECT_DOUBLE_EQ(c.canonical.eval(Point::at(0.5 * R, t))[0], a);
  EXPECT_DOUBLE_EQ(c.field.eval(Point::at(0.1, 1.0))[0], 0.0);
}

TEST(Counterexample, ClosedFormPowerIntegralMatchesQuadrature) {
  const auto c = counterexample_drift(5.0 / 12.0, 2.0 / 3.0);
  const auto q = ParabolicCylinder::make(Point::at(0.1, 0.6), 0.5);
  MorreyOptions o = numeric();
  o.cells_per_radius = 256;
  o.time_cells = 1024;
  MorreyOptions cf;
  const auto params = MorreyParams::critical(1);
  EXPECT_NEAR(morrey_quotient(c.field, q, params, o), morrey_quotient(c.field, q, params, cf), 2e-3);
}

TEST(Ensemble, DeterministicAcrossWorkers) {
  EnsembleSpec s;
  s.seed = 42;
  s.count = 6;
  s.diffusion_lo = 0.5;
  s.diffusion_hi = 2.0;
  s.drift = DriftFamily::piecewise;
  const auto a = generate_instances(s, Exec::parallel);
  const auto b = generate_instances(s, Exec::serial);
  ASSERT_EQ(a.size(), b.size());
  const Point p = Point::at(0.3, -0.4);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].nu, b[i].nu);
    EXPECT_EQ(a[i].S, b[i].S);
    EXPECT_EQ(a[i].b.eval(p)[0], b[i].b.eval(p)[0]);
    EXPECT_EQ(a[i].a.eval(p)[0][0], b[i].a.eval(p)[0][0]);
    EXPECT_EQ(a[i].positive_data(p), b[i].positive_data(p));
  }
  s.count = 0;
  EXPECT_TRUE(generate_instances(s).empty());
}

TEST(Ensemble, CriticalFamilyHitsTargetS) {
  EnsembleSpec s;
  s.seed = 1;
  s.count = 3;
  s.drift = DriftFamily::critical;
  s.target_S = 2.0;
  for (const auto& inst : generate_instances(s)) EXPECT_NEAR(inst.S, 2.0, 0.2);
}

TEST(Ensemble, PositiveDataBounds) {
  EnsembleSpec s;
  s.seed = 9;
  s.count = 4;
  for (const auto& inst : generate_instances(s)) {
    for (double x = -1.0; x <= 1.0; x += 0.1) {
      for (double t = -1.0; t <= 0.0; t += 0.1) {
        const double v = inst.positive_data(Point::at(x, t));
        EXPECT_GE(v, 0.05);
        EXPECT_LE(v, 1.95);
      }
    }
  }
}

TEST(Rng, StreamsAreReproducible) {
  Rng a(3, 7), b(3, 7), c(3, 8);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const double x = a.uniform();
    EXPECT_EQ(x, b.uniform());
    EXPECT_GE(x, 0.0);
    EXPECT_LT(x, 1.0);
    differs = differs || x != c.uniform();
  }
  EXPECT_TRUE(differs);
  for (int i = 0; i < 100; ++i) {
    const int k = a.integer(2, 4);
    EXPECT_GE(k, 2);
    EXPECT_LE(k, 4);
  }
}
