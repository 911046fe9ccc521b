// Acceptance suite: one PASS/FAIL line per criterion, details indented below.
// Exit status is nonzero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "harnack_lab/experiments.hpp"

using namespace hlab;

namespace {

struct Line {
  bool pass = true;
  std::vector<std::string> notes;

  void part(const std::string& label, bool ok, const std::string& detail) {
    pass = pass && ok;
    notes.push_back(std::string(ok ? "ok   " : "FAIL ") + label + ": " + detail);
  }
  void info(const std::string& text) { notes.push_back("info " + text); }
};

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string fmt(const char* f, double a, double b) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

std::string fmt(const char* f, double a, double b, double c) {
  char buf[200];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int failures = 0;

void run(int id, const char* title, const std::function<void(Line&)>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Line line;
  try {
    body(line);
  } catch (const std::exception& e) {
    line.part("exception", false, e.what());
  }
  const double dt = seconds_since(t0);
  std::printf("%s %2d %s (%.1f s)\n", line.pass ? "PASS" : "FAIL", id, title, dt);
  for (const auto& n : line.notes) std::printf("       %s\n", n.c_str());
  std::fflush(stdout);
  if (!line.pass) ++failures;
}

EnsembleSpec mixed_spec(int n, int count, std::uint64_t seed) {
  EnsembleSpec s;
  s.seed = seed;
  s.count = count;
  s.n = n;
  s.diffusion_lo = 0.5;
  s.diffusion_hi = 2.0;
  s.drift = DriftFamily::piecewise;
  s.drift_bound = 3.0;
  s.region = MorreyRegion::of(ParabolicCylinder::make(Point::make(n, {0.0, 0.0}, 0.0), 1.0));
  return s;
}

EnsembleSpec critical_spec(int count, std::uint64_t seed) {
  EnsembleSpec s;
  s.seed = seed;
  s.count = count;
  s.diffusion_lo = 0.5;
  s.diffusion_hi = 2.0;
  s.drift = DriftFamily::critical;
  s.target_S = 1.0;
  return s;
}

// smallest q >= 2 keeping A q xi^2 - F1 xi + 8/nu >= 0 on dense samples of [0, hi]
double minimal_q_bisect(double alpha, double eps, double nu, int n, double hi) {
  const double A = (1 - eps * eps) / alpha, F1 = 2 / alpha + 8.0 * n / nu, c = 8 / nu;
  auto ok = [&](double q) {
    const int m = 20000;
    for (int i = 0; i <= m; ++i) {
      const double xi = hi * i / m;
      if (A * q * xi * xi - F1 * xi + c < -1e-13) return false;
    }
    const double v = F1 / (2 * A * q);
    return !(v > 0 && v < hi && A * q * v * v - F1 * v + c < -1e-13);
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

double green_p_star = std::numeric_limits<double>::quiet_NaN();

}  // namespace

int main() {
  std::printf("harnack_lab acceptance suite, %d worker thread(s)\n", thread_count());
  const auto start = std::chrono::steady_clock::now();

  run(1, "discrete maximum principle, 100 instances, n=1 and n=2", [](Line& L) {
    for (int n : {1, 2}) {
      const auto ens = generate_instances(mixed_spec(n, 100, 101 + n));
      const double h = n == 1 ? 1.0 / 32 : 1.0 / 8;
      const auto sw = principle_sweep(ens, ParabolicCylinder::make(Point::make(n, {0.0, 0.0}, 0.0), 1.0), h, h * h);
      L.part("n=" + std::to_string(n), sw.solves >= 100 && sw.worst_excess <= 1e-12 && sw.max_failures == 0,
             std::to_string(sw.solves) + " monotone solves (" + std::to_string(sw.skipped) +
                 " skipped), worst excess/scale " + fmt("%.3g", sw.worst_excess));
    }
  });

  run(2, "comparison principle, 100 ordered pairs", [](Line& L) {
    const auto ens = generate_instances(mixed_spec(1, 100, 202));
    const auto sw = principle_sweep(ens, ParabolicCylinder::make(Point::at(0.0, 0.0), 1.0), 1.0 / 32, 1.0 / 1024);
    L.part("pairs", sw.solves >= 100 && sw.worst_difference >= -1e-12 && sw.comparison_failures == 0,
           std::to_string(sw.solves) + " pairs, min (u - v)/scale " + fmt("%.3g", sw.worst_difference));
  });

  run(3, "Morrey value invariant under b -> k b(kx, k^2 t), k in {2,4}, 10 drifts", [](Line& L) {
    MorreyOptions opt;
    opt.use_closed_form = false;
    const auto params = MorreyParams::critical(1);
    const auto region = MorreyRegion::of(ParabolicCylinder::make(Point::at(0.0, 0.0), 1.0));
    std::vector<DriftField> drifts;
    for (const auto& inst : generate_instances(mixed_spec(1, 6, 303))) drifts.push_back(inst.b);
    for (int i = 0; i < 3; ++i) drifts.push_back(pullback_drift(1, 0.5 + 0.5 * i, 0.2 * i, 1.0 + i, {1.0, 0.0}));
    drifts.push_back(DriftField::constant(1, {1.5, 0.0}));
    double worst = 0.0;
    for (const auto& b : drifts) {
      const double S = morrey_norm(b, region, params, dyadic_scales(0.5, 5), opt).S;
      for (double k : {2.0, 4.0}) {
        const double Sk =
            morrey_norm(drift_rescale(b, k), rescale(region, k), params, dyadic_scales(0.5 / k, 5), opt).S;
        worst = std::max(worst, std::abs(Sk - S) / S);
      }
    }
    L.part("relative change", worst <= 1e-10, fmt("max |S_k - S| / S = %.3g over %g fields", worst, drifts.size()));
  });

  run(4, "criticality classifier", [](Line& L) {
    const auto params = MorreyParams::critical(1);
    const auto unit = MorreyRegion::of(ParabolicCylinder::make(Point::at(0.0, 0.0), 1.0));
    const auto scales = dyadic_scales(0.5, 8);
    const auto cst = criticality_classify(morrey_norm(DriftField::constant(1, {1.0, 0.0}), unit, params, scales));
    L.part("constant drift", cst.kind == Criticality::subcritical && std::abs(cst.slope - 1.0) <= 0.05,
           std::string(to_string(cst.kind)) + ", lambda " + fmt("%.4f", cst.slope));
    const auto pb = criticality_classify(morrey_norm(pullback_drift(1, 1.0, 0.5, 3.0, {1.0, 0.0}), unit, params, scales));
    L.part("pullback family", pb.kind == Criticality::critical && std::abs(pb.slope) <= 0.05,
           std::string(to_string(pb.kind)) + ", lambda " + fmt("%.4f", pb.slope));
    // two-sided drift, cylinders anchored at the singular point (0, 1)
    const auto ce = counterexample_drift(5.0 / 12.0, 2.0 / 3.0);
    const auto region = MorreyRegion::of(ParabolicCylinder::make(Point::at(0.0, 1.0), 1.0));
    const auto rep = morrey_norm(ce.field, region, params, scales);
    const auto cl = criticality_classify(rep);
    std::vector<double> rs, closed, sform;
    for (const auto& row : rep.table) {
      const double r = row.r;
      rs.push_back(r);
      closed.push_back(std::sqrt((30 * std::pow(r, 0.2) - 6 * std::pow(r, 1.0 / 3.0)) / r));
      sform.push_back(row.quotient * row.quotient);
    }
    const double oracle = loglog_slope(rs, closed);
    L.part("two-sided drift", cl.kind == Criticality::supercritical && std::abs(cl.slope + 0.8) <= 0.1,
           std::string(to_string(cl.kind)) + ", lambda " + fmt("%.4f (target -0.8 +- 0.1)", cl.slope));
    L.info(fmt("closed-form lambda on Q_r(0,1): %.4f, numeric - closed form = %.2g", oracle, cl.slope - oracle));
    L.info(fmt("slope of r^-1 int |b|^2 (squared quotient): %.4f", loglog_slope(rs, sform)));
  });

  run(5, "two-sided drift counterexample at h = tau = 1/256", [](Line& L) {
    CounterexampleSetup s;
    const auto r = counterexample_experiment(s);
    const auto& d = r.drift;
    const bool flags = d.integrability_exponent == 5.0 / 12.0 - 4.0 / 3.0 && d.profile_exponent == -5.0 / 6.0 &&
                       d.supercritical_exponent == 1.0 - 5.0 / 12.0 - 2.0 / 3.0 && d.integrability_ok && d.profile_ok &&
                       d.supercritical_ok;
    L.part("a constraint exponents", flags,
           fmt("%.6f, %.6f, %.6f", d.integrability_exponent, d.profile_exponent, d.supercritical_exponent));
    L.part("b L2 norm squared", std::abs(r.l2_quadrature - d.l2_squared) <= 1e-3 && std::abs(d.l2_squared - 24) <= 1e-3,
           fmt("quadrature %.9f, closed form %.9f", r.l2_quadrature, d.l2_squared));
    L.part("c sub/super", r.sub.pass && r.super.pass,
           fmt("sub margin %.3g, super margin %.3g, tolerance %.3g", r.sub.margin, r.super.margin, r.sub.tol));
    const double slack = 5 * (s.h + s.tau);
    for (std::size_t i = 0; i < s.check_times.size(); ++i) {
      L.part("d oscillation t=" + fmt("%g", s.check_times[i]), r.check_osc[i] >= r.check_bound[i] - slack,
             fmt("osc %.5f vs 2E(t) %.5f", r.check_osc[i], r.check_bound[i]));
    }
    std::string ex;
    bool decreasing = true;
    for (std::size_t i = 0; i < r.exponents.size(); ++i) {
      ex += fmt(i ? ", %.3f" : "%.3f", r.exponents[i]);
      if (i > 0 && r.exponents[i] > r.exponents[i - 1]) decreasing = false;
    }
    const bool toward_zero = !r.exponents.empty() && r.exponents.back() < r.exponents.front();
    L.part("e Hoelder exponent decreasing with depth", decreasing && toward_zero, "depths 2..6: " + ex);
    L.info(fmt("trap: min(u - v) on x>0 %.3g, max(u - v) on x<0 %.3g", r.trap_pos, r.trap_neg));
  });

  run(6, "barrier exponent and psi verification", [](Line& L) {
    std::mt19937_64 rng(606);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    double worst = 0.0;
    for (int i = 0; i < 50; ++i) {
      const double alpha = 0.25 + 3 * U(rng), eps = 0.05 + 0.9 * U(rng), nu = 1 + 3 * U(rng);
      const int n = 1 + i % 2;
      const double hi = i % 3 == 0 ? 1.0 : 0.5 + 2 * U(rng);
      worst = std::max(worst, std::abs(minimal_q(alpha, eps, nu, n, 0.0, hi) - minimal_q_bisect(alpha, eps, nu, n, hi)));
    }
    L.part("minimal_q vs bisection", worst <= 1e-9, fmt("max difference %.3g over 50 points", worst));
    auto verify = [](double q) {
      const auto p = BarrierParams::make(1.0, 0.5, 1.0, q, 1.0, 1);
      const double h = 1.0 / 64;
      auto g = std::make_shared<const SpaceTimeGrid>(SpaceTimeGrid::box(barrier_box(p), h, h * h));
      const auto bf = barrier_psi(p, g);
      const auto op = assemble(certified(DiffusionField::identity(1), *g), DriftField::zero(1), g);
      return verify_signed_solution(bf.psi, op, barrier_verify_region(bf, op), Sign::sub);
    };
    const double qmin = minimal_q(1.0, 0.5, 1.0, 1);
    const auto vm = verify(qmin);
    L.part("psi with minimal_q passes", vm.pass,
           fmt("q = %.4f: margin %.4g, tolerance %.4g", qmin, vm.margin, vm.tol) +
               fmt(" at (%g, %g)", vm.where.x[0], vm.where.t));
    const double qp = printed_q(1.0, 0.5);
    const auto vp = verify(qp);
    L.part("printed exponent reported failing", !vp.pass && vp.margin < 0,
           fmt("q = %.4f: margin %.4g, tolerance %.4g", qp, vp.margin, vp.tol));
    const double qo = operator_minimal_q(1.0, 0.5, 1.0, 1.0);
    const auto vo = verify(qo);
    L.info(fmt("exponent from the operator's exact linear coefficient q = %.4f: margin %.4g, ", qo, vo.margin) +
           (vo.pass ? "passes" : "fails"));
  });

  run(7, "Green's function integrability, heat n=1, h = 1/32, 1/64, 1/128", [](Line& L) {
    GreenSetup s;
    s.box.lo = {-1.0, 0.0};
    s.box.hi = {1.0, 0.0};
    s.box.t0 = 0.0;
    s.box.t1 = 0.5;
    s.anchors = {Point::at(0.0, 0.5)};
    s.hs = {1.0 / 32, 1.0 / 64, 1.0 / 128};
    const auto rep = green_integrability(
        [](GridPtr g) { return assemble(certified(DiffusionField::identity(1), *g), DriftField::zero(1), g); }, s);
    const auto& a = rep.anchors.at(0);
    L.part("nonnegative", a.min_value >= -1e-12, fmt("min G %.3g", a.min_value));
    L.part("mass", a.mass <= 0.5 + 1e-8, fmt("sum G w %.6f vs t = 0.5", a.mass));
    L.part("reverse Hoelder stable", a.max_rh_change <= 0.2, fmt("max relative change %.4f", a.max_rh_change));
    L.part("q* > 2 and p* < 2", rep.q_star > 2 && rep.p_star < 2, fmt("q* = %g, p* = %.4f", rep.q_star, rep.p_star));
    green_p_star = rep.p_star;
  });

  run(8, "variant ABP with p = p*, 50 instances, h = 1/16 -> 1/32", [](Line& L) {
    if (!std::isfinite(green_p_star) || green_p_star <= 1.0) {
      L.part("p*", false, "no p* from criterion 7");
      return;
    }
    const auto ens = generate_instances(critical_spec(50, 11));
    std::vector<double> N;
    for (double h : {1.0 / 16, 1.0 / 32}) {
      AbpSetup s;
      s.h = h;
      s.tau = h * h;
      s.variant = AbpVariant::variant;
      s.p = green_p_star;
      const auto c = abp_constant(ens, s);
      N.push_back(c.value);
      L.part(fmt("bounded h=1/%g", 1 / h), std::isfinite(c.value) && c.value > 0,
             fmt("N = %.5f (median %.5f, %g skipped)", c.value, c.median, c.skipped));
    }
    const double change = std::abs(N[1] - N[0]) / N[0];
    L.part("refinement", change <= 0.15, fmt("relative change %.4f at p = %.4f", change, green_p_star));
  });

  run(9, "growth theorems, 40 critical-drift instances", [](Line& L) {
    const auto ens = generate_instances(critical_spec(40, 3));
    const auto sw = growth_sweep(ens, GrowthSetup{});
    L.part("inputs verified", sw.verify_failed == 0 && sw.verified > 0,
           std::to_string(sw.verified) + " verified, " + std::to_string(sw.verify_failed) + " failed");
    std::string bins;
    double first = std::numeric_limits<double>::quiet_NaN();
    for (double v : sw.gt1_bin_max) {
      if (std::isnan(v)) continue;
      if (std::isnan(first)) first = v;
      bins += fmt(bins.empty() ? "%.3f" : " %.3f", v);
    }
    L.part("GT1 curve", sw.gt1_nondecreasing && sw.gt1_slope > 0 && first <= 0.05,
           fmt("nondecreasing, slope %.3f, smallest bin %.3f; ", sw.gt1_slope, first) + bins);
    L.part("GT3 / corollary", sw.gt3_below_one && sw.cor_condition > 0 && sw.cor_min > 0,
           std::to_string(sw.cor_condition) + fmt(" samples meet the measure condition, min over Q_{r/2} %.4f", sw.cor_min));
    L.part("GT2 ratios in [0,1]", sw.gt2_min >= 0 && sw.gt2_max <= 1, fmt("[%.4f, %.4f]", sw.gt2_min, sw.gt2_max));
    L.part("gamma finite", sw.gamma_finite, fmt("max %.4f", sw.gamma_max));
    L.part("scale covariance", sw.covariance_gap <= 1e-10, fmt("gap %.3g for k in {2,4}", sw.covariance_gap));
  });

  run(10, "Harnack constant", [](Line& L) {
    auto g = std::make_shared<const SpaceTimeGrid>(
        SpaceTimeGrid::cylinder(ParabolicCylinder::make(Point::at(0.0, 0.0), 1.0), 1.0 / 32, 1.0 / 1024));
    const double one = harnack_ratio(GridFunction(g, 3.0), Point::at(0.0, 0.0), 0.5);
    L.part("constants", one == 1.0, fmt("ratio %.17g", one));
    EnsembleSpec heat;
    heat.seed = 7;
    heat.count = 100;
    heat.region = MorreyRegion::of(harnack_cylinders(Point::at(0.0, 0.0), 0.5).outer);
    const auto ens = generate_instances(heat);
    std::vector<double> N;
    for (double h : {1.0 / 32, 1.0 / 64}) {
      HarnackSetup s;
      s.h = h;
      s.tau = h * h;
      N.push_back(harnack_constant(ens, s).N.value);
    }
    L.part("N >= 1", N[0] >= 1 && N[1] >= 1, fmt("N = %.5f, %.5f", N[0], N[1]));
    const double change = std::abs(N[1] - N[0]) / N[0];
    L.part("drift-free refinement", change <= 0.1, fmt("relative change %.4f", change));
    EnsembleSpec crit = critical_spec(20, 7);
    crit.region = heat.region;
    HarnackSetup s;
    s.ks = {2.0, 4.0};
    const auto rep = harnack_constant(generate_instances(crit), s);
    const double gap = std::max(rep.gaps.at(0), rep.gaps.at(1));
    L.part("critical rescaling", gap <= 0.1 && rep.N.value >= 1,
           fmt("N = %.4f, gaps %.3g, %.3g", rep.N.value, rep.gaps[0], rep.gaps[1]));
  });

  const double total = seconds_since(start);
  std::printf("%d of 10 criteria failed; total %.1f s\n", failures, total);
  return failures == 0 ? 0 : 1;
}
