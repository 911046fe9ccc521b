#include "harnack_lab/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>

namespace hlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

template <class Body>
void for_instances(int count, Exec exec, Body&& body) {
  if (exec == Exec::parallel) {
    std::vector<std::string> errors(static_cast<std::size_t>(count));
#pragma omp parallel for schedule(dynamic) num_threads(thread_count())
    for (int i = 0; i < count; ++i) {
      try {
        body(i);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
    for (const auto& e : errors) {
      if (!e.empty()) throw std::runtime_error(e);
    }
  } else {
    for (int i = 0; i < count; ++i) body(i);
  }
}

GridFunction sampled(GridPtr g, const std::function<double(const Point&)>& f, double scale) {
  GridFunction out = GridFunction::sample(g, f);
  for (auto& v : out.values) v *= scale;
  return out;
}

GridFunction shifted(const GridFunction& u, double c) {
  GridFunction out = u;
  for (auto& v : out.values) v -= c;
  return out;
}

GridFunction scaled(const GridFunction& u, double c) {
  GridFunction out = u;
  for (auto& v : out.values) v *= c;
  return out;
}

// Value theta with weighted |{u > theta} ∩ set| close to `fraction` of |set| (from below).
double upper_quantile(const GridFunction& u, const NodeSet& set, double fraction) {
  std::vector<std::pair<double, double>> vw;
  double total = 0.0;
  for (std::size_t i = 0; i < set.mask.size(); ++i) {
    if (!set.contains(i)) continue;
    vw.push_back({u[i], set.grid->weight(i)});
    total += set.grid->weight(i);
  }
  if (vw.empty()) throw std::invalid_argument("quantile over an empty node set");
  std::sort(vw.begin(), vw.end(), [](auto a, auto b) { return a.first > b.first; });
  double acc = 0.0;
  for (const auto& [v, w] : vw) {
    acc += w;
    if (acc >= fraction * total) return v;
  }
  return vw.back().first;
}

double disk_max(const GridFunction& u, int k, const SpaceVec& z, double rho) {
  const SpaceTimeGrid& g = *u.grid;
  const std::size_t plane = static_cast<std::size_t>(g.nx(0)) * g.nx(1);
  const Point c = Point::make(g.dim(), z, 0.0);
  double m = -kInf;
  for (std::size_t n = k * plane; n < (k + 1) * plane; ++n) {
    if (g.active(n) && space_distance(g.point(n), c) <= rho * (1.0 + 1e-12)) m = std::max(m, u[n]);
  }
  return m;
}

int level_index(const SpaceTimeGrid& g, double t) {
  return static_cast<int>(std::lround((t - g.bounds().t0) / g.tau()));
}

NodeSet unknowns(GridPtr g) {
  const SpaceTimeGrid* raw = g.get();
  return NodeSet::where(g, [raw](std::size_t n) { return raw->unknown(n); });
}

int bin_of(double x, const std::vector<double>& edges) {
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    if (x <= edges[i + 1]) return static_cast<int>(i);
  }
  return static_cast<int>(edges.size()) - 2;
}

bool nondecreasing(const std::vector<double>& v) {
  double last = -kInf;
  for (double x : v) {
    if (std::isnan(x)) continue;
    if (x < last - 1e-12) return false;
    last = x;
  }
  return true;
}

}  // namespace

// ---------------------------------------------------------------- counterexample

CounterexampleResult counterexample_experiment(const CounterexampleSetup& s) {
  const CounterexampleParams& p = s.params;
  if (!(p.alpha < 0.5)) throw std::invalid_argument("-2 alpha > -1 violated (alpha must be < 1/2)");
  CounterexampleResult res;
  res.drift = counterexample_drift(p.alpha, p.beta);
  res.l2_quadrature = counterexample_l2_squared_quadrature(res.drift);

  SpaceTimeBox box;
  box.dim = 1;
  box.lo = {-s.half_width, 0.0};
  box.hi = {s.half_width, 0.0};
  box.t0 = 0.0;
  box.t1 = 1.0 - s.tau;
  auto g = std::make_shared<const SpaceTimeGrid>(SpaceTimeGrid::box(box, s.h, s.tau));
  const CounterexampleProfile prof = counterexample_profile(p, g);
  res.min_admissible_C = prof.min_admissible_C;
  res.printed_C = prof.printed_C;
  res.printed_C_admissible = prof.printed_C_admissible;

  const DiffusionField a = certified(DiffusionField::identity(1), *g);
  const DiscreteOperator op = assemble(a, res.drift.canonical, g);
  const NodeSet pos = NodeSet::where(g, [&](std::size_t n) { return g->unknown(n) && g->point(n).x[0] > 0.0; });
  const NodeSet neg = NodeSet::where(g, [&](std::size_t n) { return g->unknown(n) && g->point(n).x[0] < 0.0; });
  res.sub = verify_signed_solution(prof.v, op, pos, Sign::sub);
  res.super = verify_signed_solution(prof.v, op, neg, Sign::super);

  const Solution sol = solve_dirichlet(op, GridFunction(g, 0.0), prof.v);
  res.trap_pos = kInf;
  res.trap_neg = -kInf;
  for (std::size_t n = 0; n < g->size(); ++n) {
    const double d = sol.u[n] - prof.v[n];
    if (pos.contains(n)) res.trap_pos = std::min(res.trap_pos, d);
    if (neg.contains(n)) res.trap_neg = std::max(res.trap_neg, d);
  }
  for (int k = 0; k < g->nt(); ++k) {
    const double t = g->time(k);
    res.t.push_back(t);
    res.osc.push_back(oscillation(sol.u, {0.0, 0.0}, profile_radius(p, t), t));
    res.bound.push_back(2.0 * profile_envelope(p, t));
  }
  for (double t : s.check_times) {
    const int k = level_index(*g, t);
    if (k < 0 || k >= g->nt()) throw std::invalid_argument("counterexample: check time outside [0, 1)");
    res.check_osc.push_back(res.osc[k]);
    res.check_bound.push_back(2.0 * profile_envelope(p, g->time(k)));
  }
  const Point top = Point::at(0.0, g->time(g->nt() - 1));
  for (int d : s.depths) res.exponents.push_back(holder_exponent(sol.u, top, s.holder_radius, d).exponent);
  return res;
}

// ---------------------------------------------------------------- growth

GrowthSweep growth_sweep(const std::vector<Instance>& ensemble, const GrowthSetup& s, const EstimatorOptions& opt) {
  const ParabolicCylinder Qr = ParabolicCylinder::make(s.Y, s.r);
  auto grid = std::make_shared<const SpaceTimeGrid>(SpaceTimeGrid::cylinder(Qr, s.h, s.tau));
  const ParabolicCylinder Q0 = harnack_cylinders(s.Y, s.r).growth_base;
  const NodeSet inQr = NodeSet::in_cylinder(grid, Qr);
  const NodeSet inQ0 = NodeSet::in_cylinder(grid, Q0);
  const NodeSet live = unknowns(grid);
  std::vector<GridPtr> kgrids;
  for (double k : s.ks) kgrids.push_back(std::make_shared<const SpaceTimeGrid>(grid->rescaled(k)));

  const int count = static_cast<int>(ensemble.size());
  std::vector<std::vector<GrowthSample>> per(ensemble.size());
  std::vector<double> gap(ensemble.size(), 0.0);
  std::vector<int> verified(ensemble.size(), 0), failed(ensemble.size(), 0), skipped(ensemble.size(), 0);

  for_instances(count, opt.exec, [&](int idx) {
    const Instance& inst = ensemble[idx];
    const DiscreteOperator op = instance_operator(inst, grid);
    if (!op.monotone && !opt.include_nonmonotone) {
      skipped[idx] = 1;
      return;
    }
    auto& out = per[idx];
    // subsolution with mixed-sign data, supersolutions with nonnegative data
    const GridFunction w =
        solve_dirichlet(op, sampled(grid, inst.positive_data, s.forcing), inst.signed_data).u;
    const GridFunction down = sampled(grid, inst.positive_data, -s.forcing);
    const GridFunction v =
        solve_dirichlet(op, down, [&](const Point& x) { return std::max(inst.signed_data(x), 0.0); }).u;
    const GridFunction vpos = solve_dirichlet(op, down, inst.positive_data).u;
    for (const auto& [f, sign] : {std::pair{&w, Sign::sub}, {&v, Sign::super}, {&vpos, Sign::super}}) {
      if (verify_signed_solution(*f, op, live, sign).pass) {
        ++verified[idx];
      } else {
        ++failed[idx];
      }
    }

    for (double level : s.levels) {
      GrowthGeometry geo;
      geo.Y = s.Y;
      geo.r = s.r;
      const GridFunction u1 = shifted(w, upper_quantile(w, inQr, level));
      GrowthResult g1 = growth_check(GrowthKind::GT1, u1, geo);
      out.push_back({inst.id, GrowthKind::GT1, g1.mu_hat, g1.ratio, 0.0, g1.flag});
      const GridFunction u3 = shifted(w, upper_quantile(w, inQ0, level));
      GrowthResult g3 = growth_check(GrowthKind::GT3, u3, geo);
      out.push_back({inst.id, GrowthKind::GT3, g3.mu_hat, g3.ratio, 0.0, g3.flag});
      const double theta = upper_quantile(v, inQ0, level);
      if (theta > 0.0) {
        GrowthResult gc = growth_check(GrowthKind::COR, scaled(v, 1.0 / theta), geo);
        out.push_back({inst.id, GrowthKind::COR, gc.mu_hat, gc.ratio, 0.0, gc.flag});
      }
    }

    // GT2 disk from the instance's own stream
    Rng rng(inst.seed, (std::uint64_t{1} << 32) + static_cast<std::uint64_t>(inst.id));
    const double rho = s.disk_fraction * s.r, r2 = s.r * s.r;
    const int klo = static_cast<int>(std::ceil((s.Y.t - r2 - grid->bounds().t0) / s.tau - 1e-9));
    const int khi = static_cast<int>(std::floor((s.Y.t - 0.25 * r2 - rho * rho - grid->bounds().t0) / s.tau + 1e-9));
    const int kd = rng.integer(std::max(klo, 0), khi);
    SpaceVec z = s.Y.x;
    if (grid->dim() == 1) {
      z[0] += rng.uniform(-1.0, 1.0) * (s.r - rho);
    } else {
      const double ang = rng.uniform(0.0, 2.0 * std::numbers::pi), rad = (s.r - rho) * std::sqrt(rng.uniform());
      z[0] += rad * std::cos(ang);
      z[1] += rad * std::sin(ang);
    }
    GrowthGeometry g2;
    g2.Y = s.Y;
    g2.r = s.r;
    g2.z = z;
    g2.rho = rho;
    g2.tau = grid->time(kd);
    const GrowthResult r2res = growth_check(GrowthKind::GT2, shifted(w, disk_max(w, kd, z, rho)), g2);
    out.push_back({inst.id, GrowthKind::GT2, r2res.mu_hat, r2res.ratio, r2res.K, r2res.flag});

    // infimum growth on the positive supersolution
    const int kt = level_index(*grid, s.Y.t - 0.75 * r2);
    std::vector<double> gammas;
    for (double rr : s.rho_ladder) {
      const InfGrowth ig = inf_growth(vpos, s.Y, s.r, s.Y.x, rr * s.r, grid->time(kt), s.Y.t, s.hgap);
      gammas.push_back(ig.gamma);
      out.push_back({inst.id, GrowthKind::COR, kNaN, ig.gamma, 0.0, "gamma rho=" + std::to_string(rr)});
    }

    // rescaled companions reproduce the GT2 ratio and gamma
    for (std::size_t j = 0; j < s.ks.size(); ++j) {
      const double k = s.ks[j];
      const Instance ik = rescale(inst, k);
      GridPtr gk = kgrids[j];
      const DiscreteOperator opk = instance_operator(ik, gk);
      const GridFunction wk = solve_dirichlet(opk, sampled(gk, ik.positive_data, k * k * s.forcing), ik.signed_data).u;
      GrowthGeometry gg = g2;
      gg.Y = rescale(s.Y, k);
      gg.r = s.r / k;
      gg.z = {z[0] / k, z[1] / k};
      gg.rho = rho / k;
      gg.tau = gk->time(kd);
      const GrowthResult rk = growth_check(GrowthKind::GT2, shifted(wk, disk_max(wk, kd, gg.z, gg.rho)), gg);
      gap[idx] = std::max(gap[idx], std::abs(rk.ratio - r2res.ratio));
      const GridFunction vk =
          solve_dirichlet(opk, sampled(gk, ik.positive_data, -k * k * s.forcing), ik.positive_data).u;
      for (std::size_t m = 0; m < s.rho_ladder.size(); ++m) {
        const InfGrowth ig = inf_growth(vk, gg.Y, gg.r, gg.Y.x, s.rho_ladder[m] * gg.r, gk->time(kt), gg.Y.t, s.hgap);
        gap[idx] = std::max(gap[idx], std::abs(ig.gamma - gammas[m]));
      }
    }
  });

  GrowthSweep sw;
  const std::size_t nb = s.bin_edges.size() - 1;
  sw.gt1_bin_max.assign(nb, kNaN);
  sw.gt3_bin_max.assign(nb, kNaN);
  sw.cor_min = kInf;
  sw.gt2_min = kInf;
  sw.gt2_max = -kInf;
  sw.gamma_max = -kInf;
  sw.gamma_finite = true;
  sw.gt3_below_one = true;
  for (int i = 0; i < count; ++i) {
    sw.verified += verified[i];
    sw.verify_failed += failed[i];
    sw.skipped += skipped[i];
    sw.covariance_gap = std::max(sw.covariance_gap, gap[i]);
    for (const auto& smp : per[i]) {
      sw.samples.push_back(smp);
      const bool gamma_row = std::isnan(smp.mu_hat);
      if (gamma_row) {
        sw.gamma_max = std::max(sw.gamma_max, smp.ratio);
        sw.gamma_finite = sw.gamma_finite && std::isfinite(smp.ratio);
        continue;
      }
      switch (smp.kind) {
        case GrowthKind::GT1: {
          double& b = sw.gt1_bin_max[bin_of(smp.mu_hat, s.bin_edges)];
          b = std::isnan(b) ? smp.ratio : std::max(b, smp.ratio);
          break;
        }
        case GrowthKind::GT3: {
          double& b = sw.gt3_bin_max[bin_of(smp.mu_hat, s.bin_edges)];
          b = std::isnan(b) ? smp.ratio : std::max(b, smp.ratio);
          if (smp.mu_hat < 1.0 && !(smp.ratio < 1.0)) sw.gt3_below_one = false;
          break;
        }
        case GrowthKind::COR:
          if (smp.mu_hat < s.mu) {
            ++sw.cor_condition;
            sw.cor_min = std::min(sw.cor_min, smp.ratio);
          }
          break;
        case GrowthKind::GT2:
          sw.gt2_min = std::min(sw.gt2_min, smp.ratio);
          sw.gt2_max = std::max(sw.gt2_max, smp.ratio);
          break;
      }
    }
  }
  sw.gt1_nondecreasing = nondecreasing(sw.gt1_bin_max);
  sw.gt3_nondecreasing = nondecreasing(sw.gt3_bin_max);
  std::vector<double> xs, ys;
  for (std::size_t b = 0; b < nb; ++b) {
    if (std::isnan(sw.gt1_bin_max[b])) continue;
    xs.push_back(0.5 * (s.bin_edges[b] + s.bin_edges[b + 1]));
    ys.push_back(sw.gt1_bin_max[b]);
  }
  if (xs.size() >= 2) {
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) mx += xs[i], my += ys[i];
    mx /= xs.size();
    my /= ys.size();
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) sxy += (xs[i] - mx) * (ys[i] - my), sxx += (xs[i] - mx) * (xs[i] - mx);
    sw.gt1_slope = sxy / sxx;
  }
  return sw;
}

// ---------------------------------------------------------------- principles

PrincipleSweep principle_sweep(const std::vector<Instance>& ensemble, const ParabolicCylinder& domain, double h,
                               double tau, const EstimatorOptions& opt) {
  auto grid = std::make_shared<const SpaceTimeGrid>(SpaceTimeGrid::cylinder(domain, h, tau));
  const int count = static_cast<int>(ensemble.size());
  std::vector<PrincipleReport> reports(ensemble.size());
  std::vector<int> skip(ensemble.size(), 0);
  for_instances(count, opt.exec, [&](int i) {
    const Instance& inst = ensemble[i];
    const DiscreteOperator op = instance_operator(inst, grid);
    if (!op.monotone && !opt.include_nonmonotone) {
      skip[i] = 1;
      return;
    }
    // u: caloric with mixed-sign data; v below it in residual and on the boundary
    const GridFunction u = solve_dirichlet(op, GridFunction(grid, 0.0), inst.signed_data).u;
    const GridFunction v = solve_dirichlet(op, sampled(grid, inst.positive_data, 0.25), [&](const Point& x) {
                             return inst.signed_data(x) - 0.25 * inst.positive_data(x);
                           }).u;
    reports[i] = check_principles(op, u, &v);
  });
  PrincipleSweep ps;
  ps.worst_difference = kInf;
  for (int i = 0; i < count; ++i) {
    if (skip[i]) {
      ++ps.skipped;
      continue;
    }
    const auto& r = reports[i];
    ++ps.solves;
    const double sc = r.scale > 0.0 ? r.scale : 1.0;
    ps.worst_excess = std::max(ps.worst_excess, r.interior_excess / sc);
    ps.worst_difference = std::min(ps.worst_difference, r.min_difference / sc);
    if (!r.max_principle_ok) ++ps.max_failures;
    if (!r.comparison_ok) ++ps.comparison_failures;
  }
  return ps;
}

}  // namespace hlab
