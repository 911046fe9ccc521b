#include "harnack_lab/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <stdexcept>

namespace hlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Visits active nodes in the closed cylinder, scanning only its index box.
template <class F>
void for_nodes_in(const SpaceTimeGrid& g, const ParabolicCylinder& q, F&& f) {
  const double h = g.h();
  const auto& b = g.bounds();
  auto span = [&](double lo, double hi, double origin, double step, int count) {
    int a = static_cast<int>(std::floor((lo - origin) / step)) - 1;
    int c = static_cast<int>(std::ceil((hi - origin) / step)) + 1;
    return std::pair<int, int>{std::max(a, 0), std::min(c, count - 1)};
  };
  const auto [i0, i1] = span(q.center[0] - q.radius, q.center[0] + q.radius, b.lo[0], h, g.nx(0));
  std::pair<int, int> jr{0, 0};
  if (g.dim() == 2) jr = span(q.center[1] - q.radius, q.center[1] + q.radius, b.lo[1], h, g.nx(1));
  const auto [k0, k1] = span(q.bottom(), q.top, b.t0, g.tau(), g.nt());
  for (int k = k0; k <= k1; ++k) {
    for (int j = jr.first; j <= jr.second; ++j) {
      for (int i = i0; i <= i1; ++i) {
        const std::size_t n = g.index(i, j, k);
        if (g.active(n) && q.contains_closure(g.point(n))) f(n);
      }
    }
  }
}

// Level index of time t, if t is a grid level.
std::optional<int> level_of(const SpaceTimeGrid& g, double t) {
  const double x = (t - g.bounds().t0) / g.tau();
  const long k = std::lround(x);
  if (std::abs(x - static_cast<double>(k)) > 1e-7 || k < 0 || k >= g.nt()) return std::nullopt;
  return static_cast<int>(k);
}

// Active nodes of level k within distance `radius` of `center`.
template <class F>
void for_disk_nodes(const SpaceTimeGrid& g, int k, const SpaceVec& center, double radius, F&& f) {
  const Point c = Point::make(g.dim(), center, 0.0);
  const std::size_t plane = static_cast<std::size_t>(g.nx(0)) * g.nx(1);
  for (std::size_t n = k * plane; n < (k + 1) * plane; ++n) {
    if (!g.active(n)) continue;
    if (space_distance(g.point(n), c) <= radius * (1.0 + 1e-12)) f(n);
  }
}

double value_at(const GridFunction& u, const Point& p, const char* what) {
  const auto node = u.grid->locate(p);
  if (!node || !u.grid->active(*node)) throw std::invalid_argument(std::string(what) + " is not a grid node");
  return u[*node];
}

double scale_of(const GridFunction& u) { return std::max(1.0, sup_norm(u)); }

template <class Body>
void run_instances(int count, Exec exec, Body&& body) {
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

void fill_parameters(ConstantEstimate& c, const std::vector<Instance>& ensemble, double h, double tau) {
  c.h = h;
  c.tau = tau;
  for (const auto& inst : ensemble) {
    c.n = inst.n;
    c.nu = std::max(c.nu, inst.nu);
    c.S = std::max(c.S, inst.S);
  }
}

}  // namespace

ConstantEstimate ConstantEstimate::from(const std::string& name, std::vector<double> samples) {
  if (samples.empty()) throw std::invalid_argument("constant estimate '" + name + "' has no samples");
  ConstantEstimate c;
  c.name = name;
  std::sort(samples.begin(), samples.end());
  const std::size_t m = samples.size();
  c.min = samples.front();
  c.max = samples.back();
  c.median = m % 2 ? samples[m / 2] : 0.5 * (samples[m / 2 - 1] + samples[m / 2]);
  c.value = c.max;
  c.count = static_cast<int>(m);
  return c;
}

double lp_norm(const GridFunction& f, double p) {
  if (!(p > 0.0)) throw std::invalid_argument("lp_norm: p must be positive");
  const SpaceTimeGrid& g = *f.grid;
  double s = 0.0;
  for (std::size_t n = 0; n < g.size(); ++n) {
    if (g.active(n) && f[n] != 0.0) s += std::pow(std::abs(f[n]), p) * g.weight(n);
  }
  return std::pow(s, 1.0 / p);
}

double drift_lp_norm(const DriftField& b, GridPtr grid, double p) {
  // same sampling times as the assembled operator
  const SpaceTimeGrid& g = *grid;
  GridFunction m(grid, 0.0);
  for (std::size_t n = 0; n < g.size(); ++n) {
    if (!g.active(n)) continue;
    Point x = g.point(n);
    x.t -= 0.5 * g.tau();
    m[n] = euclid_norm(b.eval(x), g.dim());
  }
  return lp_norm(m, p);
}

double parabolic_diameter(const SpaceTimeGrid& g) {
  const int nx = g.nx(0), ny = g.nx(1);
  std::vector<std::uint8_t> foot(static_cast<std::size_t>(nx) * ny, 0);
  int kmin = g.nt(), kmax = -1;
  for (std::size_t n = 0; n < g.size(); ++n) {
    if (!g.active(n)) continue;
    const auto c = g.coords(n);
    foot[static_cast<std::size_t>(c[1]) * nx + c[0]] = 1;
    kmin = std::min(kmin, c[2]);
    kmax = std::max(kmax, c[2]);
  }
  if (kmax < 0) return 0.0;
  // boundary of the projected footprint is enough for the diameter
  std::vector<std::array<double, 2>> pts;
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      if (!foot[static_cast<std::size_t>(j) * nx + i]) continue;
      bool edge = i == 0 || i == nx - 1 || !foot[static_cast<std::size_t>(j) * nx + i - 1] ||
                  !foot[static_cast<std::size_t>(j) * nx + i + 1];
      if (g.dim() == 2) {
        edge = edge || j == 0 || j == ny - 1 || !foot[static_cast<std::size_t>(j - 1) * nx + i] ||
               !foot[static_cast<std::size_t>(j + 1) * nx + i];
      }
      if (edge) pts.push_back({g.coord(0, i), g.dim() == 2 ? g.coord(1, j) : 0.0});
    }
  }
  double d2 = 0.0;
  for (std::size_t a = 0; a < pts.size(); ++a) {
    for (std::size_t b = a + 1; b < pts.size(); ++b) {
      const double dx = pts[a][0] - pts[b][0], dy = pts[a][1] - pts[b][1];
      d2 = std::max(d2, dx * dx + dy * dy);
    }
  }
  return std::max(std::sqrt(d2), std::sqrt((kmax - kmin) * g.tau()));
}

// ---------------------------------------------------------------- ABP

const char* to_string(AbpVariant v) { return v == AbpVariant::standard ? "standard" : "variant"; }

AbpRatio abp_ratio(const DiscreteOperator& op, const GridFunction& f, AbpVariant variant, double p) {
  const int n = op.grid->dim();
  const double pp = variant == AbpVariant::standard ? n + 1.0 : p;
  if (!(pp > 0.0)) throw std::invalid_argument("abp: p must be positive");
  AbpRatio out;
  const double fn = lp_norm(f, pp);
  if (fn == 0.0) {
    out.skipped = true;
    return out;
  }
  GridFunction rhs = f;
  for (auto& v : rhs.values) v = -v;
  const Solution sol = solve_dirichlet(op, rhs, GridFunction(op.grid, 0.0));
  double sup = -kInf;
  for (std::size_t i = 0; i < sol.u.size(); ++i) {
    if (op.grid->active(i)) sup = std::max(sup, sol.u[i]);
  }
  const double r = parabolic_diameter(*op.grid);
  if (variant == AbpVariant::standard) {
    const double bn = drift_lp_norm(op.b, op.grid, n + 1.0);
    out.denominator = (std::pow(r, n / (n + 1.0)) + std::pow(bn, n)) * fn;
  } else {
    out.denominator = std::pow(r, 2.0 - (n + 2.0) / p) * fn;
  }
  out.sup_u = sup;
  out.ratio = sup / out.denominator;
  return out;
}

ConstantEstimate abp_constant(const std::vector<Instance>& ensemble, const AbpSetup& setup,
                              const EstimatorOptions& opt, std::vector<InstanceRow>* rows) {
  auto grid = std::make_shared<const SpaceTimeGrid>(SpaceTimeGrid::cylinder(setup.domain, setup.h, setup.tau));
  const int count = static_cast<int>(ensemble.size());
  std::vector<AbpRatio> res(ensemble.size());
  std::vector<std::string> flag(ensemble.size());
  run_instances(count, opt.exec, [&](int i) {
    const DiscreteOperator op = instance_operator(ensemble[i], grid);
    if (!op.monotone && !opt.include_nonmonotone) {
      res[i].skipped = true;
      flag[i] = "non-monotone";
      return;
    }
    GridFunction f = GridFunction::sample(grid, ensemble[i].positive_data);
    for (auto& v : f.values) v *= setup.forcing_scale;
    res[i] = abp_ratio(op, f, setup.variant, setup.p);
    if (res[i].skipped) flag[i] = "zero forcing";
  });
  std::vector<double> samples;
  int skipped = 0;
  for (int i = 0; i < count; ++i) {
    if (rows) rows->push_back({ensemble[i].id, "abp_ratio", res[i].ratio, flag[i]});
    if (res[i].skipped) {
      ++skipped;
    } else {
      samples.push_back(res[i].ratio);
    }
  }
  ConstantEstimate c = ConstantEstimate::from(
      std::string("abp_") + to_string(setup.variant), std::move(samples));
  fill_parameters(c, ensemble, setup.h, setup.tau);
  c.skipped = skipped;
  return c;
}

// ---------------------------------------------------------------- Green

double reverse_holder_quotient(const GreenSlice& gs, double rho) {
  const SpaceTimeGrid& g = *gs.values.grid;
  const int n = g.dim();
  const double e = (n + 1.0) / n;
  double big = 0.0, small = 0.0;
  for_nodes_in(g, ParabolicCylinder::make(gs.anchor, rho), [&](std::size_t i) {
    big += std::pow(std::max(gs.values[i], 0.0), e) * g.weight(i);
  });
  for_nodes_in(g, ParabolicCylinder::make(gs.anchor, 0.5 * rho), [&](std::size_t i) {
    small += gs.values[i] * g.weight(i);
  });
  if (!(small > 0.0)) return kInf;
  return std::pow(big, 1.0 / e) / (std::pow(rho, -(n + 2.0) / (n + 1.0)) * small);
}

double green_norm(const GreenSlice& gs, double q) {
  GridFunction pos = gs.values;
  for (auto& v : pos.values) v = std::max(v, 0.0);
  return lp_norm(pos, q);
}

GreenReport green_integrability(const OperatorFactory& make_operator, const GreenSetup& setup, Exec exec) {
  if (setup.hs.size() < 2) throw std::invalid_argument("green_integrability needs at least two resolutions");
  if (setup.anchors.empty()) throw std::invalid_argument("green_integrability needs an anchor");
  GreenReport rep;
  rep.hs = setup.hs;
  rep.q_ladder = setup.q_ladder;
  rep.rho_ladder = setup.rho_ladder;
  const double rho_max = setup.rho_ladder.empty()
                             ? 0.0
                             : *std::max_element(setup.rho_ladder.begin(), setup.rho_ladder.end());

  std::vector<Point> live;
  for (const auto& a : setup.anchors) {
    GreenAnchorReport ar;
    ar.anchor = a;
    if (rho_max > 0.0 && !setup.box.contains_closure(ParabolicCylinder::make(a, rho_max))) {
      ar.skipped = true;
      ar.reason = "anchor too near the boundary for rho = " + std::to_string(rho_max);
    } else {
      live.push_back(a);
    }
    rep.anchors.push_back(ar);
  }

  for (std::size_t res = 0; res < setup.hs.size(); ++res) {
    const double h = setup.hs[res];
    auto grid = std::make_shared<const SpaceTimeGrid>(
        SpaceTimeGrid::box(setup.box, h, setup.tau_coefficient * h * h));
    const DiscreteOperator op = make_operator(grid);
    if (!op.monotone) rep.flags.push_back("non-monotone operator at h = " + std::to_string(h));
    const auto slices = green_slices(op, live, exec);
    std::size_t s = 0;
    for (auto& ar : rep.anchors) {
      if (ar.skipped) continue;
      const GreenSlice& gs = slices[s++];
      std::vector<double> rh, norms;
      for (double rho : setup.rho_ladder) rh.push_back(reverse_holder_quotient(gs, rho));
      for (double q : setup.q_ladder) norms.push_back(green_norm(gs, q));
      ar.rh.push_back(rh);
      ar.norms.push_back(norms);
      if (res + 1 == setup.hs.size()) {
        double mn = kInf, mass = 0.0;
        for (std::size_t i = 0; i < gs.values.size(); ++i) {
          if (!grid->active(i)) continue;
          mn = std::min(mn, gs.values[i]);
          mass += gs.values[i] * grid->weight(i);
        }
        ar.min_value = mn;
        ar.mass = mass;
      }
    }
  }

  const std::size_t m = setup.hs.size();
  double qstar = kInf;
  bool any = false;
  rep.min_value = kInf;
  for (auto& ar : rep.anchors) {
    if (ar.skipped) continue;
    any = true;
    rep.min_value = std::min(rep.min_value, ar.min_value);
    for (std::size_t j = 0; j < setup.rho_ladder.size(); ++j) {
      const double a = ar.rh[m - 2][j], b = ar.rh[m - 1][j];
      ar.max_rh_change = std::max(ar.max_rh_change, std::abs(b - a) / a);
    }
    ar.q_star = 0.0;
    bool prefix = true;
    for (std::size_t j = 0; j < setup.q_ladder.size(); ++j) {
      const double fine = std::abs(ar.norms[m - 1][j] - ar.norms[m - 2][j]) / ar.norms[m - 1][j];
      bool ok = std::isfinite(fine) && fine <= setup.stability;
      if (m >= 3) {
        const double coarse = std::abs(ar.norms[m - 2][j] - ar.norms[m - 3][j]) / ar.norms[m - 2][j];
        ok = ok && (fine < coarse || fine == 0.0);
      }
      ar.stable.push_back(ok);
      // largest q of the stable prefix of the ladder
      prefix = prefix && ok;
      if (prefix) ar.q_star = setup.q_ladder[j];
    }
    qstar = std::min(qstar, ar.q_star);
  }
  if (!any) {
    rep.flags.push_back("every anchor skipped");
    rep.q_star = 0.0;
    rep.min_value = 0.0;
  } else {
    rep.q_star = qstar;
  }
  rep.p_star = rep.q_star > 1.0 ? rep.q_star / (rep.q_star - 1.0) : kInf;
  return rep;
}

// ---------------------------------------------------------------- growth

const char* to_string(GrowthKind k) {
  switch (k) {
    case GrowthKind::GT1: return "GT1";
    case GrowthKind::GT2: return "GT2";
    case GrowthKind::GT3: return "GT3";
    case GrowthKind::COR: return "COR";
  }
  return "?";
}

GrowthKind parse_growth_kind(const std::string& s) {
  if (s == "GT1" || s == "gt1") return GrowthKind::GT1;
  if (s == "GT2" || s == "gt2") return GrowthKind::GT2;
  if (s == "GT3" || s == "gt3") return GrowthKind::GT3;
  if (s == "COR" || s == "cor") return GrowthKind::COR;
  throw std::invalid_argument("unknown growth kind '" + s + "'");
}

double positive_max(const GridFunction& u, const ParabolicCylinder& q) {
  double m = 0.0;
  for_nodes_in(*u.grid, q, [&](std::size_t i) { m = std::max(m, u[i]); });
  return m;
}

namespace {

// |{pred}| / |Q| with the discrete measure
template <class Pred>
double fraction(const GridFunction& u, const ParabolicCylinder& q, Pred pred) {
  const SpaceTimeGrid& g = *u.grid;
  double in = 0.0, all = 0.0;
  for_nodes_in(g, q, [&](std::size_t i) {
    all += g.weight(i);
    if (pred(u[i])) in += g.weight(i);
  });
  if (!(all > 0.0)) throw std::invalid_argument("cylinder contains no grid nodes");
  return in / all;
}

GrowthResult decay(const GridFunction& u, const ParabolicCylinder& small, const ParabolicCylinder& big) {
  GrowthResult r;
  const double mb = positive_max(u, big);
  if (mb == 0.0) {
    r.ratio = 0.0;
    r.flag = "u+ = 0";
    return r;
  }
  r.ratio = positive_max(u, small) / mb;
  return r;
}

}  // namespace

GrowthResult growth_check(GrowthKind kind, const GridFunction& u, const GrowthGeometry& g) {
  if (!(g.r > 0.0)) throw std::invalid_argument("growth_check: r must be positive");
  const ParabolicCylinder Qr = ParabolicCylinder::make(g.Y, g.r);
  const ParabolicCylinder Qh = ParabolicCylinder::make(g.Y, 0.5 * g.r);
  const double tol = g.tol * scale_of(u);
  GrowthResult res;
  switch (kind) {
    case GrowthKind::GT1: {
      const double mu_hat = fraction(u, Qr, [](double v) { return v > 0.0; });
      if (g.mu < 1.0 && mu_hat > g.mu) {
        throw std::invalid_argument("|{u>0} ∩ Q_r| <= mu |Q_r| violated (observed " + std::to_string(mu_hat) + ")");
      }
      res = decay(u, Qh, Qr);
      res.mu_hat = mu_hat;
      break;
    }
    case GrowthKind::GT2: {
      const double s = g.Y.t, r2 = g.r * g.r, slack = 1e-12 * r2;
      if (!(g.rho > 0.0)) throw std::invalid_argument("GT2: rho must be positive");
      if (!(s - r2 - slack <= g.tau && g.tau <= s - 0.25 * r2 - g.rho * g.rho + slack)) {
        throw std::invalid_argument("s - r^2 <= tau <= s - r^2/4 - rho^2 violated");
      }
      const Point zc = Point::make(g.Y.dim, g.z, g.Y.t);
      if (space_distance(zc, g.Y) + g.rho > g.r * (1.0 + 1e-12)) {
        throw std::invalid_argument("B_rho(z) ⊂ B_r(y) violated");
      }
      const auto k = level_of(*u.grid, g.tau);
      if (!k) throw std::invalid_argument("GT2: tau is not a grid level");
      double disk_max = -kInf;
      for_disk_nodes(*u.grid, *k, g.z, g.rho, [&](std::size_t i) { disk_max = std::max(disk_max, u[i]); });
      if (disk_max == -kInf) throw std::invalid_argument("GT2: disk D_rho contains no grid nodes");
      if (disk_max > tol) throw std::invalid_argument("u <= 0 on D_rho violated");
      const double top = std::max(value_at(u, g.Y, "GT2: Y"), 0.0);
      const double sup = positive_max(u, Qr);
      res.ratio = sup > 0.0 ? top / sup : 0.0;
      if (sup == 0.0) res.flag = "u+ = 0";
      res.mu_hat = fraction(u, Qr, [](double v) { return v > 0.0; });
      const double dt = s - g.tau;
      res.K = std::max(g.rho * space_distance(zc, g.Y) / dt, dt / (g.rho * g.rho));
      break;
    }
    case GrowthKind::GT3: {
      const ParabolicCylinder Q0 = harnack_cylinders(g.Y, g.r).growth_base;
      const double mu_hat = fraction(u, Q0, [](double v) { return v > 0.0; });
      if (g.mu < 1.0 && mu_hat > g.mu) {
        throw std::invalid_argument("|{u>0} ∩ Q0| <= mu |Q0| violated (observed " + std::to_string(mu_hat) + ")");
      }
      res = decay(u, Qh, Qr);
      res.mu_hat = mu_hat;
      break;
    }
    case GrowthKind::COR: {
      double mn = kInf;
      for_nodes_in(*u.grid, Qr, [&](std::size_t i) { mn = std::min(mn, u[i]); });
      if (mn < -tol) throw std::invalid_argument("v >= 0 violated");
      const ParabolicCylinder Q0 = harnack_cylinders(g.Y, g.r).growth_base;
      const double big = fraction(u, Q0, [](double v) { return v >= 1.0; });
      if (g.mu < 1.0 && !(big > 1.0 - g.mu)) {
        throw std::invalid_argument("|{v >= 1} ∩ Q0| > (1 - mu) |Q0| violated (observed " + std::to_string(big) +
                                    ")");
      }
      res.mu_hat = 1.0 - big;
      double low = kInf;
      for_nodes_in(*u.grid, Qh, [&](std::size_t i) { low = std::min(low, u[i]); });
      res.ratio = low;
      break;
    }
  }
  if (kind != GrowthKind::COR && (res.ratio < 0.0 || res.ratio > 1.0 + 1e-12)) {
    res.flag = "ratio outside [0,1]: non-monotone solve";
  }
  return res;
}

// ---------------------------------------------------------------- propagation

MeanValue mean_value_p(const GridFunction& u, const Point& Y, double r, double p) {
  if (!(p > 0.0)) throw std::invalid_argument("mean_value_p: p must be positive");
  const double uy = std::max(value_at(u, Y, "mean_value_p: Y"), 0.0);
  const SpaceTimeGrid& g = *u.grid;
  double vol = 0.0, integral = 0.0;
  for_nodes_in(g, ParabolicCylinder::make(Y, r), [&](std::size_t i) {
    vol += g.weight(i);
    if (u[i] > 0.0) integral += std::pow(u[i], p) * g.weight(i);
  });
  MeanValue mv;
  if (integral == 0.0) {
    mv.ratio = uy > 0.0 ? kInf : 0.0;
    mv.flag = uy > 0.0 ? "impossible: u+(Y) > 0 with zero integral" : "u+ = 0";
    return mv;
  }
  mv.ratio = std::pow(uy, p) * vol / integral;
  return mv;
}

BottomPropagation bottom_propagation(const GridFunction& u, double r, double eps, double alpha, double ell) {
  if (!(eps > 0.0 && eps < 0.5)) throw std::invalid_argument("bottom_propagation: eps < 1/2 required");
  if (!(ell > 0.0)) throw std::invalid_argument("bottom_propagation: ell must be positive");
  const SpaceTimeGrid& g = *u.grid;
  const auto kb = level_of(g, -r * r);
  const auto kt = level_of(g, (alpha - 1.0) * r * r);
  if (!kb || !kt) throw std::invalid_argument("bottom_propagation: plates are not grid levels");
  BottomPropagation bp;
  bp.bottom_min = kInf;
  bp.top_min = kInf;
  for_disk_nodes(g, *kb, {0.0, 0.0}, eps * r, [&](std::size_t i) { bp.bottom_min = std::min(bp.bottom_min, u[i]); });
  for_disk_nodes(g, *kt, {0.0, 0.0}, eps * r, [&](std::size_t i) { bp.top_min = std::min(bp.top_min, u[i]); });
  if (bp.bottom_min == kInf) throw std::invalid_argument("bottom_propagation: plate contains no grid nodes");
  if (bp.bottom_min < ell * (1.0 - 1e-12)) throw std::invalid_argument("u >= ell on the bottom plate violated");
  bp.value = bp.top_min / ell;
  return bp;
}

PowerFit fit_power_law(const std::vector<double>& eps, const std::vector<double>& values) {
  if (eps.size() != values.size() || eps.size() < 2) throw std::invalid_argument("fit_power_law: need >= 2 points");
  const std::size_t m = eps.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < m; ++i) {
    if (!(eps[i] > 0.0 && values[i] > 0.0)) throw std::invalid_argument("fit_power_law: values must be positive");
    const double x = std::log(eps[i]), y = std::log(values[i]);
    sx += x, sy += y, sxx += x * x, sxy += x * y;
  }
  PowerFit f;
  f.m = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  const double c = (sy - f.m * sx) / m;
  f.C1 = std::exp(c);
  double ss = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double d = std::log(values[i]) - (c + f.m * std::log(eps[i]));
    ss += d * d;
  }
  f.residual = std::sqrt(ss / m);
  return f;
}

SlantedRatio slanted_ratio(const GridFunction& u, const Point& Y, double r, double tol) {
  if (!(Y.t > 0.0)) throw std::invalid_argument("slanted_ratio: s > 0 required");
  const SpaceTimeGrid& g = *u.grid;
  const auto k0 = level_of(g, 0.0);
  if (!k0) throw std::invalid_argument("slanted_ratio: t = 0 is not a grid level");
  const double t_tol = tol * scale_of(u);
  double disk = -kInf;
  for_disk_nodes(g, *k0, {0.0, 0.0}, r, [&](std::size_t i) { disk = std::max(disk, u[i]); });
  if (disk > t_tol) throw std::invalid_argument("u <= 0 on D_r violated");
  const auto inside = slanted_cylinder(Y, r);
  double sup = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g.active(i) && inside(g.point(i))) sup = std::max(sup, u[i]);
  }
  SlantedRatio out;
  const double uy = std::max(value_at(u, Y, "slanted_ratio: Y"), 0.0);
  out.ratio = sup > 0.0 ? uy / sup : 0.0;
  if (sup == 0.0) out.flag = "u+ = 0";
  out.K = std::max(r * euclid_norm(Y.x, Y.dim) / Y.t, Y.t / (r * r));
  return out;
}

InfGrowth inf_growth(const GridFunction& v, const Point& Y, double r, const SpaceVec& z, double rho, double tau,
                     double sigma, double hgap) {
  const double s = Y.t, r2 = r * r, slack = 1e-12 * r2;
  if (!(hgap > 0.0 && hgap < 1.0)) throw std::invalid_argument("inf_growth: h in (0,1) required");
  if (!(s - r2 - slack <= tau && tau < tau + hgap * hgap * r2 && tau + hgap * hgap * r2 <= sigma + slack &&
        sigma <= s + slack)) {
    throw std::invalid_argument("s - r^2 <= tau < tau + h^2 r^2 <= sigma <= s violated");
  }
  const Point zc = Point::make(Y.dim, z, s);
  if (space_distance(zc, Y) + rho > r * (1.0 + 1e-12)) throw std::invalid_argument("B_rho(z) ⊂ B_r(y) violated");
  const SpaceTimeGrid& g = *v.grid;
  const auto kt = level_of(g, tau), ks = level_of(g, sigma);
  if (!kt || !ks) throw std::invalid_argument("inf_growth: disk times are not grid levels");
  InfGrowth out;
  out.inf_small = kInf;
  out.inf_top = kInf;
  for_disk_nodes(g, *kt, z, rho, [&](std::size_t i) { out.inf_small = std::min(out.inf_small, v[i]); });
  for_disk_nodes(g, *ks, Y.x, 0.5 * r, [&](std::size_t i) { out.inf_top = std::min(out.inf_top, v[i]); });
  if (out.inf_small == kInf || out.inf_top == kInf) throw std::invalid_argument("inf_growth: empty disk");
  if (!(out.inf_top > 0.0)) throw std::invalid_argument("inf over D0 = 0: ratio undefined");
  out.gamma = std::log(out.inf_small / out.inf_top) / std::log(2.0 * r / rho);
  return out;
}

// ---------------------------------------------------------------- Harnack / Hoelder

double harnack_ratio(const GridFunction& u, const Point& Y, double r) {
  const HarnackCylinders c = harnack_cylinders(Y, r);
  double sup = -kInf, inf = kInf;
  for_nodes_in(*u.grid, c.lower, [&](std::size_t i) { sup = std::max(sup, u[i]); });
  for_nodes_in(*u.grid, c.inner, [&](std::size_t i) { inf = std::min(inf, u[i]); });
  if (sup == -kInf || inf == kInf) throw std::invalid_argument("harnack_ratio: cylinders contain no grid nodes");
  if (!(inf > 0.0)) throw std::invalid_argument("inf over Q_r is not positive");
  return sup / inf;
}

HarnackReport harnack_constant(const std::vector<Instance>& ensemble, const HarnackSetup& setup,
                               const EstimatorOptions& opt, std::vector<InstanceRow>* rows) {
  const HarnackCylinders cyl = harnack_cylinders(setup.Y, setup.r);
  auto grid = std::make_shared<const SpaceTimeGrid>(SpaceTimeGrid::cylinder(cyl.outer, setup.h, setup.tau));
  std::vector<GridPtr> kgrids;
  for (double k : setup.ks) kgrids.push_back(std::make_shared<const SpaceTimeGrid>(grid->rescaled(k)));

  const int count = static_cast<int>(ensemble.size());
  const std::size_t nk = setup.ks.size();
  std::vector<double> ratio(ensemble.size(), kInf);
  std::vector<std::vector<double>> kratio(nk, std::vector<double>(ensemble.size(), kInf));
  std::vector<std::string> flag(ensemble.size());
  auto one = [](const Instance& inst, GridPtr g, const Point& Y, double r, bool keep_nonmono, std::string& fl) {
    const DiscreteOperator op = instance_operator(inst, g);
    if (!op.monotone && !keep_nonmono) {
      fl = "non-monotone";
      return kInf;
    }
    const Solution sol = solve_dirichlet(op, GridFunction(g, 0.0), inst.positive_data);
    try {
      return harnack_ratio(sol.u, Y, r);
    } catch (const std::invalid_argument& e) {
      fl = e.what();
      return kInf;
    }
  };
  run_instances(count, opt.exec, [&](int i) {
    ratio[i] = one(ensemble[i], grid, setup.Y, setup.r, opt.include_nonmonotone, flag[i]);
    for (std::size_t j = 0; j < nk; ++j) {
      std::string f;
      const double k = setup.ks[j];
      kratio[j][i] = one(rescale(ensemble[i], k), kgrids[j], rescale(setup.Y, k), setup.r / k,
                         opt.include_nonmonotone, f);
    }
  });

  HarnackReport rep;
  std::vector<double> samples;
  int skipped = 0;
  for (int i = 0; i < count; ++i) {
    if (rows) rows->push_back({ensemble[i].id, "harnack_ratio", ratio[i], flag[i]});
    if (std::isfinite(ratio[i])) {
      samples.push_back(ratio[i]);
    } else {
      ++skipped;
    }
  }
  rep.ratios = samples;
  rep.N = ConstantEstimate::from("harnack_N", samples);
  fill_parameters(rep.N, ensemble, setup.h, setup.tau);
  rep.N.skipped = skipped;
  if (rep.N.value < 1.0 - 1e-12) rep.N.flags.push_back("estimate below 1: non-monotone solve");
  for (std::size_t j = 0; j < nk; ++j) {
    double nkmax = 0.0;
    for (int i = 0; i < count; ++i) {
      if (std::isfinite(ratio[i]) && std::isfinite(kratio[j][i])) nkmax = std::max(nkmax, kratio[j][i]);
    }
    rep.ks.push_back(setup.ks[j]);
    rep.gaps.push_back(std::abs(nkmax - rep.N.value) / rep.N.value);
  }
  return rep;
}

double cylinder_oscillation(const GridFunction& u, const ParabolicCylinder& q) {
  double lo = kInf, hi = -kInf;
  for_nodes_in(*u.grid, q, [&](std::size_t i) {
    lo = std::min(lo, u[i]);
    hi = std::max(hi, u[i]);
  });
  if (lo > hi) throw std::invalid_argument("cylinder contains no grid nodes");
  return hi - lo;
}

HoelderFit holder_exponent(const GridFunction& u, const Point& Y, double r, int depth) {
  if (depth < 1) throw std::invalid_argument("holder_exponent: depth >= 1 required");
  HoelderFit f;
  for (int j = 0; j <= depth; ++j) {
    const double rj = r * std::ldexp(1.0, -j);
    f.radii.push_back(rj);
    f.osc.push_back(cylinder_oscillation(u, ParabolicCylinder::make(Y, rj)));
  }
  if (f.osc[0] == 0.0) {
    f.flat = true;
    return f;
  }
  std::vector<double> x, y;
  for (int j = 1; j <= depth; ++j) {
    if (f.osc[j] <= 0.0) break;
    x.push_back(f.radii[j]);
    y.push_back(f.osc[j]);
  }
  if (x.size() < 2) {
    f.flat = true;
    return f;
  }
  const PowerFit p = fit_power_law(x, y);
  f.exponent = p.m;
  f.residual = p.residual;
  return f;
}

DiscreteOperator instance_operator(const Instance& inst, GridPtr grid) { return assemble(inst.a, inst.b, std::move(grid)); }

Instance rescale(const Instance& inst, double k) {
  Instance out = inst;
  out.a = diffusion_rescale(inst.a, k);
  out.b = drift_rescale(inst.b, k);
  auto pull = [k](std::function<double(const Point&)> f) {
    return std::function<double(const Point&)>([f, k](const Point& p) {
      Point q = p;
      q.x[0] *= k;
      q.x[1] *= k;
      q.t *= k * k;
      return f(q);
    });
  };
  if (inst.positive_data) out.positive_data = pull(inst.positive_data);
  if (inst.signed_data) out.signed_data = pull(inst.signed_data);
  return out;
}

}  // namespace hlab
