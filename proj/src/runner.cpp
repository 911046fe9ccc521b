#include "harnack_lab/runner.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <iomanip>
#include <memory>
#include <sstream>
#include <stdexcept>

#include "harnack_lab/config.hpp"
#include "harnack_lab/experiments.hpp"
#include "harnack_lab/parallel.hpp"

namespace hlab {

namespace {

constexpr const char* kVersion = "0.1.0";

std::string num(double v) {
  std::ostringstream s;
  s << std::setprecision(6) << v;
  return s.str();
}

// ---------------------------------------------------------------- config pieces

struct Geometry {
  int dim = 1;
  Point anchor = Point::at(0.0, 0.0);
  double radius = 1.0;
  bool has_box = false;
  SpaceTimeBox box{};
};

Geometry read_geometry(const ConfigBlock& root, double default_radius, Point default_anchor) {
  const ConfigBlock g = root.block("geometry");
  g.allow({"dim", "anchor", "radius", "box"});
  Geometry out;
  out.dim = static_cast<int>(g.integer("dim", default_anchor.dim));
  if (out.dim != 1 && out.dim != 2) throw ConfigError("geometry.dim: must be 1 or 2");
  if (g.has("anchor")) {
    const auto a = g.numbers("anchor");
    if (static_cast<int>(a.size()) != out.dim + 1) {
      throw ConfigError("geometry.anchor: expected " + std::to_string(out.dim + 1) + " numbers (x..., t)");
    }
    out.anchor = Point::make(out.dim, {a[0], out.dim == 2 ? a[1] : 0.0}, a.back());
  } else {
    out.anchor = Point::make(out.dim, default_anchor.x, default_anchor.t);
  }
  out.radius = g.number("radius", default_radius);
  if (g.has("box")) {
    const ConfigBlock b = g.block("box");
    b.allow({"lo", "hi", "t0", "t1"});
    const auto lo = b.numbers("lo"), hi = b.numbers("hi");
    if (static_cast<int>(lo.size()) != out.dim || static_cast<int>(hi.size()) != out.dim) {
      throw ConfigError("geometry.box: lo/hi need one entry per space dimension");
    }
    out.has_box = true;
    out.box.dim = out.dim;
    out.box.lo = {lo[0], out.dim == 2 ? lo[1] : 0.0};
    out.box.hi = {hi[0], out.dim == 2 ? hi[1] : 0.0};
    out.box.t0 = b.number("t0");
    out.box.t1 = b.number("t1");
  }
  return out;
}

struct Resolution {
  std::vector<double> hs;
  std::vector<double> taus;
};

Resolution read_resolution(const ConfigBlock& root, std::vector<double> default_h, std::string default_rule,
                           double default_coefficient = 1.0) {
  const ConfigBlock r = root.block("resolution");
  r.allow({"h", "tau", "tau_rule", "tau_coefficient"});
  Resolution out;
  out.hs = r.numbers("h", default_h);
  for (double h : out.hs) {
    if (!(h > 0.0)) throw ConfigError("resolution.h: must be positive");
  }
  if (r.has("tau")) {
    out.taus = r.numbers("tau");
    if (out.taus.size() == 1) out.taus.assign(out.hs.size(), out.taus[0]);
    if (out.taus.size() != out.hs.size()) throw ConfigError("resolution.tau: one entry per h expected");
  } else {
    const std::string rule = r.text("tau_rule", default_rule);
    const double c = r.number("tau_coefficient", default_coefficient);
    for (double h : out.hs) {
      if (rule == "quadratic") {
        out.taus.push_back(c * h * h);
      } else if (rule == "linear") {
        out.taus.push_back(c * h);
      } else {
        throw ConfigError("resolution.tau_rule: expected \"linear\" or \"quadratic\"");
      }
    }
  }
  return out;
}

std::uint64_t read_seed(const ConfigBlock& root, bool required) {
  const ConfigBlock e = root.block("ensemble");
  if (e.has("seed")) return e.seed("seed");
  if (root.has("seed")) return root.seed("seed");
  if (required) throw ConfigError("ensemble.seed: required for ensemble experiments");
  return 0;
}

void allow_coefficients(const ConfigBlock& root) {
  const ConfigBlock c = root.block("coefficients");
  c.allow({"diffusion", "drift"});
  c.block("diffusion").allow({"matrix", "lo", "hi", "cross_ratio", "coarse_cells"});
  c.block("drift").allow(
      {"family", "vector", "target_S", "bound", "alpha", "beta", "theta", "omega", "direction", "coarse_cells"});
}

EnsembleSpec read_ensemble(const ConfigBlock& root, const Geometry& geo, int default_count) {
  allow_coefficients(root);
  const ConfigBlock e = root.block("ensemble");
  e.allow({"seed", "count", "data_modes", "include_nonmonotone", "scale_count"});
  EnsembleSpec s;
  s.seed = read_seed(root, true);
  s.count = static_cast<int>(e.integer("count", default_count));
  s.n = geo.dim;
  s.data_modes = static_cast<int>(e.integer("data_modes", 3));
  s.scale_count = static_cast<int>(e.integer("scale_count", 4));
  const ConfigBlock d = root.block("coefficients").block("diffusion");
  s.diffusion_lo = d.number("lo", 1.0);
  s.diffusion_hi = d.number("hi", 1.0);
  s.cross_ratio = d.number("cross_ratio", 0.9);
  s.coarse_cells = static_cast<int>(d.integer("coarse_cells", 4));
  const ConfigBlock b = root.block("coefficients").block("drift");
  s.drift = parse_drift_family(b.text("family", "zero"));
  s.target_S = b.number("target_S", 0.0);
  s.drift_bound = b.number("bound", 1.0);
  s.region = MorreyRegion::of(ParabolicCylinder::make(geo.anchor, geo.radius));
  return s;
}

EstimatorOptions read_options(const ConfigBlock& root) {
  EstimatorOptions o;
  o.include_nonmonotone = root.block("ensemble").flag("include_nonmonotone", false);
  return o;
}

// Single fields: constant matrix / vector or a named drift family with fixed parameters.
DiffusionField read_diffusion(const ConfigBlock& root, int dim, const SpaceTimeGrid& samples) {
  const ConfigBlock d = root.block("coefficients").block("diffusion");
  DiffusionField a = DiffusionField::identity(dim);
  if (d.has("matrix")) {
    const auto& m = d.raw("matrix");
    if (!m.is_array() || static_cast<int>(m.size()) != dim) throw ConfigError("coefficients.diffusion.matrix: wrong shape");
    Matrix2 v{};
    for (int i = 0; i < dim; ++i) {
      if (!m[i].is_array() || static_cast<int>(m[i].size()) != dim) {
        throw ConfigError("coefficients.diffusion.matrix: wrong shape");
      }
      for (int j = 0; j < dim; ++j) v[i][j] = parse_number(m[i][j], "coefficients.diffusion.matrix");
    }
    a = DiffusionField::constant(dim, v);
  }
  return certified(a, samples);
}

DriftField read_drift(const ConfigBlock& root, int dim) {
  const ConfigBlock b = root.block("coefficients").block("drift");
  const std::string family = b.text("family", b.has("vector") ? "constant" : "zero");
  switch (parse_drift_family(family)) {
    case DriftFamily::zero:
      return DriftField::zero(dim);
    case DriftFamily::constant: {
      const auto v = b.numbers("vector", {1.0, 0.0});
      if (static_cast<int>(v.size()) < dim) throw ConfigError("coefficients.drift.vector: one entry per dimension");
      return DriftField::constant(dim, {v[0], dim == 2 ? v[1] : 0.0});
    }
    case DriftFamily::critical: {
      const auto dir = b.numbers("direction", {1.0, 0.0});
      return pullback_drift(dim, b.number("bound", 1.0), b.number("theta", 0.0), b.number("omega", 1.0),
                            {dir[0], dir.size() > 1 ? dir[1] : 0.0});
    }
    case DriftFamily::counterexample:
      if (dim != 1) throw ConfigError("coefficients.drift: the counterexample family needs dim 1");
      return counterexample_drift(b.number("alpha", 5.0 / 12.0), b.number("beta", 2.0 / 3.0)).canonical;
    case DriftFamily::piecewise:
      throw ConfigError("coefficients.drift: piecewise-random drifts need an ensemble experiment");
  }
  return DriftField::zero(dim);
}

// ---------------------------------------------------------------- report helpers

struct RowContext {
  std::string experiment;
  std::uint64_t seed = 0;
  int n = 1;
  double nu = 0.0, S = 0.0, h = 0.0, tau = 0.0;
};

void add(ReportDocument& r, const RowContext& c, int id, const std::string& name, double value,
         const std::string& flag = "") {
  r.rows.push_back({c.experiment, id, c.seed, c.n, c.nu, c.S, c.h, c.tau, name, value, flag});
}

void check(ReportDocument& r, const std::string& name, bool pass, const std::string& detail) {
  r.checks.push_back({name, pass, detail});
}

// ---------------------------------------------------------------- experiments

ReportDocument exp_solve(const ConfigBlock& root) {
  const ConfigBlock o = root.block("options");
  o.allow({"forcing", "data"});
  allow_coefficients(root);
  const Geometry geo = read_geometry(root, 1.0, Point::at(0.0, 0.0));
  const Resolution res = read_resolution(root, {1.0 / 32}, "quadratic");
  ReportDocument doc;
  const std::uint64_t seed = read_seed(root, false);
  for (std::size_t i = 0; i < res.hs.size(); ++i) {
    const double h = res.hs[i], tau = res.taus[i];
    auto grid = std::make_shared<const SpaceTimeGrid>(
        geo.has_box ? SpaceTimeGrid::box(geo.box, h, tau)
                    : SpaceTimeGrid::cylinder(ParabolicCylinder::make(geo.anchor, geo.radius), h, tau));
    const DiffusionField a = read_diffusion(root, geo.dim, *grid);
    const DriftField b = read_drift(root, geo.dim);
    const DiscreteOperator op = assemble(a, b, grid);
    const double forcing = o.number("forcing", 0.0);
    std::function<double(const Point&)> data;
    if (o.has("data") && o.raw("data").is_string() && (o.text("data", "") == "positive" || o.text("data", "") == "signed")) {
      Rng rng(seed, 0);
      const bool positive = o.text("data", "") == "positive";
      data = SmoothRandom::draw(rng, grid->bounds(), 3, positive ? 1.0 : 0.0, positive ? 0.95 : 1.0);
    } else {
      const double c = o.number("data", 0.0);
      data = [c](const Point&) { return c; };
    }
    const Solution sol = solve_dirichlet(op, GridFunction(grid, forcing), data);
    RowContext ctx{"solve", seed, geo.dim, a.nu, 0.0, h, tau};
    const PrincipleReport pr = check_principles(op, sol.u);
    double mn = INFINITY, mx = -INFINITY;
    for (std::size_t n = 0; n < grid->size(); ++n) {
      if (!grid->active(n)) continue;
      mn = std::min(mn, sol.u[n]);
      mx = std::max(mx, sol.u[n]);
    }
    const std::string tag = op.monotone ? "" : "non-monotone";
    add(doc, ctx, 0, "sup_u", mx, tag);
    add(doc, ctx, 0, "min_u", mn, tag);
    add(doc, ctx, 0, "interior_excess", pr.interior_excess, tag);
    add(doc, ctx, 0, "monotone", op.monotone ? 1.0 : 0.0, tag);
    for (const auto& d : op.diagnostics) add(doc, ctx, 0, "diagnostic", 0.0, d);
    if (forcing >= 0.0 && op.monotone) {
      check(doc, "max_principle h=" + num(h), pr.max_principle_ok,
            "interior excess " + num(pr.interior_excess) + " (scale " + num(pr.scale) + ")");
    }
    if (geo.dim == 1 && i + 1 == res.hs.size()) {
      Curve c{"u_top", {}, {}};
      const int k = grid->nt() - 1;
      for (int ix = 0; ix < grid->nx(0); ++ix) {
        const std::size_t n = grid->index(ix, 0, k);
        if (!grid->active(n)) continue;
        c.x.push_back(grid->coord(0, ix));
        c.y.push_back(sol.u[n]);
      }
      doc.curves.push_back(c);
    }
  }
  return doc;
}

ReportDocument exp_morrey(const ConfigBlock& root) {
  const ConfigBlock o = root.block("options");
  o.allow({"scales", "r_max", "centers", "cells", "time_cells", "expect", "p", "q", "alpha"});
  allow_coefficients(root);
  const Geometry geo = read_geometry(root, 1.0, Point::at(0.0, 0.0));
  const DriftField b = read_drift(root, geo.dim);
  const MorreyRegion region =
      geo.has_box ? MorreyRegion::of(geo.box) : MorreyRegion::of(ParabolicCylinder::make(geo.anchor, geo.radius));
  const MorreyParams params =
      o.has("p") || o.has("q") || o.has("alpha")
          ? MorreyParams::make(geo.dim, o.number("p", geo.dim + 1.0), o.number("q", geo.dim + 1.0),
                               o.number("alpha", 1.0 / (geo.dim + 1.0)))
          : MorreyParams::critical(geo.dim);
  MorreyOptions mo;
  mo.centers_per_axis = static_cast<int>(o.integer("centers", mo.centers_per_axis));
  mo.cells_per_radius = static_cast<int>(o.integer("cells", mo.cells_per_radius));
  mo.time_cells = static_cast<int>(o.integer("time_cells", mo.time_cells));
  const double rmax = o.number("r_max", region_max_radius(region));
  const auto scales = dyadic_scales(rmax, static_cast<int>(o.integer("scales", 10)));
  const MorreyReport rep = morrey_norm(b, region, params, scales, mo);
  ReportDocument doc;
  RowContext ctx{"morrey", 0, geo.dim, 0.0, rep.S, 0.0, 0.0};
  add(doc, ctx, 0, "norm", rep.norm);
  add(doc, ctx, 0, "S", rep.S);
  add(doc, ctx, 0, "slope", rep.slope);
  for (double r : rep.skipped_scales) add(doc, ctx, 0, "skipped_scale", r, "no admissible cylinder");
  Curve c{"quotient", {}, {}};
  for (const auto& row : rep.table) {
    add(doc, ctx, 0, "quotient", row.quotient, "r=" + num(row.r));
    c.x.push_back(row.r);
    c.y.push_back(row.quotient);
  }
  doc.curves.push_back(c);
  if (rep.table.size() >= 4) {
    const Classification cl = criticality_classify(rep);
    add(doc, ctx, 0, "classification_slope", cl.slope, to_string(cl.kind));
    if (o.has("expect")) {
      const std::string want = o.text("expect", "");
      check(doc, "classification", want == to_string(cl.kind),
            std::string("expected ") + want + ", got " + to_string(cl.kind) + " (slope " + num(cl.slope) + ")");
    }
  } else if (o.has("expect")) {
    check(doc, "classification", false, "fewer than 4 admissible scales");
  }
  return doc;
}

ReportDocument exp_barrier(const ConfigBlock& root) {
  const ConfigBlock o = root.block("options");
  o.allow({"alpha", "eps", "r", "q", "nu"});
  const Geometry geo = read_geometry(root, 1.0, Point::at(0.0, 0.0));
  const Resolution res = read_resolution(root, {1.0 / 32}, "quadratic");
  const double alpha = o.number("alpha", 1.0), eps = o.number("eps", 0.5), r = o.number("r", 1.0);
  const double nu = o.number("nu", 1.0);
  const int n = geo.dim;
  const double qmin = minimal_q(alpha, eps, nu, n);
  const double qprinted = printed_q(alpha, eps);
  const double qop = operator_minimal_q(alpha, eps, 1.0, n);
  double q = qmin;
  if (o.has("q")) {
    const auto& v = o.raw("q");
    const std::string s = v.is_string() ? v.get<std::string>() : "";
    if (s == "minimal") {
      q = qmin;
    } else if (s == "printed") {
      q = qprinted;
    } else if (s == "operator") {
      q = qop;
    } else {
      q = parse_number(v, "options.q");
    }
  }
  ReportDocument doc;
  const BarrierParams p = BarrierParams::make(alpha, eps, r, q, nu, n);
  RowContext ctx{"barrier", 0, n, nu, 0.0, 0.0, 0.0};
  add(doc, ctx, 0, "minimal_q", qmin);
  add(doc, ctx, 0, "printed_q", qprinted, qprinted < qmin ? "below minimal_q" : "");
  add(doc, ctx, 0, "operator_minimal_q", qop);
  add(doc, ctx, 0, "q", q);
  for (std::size_t i = 0; i < res.hs.size(); ++i) {
    ctx.h = res.hs[i];
    ctx.tau = res.taus[i];
    auto grid = std::make_shared<const SpaceTimeGrid>(SpaceTimeGrid::box(barrier_box(p), ctx.h, ctx.tau));
    const BarrierField bf = barrier_psi(p, grid);
    const DiscreteOperator op = assemble(certified(DiffusionField::identity(n), *grid), DriftField::zero(n), grid);
    const VerifyReport vr = verify_signed_solution(bf.psi, op, barrier_verify_region(bf, op), Sign::sub);
    add(doc, ctx, 0, "margin", vr.margin, vr.pass ? "" : "FAIL");
    add(doc, ctx, 0, "tolerance", vr.tol);
    add(doc, ctx, 0, "bottom_max", bf.bottom_max, "bound " + num(bf.bottom_bound));
    add(doc, ctx, 0, "top_min", bf.top_min, "bound " + num(bf.top_bound));
    add(doc, ctx, 0, "axis_min", bf.axis_min, "bound " + num(bf.top_bound));
    check(doc, "psi_subsolution h=" + num(ctx.h), vr.pass,
          "q = " + num(q) + ": margin " + num(vr.margin) + " at (" + num(vr.where.x[0]) + ", " + num(vr.where.t) +
              "), tolerance " + num(vr.tol));
  }
  return doc;
}

ReportDocument exp_counterexample(const ConfigBlock& root) {
  const ConfigBlock o = root.block("options");
  o.allow({"alpha", "beta", "C", "check_times", "depths", "holder_radius", "half_width"});
  const Resolution res = read_resolution(root, {1.0 / 256}, "linear");
  CounterexampleSetup s;
  s.params.alpha = o.number("alpha", s.params.alpha);
  s.params.beta = o.number("beta", s.params.beta);
  s.params.C = o.number("C", s.params.C);
  s.h = res.hs.back();
  s.tau = res.taus.back();
  s.check_times = o.numbers("check_times", s.check_times);
  s.holder_radius = o.number("holder_radius", s.holder_radius);
  s.half_width = o.number("half_width", s.half_width);
  if (o.has("depths")) {
    s.depths.clear();
    for (double d : o.numbers("depths")) s.depths.push_back(static_cast<int>(d));
  }
  const CounterexampleResult cr = counterexample_experiment(s);
  ReportDocument doc;
  RowContext ctx{"counterexample", 0, 1, 1.0, 0.0, s.h, s.tau};
  const auto& d = cr.drift;
  add(doc, ctx, 0, "integrability_exponent", d.integrability_exponent, d.integrability_ok ? "> -1 ok" : "> -1 violated");
  add(doc, ctx, 0, "profile_exponent", d.profile_exponent, d.profile_ok ? "> -1 ok" : "> -1 violated");
  add(doc, ctx, 0, "supercritical_exponent", d.supercritical_exponent, d.supercritical_ok ? "< 0 ok" : "< 0 violated");
  add(doc, ctx, 0, "l2_squared_closed_form", d.l2_squared);
  add(doc, ctx, 0, "l2_squared_quadrature", cr.l2_quadrature);
  add(doc, ctx, 0, "profile_C", s.params.C);
  add(doc, ctx, 0, "min_admissible_C", cr.min_admissible_C);
  add(doc, ctx, 0, "printed_C", cr.printed_C, cr.printed_C_admissible ? "" : "printed constant not admissible");
  add(doc, ctx, 0, "sub_margin", cr.sub.margin, "tol " + num(cr.sub.tol));
  add(doc, ctx, 0, "super_margin", cr.super.margin, "tol " + num(cr.super.tol));
  add(doc, ctx, 0, "trap_min_pos", cr.trap_pos);
  add(doc, ctx, 0, "trap_max_neg", cr.trap_neg);
  for (std::size_t i = 0; i < s.check_times.size(); ++i) {
    add(doc, ctx, 0, "osc", cr.check_osc[i], "t=" + num(s.check_times[i]));
    add(doc, ctx, 0, "bound", cr.check_bound[i], "t=" + num(s.check_times[i]));
  }
  for (std::size_t i = 0; i < s.depths.size(); ++i) {
    add(doc, ctx, 0, "holder_exponent", cr.exponents[i], "depth=" + std::to_string(s.depths[i]));
  }
  doc.curves.push_back({"osc", cr.t, cr.osc});
  doc.curves.push_back({"bound", cr.t, cr.bound});
  const double slack = 5.0 * (s.h + s.tau);
  check(doc, "subsolution on x>0", cr.sub.pass, "margin " + num(cr.sub.margin) + ", tolerance " + num(cr.sub.tol));
  check(doc, "supersolution on x<0", cr.super.pass,
        "margin " + num(cr.super.margin) + ", tolerance " + num(cr.super.tol));
  for (std::size_t i = 0; i < s.check_times.size(); ++i) {
    check(doc, "osc >= 2E(t) at t=" + num(s.check_times[i]), cr.check_osc[i] >= cr.check_bound[i] - slack,
          num(cr.check_osc[i]) + " vs " + num(cr.check_bound[i]));
  }
  return doc;
}

ReportDocument exp_green(const ConfigBlock& root) {
  const ConfigBlock o = root.block("options");
  o.allow({"anchors", "q_ladder", "rho_ladder", "stability"});
  allow_coefficients(root);
  Geometry geo = read_geometry(root, 1.0, Point::at(0.0, 0.5));
  if (!geo.has_box) {
    geo.has_box = true;
    geo.box.dim = geo.dim;
    geo.box.lo = {-1.0, geo.dim == 2 ? -1.0 : 0.0};
    geo.box.hi = {1.0, geo.dim == 2 ? 1.0 : 0.0};
    geo.box.t0 = 0.0;
    geo.box.t1 = 0.5;
  }
  const Resolution res = read_resolution(root, {1.0 / 32, 1.0 / 64, 1.0 / 128}, "quadratic");
  GreenSetup gs;
  gs.box = geo.box;
  gs.hs = res.hs;
  gs.tau_coefficient = res.taus[0] / (res.hs[0] * res.hs[0]);
  if (o.has("anchors")) {
    const auto& a = o.raw("anchors");
    if (!a.is_array()) throw ConfigError("options.anchors: expected an array of points");
    for (const auto& pt : a) {
      if (!pt.is_array() || static_cast<int>(pt.size()) != geo.dim + 1) {
        throw ConfigError("options.anchors: each anchor needs dim + 1 numbers");
      }
      const double x = parse_number(pt[0], "options.anchors");
      const double y = geo.dim == 2 ? parse_number(pt[1], "options.anchors") : 0.0;
      gs.anchors.push_back(Point::make(geo.dim, {x, y}, parse_number(pt[geo.dim], "options.anchors")));
    }
  } else {
    gs.anchors.push_back(geo.anchor);
  }
  gs.q_ladder = o.numbers("q_ladder", gs.q_ladder);
  gs.rho_ladder = o.numbers("rho_ladder", gs.rho_ladder);
  gs.stability = o.number("stability", gs.stability);
  const DriftField b = read_drift(root, geo.dim);
  const GreenReport rep = green_integrability(
      [&](GridPtr g) { return assemble(read_diffusion(root, geo.dim, *g), b, g); }, gs);
  ReportDocument doc;
  RowContext ctx{"green", 0, geo.dim, 0.0, 0.0, 0.0, 0.0};
  for (std::size_t ai = 0; ai < rep.anchors.size(); ++ai) {
    const auto& ar = rep.anchors[ai];
    const int id = static_cast<int>(ai);
    if (ar.skipped) {
      add(doc, ctx, id, "skipped", 1.0, ar.reason);
      continue;
    }
    for (std::size_t ri = 0; ri < res.hs.size(); ++ri) {
      ctx.h = res.hs[ri];
      ctx.tau = gs.tau_coefficient * ctx.h * ctx.h;
      for (std::size_t j = 0; j < gs.rho_ladder.size(); ++j) {
        add(doc, ctx, id, "RH", ar.rh[ri][j], "rho=" + num(gs.rho_ladder[j]));
      }
      for (std::size_t j = 0; j < gs.q_ladder.size(); ++j) {
        add(doc, ctx, id, "G_norm", ar.norms[ri][j], "q=" + num(gs.q_ladder[j]));
      }
    }
    for (std::size_t j = 0; j < gs.q_ladder.size(); ++j) {
      add(doc, ctx, id, "stable", ar.stable[j] ? 1.0 : 0.0, "q=" + num(gs.q_ladder[j]));
    }
    add(doc, ctx, id, "q_star", ar.q_star);
    add(doc, ctx, id, "min_G", ar.min_value);
    add(doc, ctx, id, "mass", ar.mass);
    add(doc, ctx, id, "max_RH_change", ar.max_rh_change);
    check(doc, "G >= 0 (anchor " + std::to_string(id) + ")", ar.min_value >= -1e-12, "min " + num(ar.min_value));
    const double span = ar.anchor.t - gs.box.t0;
    check(doc, "mass <= t (anchor " + std::to_string(id) + ")", ar.mass <= span + 1e-8,
          num(ar.mass) + " vs " + num(span));
  }
  add(doc, ctx, -1, "q_star", rep.q_star);
  add(doc, ctx, -1, "p_star", rep.p_star);
  for (const auto& f : rep.flags) add(doc, ctx, -1, "flag", 0.0, f);
  return doc;
}

ReportDocument exp_growth(const ConfigBlock& root) {
  const ConfigBlock o = root.block("options");
  o.allow({"levels", "mu", "disk_fraction", "rho_ladder", "hgap", "ks", "forcing"});
  const Geometry geo = read_geometry(root, 1.0, Point::at(0.0, 0.0));
  const Resolution res = read_resolution(root, {1.0 / 32}, "quadratic");
  const EnsembleSpec spec = read_ensemble(root, geo, 40);
  GrowthSetup gs;
  gs.Y = geo.anchor;
  gs.r = geo.radius;
  gs.h = res.hs.back();
  gs.tau = res.taus.back();
  gs.levels = o.numbers("levels", gs.levels);
  gs.mu = o.number("mu", gs.mu);
  gs.disk_fraction = o.number("disk_fraction", gs.disk_fraction);
  gs.rho_ladder = o.numbers("rho_ladder", gs.rho_ladder);
  gs.hgap = o.number("hgap", gs.hgap);
  gs.ks = o.numbers("ks", gs.ks);
  gs.forcing = o.number("forcing", gs.forcing);
  const auto ens = generate_instances(spec);
  const GrowthSweep sw = growth_sweep(ens, gs, read_options(root));
  ReportDocument doc;
  for (const auto& smp : sw.samples) {
    const Instance& inst = ens[smp.instance];
    RowContext ctx{"growth", spec.seed, spec.n, inst.nu, inst.S, gs.h, gs.tau};
    const std::string kind = to_string(smp.kind);
    if (std::isnan(smp.mu_hat)) {
      add(doc, ctx, smp.instance, "gamma", smp.ratio, smp.flag);
      continue;
    }
    add(doc, ctx, smp.instance, kind + "_mu_hat", smp.mu_hat, smp.flag);
    add(doc, ctx, smp.instance, kind + "_ratio", smp.ratio, smp.flag);
    if (smp.kind == GrowthKind::GT2) add(doc, ctx, smp.instance, "GT2_K", smp.K);
  }
  Curve c1{"GT1_max_ratio", {}, {}}, c3{"GT3_max_ratio", {}, {}};
  for (std::size_t b = 0; b + 1 < gs.bin_edges.size(); ++b) {
    const double mid = 0.5 * (gs.bin_edges[b] + gs.bin_edges[b + 1]);
    if (!std::isnan(sw.gt1_bin_max[b])) c1.x.push_back(mid), c1.y.push_back(sw.gt1_bin_max[b]);
    if (!std::isnan(sw.gt3_bin_max[b])) c3.x.push_back(mid), c3.y.push_back(sw.gt3_bin_max[b]);
  }
  doc.curves.push_back(c1);
  doc.curves.push_back(c3);
  check(doc, "GT1 curve nondecreasing", sw.gt1_nondecreasing, "slope " + num(sw.gt1_slope));
  check(doc, "GT3 ratio < 1", sw.gt3_below_one, "");
  check(doc, "COR lower bound > 0", sw.cor_condition > 0 && sw.cor_min > 0.0,
        std::to_string(sw.cor_condition) + " samples, min " + num(sw.cor_min));
  check(doc, "GT2 ratio in [0,1]", sw.gt2_min >= 0.0 && sw.gt2_max <= 1.0,
        "[" + num(sw.gt2_min) + ", " + num(sw.gt2_max) + "]");
  check(doc, "gamma finite", sw.gamma_finite, "max " + num(sw.gamma_max));
  check(doc, "scale covariance", sw.covariance_gap <= 1e-10, "gap " + num(sw.covariance_gap));
  check(doc, "inputs verified", sw.verify_failed == 0,
        std::to_string(sw.verified) + " verified, " + std::to_string(sw.verify_failed) + " failed");
  return doc;
}

ReportDocument exp_harnack(const ConfigBlock& root) {
  const ConfigBlock o = root.block("options");
  o.allow({"ks", "stability"});
  const Geometry geo = read_geometry(root, 0.5, Point::at(0.0, 0.0));
  const Resolution res = read_resolution(root, {1.0 / 32}, "quadratic");
  EnsembleSpec spec = read_ensemble(root, geo, 100);
  // fields live on the outer cylinder
  spec.region = MorreyRegion::of(harnack_cylinders(geo.anchor, geo.radius).outer);
  const auto ens = generate_instances(spec);
  ReportDocument doc;
  std::vector<double> values;
  for (std::size_t i = 0; i < res.hs.size(); ++i) {
    HarnackSetup hs;
    hs.Y = geo.anchor;
    hs.r = geo.radius;
    hs.h = res.hs[i];
    hs.tau = res.taus[i];
    if (i + 1 == res.hs.size()) hs.ks = o.numbers("ks", {});
    std::vector<InstanceRow> rows;
    const HarnackReport rep = harnack_constant(ens, hs, read_options(root), &rows);
    for (const auto& row : rows) {
      const Instance& inst = ens[row.instance];
      add(doc, {"harnack", spec.seed, spec.n, inst.nu, inst.S, hs.h, hs.tau}, row.instance, row.name, row.value,
          row.flag);
    }
    doc.estimates.push_back(rep.N);
    values.push_back(rep.N.value);
    RowContext ctx{"harnack", spec.seed, spec.n, rep.N.nu, rep.N.S, hs.h, hs.tau};
    add(doc, ctx, -1, "N_hat", rep.N.value);
    add(doc, ctx, -1, "N_median", rep.N.median);
    for (std::size_t j = 0; j < rep.ks.size(); ++j) {
      add(doc, ctx, -1, "invariance_gap", rep.gaps[j], "k=" + num(rep.ks[j]));
      check(doc, "invariance gap k=" + num(rep.ks[j]), rep.gaps[j] <= 0.1, num(rep.gaps[j]));
    }
    check(doc, "N_hat >= 1 h=" + num(hs.h), rep.N.value >= 1.0 - 1e-12, num(rep.N.value));
  }
  if (values.size() >= 2) {
    const double change = std::abs(values.back() - values[values.size() - 2]) / values[values.size() - 2];
    add(doc, {"harnack", spec.seed, spec.n, 0.0, 0.0, res.hs.back(), res.taus.back()}, -1, "refinement_change", change);
    const double tol = o.number("stability", 0.1);
    check(doc, "refinement stability", change <= tol, num(change) + " vs " + num(tol));
  }
  return doc;
}

ReportDocument exp_abp(const ConfigBlock& root) {
  const ConfigBlock o = root.block("options");
  o.allow({"variant", "p", "forcing", "stability"});
  const Geometry geo = read_geometry(root, 1.0, Point::at(0.0, 0.0));
  const Resolution res = read_resolution(root, {1.0 / 16, 1.0 / 32}, "quadratic");
  const EnsembleSpec spec = read_ensemble(root, geo, 50);
  const auto ens = generate_instances(spec);
  const std::string variant = o.text("variant", "standard");
  if (variant != "standard" && variant != "variant") throw ConfigError("options.variant: standard or variant");
  ReportDocument doc;
  std::vector<double> values;
  for (std::size_t i = 0; i < res.hs.size(); ++i) {
    AbpSetup s;
    s.domain = ParabolicCylinder::make(geo.anchor, geo.radius);
    s.h = res.hs[i];
    s.tau = res.taus[i];
    s.variant = variant == "standard" ? AbpVariant::standard : AbpVariant::variant;
    s.p = o.number("p", geo.dim + 1.0);
    s.forcing_scale = o.number("forcing", 1.0);
    std::vector<InstanceRow> rows;
    const ConstantEstimate c = abp_constant(ens, s, read_options(root), &rows);
    for (const auto& row : rows) {
      const Instance& inst = ens[row.instance];
      add(doc, {"abp", spec.seed, spec.n, inst.nu, inst.S, s.h, s.tau}, row.instance, row.name, row.value, row.flag);
    }
    doc.estimates.push_back(c);
    values.push_back(c.value);
    add(doc, {"abp", spec.seed, spec.n, c.nu, c.S, s.h, s.tau}, -1, "N_hat", c.value);
    check(doc, "bounded h=" + num(s.h), std::isfinite(c.value), num(c.value));
  }
  if (values.size() >= 2) {
    const double change = std::abs(values.back() - values[values.size() - 2]) / values[values.size() - 2];
    add(doc, {"abp", spec.seed, spec.n, 0.0, 0.0, res.hs.back(), res.taus.back()}, -1, "refinement_change", change);
    const double tol = o.number("stability", 0.15);
    check(doc, "refinement stability", change <= tol, num(change) + " vs " + num(tol));
  }
  return doc;
}

ReportDocument exp_hoelder(const ConfigBlock& root) {
  const ConfigBlock o = root.block("options");
  o.allow({"function", "slope", "value", "depth", "alpha", "beta"});
  allow_coefficients(root);
  const Geometry geo = read_geometry(root, 0.5, Point::at(0.0, 0.0));
  const Resolution res = read_resolution(root, {1.0 / 64}, "quadratic");
  const std::string fn = o.text("function", "linear");
  const int depth = static_cast<int>(o.integer("depth", 4));
  const double h = res.hs.back(), tau = res.taus.back();
  GridFunction u;
  Point Y = geo.anchor;
  double r = geo.radius;
  if (fn == "counterexample") {
    CounterexampleSetup s;
    s.params.alpha = o.number("alpha", s.params.alpha);
    s.params.beta = o.number("beta", s.params.beta);
    s.h = h;
    s.tau = tau;
    s.holder_radius = r;
    s.depths = {depth};
    const CounterexampleResult cr = counterexample_experiment(s);
    ReportDocument doc;
    RowContext ctx{"hoelder", 0, 1, 1.0, 0.0, h, tau};
    add(doc, ctx, 0, "exponent", cr.exponents[0], "depth=" + std::to_string(depth));
    return doc;
  }
  auto grid = std::make_shared<const SpaceTimeGrid>(SpaceTimeGrid::cylinder(ParabolicCylinder::make(Y, r), h, tau));
  if (fn == "linear") {
    const double b = o.number("slope", 1.0);
    u = GridFunction::sample(grid, [b](const Point& p) { return p.x[0] + b * p.t; });
  } else if (fn == "constant") {
    const double c = o.number("value", 1.0);
    u = GridFunction(grid, c);
  } else if (fn == "solution") {
    const DiscreteOperator op = assemble(read_diffusion(root, geo.dim, *grid), read_drift(root, geo.dim), grid);
    Rng rng(read_seed(root, false), 0);
    u = solve_dirichlet(op, GridFunction(grid, 0.0), SmoothRandom::draw(rng, grid->bounds(), 3, 0.0, 1.0)).u;
  } else {
    throw ConfigError("options.function: linear, constant, solution or counterexample");
  }
  const HoelderFit f = holder_exponent(u, Y, r, depth);
  ReportDocument doc;
  RowContext ctx{"hoelder", 0, geo.dim, 0.0, 0.0, h, tau};
  add(doc, ctx, 0, "exponent", f.exponent, f.flat ? "flat" : "");
  add(doc, ctx, 0, "residual", f.residual);
  doc.curves.push_back({"osc", f.radii, f.osc});
  return doc;
}

using Runner = ReportDocument (*)(const ConfigBlock&);

Runner runner_for(const std::string& name) {
  if (name == "solve") return exp_solve;
  if (name == "morrey") return exp_morrey;
  if (name == "barrier") return exp_barrier;
  if (name == "counterexample") return exp_counterexample;
  if (name == "green") return exp_green;
  if (name == "growth") return exp_growth;
  if (name == "harnack") return exp_harnack;
  if (name == "abp") return exp_abp;
  if (name == "hoelder") return exp_hoelder;
  throw ConfigError("unknown experiment '" + name + "'");
}

std::string timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names{"solve", "morrey", "barrier", "counterexample", "green",
                                              "growth", "harnack", "abp", "hoelder"};
  return names;
}

ReportDocument run_experiment(const std::string& name, const nlohmann::json& config) {
  if (!config.is_object()) throw ConfigError("config: top level must be an object");
  const ConfigBlock root(&config, "");
  root.allow({"experiment", "seed", "geometry", "coefficients", "resolution", "ensemble", "options", "output"});
  root.block("output").allow({"dir", "format"});
  if (root.has("experiment") && root.text("experiment", "") != name) {
    throw ConfigError("experiment: config names '" + root.text("experiment", "") + "' but '" + name + "' was requested");
  }
  const Runner fn = runner_for(name);
  ReportDocument doc = fn(root);
  doc.experiment = name;
  doc.config = config;
  return doc;
}

RunOutcome run(const RunOptions& opt) {
  RunOutcome out;
  try {
    nlohmann::json cfg = opt.config_path.empty() ? nlohmann::json::object() : load_config(opt.config_path);
    if (!cfg.is_object()) throw ConfigError("config: top level must be an object");
    std::string name = opt.experiment;
    if (name.empty()) {
      if (!cfg.contains("experiment") || !cfg["experiment"].is_string()) {
        throw ConfigError("experiment: missing (give a subcommand or an \"experiment\" field)");
      }
      name = cfg["experiment"].get<std::string>();
    }
    if (opt.seed) {
      if (!cfg.contains("ensemble")) cfg["ensemble"] = nlohmann::json::object();
      cfg["ensemble"]["seed"] = *opt.seed;
      cfg.erase("seed");
    }
    if (opt.threads) set_thread_count(*opt.threads);
    std::string dir = opt.out_dir, format = opt.format;
    if (cfg.contains("output")) {
      const ConfigBlock o(&cfg["output"], "output");
      if (dir.empty()) dir = o.text("dir", "");
      if (format.empty()) format = o.text("format", "");
    }
    if (dir.empty()) dir = ".";
    if (format.empty()) format = "csv";
    const Format f = parse_format(format);
    out.report = run_experiment(name, cfg);
    out.report.provenance = {{"artifact", "harnack_lab"},
                             {"version", kVersion},
                             {"timestamp", timestamp()},
                             {"seed", cfg.contains("ensemble") && cfg["ensemble"].contains("seed")
                                          ? cfg["ensemble"]["seed"]
                                          : cfg.value("seed", nlohmann::json(nullptr))}};
    out.files.push_back(emit(out.report, f, dir));
    out.status = out.report.failed() ? 2 : 0;
    int fails = 0;
    for (const auto& c : out.report.checks) fails += c.pass ? 0 : 1;
    out.message = fails ? std::to_string(fails) + " check(s) FAILED" : "ok";
  } catch (const std::exception& e) {
    out.status = 1;
    out.message = e.what();
  }
  return out;
}

}  // namespace hlab
