#include "harnack_lab/coefficients.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "harnack_lab/quadrature.hpp"

namespace hlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double ball_volume(int dim, double r) { return dim == 1 ? 2.0 * r : std::numbers::pi * r * r; }

}  // namespace

DiffusionField DiffusionField::constant(int dim, Matrix2 a) {
  if (dim == 1) a[0][1] = a[1][0] = a[1][1] = 0.0;
  DiffusionField f;
  f.dim = dim;
  f.name = "constant";
  f.eval = [a](const Point&) { return a; };
  return f;
}

DiffusionField DiffusionField::identity(int dim) {
  auto f = constant(dim, Matrix2{{{1.0, 0.0}, {0.0, 1.0}}});
  f.name = "identity";
  return f;
}

DriftField DriftField::zero(int dim) {
  auto f = constant(dim, {0.0, 0.0});
  f.name = "zero";
  return f;
}

DriftField DriftField::constant(int dim, SpaceVec c) {
  if (dim == 1) c[1] = 0.0;
  DriftField f;
  f.dim = dim;
  f.name = "constant";
  f.eval = [c](const Point&) { return c; };
  const double mag = euclid_norm(c, dim);
  f.power_integral = [mag, dim](const ParabolicCylinder& q, double p) -> std::optional<double> {
    return std::pow(mag, p) * ball_volume(dim, q.radius) * q.radius * q.radius;
  };
  return f;
}

DriftField DriftField::scaled(double c) const {
  if (!(c > 0.0)) throw std::invalid_argument("drift scale factor must be positive");
  DriftField f = *this;
  auto inner = eval;
  f.eval = [inner, c](const Point& p) {
    SpaceVec v = inner(p);
    return SpaceVec{c * v[0], c * v[1]};
  };
  if (power_integral) {
    auto pi = power_integral;
    f.power_integral = [pi, c](const ParabolicCylinder& q, double p) -> std::optional<double> {
      auto v = pi(q, p);
      if (!v) return std::nullopt;
      return std::pow(c, p) * *v;
    };
  }
  return f;
}

double euclid_norm(const SpaceVec& v, int dim) {
  return dim == 1 ? std::abs(v[0]) : std::hypot(v[0], v[1]);
}

double certify_parabolicity(const DiffusionField& a, const SpaceTimeGrid& samples) {
  if (!a.eval) throw std::invalid_argument("diffusion field has no evaluator");
  double nu = 1.0;
  for (std::size_t node = 0; node < samples.size(); ++node) {
    if (!samples.active(node)) continue;
    const Point p = samples.point(node);
    const Matrix2 m = a.eval(p);
    double lmin = 0.0, frob2 = 0.0;
    if (a.dim == 1) {
      lmin = m[0][0];
      frob2 = m[0][0] * m[0][0];
    } else {
      const double s01 = 0.5 * (m[0][1] + m[1][0]);
      const double mean = 0.5 * (m[0][0] + m[1][1]);
      const double half = 0.5 * (m[0][0] - m[1][1]);
      lmin = mean - std::hypot(half, s01);
      frob2 = m[0][0] * m[0][0] + m[0][1] * m[0][1] + m[1][0] * m[1][0] + m[1][1] * m[1][1];
    }
    if (!(lmin > 0.0) || !std::isfinite(frob2)) {
      std::ostringstream msg;
      msg << "diffusion not positive definite at node " << node << " (x=" << p.x[0];
      if (a.dim == 2) msg << ", y=" << p.x[1];
      msg << ", t=" << p.t << ", min eigenvalue " << lmin << ")";
      throw std::runtime_error(msg.str());
    }
    nu = std::max({nu, 1.0 / lmin, std::sqrt(frob2)});
  }
  return nu + 1e-12;
}

DiffusionField certified(DiffusionField a, const SpaceTimeGrid& samples) {
  a.nu = certify_parabolicity(a, samples);
  return a;
}

MorreyParams MorreyParams::make(int n, double p, double q, double alpha) {
  if (n != 1 && n != 2) throw std::invalid_argument("Morrey parameters need n in {1,2}");
  if (!(p >= 1.0) || !(q >= 1.0) || !(alpha >= 0.0)) {
    throw std::invalid_argument("Morrey parameters need p, q >= 1 and alpha >= 0");
  }
  if (std::abs(n / p + 2.0 / q - alpha - 1.0) > 1e-12) {
    throw std::invalid_argument("Morrey parameters violate n/p + 2/q - alpha = 1");
  }
  return MorreyParams{n, p, q, alpha};
}

MorreyParams MorreyParams::critical(int n) {
  return make(n, n + 1.0, n + 1.0, 1.0 / (n + 1.0));
}

MorreyRegion MorreyRegion::of(const ParabolicCylinder& q) {
  MorreyRegion r;
  r.is_cylinder = true;
  r.cylinder = q;
  r.box = SpaceTimeBox::bounding(q);
  return r;
}

MorreyRegion MorreyRegion::of(const SpaceTimeBox& b) {
  MorreyRegion r;
  r.is_cylinder = false;
  r.box = b;
  return r;
}

bool MorreyRegion::admits(const ParabolicCylinder& q) const {
  return is_cylinder ? cylinder.contains_closure(q) : box.contains_closure(q);
}

MorreyRegion rescale(const MorreyRegion& r, double k) {
  MorreyRegion out = r;
  out.cylinder = rescale(r.cylinder, k);
  out.box = rescale(r.box, k);
  return out;
}

double morrey_quotient(const DriftField& b, const ParabolicCylinder& q, const MorreyParams& params,
                       const MorreyOptions& opt) {
  const double r = q.radius;
  const double scale = std::pow(r, -params.alpha);
  if (opt.use_closed_form && params.p == params.q && b.power_integral) {
    if (auto v = b.power_integral(q, params.p)) {
      if (std::isinf(*v)) return kInf;
      return scale * std::pow(*v, 1.0 / params.p);
    }
  }
  const int m = opt.cells_per_radius;
  const int nt = opt.time_cells;
  const double hc = r / m;
  const double cell = q.dim == 1 ? hc : hc * hc;
  const double dt = r * r / nt;
  const int ncell = 2 * m;
  const int ny = q.dim == 2 ? ncell : 1;
  double total = 0.0;
  for (int l = 0; l < nt; ++l) {
    Point p;
    p.dim = q.dim;
    p.t = q.bottom() + r * r * ((l + 0.5) / nt);
    double slice = 0.0;
    for (int j = 0; j < ny; ++j) {
      const double uy = q.dim == 2 ? -1.0 + (j + 0.5) / m : 0.0;
      for (int i = 0; i < ncell; ++i) {
        const double ux = -1.0 + (i + 0.5) / m;
        if (q.dim == 2 && ux * ux + uy * uy >= 1.0) continue;
        p.x[0] = q.center[0] + r * ux;
        p.x[1] = q.dim == 2 ? q.center[1] + r * uy : 0.0;
        slice += std::pow(euclid_norm(b.eval(p), q.dim), params.p);
      }
    }
    slice *= cell;
    total += (params.p == params.q ? slice : std::pow(slice, params.q / params.p)) * dt;
  }
  return scale * std::pow(total, 1.0 / params.q);
}

std::vector<double> dyadic_scales(double r_max, int count) {
  std::vector<double> s;
  for (int j = 0; j < count; ++j) s.push_back(std::ldexp(r_max, -j));
  return s;
}

MorreyReport morrey_norm(const DriftField& b, const MorreyRegion& omega, const MorreyParams& params,
                         const std::vector<double>& scales, const MorreyOptions& opt) {
  if (params.n != omega.dim() || params.n != b.dim) {
    throw std::invalid_argument("Morrey norm: dimension mismatch between field, region and parameters");
  }
  const int L = std::max(opt.centers_per_axis, 2);
  const SpaceTimeBox bb = omega.bounds();
  auto lattice = [L](double lo, double hi, int j) { return lo + (hi - lo) * j / (L - 1); };

  MorreyReport rep;
  rep.params = params;
  std::vector<double> sorted = scales;
  std::sort(sorted.begin(), sorted.end());
  for (double r : sorted) {
    if (!(r > 0.0)) throw std::invalid_argument("Morrey scales must be positive");
    std::vector<ParabolicCylinder> cands;
    const int ly = params.n == 2 ? L : 1;
    for (int kt = 0; kt < L; ++kt) {
      for (int jy = 0; jy < ly; ++jy) {
        for (int ix = 0; ix < L; ++ix) {
          Point y;
          y.dim = params.n;
          y.x[0] = lattice(bb.lo[0], bb.hi[0], ix);
          y.x[1] = params.n == 2 ? lattice(bb.lo[1], bb.hi[1], jy) : 0.0;
          y.t = lattice(bb.t0, bb.t1, kt);
          auto q = ParabolicCylinder::make(y, r);
          if (omega.admits(q)) cands.push_back(q);
        }
      }
    }
    if (cands.empty()) {
      rep.skipped_scales.push_back(r);
      continue;
    }
    std::vector<double> quot(cands.size(), 0.0);
    const long nc = static_cast<long>(cands.size());
    if (opt.exec == Exec::parallel) {
#pragma omp parallel for schedule(dynamic) num_threads(thread_count())
      for (long c = 0; c < nc; ++c) quot[c] = morrey_quotient(b, cands[c], params, opt);
    } else {
      for (long c = 0; c < nc; ++c) quot[c] = morrey_quotient(b, cands[c], params, opt);
    }
    std::size_t best = 0;
    for (std::size_t c = 1; c < quot.size(); ++c) {
      if (quot[c] > quot[best]) best = c;
    }
    rep.table.push_back({r, quot[best], cands[best].anchor()});
    if (rep.table.size() == 1 || quot[best] > rep.norm) {
      rep.norm = quot[best];
      rep.argmax = cands[best];
    }
  }
  rep.S = std::isinf(rep.norm) ? kInf : std::pow(rep.norm, params.q);
  rep.slope = std::numeric_limits<double>::quiet_NaN();
  if (rep.table.size() >= 2) {
    std::vector<double> rs, qs;
    bool ok = true;
    for (const auto& row : rep.table) {
      ok = ok && row.quotient > 0.0 && std::isfinite(row.quotient);
      rs.push_back(row.r);
      qs.push_back(row.quotient);
    }
    if (ok) rep.slope = loglog_slope(rs, qs);
  }
  return rep;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("slope fit needs >= 2 points");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double den = n * sxx - sx * sx;
  if (den == 0.0) throw std::invalid_argument("slope fit needs distinct abscissae");
  return (n * sxy - sx * sy) / den;
}

const char* to_string(Criticality c) {
  switch (c) {
    case Criticality::subcritical: return "subcritical";
    case Criticality::critical: return "critical";
    case Criticality::supercritical: return "supercritical";
  }
  return "?";
}

Classification criticality_classify(const MorreyReport& report, double tolerance) {
  const auto& t = report.table;
  if (t.size() < 4) throw std::invalid_argument("classification needs at least 4 scales");
  if (t.back().r / t.front().r < 10.0 * (1.0 - 1e-12)) {
    throw std::invalid_argument("classification scales must span at least one decade");
  }
  std::vector<double> rs, qs;
  for (const auto& row : t) {
    if (!(row.quotient > 0.0) || !std::isfinite(row.quotient)) {
      throw std::invalid_argument("classification needs finite positive quotients");
    }
    rs.push_back(row.r);
    qs.push_back(row.quotient);
  }
  Classification c;
  c.slope = loglog_slope(rs, qs);
  if (c.slope < -tolerance) {
    c.kind = Criticality::supercritical;
  } else if (c.slope > tolerance) {
    c.kind = Criticality::subcritical;
  } else {
    c.kind = Criticality::critical;
  }
  return c;
}

DriftField drift_rescale(const DriftField& b, double k) {
  if (!(k > 0.0)) throw std::invalid_argument("drift rescale factor must be positive");
  DriftField f = b;
  auto inner = b.eval;
  f.eval = [inner, k](const Point& p) {
    Point q = p;
    for (int i = 0; i < p.dim; ++i) q.x[i] = k * p.x[i];
    q.t = k * k * p.t;
    const SpaceVec v = inner(q);
    return SpaceVec{k * v[0], k * v[1]};
  };
  if (b.power_integral) {
    auto pi = b.power_integral;
    const int dim = b.dim;
    f.power_integral = [pi, k, dim](const ParabolicCylinder& q, double p) -> std::optional<double> {
      auto v = pi(rescale(q, 1.0 / k), p);
      if (!v) return std::nullopt;
      return std::pow(k, p - dim - 2.0) * *v;
    };
  }
  return f;
}

DiffusionField diffusion_rescale(const DiffusionField& a, double k) {
  if (!(k > 0.0)) throw std::invalid_argument("diffusion rescale factor must be positive");
  DiffusionField f = a;
  auto inner = a.eval;
  f.eval = [inner, k](const Point& p) {
    Point q = p;
    for (int i = 0; i < p.dim; ++i) q.x[i] = k * p.x[i];
    q.t = k * k * p.t;
    return inner(q);
  };
  return f;
}

namespace {

// Integral over Q of a(t)^p |[-R,R] ∩ [y-r, y+r]| with a = (1-t)^-beta, R = (1-t)^alpha.
double two_sided_power_integral(double alpha, double beta, const ParabolicCylinder& q, double p) {
  const double ta = std::max(q.bottom(), 0.0);
  const double tb = std::min(q.top, 1.0);
  if (!(tb > ta)) return 0.0;
  const double lo = q.center[0] - q.radius, hi = q.center[0] + q.radius;
  auto overlap = [lo, hi](double R) { return std::max(0.0, std::min(R, hi) - std::max(-R, lo)); };

  std::vector<double> cuts{ta, tb};
  for (double B : {std::abs(lo), std::abs(hi)}) {
    if (B > 0.0) {
      const double t = 1.0 - std::pow(B, 1.0 / alpha);
      if (t > ta && t < tb) cuts.push_back(t);
    }
  }
  std::sort(cuts.begin(), cuts.end());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double t0 = cuts[i], t1 = cuts[i + 1];
    if (!(t1 > t0)) continue;
    // overlap is affine in R on each piece; recover c0 + c1 R from two interior samples.
    const double Ra = std::pow(1.0 - (t0 + 0.25 * (t1 - t0)), alpha);
    const double Rb = std::pow(1.0 - (t0 + 0.75 * (t1 - t0)), alpha);
    const double c1 = std::round((overlap(Ra) - overlap(Rb)) / (Ra - Rb));
    const double Rm = std::pow(1.0 - 0.5 * (t0 + t1), alpha);
    double c0 = overlap(Rm) - c1 * Rm;
    if (std::abs(c0) < 1e-14 * std::max(1.0, q.radius)) c0 = 0.0;
    if (c0 != 0.0) total += c0 * power_integral_1mt(-beta * p, t0, t1);
    if (c1 != 0.0) total += c1 * power_integral_1mt(alpha - beta * p, t0, t1);
  }
  return total;
}

}  // namespace

CounterexampleDrift counterexample_drift(double alpha, double beta) {
  CounterexampleDrift c;
  c.alpha = alpha;
  c.beta = beta;
  c.integrability_exponent = alpha - 2.0 * beta;
  c.profile_exponent = -2.0 * alpha;
  c.supercritical_exponent = 1.0 - alpha - beta;
  c.integrability_ok = c.integrability_exponent > -1.0;
  c.profile_ok = c.profile_exponent > -1.0;
  c.supercritical_ok = c.supercritical_exponent < 0.0;
  c.l2_squared = c.integrability_ok ? 2.0 / (1.0 + c.integrability_exponent) : kInf;

  auto make = [alpha, beta](double sign) {
    DriftField f;
    f.dim = 1;
    f.name = "counterexample";
    f.eval = [alpha, beta, sign](const Point& p) {
      if (p.t < 0.0 || p.t >= 1.0) return SpaceVec{0.0, 0.0};
      const double R = std::pow(1.0 - p.t, alpha);
      const double a = std::pow(1.0 - p.t, -beta);
      double v = 0.0;
      if (p.x[0] >= -R && p.x[0] < 0.0) v = a;
      if (p.x[0] > 0.0 && p.x[0] <= R) v = -a;
      return SpaceVec{sign * v, 0.0};
    };
    f.power_integral = [alpha, beta](const ParabolicCylinder& q, double p) -> std::optional<double> {
      return two_sided_power_integral(alpha, beta, q, p);
    };
    return f;
  };
  c.field = make(1.0);
  c.canonical = make(-1.0);
  return c;
}

double counterexample_l2_squared_quadrature(const CounterexampleDrift& c) {
  // Integrate in u = 1 - t: near t = 1 the slice blows up like u^(alpha - 2 beta), and
  // resolving that tail needs u well below the spacing of doubles near 1.
  const double alpha = c.alpha, beta = c.beta;
  auto slice = [alpha, beta](double u) {
    if (u <= 0.0) return 0.0;
    // |b|^2 = u^(-2 beta) on two halves of width u^alpha; one pow keeps tiny u finite.
    return 2.0 * std::pow(u, alpha - 2.0 * beta);
  };
  return integrate(slice, 0.0, 1.0);
}

DriftField pullback_drift(int dim, double c, double theta, double omega, SpaceVec direction) {
  const double len = euclid_norm(direction, dim);
  if (!(len > 0.0)) throw std::invalid_argument("pullback drift direction must be nonzero");
  SpaceVec e{direction[0] / len, dim == 2 ? direction[1] / len : 0.0};
  DriftField f;
  f.dim = dim;
  f.name = "critical";
  f.eval = [dim, c, theta, omega, e](const Point& p) {
    const double x2 = dim == 1 ? p.x[0] * p.x[0] : p.x[0] * p.x[0] + p.x[1] * p.x[1];
    const double rho = std::sqrt(std::sqrt(x2 * x2 + p.t * p.t));
    const double m = c * (1.0 + theta * std::sin(omega * std::atan2(p.t, x2))) / rho;
    return SpaceVec{m * e[0], m * e[1]};
  };
  return f;
}

}  // namespace hlab
