#include "harnack_lab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace hlab {

namespace {

void require_dim(int dim) {
  if (dim != 1 && dim != 2) {
    throw std::invalid_argument("dimension must be 1 or 2, got " + std::to_string(dim));
  }
}

// Number of lattice steps covering `extent` with step `h`; extent must be a multiple of h.
int lattice_steps(double extent, double h, const char* what) {
  const double n = extent / h;
  const double rounded = std::round(n);
  if (!(h > 0.0) || std::abs(n - rounded) > 1e-9 * std::max(1.0, rounded)) {
    throw std::invalid_argument(std::string(what) + " extent is not a multiple of the step");
  }
  return static_cast<int>(rounded);
}

bool near_integer(double v, double& rounded) {
  rounded = std::round(v);
  return std::abs(v - rounded) <= 1e-9 * std::max(1.0, std::abs(rounded));
}

}  // namespace

Point Point::make(int dim, SpaceVec x, double t) {
  require_dim(dim);
  if (dim == 1) x[1] = 0.0;
  return Point{dim, x, t};
}

double space_distance(const Point& a, const Point& b) {
  double s = 0.0;
  for (int i = 0; i < a.dim; ++i) s += (a.x[i] - b.x[i]) * (a.x[i] - b.x[i]);
  return std::sqrt(s);
}

ParabolicCylinder ParabolicCylinder::make(const Point& anchor, double radius) {
  require_dim(anchor.dim);
  if (!(radius > 0.0)) throw std::invalid_argument("cylinder radius must be positive");
  return ParabolicCylinder{anchor.dim, anchor.x, anchor.t, radius};
}

double ParabolicCylinder::volume() const {
  const double r2 = radius * radius;
  const double ball = dim == 1 ? 2.0 * radius : std::numbers::pi * r2;
  return ball * r2;
}

bool ParabolicCylinder::contains(const Point& p) const {
  return space_distance(p, anchor()) < radius && p.t > bottom() && p.t < top;
}

bool ParabolicCylinder::contains_closure(const Point& p, double slack) const {
  const double r2 = radius * radius;
  return space_distance(p, anchor()) <= radius * (1.0 + slack) && p.t >= bottom() - slack * r2 &&
         p.t <= top + slack * r2;
}

bool ParabolicCylinder::contains_closure(const ParabolicCylinder& inner, double slack) const {
  const double r2 = radius * radius;
  return space_distance(inner.anchor(), anchor()) + inner.radius <= radius * (1.0 + slack) &&
         inner.top <= top + slack * r2 && inner.bottom() >= bottom() - slack * r2;
}

SpaceTimeBox SpaceTimeBox::bounding(const ParabolicCylinder& q) {
  SpaceTimeBox b;
  b.dim = q.dim;
  for (int i = 0; i < q.dim; ++i) {
    b.lo[i] = q.center[i] - q.radius;
    b.hi[i] = q.center[i] + q.radius;
  }
  b.t0 = q.bottom();
  b.t1 = q.top;
  return b;
}

bool SpaceTimeBox::contains_closure(const ParabolicCylinder& q, double slack) const {
  const double r2 = q.radius * q.radius;
  for (int i = 0; i < dim; ++i) {
    if (q.center[i] - q.radius < lo[i] - slack * q.radius) return false;
    if (q.center[i] + q.radius > hi[i] + slack * q.radius) return false;
  }
  return q.bottom() >= t0 - slack * r2 && q.top <= t1 + slack * r2;
}

double SpaceTimeBox::volume() const {
  double v = t1 - t0;
  for (int i = 0; i < dim; ++i) v *= hi[i] - lo[i];
  return v;
}

const char* to_string(NodeClass c) {
  switch (c) {
    case NodeClass::exterior: return "exterior";
    case NodeClass::interior: return "interior";
    case NodeClass::lateral: return "lateral";
    case NodeClass::bottom: return "bottom";
    case NodeClass::top: return "top";
  }
  return "?";
}

SpaceTimeGrid SpaceTimeGrid::unclassified(const SpaceTimeBox& bounds, double h, double tau,
                                          std::vector<std::uint8_t> active) {
  require_dim(bounds.dim);
  if (!(h > 0.0) || !(tau > 0.0)) throw std::invalid_argument("grid steps must be positive");
  SpaceTimeGrid g;
  g.bounds_ = bounds;
  if (bounds.dim == 1) {
    g.bounds_.lo[1] = 0.0;
    g.bounds_.hi[1] = 0.0;
  }
  g.h_ = h;
  g.tau_ = tau;
  g.n_[0] = lattice_steps(bounds.hi[0] - bounds.lo[0], h, "x") + 1;
  g.n_[1] = bounds.dim == 2 ? lattice_steps(bounds.hi[1] - bounds.lo[1], h, "y") + 1 : 1;
  g.n_[2] = lattice_steps(bounds.t1 - bounds.t0, tau, "t") + 1;
  if (g.n_[0] < 3 || (bounds.dim == 2 && g.n_[1] < 3) || g.n_[2] < 3) {
    throw std::invalid_argument("degenerate grid: fewer than 3 nodes along an axis");
  }
  const std::size_t total = static_cast<std::size_t>(g.n_[0]) * g.n_[1] * g.n_[2];
  if (active.empty()) active.assign(total, 1);
  if (active.size() != total) throw std::invalid_argument("active mask size mismatch");
  g.active_ = std::move(active);
  g.classes_.assign(total, NodeClass::exterior);
  return g;
}

SpaceTimeGrid SpaceTimeGrid::box(const SpaceTimeBox& bounds, double h, double tau) {
  return classify_nodes(unclassified(bounds, h, tau, {}));
}

SpaceTimeGrid SpaceTimeGrid::masked(const SpaceTimeBox& bounds, double h, double tau,
                                    const Footprint& inside) {
  auto g = unclassified(bounds, h, tau, {});
  for (std::size_t node = 0; node < g.size(); ++node) {
    g.active_[node] = inside(g.point(node)) ? 1 : 0;
  }
  return classify_nodes(std::move(g));
}

SpaceTimeGrid SpaceTimeGrid::cylinder(const ParabolicCylinder& q, double h, double tau) {
  const Point c = q.anchor();
  const double r = q.radius;
  return masked(SpaceTimeBox::bounding(q), h, tau, [c, r](const Point& p) {
    return space_distance(p, c) <= r * (1.0 + 1e-12);
  });
}

SpaceTimeGrid classify_nodes(SpaceTimeGrid g) {
  const int nx = g.n_[0], ny = g.n_[1], nt = g.n_[2];
  const int dj_max = g.dim() == 2 ? 1 : 0;
  for (int k = 0; k < nt; ++k) {
    for (int j = 0; j < ny; ++j) {
      for (int i = 0; i < nx; ++i) {
        const std::size_t node = g.index(i, j, k);
        if (!g.active_[node]) {
          g.classes_[node] = NodeClass::exterior;
          continue;
        }
        if (k == 0) {
          g.classes_[node] = NodeClass::bottom;
          continue;
        }
        bool wall = !g.active_[g.index(i, j, k - 1)];
        for (int dj = -dj_max; dj <= dj_max && !wall; ++dj) {
          for (int di = -1; di <= 1 && !wall; ++di) {
            if (di == 0 && dj == 0) continue;
            const int ii = i + di, jj = j + dj;
            if (ii < 0 || ii >= nx || jj < 0 || jj >= ny || !g.active_[g.index(ii, jj, k)]) {
              wall = true;
            }
          }
        }
        if (wall) {
          g.classes_[node] = NodeClass::lateral;
        } else {
          g.classes_[node] = k == nt - 1 ? NodeClass::top : NodeClass::interior;
        }
      }
    }
  }
  g.classified_ = true;
  return g;
}

std::array<int, 3> SpaceTimeGrid::coords(std::size_t node) const {
  const std::size_t plane = static_cast<std::size_t>(n_[0]) * n_[1];
  const int k = static_cast<int>(node / plane);
  const std::size_t rem = node % plane;
  return {static_cast<int>(rem % n_[0]), static_cast<int>(rem / n_[0]), k};
}

Point SpaceTimeGrid::point(std::size_t node) const {
  const auto [i, j, k] = coords(node);
  Point p;
  p.dim = dim();
  p.x[0] = coord(0, i);
  p.x[1] = dim() == 2 ? coord(1, j) : 0.0;
  p.t = time(k);
  return p;
}

std::optional<std::size_t> SpaceTimeGrid::locate(const Point& p) const {
  std::array<int, 3> idx{0, 0, 0};
  double r = 0.0;
  for (int a = 0; a < dim(); ++a) {
    if (!near_integer((p.x[a] - bounds_.lo[a]) / h_, r)) return std::nullopt;
    idx[a] = static_cast<int>(r);
    if (idx[a] < 0 || idx[a] >= n_[a]) return std::nullopt;
  }
  if (!near_integer((p.t - bounds_.t0) / tau_, r)) return std::nullopt;
  idx[2] = static_cast<int>(r);
  if (idx[2] < 0 || idx[2] >= n_[2]) return std::nullopt;
  return index(idx[0], idx[1], idx[2]);
}

double SpaceTimeGrid::weight(std::size_t node) const {
  if (!active_[node]) return 0.0;
  const auto [i, j, k] = coords(node);
  double w = tau_;
  if (k == 0 || k == n_[2] - 1) w *= 0.5;
  w *= (i == 0 || i == n_[0] - 1) ? 0.5 * h_ : h_;
  if (dim() == 2) w *= (j == 0 || j == n_[1] - 1) ? 0.5 * h_ : h_;
  return w;
}

SpaceTimeGrid SpaceTimeGrid::rescaled(double k) const {
  SpaceTimeGrid g = *this;
  g.bounds_ = rescale(bounds_, k);
  g.h_ = h_ / k;
  g.tau_ = tau_ / (k * k);
  return g;
}

GridFunction::GridFunction(GridPtr g, double fill) : grid(std::move(g)) {
  values.assign(grid->size(), fill);
}

GridFunction::GridFunction(GridPtr g, std::vector<double> v) : grid(std::move(g)), values(std::move(v)) {
  if (values.size() != grid->size()) throw std::invalid_argument("value count does not match grid");
}

GridFunction GridFunction::sample(GridPtr g, const std::function<double(const Point&)>& f) {
  GridFunction u(g, 0.0);
  for (std::size_t node = 0; node < g->size(); ++node) {
    if (g->active(node)) u.values[node] = f(g->point(node));
  }
  return u;
}

double interpolate(const GridFunction& u, const Point& p) {
  const SpaceTimeGrid& g = *u.grid;
  const auto& b = g.bounds();
  std::array<int, 3> base{0, 0, 0};
  std::array<double, 3> frac{0.0, 0.0, 0.0};
  auto locate_axis = [&](double v, double lo, double step, int n, int axis) {
    const double f = (v - lo) / step;
    if (f < -1e-9 || f > (n - 1) + 1e-9) throw std::invalid_argument("interpolation point outside grid");
    int i0 = std::clamp(static_cast<int>(std::floor(f)), 0, std::max(n - 2, 0));
    base[axis] = i0;
    frac[axis] = std::clamp(f - i0, 0.0, 1.0);
  };
  locate_axis(p.x[0], b.lo[0], g.h(), g.nx(0), 0);
  if (g.dim() == 2) locate_axis(p.x[1], b.lo[1], g.h(), g.nx(1), 1);
  locate_axis(p.t, b.t0, g.tau(), g.nt(), 2);

  double sum = 0.0, wsum = 0.0;
  const int jmax = g.dim() == 2 ? 1 : 0;
  for (int dk = 0; dk <= 1; ++dk) {
    for (int dj = 0; dj <= jmax; ++dj) {
      for (int di = 0; di <= 1; ++di) {
        const std::size_t node = g.index(base[0] + di, base[1] + dj, base[2] + dk);
        double w = (di ? frac[0] : 1.0 - frac[0]) * (dk ? frac[2] : 1.0 - frac[2]);
        if (g.dim() == 2) w *= dj ? frac[1] : 1.0 - frac[1];
        if (w == 0.0 || !g.active(node)) continue;
        sum += w * u.values[node];
        wsum += w;
      }
    }
  }
  return wsum > 0.0 ? sum / wsum : std::nan("");
}

GridFunction resample(const GridFunction& u, GridPtr target) {
  GridFunction out(target, 0.0);
  for (std::size_t node = 0; node < target->size(); ++node) {
    if (target->active(node)) out.values[node] = interpolate(u, target->point(node));
  }
  return out;
}

NodeSet NodeSet::empty(GridPtr g) {
  NodeSet s{std::move(g), {}};
  s.mask.assign(s.grid->size(), 0);
  return s;
}

NodeSet NodeSet::all(GridPtr g) {
  NodeSet s{g, g->active_mask()};
  return s;
}

NodeSet NodeSet::where(GridPtr g, const std::function<bool(std::size_t)>& pred) {
  NodeSet s = empty(g);
  for (std::size_t node = 0; node < g->size(); ++node) {
    s.mask[node] = (g->active(node) && pred(node)) ? 1 : 0;
  }
  return s;
}

NodeSet NodeSet::in_cylinder(GridPtr g, const ParabolicCylinder& q) {
  const SpaceTimeGrid* raw = g.get();
  return where(std::move(g), [raw, &q](std::size_t node) { return q.contains_closure(raw->point(node)); });
}

NodeSet NodeSet::intersect(const NodeSet& other) const {
  if (other.grid != grid) throw std::invalid_argument("node sets live on different grids");
  NodeSet s = *this;
  for (std::size_t i = 0; i < mask.size(); ++i) s.mask[i] = mask[i] && other.mask[i];
  return s;
}

NodeSet NodeSet::unite(const NodeSet& other) const {
  if (other.grid != grid) throw std::invalid_argument("node sets live on different grids");
  NodeSet s = *this;
  for (std::size_t i = 0; i < mask.size(); ++i) s.mask[i] = mask[i] || other.mask[i];
  return s;
}

std::size_t NodeSet::count() const {
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), std::uint8_t{1}));
}

double measure(const NodeSet& set) {
  double m = 0.0;
  for (std::size_t node = 0; node < set.mask.size(); ++node) {
    if (set.mask[node]) m += set.grid->weight(node);
  }
  return m;
}

namespace {
void require_scale(double k) {
  if (!(k > 0.0)) throw std::invalid_argument("rescaling factor must be positive");
}
}  // namespace

Point rescale(const Point& p, double k) {
  require_scale(k);
  Point q = p;
  for (int i = 0; i < p.dim; ++i) q.x[i] = p.x[i] / k;
  q.t = p.t / (k * k);
  return q;
}

ParabolicCylinder rescale(const ParabolicCylinder& q, double k) {
  require_scale(k);
  ParabolicCylinder c = q;
  for (int i = 0; i < q.dim; ++i) c.center[i] = q.center[i] / k;
  c.top = q.top / (k * k);
  c.radius = q.radius / k;
  return c;
}

SpaceTimeBox rescale(const SpaceTimeBox& b, double k) {
  require_scale(k);
  SpaceTimeBox r = b;
  for (int i = 0; i < b.dim; ++i) {
    r.lo[i] = b.lo[i] / k;
    r.hi[i] = b.hi[i] / k;
  }
  r.t0 = b.t0 / (k * k);
  r.t1 = b.t1 / (k * k);
  return r;
}

GridFunction rescale(const GridFunction& u, double k) {
  require_scale(k);
  auto g = std::make_shared<const SpaceTimeGrid>(u.grid->rescaled(k));
  return GridFunction(g, u.values);
}

Slanted<Point> slant_transform(const Point& p, const Point& anchor) {
  if (anchor.t == 0.0) throw std::invalid_argument("slant anchor must have s != 0");
  Slanted<Point> out{p, {0.0, 0.0}};
  for (int i = 0; i < p.dim; ++i) {
    const double k = anchor.x[i] / anchor.t;
    out.drift_increment[i] = k;
    out.value.x[i] = p.x[i] - k * p.t;
  }
  return out;
}

Slanted<GridFunction> slant_transform(const GridFunction& u, const Point& anchor) {
  if (anchor.t == 0.0) throw std::invalid_argument("slant anchor must have s != 0");
  const SpaceTimeGrid& g = *u.grid;
  const int dim = g.dim();
  SpaceVec slope{0.0, 0.0};
  for (int a = 0; a < dim; ++a) slope[a] = anchor.x[a] / anchor.t;

  // Integer lattice shift per level and axis.
  std::vector<std::array<int, 2>> shift(g.nt(), {0, 0});
  std::array<int, 2> smin{0, 0}, smax{0, 0};
  for (int k = 0; k < g.nt(); ++k) {
    for (int a = 0; a < dim; ++a) {
      double r = 0.0;
      if (!near_integer(slope[a] * g.time(k) / g.h(), r)) {
        throw std::invalid_argument("slant transform is not grid-aligned (k t / h not integral)");
      }
      shift[k][a] = static_cast<int>(r);
      smin[a] = k == 0 ? shift[k][a] : std::min(smin[a], shift[k][a]);
      smax[a] = k == 0 ? shift[k][a] : std::max(smax[a], shift[k][a]);
    }
  }

  SpaceTimeBox nb = g.bounds();
  std::array<int, 2> n{g.nx(0), g.nx(1)};
  for (int a = 0; a < dim; ++a) {
    nb.lo[a] = g.bounds().lo[a] - smax[a] * g.h();
    nb.hi[a] = g.bounds().hi[a] - smin[a] * g.h();
    n[a] = g.nx(a) + smax[a] - smin[a];
  }
  const std::size_t total = static_cast<std::size_t>(n[0]) * n[1] * g.nt();
  std::vector<std::uint8_t> active(total, 0);
  std::vector<double> values(total, 0.0);
  for (std::size_t node = 0; node < g.size(); ++node) {
    if (!g.active(node)) continue;
    const auto [i, j, k] = g.coords(node);
    const int ii = i - shift[k][0] + smax[0];
    const int jj = dim == 2 ? j - shift[k][1] + smax[1] : 0;
    const std::size_t target = (static_cast<std::size_t>(k) * n[1] + jj) * n[0] + ii;
    active[target] = 1;
    values[target] = u.values[node];
  }
  auto grid = std::make_shared<const SpaceTimeGrid>(
      classify_nodes(SpaceTimeGrid::unclassified(nb, g.h(), g.tau(), std::move(active))));
  return {GridFunction(grid, std::move(values)), slope};
}

SpaceTimeGrid::Footprint slanted_cylinder(const Point& anchor, double r) {
  if (anchor.t <= 0.0) throw std::invalid_argument("slanted cylinder needs s > 0");
  if (!(r > 0.0)) throw std::invalid_argument("slanted cylinder radius must be positive");
  return [anchor, r](const Point& p) {
    const double s = anchor.t;
    if (p.t < -1e-12 * s || p.t > s * (1.0 + 1e-12)) return false;
    double d2 = 0.0;
    for (int i = 0; i < p.dim; ++i) {
      const double c = p.x[i] - (p.t / s) * anchor.x[i];
      d2 += c * c;
    }
    return std::sqrt(d2) <= r * (1.0 + 1e-12);
  };
}

double parabolic_inradius(const Point& x, const ParabolicCylinder& q) {
  if (!q.contains_closure(x)) throw std::invalid_argument("point lies outside the cylinder closure");
  const double spatial = q.radius - space_distance(x, q.anchor());
  const double temporal = std::sqrt(std::max(0.0, x.t - q.bottom()));
  return std::max(0.0, std::min(spatial, temporal));
}

HarnackCylinders harnack_cylinders(const Point& anchor, double r) {
  if (!(r > 0.0)) throw std::invalid_argument("Harnack radius must be positive");
  const double s = anchor.t;
  return HarnackCylinders{
      ParabolicCylinder::make(anchor, 2.0 * r),
      ParabolicCylinder::make(anchor, r),
      ParabolicCylinder::make(Point::make(anchor.dim, anchor.x, s - 2.0 * r * r), r),
      ParabolicCylinder::make(Point::make(anchor.dim, anchor.x, s - 0.75 * r * r), 0.5 * r),
  };
}

HarnackCylinders rescale(const HarnackCylinders& c, double k) {
  return {rescale(c.outer, k), rescale(c.inner, k), rescale(c.lower, k), rescale(c.growth_base, k)};
}

}  // namespace hlab
