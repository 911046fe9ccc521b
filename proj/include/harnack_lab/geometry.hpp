#pragma once

// Parabolic cylinders, space-time lattices and their parabolic-boundary
// classification, parabolic rescaling, slanted-cylinder maps and discrete
// measure.

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

namespace hlab {

using SpaceVec = std::array<double, 2>;

/// Space-time point X = (x, t) with x in R^n, n in {1, 2}.
struct Point {
  int dim = 1;
  SpaceVec x{0.0, 0.0};
  double t = 0.0;

  static Point make(int dim, SpaceVec x, double t);
  static Point at(double x, double t) { return make(1, {x, 0.0}, t); }
  static Point at(double x, double y, double t) { return make(2, {x, y}, t); }

  bool operator==(const Point&) const = default;
};

double space_distance(const Point& a, const Point& b);

/// Q_r(Y) = B_r(y) x (s - r^2, s), anchored at its top-center Y = (y, s).
struct ParabolicCylinder {
  int dim = 1;
  SpaceVec center{0.0, 0.0};
  double top = 0.0;
  double radius = 1.0;

  static ParabolicCylinder make(const Point& anchor, double radius);

  double bottom() const { return top - radius * radius; }
  Point anchor() const { return Point::make(dim, center, top); }
  double volume() const;
  bool contains(const Point& p) const;
  bool contains_closure(const Point& p, double slack = 1e-12) const;
  bool contains_closure(const ParabolicCylinder& inner, double slack = 1e-12) const;

  bool operator==(const ParabolicCylinder&) const = default;
};

/// Axis-aligned space-time box [lo, hi] x [t0, t1].
struct SpaceTimeBox {
  int dim = 1;
  SpaceVec lo{0.0, 0.0};
  SpaceVec hi{0.0, 0.0};
  double t0 = 0.0;
  double t1 = 0.0;

  static SpaceTimeBox bounding(const ParabolicCylinder& q);
  bool contains_closure(const ParabolicCylinder& q, double slack = 1e-12) const;
  double volume() const;
};

enum class NodeClass : std::uint8_t { exterior, interior, lateral, bottom, top };

const char* to_string(NodeClass c);

/// Uniform lattice over a bounding space-time box, with an optional footprint
/// mask. Active nodes are classified into interior / lateral / bottom / top;
/// lateral and bottom nodes form the discrete parabolic boundary. Top nodes
/// (last level, off the lateral wall) are unknowns like interior nodes.
class SpaceTimeGrid {
 public:
  using Footprint = std::function<bool(const Point&)>;

  /// Full box; every node is active.
  static SpaceTimeGrid box(const SpaceTimeBox& bounds, double h, double tau);
  /// Staircase discretization of Q_r(Y) by masking its bounding box.
  static SpaceTimeGrid cylinder(const ParabolicCylinder& q, double h, double tau);
  /// Arbitrary footprint inside `bounds` (closed membership test).
  static SpaceTimeGrid masked(const SpaceTimeBox& bounds, double h, double tau,
                              const Footprint& inside);
  /// Geometry only: nodes active per `active`, classes unset (all exterior).
  static SpaceTimeGrid unclassified(const SpaceTimeBox& bounds, double h, double tau,
                                    std::vector<std::uint8_t> active);

  int dim() const { return bounds_.dim; }
  int nx(int axis) const { return n_[axis]; }
  int nt() const { return n_[2]; }
  double h() const { return h_; }
  double tau() const { return tau_; }
  const SpaceTimeBox& bounds() const { return bounds_; }
  std::size_t size() const { return classes_.size(); }
  bool classified() const { return classified_; }

  std::size_t index(int i, int j, int k) const {
    return (static_cast<std::size_t>(k) * n_[1] + j) * n_[0] + i;
  }
  std::array<int, 3> coords(std::size_t node) const;
  double coord(int axis, int i) const { return bounds_.lo[axis] + i * h_; }
  double time(int k) const { return bounds_.t0 + k * tau_; }
  Point point(std::size_t node) const;
  /// Index of the lattice node at `p`, if `p` lies on the lattice (within 1e-9 of a step).
  std::optional<std::size_t> locate(const Point& p) const;

  NodeClass node_class(std::size_t node) const { return classes_[node]; }
  bool active(std::size_t node) const { return active_[node] != 0; }
  bool on_parabolic_boundary(std::size_t node) const {
    auto c = classes_[node];
    return c == NodeClass::lateral || c == NodeClass::bottom;
  }
  /// Interior or top: nodes whose values come out of a solve.
  bool unknown(std::size_t node) const {
    auto c = classes_[node];
    return c == NodeClass::interior || c == NodeClass::top;
  }
  /// Trapezoid weight h^n tau, halved per axis on the bounding-box faces; 0 off the footprint.
  double weight(std::size_t node) const;
  const std::vector<std::uint8_t>& active_mask() const { return active_; }
  const std::vector<NodeClass>& classes() const { return classes_; }

  /// Parabolic rescaling x -> x/k, t -> t/k^2 with the same node layout.
  SpaceTimeGrid rescaled(double k) const;

 private:
  friend SpaceTimeGrid classify_nodes(SpaceTimeGrid grid);
  SpaceTimeGrid() = default;

  SpaceTimeBox bounds_{};
  std::array<int, 3> n_{1, 1, 1};
  double h_ = 0.0;
  double tau_ = 0.0;
  std::vector<std::uint8_t> active_;
  std::vector<NodeClass> classes_;
  bool classified_ = false;
};

using GridPtr = std::shared_ptr<const SpaceTimeGrid>;

/// Tags every active node. A node is lateral when a spatial neighbor (8-neighborhood
/// in 2D) or the node directly below it is off the footprint; the first level is
/// bottom; last-level non-lateral nodes are top.
SpaceTimeGrid classify_nodes(SpaceTimeGrid grid);

/// Real values on grid nodes.
struct GridFunction {
  GridPtr grid;
  std::vector<double> values;

  GridFunction() = default;
  GridFunction(GridPtr g, double fill = 0.0);
  GridFunction(GridPtr g, std::vector<double> v);

  static GridFunction sample(GridPtr g, const std::function<double(const Point&)>& f);

  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }
  std::size_t size() const { return values.size(); }
};

/// Multilinear interpolation on the bounding lattice; inactive corners are ignored
/// (weights renormalized). Throws when `p` is outside the bounding box.
double interpolate(const GridFunction& u, const Point& p);
/// Resamples `u` onto `target` by multilinear interpolation (O(h^2) for smooth u).
GridFunction resample(const GridFunction& u, GridPtr target);

/// Membership mask over the nodes of a grid.
struct NodeSet {
  GridPtr grid;
  std::vector<std::uint8_t> mask;

  static NodeSet empty(GridPtr g);
  static NodeSet all(GridPtr g);
  static NodeSet where(GridPtr g, const std::function<bool(std::size_t)>& pred);
  static NodeSet in_cylinder(GridPtr g, const ParabolicCylinder& q);

  NodeSet intersect(const NodeSet& other) const;
  NodeSet unite(const NodeSet& other) const;
  std::size_t count() const;
  bool contains(std::size_t node) const { return mask[node] != 0; }
};

/// Weighted node count (see SpaceTimeGrid::weight); approximates Lebesgue measure.
double measure(const NodeSet& set);

/// (x, t) -> (x / k, t / k^2); the region-side companion of drift_rescale.
Point rescale(const Point& p, double k);
ParabolicCylinder rescale(const ParabolicCylinder& q, double k);
SpaceTimeBox rescale(const SpaceTimeBox& b, double k);
GridFunction rescale(const GridFunction& u, double k);

template <class T>
struct Slanted {
  T value;
  SpaceVec drift_increment{0.0, 0.0};
};

/// w = x - (y/s) t, z = t. The reported increment k = y/s is what an operator on
/// the straightened coordinates adds to its drift.
Slanted<Point> slant_transform(const Point& p, const Point& anchor);
/// Grid-aligned only: every level shift k * t / h must be an integer.
Slanted<GridFunction> slant_transform(const GridFunction& u, const Point& anchor);

/// V_r(Y) = {|x - (t/s) y| < r, 0 < t < s} as a closed membership test.
SpaceTimeGrid::Footprint slanted_cylinder(const Point& anchor, double r);

/// d(X) = sup{rho > 0 : Q_rho(X) in Q}.
double parabolic_inradius(const Point& x, const ParabolicCylinder& q);

struct HarnackCylinders {
  ParabolicCylinder outer;        ///< Q_2r(Y)
  ParabolicCylinder inner;        ///< Q_r(Y)
  ParabolicCylinder lower;        ///< B_r(y) x (s - 3r^2, s - 2r^2)
  ParabolicCylinder growth_base;  ///< Q_{r/2}(y, s - 3r^2/4)
};

HarnackCylinders harnack_cylinders(const Point& anchor, double r);
HarnackCylinders rescale(const HarnackCylinders& c, double k);

}  // namespace hlab
