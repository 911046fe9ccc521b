#pragma once

// Seeded instance generation: random coefficient fields, drift families
// calibrated to a target Morrey value, and smooth random data.

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "harnack_lab/coefficients.hpp"
#include "harnack_lab/geometry.hpp"
#include "harnack_lab/parallel.hpp"

namespace hlab {

/// Portable stream: mt19937_64 seeded from (seed, stream) through splitmix64, with
/// uniforms built from the top 53 bits (no library distributions, so streams agree
/// across standard libraries).
class Rng {
 public:
  Rng(std::uint64_t seed, std::uint64_t stream);
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  int integer(int lo, int hi);  ///< inclusive range
  std::uint64_t bits() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

enum class DriftFamily { zero, constant, piecewise, critical, counterexample };
const char* to_string(DriftFamily f);
DriftFamily parse_drift_family(const std::string& s);

struct EnsembleSpec {
  std::uint64_t seed = 0;
  int count = 0;
  int n = 1;
  /// Diffusion: a = identity when diffusion_lo == diffusion_hi == 1; otherwise random
  /// piecewise constant with diagonal in [lo, hi] and |a12| <= cross_ratio min(a11, a22).
  double diffusion_lo = 1.0;
  double diffusion_hi = 1.0;
  double cross_ratio = 0.9;
  DriftFamily drift = DriftFamily::zero;
  /// Target Morrey value S (critical parameters). <= 0 keeps the family's raw scale.
  double target_S = 0.0;
  /// Raw amplitude of constant / piecewise drifts before calibration.
  double drift_bound = 1.0;
  /// Coarse cells per axis of the piecewise-constant fields.
  int coarse_cells = 4;
  /// Region where fields are laid out and S is measured.
  MorreyRegion region = MorreyRegion::of(ParabolicCylinder::make(Point::at(0.0, 0.0), 1.0));
  /// Number of dyadic scales (from the largest admissible radius) used to measure S.
  int scale_count = 4;
  MorreyOptions morrey{};
  /// Random data: number of cosine modes per axis.
  int data_modes = 3;
};

/// Smooth random function c0 + sum of cosine modes over the region's bounding box.
struct SmoothRandom {
  double offset = 0.0;
  std::vector<double> amp;
  std::vector<std::array<double, 3>> freq;   // (kx, ky, kt)
  std::vector<std::array<double, 3>> phase;  // per-axis phases
  SpaceTimeBox box{};

  double operator()(const Point& p) const;
  static SmoothRandom draw(Rng& rng, const SpaceTimeBox& box, int modes, double offset, double amplitude);
};

struct Instance {
  int id = 0;
  std::uint64_t seed = 0;
  int n = 1;
  DiffusionField a;
  DriftField b;
  double nu = 1.0;
  /// Measured Morrey value on the ensemble region (critical parameters).
  double S = 0.0;
  /// Smooth data with values in [0.05, 1.95] (positive) and a mixed-sign companion.
  std::function<double(const Point&)> positive_data;
  std::function<double(const Point&)> signed_data;
  std::vector<std::string> warnings;
};

/// Deterministic: instance i depends only on (spec, i), whatever the worker count.
std::vector<Instance> generate_instances(const EnsembleSpec& spec, Exec exec = Exec::parallel);

/// Largest radius with an admissible cylinder at a lattice center of the region.
double region_max_radius(const MorreyRegion& r);

/// Random piecewise-constant fields on a coarse lattice over `box`.
DiffusionField random_diffusion(Rng& rng, const SpaceTimeBox& box, int cells, double lo, double hi,
                                double cross_ratio);
DriftField random_piecewise_drift(Rng& rng, const SpaceTimeBox& box, int cells, double bound);

/// Sample grid for certifying random fields: the region's bounding box at `cells` per axis.
SpaceTimeGrid certification_grid(const SpaceTimeBox& box, int cells);

}  // namespace hlab
