#include "harnack_lab/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace hlab {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Rng::Rng(std::uint64_t seed, std::uint64_t stream)
    : engine_(splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632be59bd9b4e019ULL))) {}

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

int Rng::integer(int lo, int hi) {
  const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
  return lo + static_cast<int>(engine_() % span);
}

const char* to_string(DriftFamily f) {
  switch (f) {
    case DriftFamily::zero: return "zero";
    case DriftFamily::constant: return "constant";
    case DriftFamily::piecewise: return "piecewise-random";
    case DriftFamily::critical: return "critical";
    case DriftFamily::counterexample: return "counterexample";
  }
  return "?";
}

DriftFamily parse_drift_family(const std::string& s) {
  if (s == "zero" || s == "none") return DriftFamily::zero;
  if (s == "constant") return DriftFamily::constant;
  if (s == "piecewise-random" || s == "piecewise") return DriftFamily::piecewise;
  if (s == "critical" || s == "pullback") return DriftFamily::critical;
  if (s == "counterexample") return DriftFamily::counterexample;
  throw std::invalid_argument("unknown drift family '" + s + "'");
}

double SmoothRandom::operator()(const Point& p) const {
  const double lx = std::max(box.hi[0] - box.lo[0], 1e-300);
  const double ly = std::max(box.hi[1] - box.lo[1], 1e-300);
  const double lt = std::max(box.t1 - box.t0, 1e-300);
  const double ux = (p.x[0] - box.lo[0]) / lx;
  const double uy = p.dim == 2 ? (p.x[1] - box.lo[1]) / ly : 0.0;
  const double ut = (p.t - box.t0) / lt;
  double v = offset;
  for (std::size_t m = 0; m < amp.size(); ++m) {
    double term = amp[m] * std::cos(std::numbers::pi * freq[m][0] * ux + phase[m][0]);
    if (p.dim == 2) term *= std::cos(std::numbers::pi * freq[m][1] * uy + phase[m][1]);
    term *= std::cos(std::numbers::pi * freq[m][2] * ut + phase[m][2]);
    v += term;
  }
  return v;
}

SmoothRandom SmoothRandom::draw(Rng& rng, const SpaceTimeBox& box, int modes, double offset, double amplitude) {
  SmoothRandom f;
  f.box = box;
  f.offset = offset;
  std::vector<double> raw;
  double total = 0.0;
  for (int m = 0; m < modes; ++m) {
    const double w = rng.uniform(0.2, 1.0) / (m + 1);
    raw.push_back(w);
    total += w;
    f.freq.push_back({static_cast<double>(rng.integer(0, 3)), static_cast<double>(rng.integer(0, 3)),
                      static_cast<double>(rng.integer(0, 2))});
    f.phase.push_back({rng.uniform(0.0, 2.0 * std::numbers::pi), rng.uniform(0.0, 2.0 * std::numbers::pi),
                       rng.uniform(0.0, 2.0 * std::numbers::pi)});
  }
  for (double w : raw) f.amp.push_back(total > 0.0 ? amplitude * w / total : 0.0);
  return f;
}

namespace {

int cell_of(double v, double lo, double hi, int cells) {
  if (!(hi > lo)) return 0;
  const int c = static_cast<int>(std::floor((v - lo) / (hi - lo) * cells));
  return std::clamp(c, 0, cells - 1);
}

}  // namespace

DiffusionField random_diffusion(Rng& rng, const SpaceTimeBox& box, int cells, double lo, double hi,
                                double cross_ratio) {
  const int dim = box.dim;
  const int ny = dim == 2 ? cells : 1;
  std::vector<Matrix2> vals;
  for (int c = 0; c < cells * ny * cells; ++c) {
    Matrix2 m{{{rng.uniform(lo, hi), 0.0}, {0.0, 0.0}}};
    if (dim == 2) {
      m[1][1] = rng.uniform(lo, hi);
      const double a12 = rng.uniform(-cross_ratio, cross_ratio) * std::min(m[0][0], m[1][1]);
      m[0][1] = m[1][0] = a12;
    }
    vals.push_back(m);
  }
  DiffusionField f;
  f.dim = dim;
  f.name = "piecewise-random";
  f.eval = [vals, box, cells, ny, dim](const Point& p) {
    const int i = cell_of(p.x[0], box.lo[0], box.hi[0], cells);
    const int j = dim == 2 ? cell_of(p.x[1], box.lo[1], box.hi[1], cells) : 0;
    const int k = cell_of(p.t, box.t0, box.t1, cells);
    return vals[(static_cast<std::size_t>(k) * ny + j) * cells + i];
  };
  return f;
}

DriftField random_piecewise_drift(Rng& rng, const SpaceTimeBox& box, int cells, double bound) {
  const int dim = box.dim;
  const int ny = dim == 2 ? cells : 1;
  std::vector<SpaceVec> vals;
  for (int c = 0; c < cells * ny * cells; ++c) {
    vals.push_back({rng.uniform(-bound, bound), dim == 2 ? rng.uniform(-bound, bound) : 0.0});
  }
  DriftField f;
  f.dim = dim;
  f.name = "piecewise-random";
  f.eval = [vals, box, cells, ny, dim](const Point& p) {
    const int i = cell_of(p.x[0], box.lo[0], box.hi[0], cells);
    const int j = dim == 2 ? cell_of(p.x[1], box.lo[1], box.hi[1], cells) : 0;
    const int k = cell_of(p.t, box.t0, box.t1, cells);
    return vals[(static_cast<std::size_t>(k) * ny + j) * cells + i];
  };
  return f;
}

SpaceTimeGrid certification_grid(const SpaceTimeBox& box, int cells) {
  SpaceTimeBox b = box;
  const double h = (box.hi[0] - box.lo[0]) / cells;
  if (box.dim == 2) {
    const int ny = std::max(2, static_cast<int>(std::ceil((box.hi[1] - box.lo[1]) / h - 1e-9)));
    b.hi[1] = b.lo[1] + ny * h;
  }
  const double tau = (box.t1 - box.t0) / cells;
  return SpaceTimeGrid::unclassified(b, h, tau, {});
}

double region_max_radius(const MorreyRegion& r) {
  if (r.is_cylinder) return r.cylinder.radius;
  double half = 0.5 * (r.box.hi[0] - r.box.lo[0]);
  if (r.box.dim == 2) half = std::min(half, 0.5 * (r.box.hi[1] - r.box.lo[1]));
  return std::min(half, std::sqrt(r.box.t1 - r.box.t0));
}

namespace {

double measure_S(const DriftField& b, const EnsembleSpec& spec, double R) {
  MorreyOptions opt = spec.morrey;
  opt.exec = Exec::serial;
  return morrey_norm(b, spec.region, MorreyParams::critical(spec.n), dyadic_scales(R, spec.scale_count), opt).S;
}

Instance make_instance(const EnsembleSpec& spec, int id) {
  Instance inst;
  inst.id = id;
  inst.seed = spec.seed;
  inst.n = spec.n;
  Rng rng(spec.seed, static_cast<std::uint64_t>(id));
  const SpaceTimeBox box = spec.region.bounds();
  const int n = spec.n;

  if (spec.diffusion_lo == 1.0 && spec.diffusion_hi == 1.0) {
    inst.a = DiffusionField::identity(n);
  } else {
    inst.a = random_diffusion(rng, box, spec.coarse_cells, spec.diffusion_lo, spec.diffusion_hi, spec.cross_ratio);
  }
  inst.a = certified(inst.a, certification_grid(box, 4 * spec.coarse_cells));
  inst.nu = inst.a.nu;

  const double R = region_max_radius(spec.region);
  const double target = spec.target_S;
  auto calibrate = [&](DriftField raw) {
    const double s0 = measure_S(raw, spec, R);
    if (target > 0.0 && s0 > 0.0 && std::isfinite(s0)) {
      raw = raw.scaled(std::pow(target / s0, 1.0 / (n + 1.0)));
    }
    return raw;
  };
  switch (spec.drift) {
    case DriftFamily::zero:
      inst.b = DriftField::zero(n);
      break;
    case DriftFamily::constant: {
      double dir[2] = {1.0, 0.0};
      if (n == 2) {
        const double th = rng.uniform(0.0, 2.0 * std::numbers::pi);
        dir[0] = std::cos(th);
        dir[1] = std::sin(th);
      } else if (rng.uniform() < 0.5) {
        dir[0] = -1.0;
      }
      double c = spec.drift_bound * rng.uniform(0.5, 1.0);
      if (target > 0.0) {
        // S = 2 c^2 R^2 (n = 1), pi c^3 R^3 (n = 2) for a constant drift on Q_R.
        c = n == 1 ? std::sqrt(target / (2.0 * R * R)) : std::cbrt(target / (std::numbers::pi * R * R * R));
      }
      inst.b = DriftField::constant(n, {c * dir[0], c * dir[1]});
      break;
    }
    case DriftFamily::piecewise:
      inst.b = calibrate(random_piecewise_drift(rng, box, spec.coarse_cells, spec.drift_bound));
      break;
    case DriftFamily::critical: {
      SpaceVec dir{1.0, 0.0};
      if (n == 2) {
        const double th = rng.uniform(0.0, 2.0 * std::numbers::pi);
        dir = {std::cos(th), std::sin(th)};
      }
      const double theta = rng.uniform(0.0, 0.5);
      const double omega = rng.uniform(1.0, 4.0);
      inst.b = calibrate(pullback_drift(n, spec.drift_bound, theta, omega, dir));
      break;
    }
    case DriftFamily::counterexample:
      if (n != 1) throw std::invalid_argument("counterexample drift family exists only for n = 1");
      inst.b = counterexample_drift(5.0 / 12.0, 2.0 / 3.0).canonical;
      break;
  }
  inst.S = measure_S(inst.b, spec, R);
  if (target > 0.0 && (!std::isfinite(inst.S) || std::abs(inst.S - target) > 0.1 * target)) {
    inst.warnings.push_back("target S unreachable by family " + std::string(to_string(spec.drift)) +
                            "; using S = " + std::to_string(inst.S));
  }
  inst.positive_data = SmoothRandom::draw(rng, box, spec.data_modes, 1.0, 0.95);
  inst.signed_data = SmoothRandom::draw(rng, box, spec.data_modes, 0.0, 1.0);
  return inst;
}

}  // namespace

std::vector<Instance> generate_instances(const EnsembleSpec& spec, Exec exec) {
  if (spec.count < 0) throw std::invalid_argument("ensemble count must be nonnegative");
  if (spec.region.dim() != spec.n) throw std::invalid_argument("ensemble region dimension mismatch");
  std::vector<Instance> out(static_cast<std::size_t>(spec.count));
  const int count = spec.count;
  if (exec == Exec::parallel) {
    std::vector<std::string> errors(out.size());
#pragma omp parallel for schedule(dynamic) num_threads(thread_count())
    for (int i = 0; i < count; ++i) {
      try {
        out[i] = make_instance(spec, i);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
    for (const auto& e : errors) {
      if (!e.empty()) throw std::invalid_argument(e);
    }
  } else {
    for (int i = 0; i < count; ++i) out[i] = make_instance(spec, i);
  }
  return out;
}

}  // namespace hlab
