// Serial reference vs OpenMP kernels. Arg 0 = serial, 1 = parallel.
// Worker count follows HARNACK_LAB_THREADS.

#include <benchmark/benchmark.h>

#include <memory>

#include "harnack_lab/experiments.hpp"

using namespace hlab;

namespace {

Exec exec_of(const benchmark::State& st) { return st.range(0) ? Exec::parallel : Exec::serial; }

void label(benchmark::State& st) { st.SetLabel(st.range(0) ? "parallel x" + std::to_string(thread_count()) : "serial"); }

void BM_MorreySweep(benchmark::State& st) {
  MorreyOptions opt;
  opt.use_closed_form = false;
  opt.exec = exec_of(st);
  const auto b = pullback_drift(2, 1.0, 0.3, 2.0, {1.0, 0.0});
  const auto region = MorreyRegion::of(ParabolicCylinder::make(Point::make(2, {0.0, 0.0}, 0.0), 1.0));
  for (auto _ : st) {
    benchmark::DoNotOptimize(morrey_norm(b, region, MorreyParams::critical(2), dyadic_scales(0.5, 4), opt).S);
  }
  label(st);
}

std::vector<Instance> ensemble(int count) {
  EnsembleSpec s;
  s.seed = 11;
  s.count = count;
  s.diffusion_lo = 0.5;
  s.diffusion_hi = 2.0;
  s.drift = DriftFamily::critical;
  s.target_S = 1.0;
  return generate_instances(s);
}

void BM_AbpEnsemble(benchmark::State& st) {
  const auto ens = ensemble(16);
  AbpSetup s;
  s.h = 1.0 / 16;
  s.tau = 1.0 / 256;
  EstimatorOptions opt;
  opt.exec = exec_of(st);
  for (auto _ : st) benchmark::DoNotOptimize(abp_constant(ens, s, opt).value);
  label(st);
}

void BM_HarnackEnsemble(benchmark::State& st) {
  const auto ens = ensemble(16);
  HarnackSetup s;
  s.h = 1.0 / 16;
  s.tau = 1.0 / 256;
  EstimatorOptions opt;
  opt.exec = exec_of(st);
  for (auto _ : st) benchmark::DoNotOptimize(harnack_constant(ens, s, opt).N.value);
  label(st);
}

void BM_GreenSlices(benchmark::State& st) {
  SpaceTimeBox box;
  box.lo = {-1.0, 0.0};
  box.hi = {1.0, 0.0};
  box.t1 = 0.5;
  auto g = std::make_shared<const SpaceTimeGrid>(SpaceTimeGrid::box(box, 1.0 / 64, 1.0 / 1024));
  const auto op = assemble(certified(DiffusionField::identity(1), *g), DriftField::constant(1, {1.0, 0.0}), g);
  std::vector<Point> anchors;
  for (int i = -3; i <= 3; ++i) anchors.push_back(Point::at(0.25 * i, 0.5));
  for (auto _ : st) benchmark::DoNotOptimize(green_slices(op, anchors, exec_of(st)).size());
  label(st);
}

}  // namespace

BENCHMARK(BM_MorreySweep)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_AbpEnsemble)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_HarnackEnsemble)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GreenSlices)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
