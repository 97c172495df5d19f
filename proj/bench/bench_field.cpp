// Parallel row-segment kernel against the all-pairs serial reference.
#include <benchmark/benchmark.h>

#include <cmath>
#include <memory>

#include "gbq/field_kernel.hpp"

using namespace gbq;

namespace {

struct Fixture {
  FieldSpec fs;
  FanSnapshot snap;
  PointGrid g;
};

Fixture make_fixture(bool two_d, double eps, double h_over_eps) {
  auto s = std::make_shared<const ScenarioPreset>(two_d ? preset_2d(PhaseKind2D::linear)
                                                        : preset_1d(PhaseKind1D::linear, 3.0));
  const Vec y = two_d ? vec({0.25, 1.0}) : vec({1.75});
  auto fan = std::make_shared<const BeamFan>(
      build_fan(*s, y, s->default_time, 0.5 * std::sqrt(eps), {Mode::plus, Mode::minus}));
  Fixture f{make_field_spec(s, fan, eps), {}, {}};
  f.snap = freeze(f.fs, s->default_time, false);
  const Box& b = s->window.support;
  const double h = h_over_eps * eps;
  std::array<int, kMaxDim> counts{1, 1, 1};
  for (int a = 0; a < s->n; ++a) counts[a] = static_cast<int>((b.hi(a) - b.lo(a)) / h) + 1;
  f.g = PointGrid::full(b.lo, Vec::Constant(s->n, h), counts);
  return f;
}

void run(benchmark::State& state, bool two_d, double eps, double h_over_eps, Backend backend) {
  const Fixture f = make_fixture(two_d, eps, h_over_eps);
  const KernelParams kp = kernel_params(f.fs, DerivativeOrder{});
  std::vector<cplx> out(f.g.size());
  for (auto _ : state) {
    if (backend == Backend::omp)
      kernel::field_grid_omp(f.snap, kp, f.g, out.data());
    else
      kernel::field_grid_serial(f.snap, kp, f.g, out.data());
    benchmark::DoNotOptimize(out.data());
  }
  state.counters["points"] = static_cast<double>(f.g.size());
  state.counters["beams"] = static_cast<double>(f.snap.beams.size());
  state.counters["pts/s"] = benchmark::Counter(static_cast<double>(f.g.size()), benchmark::Counter::kIsIterationInvariantRate);
}

void BM_Field1D_Omp(benchmark::State& s) { run(s, false, 1.0 / 160, 1.0 / 8, Backend::omp); }
void BM_Field1D_Serial(benchmark::State& s) { run(s, false, 1.0 / 160, 1.0 / 8, Backend::serial); }
void BM_Field2D_Omp(benchmark::State& s) { run(s, true, 1.0 / 60, 1.0, Backend::omp); }
void BM_Field2D_Serial(benchmark::State& s) { run(s, true, 1.0 / 60, 1.0, Backend::serial); }

}  // namespace

BENCHMARK(BM_Field1D_Omp)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Field1D_Serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Field2D_Omp)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Field2D_Serial)->Unit(benchmark::kMillisecond)->Iterations(1);

BENCHMARK_MAIN();
