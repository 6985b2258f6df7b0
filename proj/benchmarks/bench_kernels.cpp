// Serial reference kernels vs their OpenMP counterparts.

#include <benchmark/benchmark.h>

#include "malab/sliding.hpp"

using namespace malab;

namespace {

const Potential& pot() {
  static QuadraticPotential u = QuadraticPotential::eccentric(2, 4.0);
  return u;
}

Grid gridFor(int cells) { return Grid::centered(2, 2.2, cells); }

void BM_SectionScanSerial(benchmark::State& state) {
  Grid g = gridFor(int(state.range(0)));
  for (auto _ : state) {
    SectionSet s = sectionScanSerial(pot(), g, Vec(0.1, 0.0), 0.2);
    benchmark::DoNotOptimize(s.member_count);
  }
}

void BM_SectionScanParallel(benchmark::State& state) {
  Grid g = gridFor(int(state.range(0)));
  for (auto _ : state) {
    SectionSet s = sectionScan(pot(), g, Vec(0.1, 0.0), 0.2);
    benchmark::DoNotOptimize(s.member_count);
  }
}

SmoothField benchField() {
  return {[](const Vec& x) { return 0.2 + 0.5 * std::exp(-2.0 * x.norm2()); },
          [](const Vec& x) { return x * (-2.0 * std::exp(-2.0 * x.norm2())); },
          [](const Vec& x) {
            double e = std::exp(-2.0 * x.norm2());
            SymMat h(2);
            for (int i = 0; i < 2; ++i)
              for (int j = i; j < 2; ++j)
                h.set(i, j, e * (4.0 * x[i] * x[j] - (i == j ? 2.0 : 0.0)));
            return h;
          }};
}

void BM_SlideSerial(benchmark::State& state) {
  Grid g = gridFor(int(state.range(0)));
  SectionSet dom = sectionScan(pot(), g, Vec::zero(2), 0.3);
  SmoothField v = benchField();
  SlideOptions opts;
  opts.parallel = false;
  for (auto _ : state) {
    ContactRecord r = slideParaboloid(pot(), v, Vec(0.05, 0.05), 8.0, dom, opts);
    benchmark::DoNotOptimize(r.cell);
  }
}

void BM_SlideParallel(benchmark::State& state) {
  Grid g = gridFor(int(state.range(0)));
  SectionSet dom = sectionScan(pot(), g, Vec::zero(2), 0.3);
  SmoothField v = benchField();
  SlideOptions opts;
  opts.parallel = true;
  for (auto _ : state) {
    ContactRecord r = slideParaboloid(pot(), v, Vec(0.05, 0.05), 8.0, dom, opts);
    benchmark::DoNotOptimize(r.cell);
  }
}

void BM_MeasureRun(benchmark::State& state) {
  Grid g = gridFor(int(state.range(0)));
  auto u = std::make_shared<QuadraticPotential>(QuadraticPotential::round(2));
  SectionSet s4 = sectionScan(*u, g, Vec::zero(2), 1.0);
  auto P = ProblemInstance::plain(u, g, s4);
  SmoothField v = benchField();
  MeasureEstimateParams prm;
  prm.t0 = 0.25;
  prm.alpha1 = 0.0625;
  prm.opening = 12.0;
  prm.vertex_stride = 4;
  for (auto _ : state) {
    auto rep = measureEstimateRun(P, v, prm);
    benchmark::DoNotOptimize(rep.records.size());
  }
}

}  // namespace

BENCHMARK(BM_SectionScanSerial)->Arg(128)->Arg(512);
BENCHMARK(BM_SectionScanParallel)->Arg(128)->Arg(512);
BENCHMARK(BM_SlideSerial)->Arg(192)->Arg(384);
BENCHMARK(BM_SlideParallel)->Arg(192)->Arg(384);
BENCHMARK(BM_MeasureRun)->Arg(160);

BENCHMARK_MAIN();
