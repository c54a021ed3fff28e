// Chapman–Kolmogorov step: OpenMP gather against the serial scatter, plus
// the block form and the band construction.

#include <benchmark/benchmark.h>

#include <cmath>

#include "medge/kernels.hpp"

using namespace medge;

namespace {

BandKernel make_band(int size, double var) {
  auto g = SpaceGrid::from_bounds(-8, 8, size);
  const int half = static_cast<int>(std::ceil(10.0 * std::sqrt(var) / g.dx));
  return build_band_kernel(
      g, half,
      [&](double z, double y) {
        const double u = y - z - 0.01 * std::sin(z);
        return std::exp(-0.5 * u * u / var) / std::sqrt(2 * M_PI * var);
      },
      true);
}

Vec bump(int size) {
  Vec v(size);
  for (int i = 0; i < size; ++i) v[i] = std::exp(-0.5 * std::pow((i - size / 2.0) / (size / 16.0), 2));
  return v;
}

void BM_PropagateOmp(benchmark::State& state) {
  const int size = static_cast<int>(state.range(0));
  auto k = make_band(size, 1.0 / 256);
  Vec in = bump(size), out(size);
  for (auto _ : state) {
    propagate(k, in.data(), out.data());
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * size * k.width());
}

void BM_PropagateSerial(benchmark::State& state) {
  const int size = static_cast<int>(state.range(0));
  auto k = make_band(size, 1.0 / 256);
  Vec in = bump(size), out(size);
  for (auto _ : state) {
    propagate_serial(k, in.data(), out.data());
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * size * k.width());
}

void BM_PropagateBlock(benchmark::State& state) {
  const int size = static_cast<int>(state.range(0));
  auto k = make_band(size, 1.0 / 256);
  Mat in(size, 15), out;
  for (int c = 0; c < 15; ++c) in.col(c) = bump(size);
  for (auto _ : state) {
    propagate_block(k, in, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * 15 * size * k.width());
}

void BM_BuildBand(benchmark::State& state) {
  const int size = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(make_band(size, 1.0 / 256).w.data());
}

}  // namespace

BENCHMARK(BM_PropagateOmp)->Arg(1121)->Arg(4481)->Arg(17921);
BENCHMARK(BM_PropagateSerial)->Arg(1121)->Arg(4481)->Arg(17921);
BENCHMARK(BM_PropagateBlock)->Arg(1121)->Arg(4481);
BENCHMARK(BM_BuildBand)->Arg(1121)->Arg(4481);

BENCHMARK_MAIN();
