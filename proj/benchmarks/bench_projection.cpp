#include <benchmark/benchmark.h>

#include "mtaoiqa/distortion.hpp"
#include "mtaoiqa/projection.hpp"

using namespace mtaoiqa;

static void BM_RenderViewport(benchmark::State& state) {
  const auto pano = procedural_panorama(3, 512);
  const int size = static_cast<int>(state.range(0));
  for (auto _ : state) {
    auto vp = render_viewport(pano, {0.3, 0.1}, kDefaultFov, size);
    benchmark::DoNotOptimize(vp);
  }
  state.SetItemsProcessed(state.iterations() * size * size);
}
BENCHMARK(BM_RenderViewport)->Arg(64)->Arg(224)->Unit(benchmark::kMillisecond);

static void BM_EquatorialSample(benchmark::State& state) {
  const auto pano = procedural_panorama(3, 512);
  for (auto _ : state) {
    auto seq = equatorial_sample(pano, 8, kDefaultFov, 224);
    benchmark::DoNotOptimize(seq.pixels.data());
  }
}
BENCHMARK(BM_EquatorialSample)->Unit(benchmark::kMillisecond);

static void BM_ApplyDistortion(benchmark::State& state) {
  const auto pano = procedural_panorama(3, 256);
  DistortionSpec spec;
  spec.type = static_cast<DistortionType>(state.range(0));
  spec.level = 2;
  spec.global = true;
  for (auto _ : state) {
    auto out = apply_distortion(pano, spec, 17);
    benchmark::DoNotOptimize(out);
  }
}
BENCHMARK(BM_ApplyDistortion)->DenseRange(0, 3)->Unit(benchmark::kMillisecond);
