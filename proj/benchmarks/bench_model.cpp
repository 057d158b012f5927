#include <benchmark/benchmark.h>

#include "mtaoiqa/model.hpp"

using namespace mtaoiqa;

namespace {

ModelConfig bench_config(BackboneProfile profile, int size) {
  ModelConfig cfg;
  cfg.backbone = BackboneConfig::for_profile(profile);
  cfg.viewport_size = size;
  return cfg;
}

}  // namespace

// range(0): 0 = TINY, 1 = PAPER; range(1): viewport side.
static void BM_ForwardHard(benchmark::State& state) {
  const auto profile = state.range(0) ? BackboneProfile::kPaper : BackboneProfile::kTiny;
  const int size = static_cast<int>(state.range(1));
  auto net = build_model(bench_config(profile, size));
  net->eval();
  torch::NoGradGuard guard;
  const auto x = torch::rand({1, 8, 3, size, size});
  for (auto _ : state) {
    auto o = net->forward(x, SelectionMode::kHard);
    benchmark::DoNotOptimize(o.score.data_ptr());
  }
}
BENCHMARK(BM_ForwardHard)->Args({0, 64})->Args({0, 224})->Args({1, 224})->Unit(benchmark::kMillisecond);

static void BM_TrainStepSoft(benchmark::State& state) {
  const int batch = static_cast<int>(state.range(0));
  auto net = build_model(bench_config(BackboneProfile::kTiny, 64));
  net->train();
  torch::optim::Adam opt(net->parameters(), torch::optim::AdamOptions(1e-4));
  const auto x = torch::rand({batch, 8, 3, 64, 64});
  for (auto _ : state) {
    opt.zero_grad();
    auto o = net->forward(x, SelectionMode::kSoft);
    o.score.sum().backward();
    opt.step();
  }
  state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_TrainStepSoft)->Arg(1)->Arg(8)->Unit(benchmark::kMillisecond);

static void BM_MfsSelect(benchmark::State& state) {
  const auto mode = state.range(0) ? SelectionMode::kSoft : SelectionMode::kHard;
  MfsConfig cfg;
  MultitaskFeatureSelection mfs(cfg);
  mfs->eval();
  torch::NoGradGuard guard;
  const int n = 2;
  const int64_t sides[4] = {28, 14, 7, 7};
  StageFeatures sf;
  for (int s = 0; s < 4; ++s) sf.stages[s] = torch::randn({n * cfg.views, cfg.stage_widths[s], sides[s], sides[s]});
  const auto levels = mfs->fuse(mfs->unify(sf));
  const auto sel = mfs->selection_state(levels);
  for (auto _ : state) {
    auto tasks = mfs->select(levels, sel, mode);
    benchmark::DoNotOptimize(tasks[0].data_ptr());
  }
}
BENCHMARK(BM_MfsSelect)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
