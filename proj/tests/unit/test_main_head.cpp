#include "doctest_torch.hpp"

#include <torch/torch.h>

#include "mtaoiqa/main_head.hpp"
#include "mtaoiqa/model.hpp"

using namespace mtaoiqa;

namespace {

MainHeadConfig small_config(TaskSet tasks = TaskSet::all()) {
  MainHeadConfig cfg;
  cfg.tasks = tasks;
  cfg.views = 8;
  cfg.channels = 16;
  cfg.mdi_repeats = 2;
  return cfg;
}

AuxOutputs random_aux(int n, const TaskSet& tasks, torch::Dtype dtype = torch::kFloat32) {
  AuxOutputs aux;
  const auto opts = torch::TensorOptions().dtype(dtype);
  if (tasks.range) aux.range = torch::softmax(torch::randn({n, 2}, opts), 1);
  if (tasks.type) aux.type = torch::softmax(torch::randn({n, 4}, opts), 1);
  if (tasks.degree) aux.degree = torch::softmax(torch::randn({n, 3}, opts), 1);
  return aux;
}

}  // namespace

TEST_SUITE("main_head") {

TEST_CASE("MDI on zero input is determined by the degree path") {
  torch::manual_seed(20);
  MdiBlock mdi(6, false);
  const auto out = mdi(torch::zeros({2, 6, 4, 4}));
  const auto w = (*mdi->named_parameters().find("fuse.weight")).squeeze(-1).squeeze(-1);  // 6 x 18
  const auto expected = 0.5 * w.narrow(1, 12, 6).sum(1);
  for (int o = 0; o < 6; ++o) {
    CHECK(torch::allclose(out.select(1, o), torch::full({2, 4, 4}, expected[o].item<float>()), 1e-6, 1e-7));
  }
}

TEST_CASE("MDI stack preserves shape and is viewport-equivariant") {
  torch::manual_seed(21);
  MainHead head(small_config());
  const auto x = torch::randn({8, 16, 5, 5});
  const auto perm = torch::randperm(8, torch::kInt64);
  const auto a = head->run_mdi_stack(x);
  CHECK(a.sizes() == x.sizes());
  CHECK(torch::equal(a.index_select(0, perm), head->run_mdi_stack(x.index_select(0, perm))));
}

TEST_CASE("main embedding width and zero input") {
  torch::manual_seed(22);
  MainHead head(small_config());
  const auto f = head->embed_main(torch::randn({16, 16, 3, 3}));
  CHECK(f.sizes() == torch::IntArrayRef{2, 16});
  CHECK(head->embed_main(torch::zeros({8, 16, 3, 3})).abs().max().item<float>() == 0.0f);
}

TEST_CASE("semantic feature width and sensitivity") {
  torch::manual_seed(23);
  MainHead head(small_config());
  AuxOutputs uniform, onehot;
  uniform.range = torch::full({1, 2}, 0.5);
  uniform.type = torch::full({1, 4}, 0.25);
  uniform.degree = torch::full({1, 3}, 1.0 / 3.0);
  onehot.range = torch::tensor({{1.0f, 0.0f}});
  onehot.type = torch::tensor({{0.0f, 0.0f, 1.0f, 0.0f}});
  onehot.degree = torch::tensor({{0.0f, 1.0f, 0.0f}});
  const auto a = head->embed_semantics(uniform);
  CHECK(a.sizes() == torch::IntArrayRef{1, 16});
  CHECK_FALSE(torch::allclose(a, head->embed_semantics(onehot)));
}

TEST_CASE("single-token attention reduces to the key projection") {
  torch::manual_seed(24);
  MainHead head(small_config());
  const auto f = torch::randn({3, 16});
  const auto c = torch::randn({3, 16});
  const auto out = head->maf_fuse(f, c);
  const auto expected = torch::cat({torch::matmul(f, head->cross_attention(0)->key_weight().t()),
                                    torch::matmul(c, head->cross_attention(1)->key_weight().t()),
                                    torch::matmul(c, head->cross_attention(2)->key_weight().t())}, 1);
  CHECK(torch::allclose(out.concatenated, expected, 1e-6, 1e-6));
  for (const auto& w : out.attention_weights) {
    CHECK(torch::allclose(w.sum(-1), torch::ones_like(w.sum(-1)), 0.0, 1e-6));
  }
  CHECK(out.score.sizes() == torch::IntArrayRef{3});
}

TEST_CASE("score responds to the semantic feature") {
  torch::manual_seed(25);
  MainHead head(small_config());
  head->to(torch::kFloat64);
  const auto f = torch::randn({1, 16}, torch::kFloat64);
  auto c = torch::randn({1, 16}, torch::kFloat64).requires_grad_(true);
  const auto s = head->maf_fuse(f, c).score.sum();
  s.backward();
  CHECK(c.grad().abs().max().item<double>() > 0.0);
  const double h = 1e-6;
  auto cp = c.detach().clone();
  cp[0][3] += h;
  const double fd = (head->maf_fuse(f, cp).score.item<double>() - s.item<double>()) / h;
  CHECK(fd == doctest::Approx(c.grad()[0][3].item<double>()).epsilon(1e-4));
}

TEST_CASE("no-aux head: one deterministic score per panorama, no fusion parameters") {
  torch::manual_seed(26);
  MainHead head(small_config(TaskSet::none()));
  CHECK_FALSE(head->fusion_active());
  const auto f = torch::randn({4, 16});
  const auto a = head->predict_no_aux(f);
  CHECK(a.sizes() == torch::IntArrayRef{4});
  CHECK(torch::equal(a, head->predict_no_aux(f)));
  for (const auto& p : head->named_parameters()) {
    CHECK(p.key().rfind("maf", 0) != 0);
    CHECK(p.key().rfind("semantic", 0) != 0);
  }
  CHECK_THROWS_AS(head->embed_semantics(random_aux(1, TaskSet::all())), std::logic_error);
}

TEST_CASE("fusion width check") {
  auto cfg = small_config();
  cfg.views = 4;
  CHECK_THROWS_AS(MainHead{cfg}, std::invalid_argument);
  cfg.project_widths = true;
  MainHead head(cfg);
  const auto out = head->forward(torch::randn({8, 16, 3, 3}), random_aux(2, TaskSet::all()));
  CHECK(out.score.sizes() == torch::IntArrayRef{2});
}

TEST_CASE("MTAOIQA* model has no auxiliary parameters") {
  ModelConfig cfg;
  cfg.tasks = TaskSet::none();
  cfg.viewport_size = 32;
  cfg.channels = 16;
  const auto net = build_model(cfg);
  CHECK(count_auxiliary_parameters(*net) == 0);
  ModelConfig full = cfg;
  full.tasks = TaskSet::all();
  CHECK(count_auxiliary_parameters(*build_model(full)) > 0);
}

}  // TEST_SUITE
