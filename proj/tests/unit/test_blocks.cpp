#include "doctest_torch.hpp"

#include <torch/torch.h>

#include "mtaoiqa/blocks.hpp"

using namespace mtaoiqa;

TEST_SUITE("blocks") {

TEST_CASE("viewport attention gates") {
  torch::manual_seed(5);
  ViewportAttention va(16);
  auto x = torch::randn({4, 16, 6, 6});
  x[3].copy_(x[1]);
  const auto g = va(x);
  CHECK(g.sizes() == torch::IntArrayRef{4, 1, 1, 1});
  CHECK(g.min().item<float>() > 0.0f);
  CHECK(g.max().item<float>() < 1.0f);
  CHECK(torch::equal(g[1], g[3]));
  const auto perm = torch::tensor({3, 2, 0, 1}, torch::kInt64);
  CHECK(torch::equal(va(x.index_select(0, perm)), g.index_select(0, perm)));
}

TEST_CASE("type attention keeps spatial size for any h, w") {
  torch::manual_seed(6);
  TypeAttention ta(8);
  for (auto [h, w] : {std::pair{1, 1}, std::pair{3, 7}, std::pair{28, 28}}) {
    const auto g = ta(torch::randn({2, 8, h, w}));
    CHECK(g.sizes() == torch::IntArrayRef{2, 1, h, w});
    CHECK(g.min().item<float>() > 0.0f);
    CHECK(g.max().item<float>() < 1.0f);
  }
}

TEST_CASE("type attention maps constant input to a constant interior") {
  torch::manual_seed(7);
  TypeAttention ta(8);
  ta->to(torch::kFloat64);
  const auto x = torch::randn({1, 8, 1, 1}, torch::kFloat64).expand({1, 8, 30, 30}).contiguous();
  const auto g = ta(x);
  const int r = TypeAttentionImpl::kReceptiveRadius;
  const auto interior = g.narrow(2, r, 30 - 2 * r).narrow(3, r, 30 - 2 * r);
  CHECK(torch::allclose(interior, interior[0][0][0][0].expand_as(interior), 0.0, 1e-12));
}

TEST_CASE("degree attention: shape, range, zero input gives one half") {
  torch::manual_seed(8);
  DegreeAttention da(12);
  const auto g = da(torch::randn({3, 12, 5, 5}));
  CHECK(g.sizes() == torch::IntArrayRef{3, 12, 5, 5});
  CHECK(g.min().item<float>() > 0.0f);
  CHECK(g.max().item<float>() < 1.0f);
  const auto z = da(torch::zeros({2, 12, 4, 4}));
  CHECK(torch::equal(z, torch::full_like(z, 0.5)));
}

}  // TEST_SUITE
