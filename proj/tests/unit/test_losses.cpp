#include "doctest_torch.hpp"

#include <cmath>

#include <torch/torch.h>

#include "mtaoiqa/losses.hpp"

using namespace mtaoiqa;

TEST_SUITE("losses") {

TEST_CASE("main loss") {
  const auto t = torch::tensor({1.0, 2.0, 3.0}, torch::kFloat64);
  CHECK(loss_main(t, t).item<double>() == 0.0);
  CHECK(loss_main(torch::tensor({2.0}), torch::tensor({0.0})).item<double>() == 4.0);
  const auto p = torch::tensor({1.5, 1.0, 4.0}, torch::kFloat64);
  const double base = loss_main(p, t).item<double>();
  CHECK(loss_main(t + 2.0 * (p - t), t).item<double>() == doctest::Approx(4.0 * base).epsilon(1e-14));
  CHECK_THROWS_AS(loss_main(torch::zeros({0}), torch::zeros({0})), std::invalid_argument);
}

TEST_CASE("auxiliary cross entropy") {
  const auto onehot = torch::tensor({{0.0, 1.0, 0.0, 0.0}}, torch::kFloat64);
  CHECK(loss_aux(onehot, torch::tensor({int64_t{1}})).item<double>() == 0.0);
  const auto uniform = torch::full({1, 4}, 0.25, torch::kFloat64);
  for (int64_t label = 0; label < 4; ++label) {
    CHECK(std::abs(loss_aux(uniform, torch::tensor({label})).item<double>() - std::log(4.0)) < 1e-12);
  }
  double prev = -1.0;
  for (double p : {0.9, 0.6, 0.3, 0.1}) {
    const auto probs = torch::tensor({{p, 1.0 - p}}, torch::kFloat64);
    const double l = loss_aux(probs, torch::tensor({int64_t{0}})).item<double>();
    CHECK(l > prev);
    prev = l;
  }
}

TEST_CASE("zero probability is clamped and counted") {
  const auto before = aux_clamp_count();
  const auto probs = torch::tensor({{1.0, 0.0}}, torch::kFloat64);
  const double l = loss_aux(probs, torch::tensor({int64_t{1}})).item<double>();
  CHECK(l == doctest::Approx(-std::log(1e-12)));
  CHECK(aux_clamp_count() == before + 1);
}

TEST_CASE("rows without a label are skipped") {
  const auto probs = torch::tensor({{0.5, 0.5}, {0.9, 0.1}}, torch::kFloat64);
  CHECK(loss_aux(probs, torch::tensor({int64_t{-1}, int64_t{0}})).item<double>() ==
        doctest::Approx(-std::log(0.9)));
  CHECK_FALSE(loss_aux(probs, torch::tensor({int64_t{-1}, int64_t{-1}})).defined());
}

TEST_CASE("uncertainty-weighted total") {
  const auto losses = std::vector<torch::Tensor>{torch::tensor(2.0, torch::kFloat64), torch::tensor(0.6, torch::kFloat64)};
  CHECK(loss_total(losses, torch::zeros({2}, torch::kFloat64)).item<double>() == doctest::Approx(1.3));
  CHECK(loss_total({torch::tensor(2.0, torch::kFloat64)}, torch::zeros({1}, torch::kFloat64)).item<double>() == 1.0);
  const double ls = 0.37;
  const double l = 1.7;
  const double expected = l / (2.0 * std::exp(2 * ls)) + ls;
  CHECK(loss_total({torch::tensor(l, torch::kFloat64)}, torch::tensor({ls}, torch::kFloat64)).item<double>() ==
        doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("gradient in sigma matches finite differences and vanishes at sigma^2 = L") {
  const double l = 0.8;
  auto ls = torch::tensor({0.2}, torch::kFloat64).requires_grad_(true);
  loss_total({torch::tensor(l, torch::kFloat64)}, ls).backward();
  const double sigma = std::exp(0.2);
  // d/dsigma = -L/sigma^3 + 1/sigma; chain rule through sigma = exp(log_sigma).
  const double closed = (-l / std::pow(sigma, 3) + 1.0 / sigma) * sigma;
  auto total = [&](double s) { return l / (2.0 * std::exp(2.0 * s)) + s; };
  const double h = 1e-6;
  const double fd = (total(0.2 + h) - total(0.2 - h)) / (2 * h);
  CHECK(ls.grad().item<double>() == doctest::Approx(closed).epsilon(1e-12));
  CHECK(std::abs(fd - closed) / std::abs(closed) < 1e-4);
  auto at_opt = torch::tensor({0.5 * std::log(l)}, torch::kFloat64).requires_grad_(true);
  loss_total({torch::tensor(l, torch::kFloat64)}, at_opt).backward();
  CHECK(std::abs(at_opt.grad().item<double>()) < 1e-12);
}

TEST_CASE("uncertainty weights module") {
  UncertaintyWeights uw(3);
  CHECK(uw->terms() == 3);
  CHECK(torch::equal(uw->sigmas(), torch::ones({3})));
  CHECK_THROWS_AS(uw->forward({torch::tensor(1.0)}), std::invalid_argument);
}

}  // TEST_SUITE
