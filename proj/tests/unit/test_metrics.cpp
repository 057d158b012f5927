#include "doctest_torch.hpp"

#include <cmath>
#include <random>

#include <json.hpp>

#include "mtaoiqa/metrics.hpp"

using namespace mtaoiqa;

namespace {

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = a + (b - a) * i / (n - 1);
  return v;
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("logistic fit recovers planted parameters") {
  const LogisticParams truth{5.0, 1.0, 0.0, 1.0};
  const auto pred = linspace(-4.0, 4.0, 60);
  std::vector<double> mos;
  for (double s : pred) mos.push_back(4.0 / (1.0 + std::exp(-s)) + 1.0);
  const auto fit = fit_logistic(pred, mos);
  REQUIRE(fit.ok);
  CHECK(std::abs(fit.params.eta1 - 5.0) < 1e-4);
  CHECK(std::abs(fit.params.eta2 - 1.0) < 1e-4);
  CHECK(std::abs(fit.params.eta3 - 0.0) < 1e-4);
  CHECK(std::abs(fit.params.eta4 - 1.0) < 1e-4);
  CHECK(fit.rmse < 1e-6);
  CHECK(fit.rmse <= fit.initial_rmse);
}

TEST_CASE("fit is monotone on monotone data and never worse than a constant") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> noise(0.0, 0.2);
  const auto pred = linspace(0.0, 1.0, 40);
  std::vector<double> mos;
  for (double s : pred) mos.push_back(1.0 + 3.0 * s * s + noise(rng));
  const auto fit = fit_logistic(pred, mos);
  REQUIRE(fit.ok);
  for (std::size_t i = 1; i < pred.size(); ++i) CHECK(fit.params(pred[i]) >= fit.params(pred[i - 1]));
  double mean = 0.0;
  for (double m : mos) mean += m / mos.size();
  const std::vector<double> flat(mos.size(), mean);
  CHECK(fit.rmse <= rmse(flat, mos) + 1e-12);
  CHECK(fit.rmse <= fit.initial_rmse);
}

TEST_CASE("degenerate fits are signalled") {
  const std::vector<double> pred(6, 2.0);
  const std::vector<double> mos{1, 2, 3, 4, 5, 6};
  CHECK_FALSE(fit_logistic(pred, mos).ok);
  CHECK_THROWS_AS(fit_logistic(std::vector<double>{1, 2, 3, 4}, std::vector<double>{1, 2, 3, 4}),
                  std::invalid_argument);
}

TEST_CASE("correlations") {
  const std::vector<double> mos{1.0, 2.5, 2.0, 4.0, 3.3};
  CHECK(*plcc(mos, mos) == doctest::Approx(1.0));
  CHECK(*srcc(mos, mos) == 1.0);
  CHECK(rmse(mos, mos) == 0.0);
  std::vector<double> cubed;
  for (double m : mos) cubed.push_back(std::exp(m) + m * m * m);
  CHECK(*srcc(cubed, mos) == 1.0);
  std::vector<double> reversed;
  for (double m : mos) reversed.push_back(-m);
  CHECK(*srcc(reversed, mos) == -1.0);
  CHECK_FALSE(plcc(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3}).has_value());
  CHECK_THROWS_AS(plcc(std::vector<double>{1, 2}, std::vector<double>{1, 2}), std::invalid_argument);
}

TEST_CASE("average ranks for ties") {
  CHECK(average_ranks(std::vector<double>{3.0, 1.0, 3.0, 2.0}) == std::vector<double>{3.5, 1.0, 3.5, 2.0});
  // Hand-computed: ranks (1, 2.5, 2.5, 4) against (1, 2, 3, 4).
  const double r = *srcc(std::vector<double>{1, 2, 2, 3}, std::vector<double>{1, 2, 3, 4});
  CHECK(r == doctest::Approx(4.5 / std::sqrt(4.5 * 5.0)).epsilon(1e-12));
}

TEST_CASE("report on a perfect predictor") {
  std::vector<ScoredSample> samples;
  const char* strata[] = {"BD", "GB", "GN", "ST"};
  for (int i = 0; i < 20; ++i) {
    ScoredSample s;
    s.mos = 1.0 + 0.2 * i;
    s.prediction = s.mos;
    s.stratum = strata[i % 4];
    s.type_label = i % 4;
    s.type_pred = (i % 5 == 0) ? (i + 1) % 4 : i % 4;
    s.chosen = {i % 15, 0, 3, 14};
    samples.push_back(s);
  }
  const auto r = compute_report(samples, {"BD", "GB", "GN", "ST"}, ClassCounts{});
  CHECK(*r.overall.srcc == 1.0);
  // A logistic only approaches a line as eta4 grows, so the mapped residual is small but not zero.
  CHECK(*r.overall.rmse < 1e-5);
  std::vector<double> y;
  for (const auto& s : samples) y.push_back(s.mos);
  CHECK(rmse(y, y) == 0.0);
  int total = 0;
  for (const auto& [name, m] : r.strata) total += m.n;
  CHECK(total == r.n);
  const auto& acc = r.accuracy.at("T");
  int diagonal = 0, all = 0;
  for (int a = 0; a < 4; ++a) {
    for (int b = 0; b < 4; ++b) {
      all += acc.confusion[a][b];
      if (a == b) diagonal += acc.confusion[a][b];
    }
  }
  CHECK(all == acc.n);
  CHECK(*acc.accuracy == doctest::Approx(static_cast<double>(diagonal) / all));
  CHECK(*acc.accuracy == doctest::Approx(16.0 / 20.0));
  CHECK(r.accuracy.count("R") == 0);
  CHECK(r.selection_histogram.at("q")[14] == 20);
}

TEST_CASE("small strata are not computable") {
  std::vector<ScoredSample> samples;
  for (int i = 0; i < 7; ++i) {
    ScoredSample s;
    s.mos = i;
    s.prediction = i * 0.5;
    s.stratum = i < 2 ? "R1" : "R2";
    samples.push_back(s);
  }
  const auto r = compute_report(samples, {"R1", "R2", "R3", "R4"}, ClassCounts{4, 4, 3});
  CHECK_FALSE(r.strata[0].second.computable);
  CHECK(r.strata[1].second.computable);
  CHECK(r.strata[2].second.n == 0);
}

TEST_CASE("report JSON validates and mirrors the table") {
  std::vector<ScoredSample> samples;
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(1.0, 5.0);
  for (int i = 0; i < 12; ++i) {
    ScoredSample s;
    s.mos = u(rng);
    s.prediction = s.mos + u(rng) * 0.1;
    s.stratum = i % 2 ? "GN" : "BD";
    samples.push_back(s);
  }
  const auto r = compute_report(samples, {"BD", "GB", "GN", "ST"}, ClassCounts{});
  const auto text = report_to_json(r);
  CHECK(validate_report_json(text).empty());
  const auto j = nlohmann::json::parse(text);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%8.6f", j["overall"]["srcc"].get<double>());
  CHECK(format_report_table(r).find(buf) != std::string::npos);
  auto broken = j;
  broken["overall"]["plcc"] = 1.5;
  CHECK_FALSE(validate_report_json(broken.dump()).empty());
  broken = j;
  broken.erase("strata");
  CHECK_FALSE(validate_report_json(broken.dump()).empty());
}

}  // TEST_SUITE
