#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace mtaoiqa {

/// f(s) = (eta1 - eta2) / (1 + exp(-(s - eta3) / eta4)) + eta2
struct LogisticParams {
  double eta1 = 1.0;
  double eta2 = 0.0;
  double eta3 = 0.0;
  double eta4 = 1.0;

  double operator()(double s) const;
};

struct LogisticFit {
  LogisticParams params;
  bool ok = false;  // false when predictions are constant; params are then meaningless
  int iterations = 0;
  double rmse = 0.0;
  double initial_rmse = 0.0;
};

/// Least-squares fit of the four-parameter logistic by Levenberg-Marquardt, starting from
/// eta1 = max(mos), eta2 = min(mos), eta3 = mean(pred), eta4 = std(pred) / 4. Stops at a
/// relative parameter step of 1e-8 or after 500 iterations. Throws std::invalid_argument
/// when sizes differ or N < 5.
LogisticFit fit_logistic(std::span<const double> pred, std::span<const double> mos);

/// Average ranks (1-based); ties share the mean of their positions.
std::vector<double> average_ranks(std::span<const double> values);

// Correlations return nullopt when either input has zero variance. All three throw
// std::invalid_argument when sizes differ or N < 3.
std::optional<double> plcc(std::span<const double> a, std::span<const double> b);
std::optional<double> srcc(std::span<const double> a, std::span<const double> b);
double rmse(std::span<const double> a, std::span<const double> b);

struct StratumMetrics {
  int n = 0;
  bool computable = false;  // false when n < 3
  std::optional<double> plcc;
  std::optional<double> srcc;
  std::optional<double> rmse;
};

struct AccuracyMetrics {
  int n = 0;
  int correct = 0;
  std::optional<double> accuracy;        // nullopt when n == 0 or class counts mismatch
  std::vector<std::vector<int>> confusion;  // [label][prediction]
};

/// One evaluated panorama.
struct ScoredSample {
  double prediction = 0.0;
  double mos = 0.0;
  std::string stratum;
  // Auxiliary predictions and labels; label < 0 means not applicable.
  std::optional<int> range_pred, type_pred, degree_pred;
  int range_label = -1, type_label = -1, degree_label = -1;
  std::array<int, 4> chosen{-1, -1, -1, -1};  // per task slot, -1 without selection
};

struct EvalReport {
  int n = 0;
  StratumMetrics overall;
  bool logistic_ok = false;
  LogisticParams logistic;
  std::vector<std::pair<std::string, StratumMetrics>> strata;
  std::map<std::string, AccuracyMetrics> accuracy;  // keys "R", "T", "D"
  std::map<std::string, std::array<int64_t, 15>> selection_histogram;  // keys r, t, d, q
};

struct ClassCounts {
  int range = 2;
  int type = 4;
  int degree = 3;
  bool range_head_matches = true;  // false when the head's class count differs from the data's
};

/// Fits the logistic once over all samples, then reports overall and per-stratum
/// PLCC/RMSE on mapped predictions and SRCC on raw predictions. `strata` fixes the
/// reported order; samples whose stratum is absent from it still count toward overall.
EvalReport compute_report(std::span<const ScoredSample> samples,
                          const std::vector<std::string>& strata, const ClassCounts& classes);

std::string report_to_json(const EvalReport& report);
/// Returns a list of schema violations (empty when valid).
std::vector<std::string> validate_report_json(const std::string& text);
/// Plain-text table: one row per stratum plus Overall, six-decimal values.
std::string format_report_table(const EvalReport& report);

}  // namespace mtaoiqa
