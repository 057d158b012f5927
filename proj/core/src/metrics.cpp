#include "mtaoiqa/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <Eigen/Dense>
#include <json.hpp>

namespace mtaoiqa {

namespace {

using nlohmann::json;

void check_sizes(std::span<const double> a, std::span<const double> b, std::size_t min_n) {
  if (a.size() != b.size()) throw std::invalid_argument("metric inputs differ in length");
  if (a.size() < min_n) {
    throw std::invalid_argument("metric needs at least " + std::to_string(min_n) + " samples");
  }
}

double mean(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double stddev(std::span<const double> v) {
  const double m = mean(v);
  double acc = 0.0;
  for (double x : v) acc += (x - m) * (x - m);
  return std::sqrt(acc / static_cast<double>(v.size()));
}

double logistic_gate(double z) {
  // 1 / (1 + exp(z)) evaluated without overflow.
  if (z > 0.0) {
    const double e = std::exp(-z);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(z));
}

double sum_squares(const LogisticParams& p, std::span<const double> pred,
                   std::span<const double> mos) {
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double r = p(pred[i]) - mos[i];
    acc += r * r;
  }
  return acc;
}

}  // namespace

double LogisticParams::operator()(double s) const {
  return (eta1 - eta2) * logistic_gate(-(s - eta3) / eta4) + eta2;
}

LogisticFit fit_logistic(std::span<const double> pred, std::span<const double> mos) {
  check_sizes(pred, mos, 5);
  const std::size_t n = pred.size();
  LogisticFit fit;
  const double spread = stddev(pred);
  if (!(spread > 0.0)) return fit;

  LogisticParams p{*std::max_element(mos.begin(), mos.end()),
                   *std::min_element(mos.begin(), mos.end()), mean(pred), spread / 4.0};
  double sse = sum_squares(p, pred, mos);
  fit.initial_rmse = std::sqrt(sse / n);

  double lambda = 1e-3;
  Eigen::MatrixXd jac(n, 4);
  Eigen::VectorXd res(n);
  for (fit.iterations = 0; fit.iterations < 500; ++fit.iterations) {
    for (std::size_t i = 0; i < n; ++i) {
      const double d = pred[i] - p.eta3;
      const double g = logistic_gate(-d / p.eta4);
      const double slope = (p.eta1 - p.eta2) * g * (1.0 - g);
      jac(i, 0) = g;
      jac(i, 1) = 1.0 - g;
      jac(i, 2) = -slope / p.eta4;
      jac(i, 3) = -slope * d / (p.eta4 * p.eta4);
      res(i) = (p.eta1 - p.eta2) * g + p.eta2 - mos[i];
    }
    const Eigen::Matrix4d jtj = jac.transpose() * jac;
    const Eigen::Vector4d grad = jac.transpose() * res;

    bool accepted = false;
    Eigen::Vector4d step = Eigen::Vector4d::Zero();
    while (lambda < 1e16) {
      Eigen::Matrix4d damped = jtj;
      for (int k = 0; k < 4; ++k) damped(k, k) += lambda * std::max(jtj(k, k), 1e-12);
      step = damped.ldlt().solve(-grad);
      LogisticParams trial{p.eta1 + step(0), p.eta2 + step(1), p.eta3 + step(2),
                           p.eta4 + step(3)};
      const double trial_sse =
          trial.eta4 != 0.0 ? sum_squares(trial, pred, mos) : std::numeric_limits<double>::infinity();
      if (std::isfinite(trial_sse) && trial_sse <= sse) {
        p = trial;
        sse = trial_sse;
        lambda = std::max(lambda / 10.0, 1e-12);
        accepted = true;
        break;
      }
      lambda *= 10.0;
    }
    if (!accepted) break;
    const Eigen::Vector4d params(p.eta1, p.eta2, p.eta3, p.eta4);
    if (step.norm() <= 1e-8 * (params.norm() + 1e-8)) break;
  }

  // A flat curve at mean(mos) is always available; never report a worse fit than it.
  const double mos_mean = mean(mos);
  const LogisticParams flat{mos_mean, mos_mean, p.eta3, p.eta4};
  const double flat_sse = sum_squares(flat, pred, mos);
  if (flat_sse < sse) {
    p = flat;
    sse = flat_sse;
  }
  fit.params = p;
  fit.ok = true;
  fit.rmse = std::sqrt(sse / n);
  return fit;
}

std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

std::optional<double> plcc(std::span<const double> a, std::span<const double> b) {
  check_sizes(a, b, 3);
  const double ma = mean(a), mb = mean(b);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (!(saa > 0.0) || !(sbb > 0.0)) return std::nullopt;
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

std::optional<double> srcc(std::span<const double> a, std::span<const double> b) {
  check_sizes(a, b, 3);
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  return plcc(ra, rb);
}

double rmse(std::span<const double> a, std::span<const double> b) {
  check_sizes(a, b, 3);
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(acc / static_cast<double>(a.size()));
}

namespace {

StratumMetrics stratum_metrics(const std::vector<double>& raw, const std::vector<double>& mapped,
                               const std::vector<double>& mos) {
  StratumMetrics m;
  m.n = static_cast<int>(raw.size());
  if (m.n < 3) return m;
  m.computable = true;
  m.plcc = plcc(mapped, mos);
  m.srcc = srcc(raw, mos);
  m.rmse = rmse(mapped, mos);
  return m;
}

AccuracyMetrics accuracy_for(std::span<const ScoredSample> samples, int classes,
                             bool head_matches, std::optional<int> ScoredSample::*pred,
                             int ScoredSample::*label) {
  AccuracyMetrics acc;
  acc.confusion.assign(classes, std::vector<int>(classes, 0));
  for (const auto& s : samples) {
    const int l = s.*label;
    const auto& p = s.*pred;
    if (l < 0 || !p) continue;
    ++acc.n;
    if (*p == l) ++acc.correct;
    if (l < classes && *p >= 0 && *p < classes) ++acc.confusion[l][*p];
  }
  if (acc.n > 0 && head_matches) acc.accuracy = static_cast<double>(acc.correct) / acc.n;
  return acc;
}

}  // namespace

EvalReport compute_report(std::span<const ScoredSample> samples,
                          const std::vector<std::string>& strata, const ClassCounts& classes) {
  EvalReport report;
  report.n = static_cast<int>(samples.size());
  std::vector<double> raw, mos;
  for (const auto& s : samples) {
    raw.push_back(s.prediction);
    mos.push_back(s.mos);
  }
  std::vector<double> mapped = raw;
  if (samples.size() >= 5) {
    const LogisticFit fit = fit_logistic(raw, mos);
    report.logistic_ok = fit.ok;
    report.logistic = fit.params;
    if (fit.ok) {
      for (double& v : mapped) v = fit.params(v);
    }
  }
  report.overall = stratum_metrics(raw, mapped, mos);

  for (const auto& name : strata) {
    std::vector<double> r, m, y;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      if (samples[i].stratum != name) continue;
      r.push_back(raw[i]);
      m.push_back(mapped[i]);
      y.push_back(mos[i]);
    }
    report.strata.emplace_back(name, stratum_metrics(r, m, y));
  }

  const bool any_range = std::any_of(samples.begin(), samples.end(), [](const auto& s) { return s.range_pred.has_value(); });
  const bool any_type = std::any_of(samples.begin(), samples.end(), [](const auto& s) { return s.type_pred.has_value(); });
  const bool any_degree = std::any_of(samples.begin(), samples.end(), [](const auto& s) { return s.degree_pred.has_value(); });
  if (any_range) {
    report.accuracy["R"] = accuracy_for(samples, classes.range, classes.range_head_matches,
                                        &ScoredSample::range_pred, &ScoredSample::range_label);
  }
  if (any_type) {
    report.accuracy["T"] = accuracy_for(samples, classes.type, true, &ScoredSample::type_pred,
                                        &ScoredSample::type_label);
  }
  if (any_degree) {
    report.accuracy["D"] = accuracy_for(samples, classes.degree, true,
                                        &ScoredSample::degree_pred, &ScoredSample::degree_label);
  }

  static constexpr const char* kSlots[] = {"r", "t", "d", "q"};
  for (int t = 0; t < 4; ++t) {
    std::array<int64_t, 15> hist{};
    bool seen = false;
    for (const auto& s : samples) {
      if (s.chosen[t] >= 0 && s.chosen[t] < 15) {
        ++hist[s.chosen[t]];
        seen = true;
      }
    }
    if (seen) report.selection_histogram[kSlots[t]] = hist;
  }
  return report;
}

namespace {

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json stratum_json(const StratumMetrics& m) {
  return {{"n", m.n},
          {"computable", m.computable},
          {"plcc", optional_number(m.plcc)},
          {"srcc", optional_number(m.srcc)},
          {"rmse", optional_number(m.rmse)}};
}

}  // namespace

std::string report_to_json(const EvalReport& r) {
  json j;
  j["n"] = r.n;
  j["overall"] = stratum_json(r.overall);
  j["logistic"] = {{"ok", r.logistic_ok},
                   {"eta1", r.logistic.eta1},
                   {"eta2", r.logistic.eta2},
                   {"eta3", r.logistic.eta3},
                   {"eta4", r.logistic.eta4}};
  json strata = json::array();
  for (const auto& [name, m] : r.strata) {
    json s = stratum_json(m);
    s["name"] = name;
    strata.push_back(std::move(s));
  }
  j["strata"] = std::move(strata);
  json acc = json::object();
  for (const auto& [name, a] : r.accuracy) {
    acc[name] = {{"n", a.n},
                 {"correct", a.correct},
                 {"accuracy", optional_number(a.accuracy)},
                 {"confusion", a.confusion}};
  }
  j["accuracy"] = std::move(acc);
  json hist = json::object();
  for (const auto& [name, h] : r.selection_histogram) hist[name] = h;
  j["selection_histogram"] = std::move(hist);
  return j.dump(2) + "\n";
}

std::vector<std::string> validate_report_json(const std::string& text) {
  std::vector<std::string> errors;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    return {std::string("not valid JSON: ") + e.what()};
  }
  auto check_range = [&](const json& v, const std::string& where, double lo, double hi) {
    if (v.is_null()) return;
    if (!v.is_number()) {
      errors.push_back(where + " is not a number");
      return;
    }
    const double x = v.get<double>();
    if (x < lo || x > hi) errors.push_back(where + " out of range");
  };
  auto check_stratum = [&](const json& s, const std::string& where) {
    for (const char* key : {"n", "computable", "plcc", "srcc", "rmse"}) {
      if (!s.contains(key)) errors.push_back(where + " lacks '" + key + "'");
    }
    if (!s.contains("plcc") || !s.contains("srcc") || !s.contains("rmse")) return;
    check_range(s["plcc"], where + ".plcc", -1.0, 1.0);
    check_range(s["srcc"], where + ".srcc", -1.0, 1.0);
    check_range(s["rmse"], where + ".rmse", 0.0, std::numeric_limits<double>::infinity());
  };
  for (const char* key : {"n", "overall", "logistic", "strata", "accuracy", "selection_histogram"}) {
    if (!j.contains(key)) errors.push_back(std::string("missing '") + key + "'");
  }
  if (!errors.empty()) return errors;
  check_stratum(j["overall"], "overall");
  for (const char* key : {"ok", "eta1", "eta2", "eta3", "eta4"}) {
    if (!j["logistic"].contains(key)) errors.push_back(std::string("logistic lacks '") + key + "'");
  }
  int stratum_total = 0;
  bool strata_complete = true;
  for (const auto& s : j["strata"]) {
    if (!s.contains("name") || !s["name"].is_string()) errors.push_back("stratum without a name");
    check_stratum(s, "strata." + s.value("name", std::string("?")));
    if (s.contains("n") && s["n"].is_number_integer()) {
      stratum_total += s["n"].get<int>();
    } else {
      strata_complete = false;
    }
  }
  if (strata_complete && !j["strata"].empty() && stratum_total != j["n"].get<int>()) {
    errors.push_back("stratum counts do not sum to n");
  }
  for (const auto& [name, a] : j["accuracy"].items()) {
    check_range(a.value("accuracy", json(nullptr)), "accuracy." + name, 0.0, 1.0);
    if (!a.contains("confusion")) errors.push_back("accuracy." + name + " lacks confusion");
  }
  return errors;
}

std::string format_report_table(const EvalReport& r) {
  std::ostringstream os;
  auto cell = [](const std::optional<double>& v) {
    if (!v) return std::string("       -");
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%8.6f", *v);
    return std::string(buf);
  };
  char line[160];
  std::snprintf(line, sizeof(line), "%-8s %6s %9s %9s %9s\n", "stratum", "n", "PLCC", "SRCC", "RMSE");
  os << line;
  auto row = [&](const std::string& name, const StratumMetrics& m) {
    std::snprintf(line, sizeof(line), "%-8s %6d %9s %9s %9s\n", name.c_str(), m.n,
                  cell(m.plcc).c_str(), cell(m.srcc).c_str(), cell(m.rmse).c_str());
    os << line;
  };
  for (const auto& [name, m] : r.strata) row(name, m);
  row("Overall", r.overall);
  for (const auto& [name, a] : r.accuracy) {
    std::snprintf(line, sizeof(line), "ACC_%s    %6d %9s\n", name.c_str(), a.n,
                  cell(a.accuracy).c_str());
    os << line;
  }
  return os.str();
}

}  // namespace mtaoiqa
