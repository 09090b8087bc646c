#include "lcv/metrics.hpp"

#include <cmath>

#include "json.hpp"
#include "lcv/error.hpp"

namespace lcv {

MetricReport compute_metrics(const std::vector<int>& preds,
                             const std::vector<int>& labels) {
  if (preds.size() != labels.size())
    throw data_error("LengthMismatch", "preds/labels length mismatch");
  if (preds.empty()) throw data_error("Empty", "no examples");

  MetricReport r;
  r.n_examples = int64_t(preds.size());
  for (size_t i = 0; i < preds.size(); ++i) {
    if ((preds[i] != 0 && preds[i] != 1) || (labels[i] != 0 && labels[i] != 1))
      throw data_error("ParseError", "labels and predictions must be 0/1");
    ++r.confusion[size_t(labels[i])][size_t(preds[i])];
  }
  r.accuracy =
      double(r.confusion[0][0] + r.confusion[1][1]) / double(r.n_examples);

  auto f1_for = [&](size_t cls) {
    double tp = double(r.confusion[cls][cls]);
    double fp = double(r.confusion[1 - cls][cls]);
    double fn = double(r.confusion[cls][1 - cls]);
    double denom = 2.0 * tp + fp + fn;
    return denom == 0.0 ? 0.0 : 2.0 * tp / denom;
  };
  r.f1_real = f1_for(0);
  r.f1_misinfo = f1_for(1);
  r.macro_f1 = 0.5 * (r.f1_real + r.f1_misinfo);
  return r;
}

MetricSummary mean_std(const std::vector<double>& values) {
  if (values.size() < 2)
    throw data_error("TooFewRuns", "need at least 2 values");
  double mean = 0;
  for (double v : values) mean += v;
  mean /= double(values.size());
  double ss = 0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / double(values.size() - 1))};
}

RunAggregate aggregate_runs(const std::vector<MetricReport>& reports) {
  if (reports.size() < 2)
    throw data_error("TooFewRuns", "need at least 2 runs to aggregate");
  auto collect = [&](double MetricReport::* field) {
    std::vector<double> v;
    for (const auto& r : reports) v.push_back(r.*field);
    return mean_std(v);
  };
  RunAggregate agg;
  agg.macro_f1 = collect(&MetricReport::macro_f1);
  agg.accuracy = collect(&MetricReport::accuracy);
  agg.f1_real = collect(&MetricReport::f1_real);
  agg.f1_misinfo = collect(&MetricReport::f1_misinfo);
  return agg;
}

namespace {

// Regularized incomplete beta function via the Lentz continued fraction.
double betacf(double a, double b, double x) {
  constexpr int kMaxIter = 300;
  constexpr double kEps = 3e-16;
  constexpr double kFpMin = 1e-300;
  double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0, d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kFpMin) d = kFpMin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return h;
}

double ibeta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  double ln_bt = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                 a * std::log(x) + b * std::log(1.0 - x);
  double bt = std::exp(ln_bt);
  if (x < (a + 1.0) / (a + b + 2.0)) return bt * betacf(a, b, x) / a;
  return 1.0 - bt * betacf(b, a, 1.0 - x) / b;
}

}  // namespace

double student_t_cdf(double t, int64_t dof) {
  if (dof < 1) throw data_error("DegenerateSeries", "dof must be >= 1");
  double v = double(dof);
  double x = v / (v + t * t);
  double tail = 0.5 * ibeta(0.5 * v, 0.5, x);
  return t >= 0.0 ? 1.0 - tail : tail;
}

TTestResult paired_t_test(const std::vector<double>& series_a,
                          const std::vector<double>& series_b) {
  if (series_a.size() != series_b.size())
    throw data_error("LengthMismatch", "paired series must match in length");
  size_t n = series_a.size();
  if (n < 2) throw data_error("DegenerateSeries", "need at least 2 pairs");

  std::vector<double> diff(n);
  for (size_t i = 0; i < n; ++i) diff[i] = series_a[i] - series_b[i];
  double mean = 0;
  for (double d : diff) mean += d;
  mean /= double(n);
  double ss = 0;
  for (double d : diff) ss += (d - mean) * (d - mean);
  double sd = std::sqrt(ss / double(n - 1));
  if (sd == 0.0)
    throw data_error("DegenerateSeries",
                     "differences have zero variance; t is undefined");

  TTestResult res;
  res.dof = int64_t(n) - 1;
  res.t = mean / (sd / std::sqrt(double(n)));
  res.p = 2.0 * (1.0 - student_t_cdf(std::fabs(res.t), res.dof));
  return res;
}

std::string report_to_json(const MetricReport& r) {
  nlohmann::ordered_json j;
  j["macro_f1"] = r.macro_f1;
  j["accuracy"] = r.accuracy;
  j["f1_real"] = r.f1_real;
  j["f1_misinfo"] = r.f1_misinfo;
  j["confusion"] = {{r.confusion[0][0], r.confusion[0][1]},
                    {r.confusion[1][0], r.confusion[1][1]}};
  j["n_examples"] = r.n_examples;
  return j.dump();
}

MetricReport report_from_json(const std::string& json_text) {
  auto j = nlohmann::json::parse(json_text);
  MetricReport r;
  r.macro_f1 = j.at("macro_f1").get<double>();
  r.accuracy = j.at("accuracy").get<double>();
  r.f1_real = j.at("f1_real").get<double>();
  r.f1_misinfo = j.at("f1_misinfo").get<double>();
  for (size_t a = 0; a < 2; ++a)
    for (size_t p = 0; p < 2; ++p)
      r.confusion[a][p] = j.at("confusion").at(a).at(p).get<int64_t>();
  r.n_examples = j.at("n_examples").get<int64_t>();
  return r;
}

}  // namespace lcv
