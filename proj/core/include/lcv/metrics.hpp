#ifndef LCV_METRICS_HPP
#define LCV_METRICS_HPP

#include <array>
#include <string>
#include <vector>

namespace lcv {

struct MetricReport {
  double macro_f1 = 0;
  double accuracy = 0;
  double f1_real = 0;     // class 0
  double f1_misinfo = 0;  // class 1
  // confusion[actual][predicted]
  std::array<std::array<int64_t, 2>, 2> confusion{{{0, 0}, {0, 0}}};
  int64_t n_examples = 0;
};

// Per-class F1 with the 0-when-undefined convention; macro-F1 is the
// unweighted mean of the two class F1s.
MetricReport compute_metrics(const std::vector<int>& preds,
                             const std::vector<int>& labels);

struct MetricSummary {
  double mean = 0;
  double stddev = 0;  // sample standard deviation (n-1)
};

struct RunAggregate {
  MetricSummary macro_f1, accuracy, f1_real, f1_misinfo;
};

RunAggregate aggregate_runs(const std::vector<MetricReport>& reports);

MetricSummary mean_std(const std::vector<double>& values);

struct TTestResult {
  double t = 0;
  double p = 0;  // two-sided
  int64_t dof = 0;
};

// Classic paired t on the differences a[i] - b[i]; zero-variance
// difference series raises DegenerateSeries.
TTestResult paired_t_test(const std::vector<double>& series_a,
                          const std::vector<double>& series_b);

// P(T <= t) for Student's t with `dof` degrees of freedom.
double student_t_cdf(double t, int64_t dof);

std::string report_to_json(const MetricReport& r);
MetricReport report_from_json(const std::string& json_text);

}  // namespace lcv

#endif  // LCV_METRICS_HPP
