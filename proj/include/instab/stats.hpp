#ifndef INSTAB_STATS_HPP
#define INSTAB_STATS_HPP

#include "instab/common.hpp"

#include <span>
#include <string>
#include <vector>

namespace instab::stats {

// Accuracy in [0, 1]; F1 on the positive class (1) in [0, 1]; MCC in [-1, 1].
// f1 / mcc require binary labels. A zero MCC denominator yields 0, and F1
// with no positive gold labels and no positive predictions yields 0.
double performance_score(std::span<const int> predictions, std::span<const int> gold, MetricKind metric,
                         int num_classes = 2);

double mean(std::span<const double> values);

// Sample standard deviation (divisor m - 1). Requires m >= 2.
double sd_of_scores(std::span<const double> scores);

// Product-moment correlation. Throws UndefinedCorrelationError when either
// input has zero variance.
double pearson_r(std::span<const double> x, std::span<const double> y);

// Kendall tau-b (tie-corrected). Throws UndefinedCorrelationError when either
// input is entirely tied.
double kendall_tau(std::span<const double> x, std::span<const double> y);

// (x - mean) / sample_sd. Requires length >= 2 and non-constant input.
std::vector<double> zscore_standardize(std::span<const double> values);

// SD / |mean|; 0 when every value is identical. Undefined (NaN) when the
// mean is zero but the values differ.
double coefficient_of_variation(std::span<const double> values);

// Percent-scaled "mean ± sd" with one decimal, e.g. "71.3 ± 1.8".
std::string format_mean_sd(double mean_unit, double sd_unit);
// Percent-scaled single value with one decimal, e.g. "13.8".
std::string format_percent(double unit_value);

}  // namespace instab::stats

#endif  // INSTAB_STATS_HPP
