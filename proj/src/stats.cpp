#include "instab/stats.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>

namespace instab::stats {
namespace {

void require_same_length(std::size_t a, std::size_t b, std::size_t minimum, const char* what) {
  if (a != b) throw InvalidArgument(std::string(what) + ": inputs differ in length");
  if (a < minimum) {
    throw InvalidArgument(std::string(what) + ": need at least " + std::to_string(minimum) + " values");
  }
}

int sign(double v) { return (v > 0) - (v < 0); }

// Exact test; a computed mean of identical values can differ from them by an ulp.
bool is_constant(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
}

}  // namespace

double performance_score(std::span<const int> pred, std::span<const int> gold, MetricKind metric, int num_classes) {
  require_same_length(pred.size(), gold.size(), 1, "performance_score");
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] < 0 || pred[i] >= num_classes || gold[i] < 0 || gold[i] >= num_classes) {
      throw InvalidArgument("performance_score: label out of range at sample " + std::to_string(i));
    }
  }
  if (metric == MetricKind::accuracy) {
    std::size_t hits = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == gold[i];
    return static_cast<double>(hits) / static_cast<double>(pred.size());
  }
  if (num_classes != 2) {
    throw InvalidArgument(std::string(metric_name(metric)) + " requires binary labels");
  }
  double tp = 0, tn = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] == 1) {
      (gold[i] == 1 ? tp : fp) += 1;
    } else {
      (gold[i] == 1 ? fn : tn) += 1;
    }
  }
  if (metric == MetricKind::f1) {
    const double denom = 2 * tp + fp + fn;
    return denom == 0 ? 0.0 : 2 * tp / denom;
  }
  const double denom = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn);
  if (denom == 0) return 0.0;
  return (tp * tn - fp * fn) / std::sqrt(denom);
}

double mean(std::span<const double> v) {
  if (v.empty()) throw InvalidArgument("mean of empty input");
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sd_of_scores(std::span<const double> scores) {
  if (scores.size() < 2) throw InvalidArgument("sd_of_scores: need at least 2 scores");
  if (is_constant(scores)) return 0.0;
  const double mu = mean(scores);
  double ss = 0;
  for (double s : scores) ss += (s - mu) * (s - mu);
  return std::sqrt(ss / static_cast<double>(scores.size() - 1));
}

double pearson_r(std::span<const double> x, std::span<const double> y) {
  require_same_length(x.size(), y.size(), 2, "pearson_r");
  if (is_constant(x) || is_constant(y)) throw UndefinedCorrelationError("pearson_r: constant input");
  const double mx = mean(x);
  const double my = mean(y);
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0 || syy == 0) throw UndefinedCorrelationError("pearson_r: constant input");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double kendall_tau(std::span<const double> x, std::span<const double> y) {
  require_same_length(x.size(), y.size(), 2, "kendall_tau");
  // n0 - n1 and n0 - n2 in the usual tau-b notation.
  long long concordant_minus_discordant = 0;
  long long untied_x = 0;
  long long untied_y = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = i + 1; j < x.size(); ++j) {
      const int sx = sign(x[i] - x[j]);
      const int sy = sign(y[i] - y[j]);
      concordant_minus_discordant += sx * sy;
      untied_x += sx != 0;
      untied_y += sy != 0;
    }
  }
  if (untied_x == 0 || untied_y == 0) throw UndefinedCorrelationError("kendall_tau: all values tied");
  return static_cast<double>(concordant_minus_discordant) /
         std::sqrt(static_cast<double>(untied_x) * static_cast<double>(untied_y));
}

std::vector<double> zscore_standardize(std::span<const double> values) {
  if (values.size() < 2) throw InvalidArgument("zscore_standardize: need at least 2 values");
  if (is_constant(values)) throw UndefinedCorrelationError("zscore_standardize: constant input");
  const double mu = mean(values);
  const double sd = sd_of_scores(values);
  if (sd == 0) throw UndefinedCorrelationError("zscore_standardize: constant input");
  std::vector<double> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = (values[i] - mu) / sd;
  return out;
}

double coefficient_of_variation(std::span<const double> values) {
  if (values.size() < 2) throw InvalidArgument("coefficient_of_variation: need at least 2 values");
  if (is_constant(values)) return 0.0;
  const double mu = mean(values);
  if (mu == 0) return std::numeric_limits<double>::quiet_NaN();
  return sd_of_scores(values) / std::abs(mu);
}

std::string format_mean_sd(double mean_unit, double sd_unit) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.1f \xC2\xB1 %.1f", 100.0 * mean_unit, 100.0 * sd_unit);
  return buf;
}

std::string format_percent(double unit_value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", 100.0 * unit_value);
  return buf;
}

}  // namespace instab::stats
