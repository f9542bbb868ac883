#include "instab/validity.hpp"

#include "instab/prediction.hpp"
#include "instab/random.hpp"
#include "instab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace instab {
namespace {

double prediction_measure(const EnsembleBundle& b, Measure measure) {
  switch (measure) {
    case Measure::sd: {
      std::vector<double> scores;
      for (const RunRecord& run : b.runs) {
        scores.push_back(stats::performance_score(run.predictions, b.gold, b.metric, b.num_classes));
      }
      return stats::sd_of_scores(scores);
    }
    case Measure::pwd: return pairwise_disagreement(prediction_set(b));
    case Measure::kappa: return fleiss_kappa_instability(prediction_set(b));
    case Measure::jsd: return pairwise_jsd(probability_set(b));
    default: throw InvalidArgument("not a prediction measure");
  }
}

// Flattened evaluation of every requested measure: prediction measures give
// one value, representation measures one value per layer.
std::vector<SubsampleSeries> evaluate(const EnsembleBundle& b, const std::vector<Measure>& measures,
                                      const RepresentationOptions& opt) {
  std::vector<SubsampleSeries> out;
  std::vector<Measure> repr;
  for (Measure m : measures) {
    if (is_prediction_measure(m)) {
      SubsampleSeries s;
      s.measure = m;
      s.values.push_back(prediction_measure(b, m));
      out.push_back(std::move(s));
    } else {
      repr.push_back(m);
    }
  }
  if (!repr.empty()) {
    for (const auto& profile : representation_profile(b, repr, opt)) {
      for (std::size_t i = 0; i < profile.layers.size(); ++i) {
        SubsampleSeries s;
        s.measure = profile.measure;
        s.layer = profile.layers[i];
        s.values.push_back(profile.scores[i]);
        out.push_back(std::move(s));
      }
    }
  }
  return out;
}

}  // namespace

ConvergentReport convergent_validity(const EnsembleBundle& b, const std::vector<Measure>& measures,
                                     const RepresentationOptions& opt) {
  if (b.layer_count < 3) {
    throw InvalidArgument("convergent validity needs at least 3 layers, bundle has " + std::to_string(b.layer_count));
  }
  ConvergentReport report;
  report.measures = measures;
  report.profiles = representation_profile(b, measures, opt);
  const auto k = static_cast<Eigen::Index>(measures.size());
  report.correlation = Eigen::MatrixXd::Identity(k, k);
  for (const auto& p : report.profiles) {
    // Distances live in [0, 1]; a spread at rounding level carries no ordering.
    const auto [lo, hi] = std::minmax_element(p.scores.begin(), p.scores.end());
    if (*hi - *lo <= 1e-12) {
      throw UndefinedCorrelationError("convergent validity undefined: " + std::string(measure_name(p.measure)) +
                                      " profile is constant across layers");
    }
  }
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = i + 1; j < k; ++j) {
      const double r = stats::pearson_r(report.profiles[static_cast<std::size_t>(i)].scores,
                                        report.profiles[static_cast<std::size_t>(j)].scores);
      report.correlation(i, j) = r;
      report.correlation(j, i) = r;
    }
  }
  return report;
}

double SubsampleReport::max_cv(Measure measure) const {
  double worst = -std::numeric_limits<double>::infinity();
  bool found = false;
  for (const auto& s : series) {
    if (s.measure != measure) continue;
    found = true;
    if (std::isnan(s.coefficient_of_variation)) return s.coefficient_of_variation;
    worst = std::max(worst, s.coefficient_of_variation);
  }
  if (!found) throw InvalidArgument("measure not present in subsample report");
  return worst;
}

SubsampleReport subsample_consistency(const EnsembleBundle& b, double rate, std::size_t count, std::uint64_t seed,
                                      const std::vector<Measure>& measures, const RepresentationOptions& opt) {
  if (!(rate > 0.0 && rate <= 1.0)) throw InvalidArgument("subsample rate must lie in (0, 1]");
  if (count < 2) throw InvalidArgument("need at least 2 subsamples");
  const std::size_t n = b.num_samples();
  // The epsilon keeps products such as 0.1 * 70 from flooring to one less.
  const auto size = static_cast<std::size_t>(std::floor(rate * static_cast<double>(n) + 1e-9));
  if (size < 2) throw InvalidArgument("subsample of " + std::to_string(size) + " samples is too small");

  SubsampleReport report;
  report.rate = rate;
  report.subsample_count = count;
  report.subsample_size = size;
  report.seed = seed;

  RepresentationOptions inner = opt;
  inner.threads = 1;
  report.series = evaluate(b, measures, inner);
  for (auto& s : report.series) {
    s.full_value = s.values.front();
    s.values.assign(count, 0.0);
  }

  report.index_sets.resize(count);
  std::vector<std::vector<SubsampleSeries>> per_subsample(count);
  parallel_for(count, opt.threads, [&](std::size_t i) {
    report.index_sets[i] = sample_without_replacement(seed, i, n, size);
    per_subsample[i] = evaluate(select_samples(b, report.index_sets[i]), measures, inner);
  });
  for (std::size_t i = 0; i < count; ++i) {
    for (std::size_t s = 0; s < report.series.size(); ++s) report.series[s].values[i] = per_subsample[i][s].values.front();
  }
  for (auto& s : report.series) s.coefficient_of_variation = stats::coefficient_of_variation(s.values);
  return report;
}

RunSplit split_runs(const EnsembleBundle& b) {
  if (b.gold.empty()) throw InvalidArgument("split_runs: gold labels required");
  std::vector<std::size_t> counts(static_cast<std::size_t>(b.num_classes), 0);
  for (int g : b.gold) ++counts.at(static_cast<std::size_t>(g));
  const std::size_t majority = *std::max_element(counts.begin(), counts.end());

  RunSplit split;
  split.majority_baseline = static_cast<double>(majority) / static_cast<double>(b.num_samples());
  for (const RunRecord& run : b.runs) {
    std::size_t hits = 0;
    for (std::size_t i = 0; i < b.num_samples(); ++i) hits += run.predictions[i] == b.gold[i];
    split.accuracies.push_back(static_cast<double>(hits) / static_cast<double>(b.num_samples()));
    // Integer comparison: accuracy <= baseline exactly, no rounding.
    (hits <= majority ? split.failed : split.successful).push_back(run.run_id);
  }
  return split;
}

RunSplitComparison run_split_comparison(const EnsembleBundle& b, const std::vector<Measure>& measures,
                                        const RepresentationOptions& opt) {
  RunSplitComparison out;
  out.split = split_runs(b);
  if (out.split.successful.size() < 2 || out.split.failed.size() < 2) {
    throw InsufficientGroupError("run split needs at least 2 runs per group (successful: " +
                                 std::to_string(out.split.successful.size()) +
                                 ", failed: " + std::to_string(out.split.failed.size()) + ")");
  }
  std::vector<std::size_t> good, bad;
  for (std::size_t r = 0; r < b.runs.size(); ++r) {
    (std::find(out.split.failed.begin(), out.split.failed.end(), b.runs[r].run_id) != out.split.failed.end() ? bad
                                                                                                               : good)
        .push_back(r);
  }
  out.successful = representation_profile(select_runs(b, good), measures, opt);
  out.failed = representation_profile(select_runs(b, bad), measures, opt);
  return out;
}

}  // namespace instab
