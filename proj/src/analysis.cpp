#include "instab/analysis.hpp"

#include "instab/prediction.hpp"
#include "instab/random.hpp"
#include "instab/stats.hpp"

#include <cmath>
#include <limits>

namespace instab {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::size_t resolve_layer(const EnsembleBundle& b, std::optional<std::size_t> layer) {
  if (b.layer_count == 0) throw CapabilityError("bundle has no layer representations");
  const std::size_t l = layer.value_or(b.layer_count - 1);
  if (l >= b.layer_count) throw InvalidArgument("layer index " + std::to_string(l) + " out of range");
  return l;
}

bool needs_layers(const std::vector<Measure>& measures) {
  return std::any_of(measures.begin(), measures.end(), is_representation_measure);
}

template <typename Corr>
CorrelationTable correlate(const std::vector<Measure>& measures, const std::vector<std::vector<double>>& columns,
                           const char* statistic, Corr&& corr) {
  CorrelationTable t;
  t.measures = measures;
  const auto k = static_cast<Eigen::Index>(measures.size());
  t.values = Eigen::MatrixXd::Constant(k, k, kNaN);
  std::vector<bool> degenerate(measures.size());
  for (std::size_t i = 0; i < measures.size(); ++i) {
    const auto& c = columns[i];
    degenerate[i] = std::all_of(c.begin(), c.end(), [&](double v) { return v == c.front(); });
    if (degenerate[i]) {
      t.undefined.push_back(std::string(statistic) + " undefined for " + std::string(measure_name(measures[i])) +
                            ": scores are constant");
    } else {
      t.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = 1.0;
    }
  }
  for (std::size_t i = 0; i < measures.size(); ++i) {
    for (std::size_t j = i + 1; j < measures.size(); ++j) {
      if (degenerate[i] || degenerate[j]) continue;
      double r = kNaN;
      try {
        r = corr(columns[i], columns[j]);
      } catch (const UndefinedCorrelationError&) {
        t.undefined.push_back(std::string(statistic) + " undefined for " + std::string(measure_name(measures[i])) +
                              " ~ " + std::string(measure_name(measures[j])));
      }
      t.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = r;
      t.values(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = r;
    }
  }
  return t;
}

}  // namespace

double CorrelationTable::at(Measure a, Measure b) const {
  const auto ia = std::find(measures.begin(), measures.end(), a);
  const auto ib = std::find(measures.begin(), measures.end(), b);
  if (ia == measures.end() || ib == measures.end()) throw InvalidArgument("measure not in correlation table");
  return values(ia - measures.begin(), ib - measures.begin());
}

GroupScores group_scores(const EnsembleBundle& b, std::string group_id, const std::vector<Measure>& measures,
                         const RepresentationOptions& opt, std::optional<std::size_t> layer) {
  GroupScores g;
  g.group_id = std::move(group_id);
  std::vector<Measure> repr;
  const PredictionSet preds = prediction_set(b);
  for (Measure m : measures) {
    switch (m) {
      case Measure::sd: {
        std::vector<double> scores;
        for (const RunRecord& run : b.runs) {
          scores.push_back(stats::performance_score(run.predictions, b.gold, b.metric, b.num_classes));
        }
        g.scores[m] = stats::sd_of_scores(scores);
        break;
      }
      case Measure::pwd: g.scores[m] = pairwise_disagreement(preds); break;
      case Measure::kappa: g.scores[m] = fleiss_kappa_instability(preds); break;
      case Measure::jsd: g.scores[m] = pairwise_jsd(probability_set(b)); break;
      default: repr.push_back(m);
    }
  }
  if (!repr.empty()) {
    const std::size_t l = resolve_layer(b, layer);
    for (const auto& p : representation_profile(b, repr, opt, std::vector<std::size_t>{l})) {
      g.scores[p.measure] = p.scores.front();
    }
  }
  return g;
}

CorrelationTable rank_groups(const std::vector<GroupScores>& groups) {
  if (groups.size() < 3) throw InvalidArgument("ranking needs at least 3 groups");
  std::vector<Measure> measures;
  for (const auto& [m, v] : groups.front().scores) measures.push_back(m);
  std::vector<std::vector<double>> columns(measures.size());
  for (const GroupScores& g : groups) {
    if (g.scores.size() != measures.size()) throw InvalidArgument("groups do not share a measure set");
    for (std::size_t i = 0; i < measures.size(); ++i) {
      const auto it = g.scores.find(measures[i]);
      if (it == g.scores.end()) throw InvalidArgument("groups do not share a measure set");
      columns[i].push_back(it->second);
    }
  }
  return correlate(measures, columns, "kendall tau",
                   [](const std::vector<double>& x, const std::vector<double>& y) { return stats::kendall_tau(x, y); });
}

CorrelationTable correlate_columns(const Eigen::MatrixXd& scores, const std::vector<Measure>& measures) {
  if (static_cast<std::size_t>(scores.cols()) != measures.size()) throw InvalidArgument("score table width mismatch");
  std::vector<std::vector<double>> columns(measures.size());
  for (std::size_t i = 0; i < measures.size(); ++i) {
    const auto col = scores.col(static_cast<Eigen::Index>(i));
    columns[i].assign(col.data(), col.data() + col.size());
  }
  return correlate(measures, columns, "pearson r",
                   [](const std::vector<double>& x, const std::vector<double>& y) { return stats::pearson_r(x, y); });
}

BootstrapResult bootstrap_correlations(const EnsembleBundle& b, std::size_t iterations, std::uint64_t seed,
                                       const std::vector<Measure>& measures, const RepresentationOptions& opt,
                                       std::optional<std::size_t> layer) {
  if (iterations < 2) throw InvalidArgument("bootstrap needs at least 2 iterations");
  if (measures.empty()) throw InvalidArgument("bootstrap needs at least one measure");
  const std::size_t m = b.runs.size();
  if (m < 2) throw InvalidArgument("bootstrap needs at least 2 runs");

  BootstrapResult out;
  out.iterations = iterations;
  out.seed = seed;
  out.measures = measures;
  out.layer = needs_layers(measures) ? resolve_layer(b, layer) : layer.value_or(0);

  // Everything that depends only on run identity is computed once; an
  // iteration then aggregates over its multiset of run indices.
  std::vector<double> run_scores;
  for (const RunRecord& run : b.runs) {
    run_scores.push_back(stats::performance_score(run.predictions, b.gold, b.metric, b.num_classes));
  }
  const PredictionSet preds = prediction_set(b);
  std::map<Measure, Eigen::MatrixXd> distances;
  for (Measure mm : measures) {
    if (mm == Measure::jsd) {
      distances[mm] = pairwise_jsd_matrix(probability_set(b));
    } else if (is_representation_measure(mm)) {
      std::vector<Eigen::MatrixXd> centered;
      for (const RunRecord& run : b.runs) centered.push_back(center(run.layers.at(out.layer)));
      distances[mm] = pairwise_distances(centered, mm, opt);
    }
  }

  out.scores.resize(static_cast<Eigen::Index>(iterations), static_cast<Eigen::Index>(measures.size()));
  parallel_for(iterations, opt.threads, [&](std::size_t it) {
    const std::vector<std::size_t> idx = bootstrap_indices(seed, it, m);
    std::optional<PredictionSet> resampled;
    for (std::size_t k = 0; k < measures.size(); ++k) {
      double v = 0;
      switch (measures[k]) {
        case Measure::sd: {
          std::vector<double> s;
          for (std::size_t r : idx) s.push_back(run_scores[r]);
          v = stats::sd_of_scores(s);
          break;
        }
        case Measure::pwd:
        case Measure::kappa:
          if (!resampled) resampled = resample_runs(preds, idx);
          v = measures[k] == Measure::pwd ? pairwise_disagreement(*resampled) : fleiss_kappa_instability(*resampled);
          break;
        default: v = mean_pair_distance(distances.at(measures[k]), idx);
      }
      out.scores(static_cast<Eigen::Index>(it), static_cast<Eigen::Index>(k)) = v;
    }
  });
  out.correlation = correlate_columns(out.scores, measures);
  return out;
}

RegressionResult stability_consistency_regression(const std::vector<std::pair<BootstrapResult, double>>& results) {
  if (results.size() < 3) throw InvalidArgument("regression needs at least 3 combinations");
  RegressionResult out;
  out.measures = results.front().first.measures;
  const std::size_t k = out.measures.size();
  if (k < 2) throw InvalidArgument("regression needs at least 2 measures");
  const auto combos = static_cast<Eigen::Index>(results.size());
  out.mean_correlation.resize(combos, static_cast<Eigen::Index>(k));
  for (Eigen::Index c = 0; c < combos; ++c) {
    const auto& [boot, sd] = results[static_cast<std::size_t>(c)];
    if (boot.measures != out.measures) throw InvalidArgument("combinations do not share a measure set");
    out.sd_values.push_back(sd);
    for (std::size_t i = 0; i < k; ++i) {
      double sum = 0;
      for (std::size_t j = 0; j < k; ++j) {
        if (j == i) continue;
        const double r = boot.correlation.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        if (std::isnan(r)) {
          throw UndefinedCorrelationError("regression input has an undefined correlation for " +
                                          std::string(measure_name(out.measures[i])));
        }
        sum += r;
      }
      out.mean_correlation(c, static_cast<Eigen::Index>(i)) = sum / static_cast<double>(k - 1);
    }
  }
  out.standardized.resize(combos, static_cast<Eigen::Index>(k));
  for (std::size_t i = 0; i < k; ++i) {
    const auto col = out.mean_correlation.col(static_cast<Eigen::Index>(i));
    const std::vector<double> values(col.data(), col.data() + col.size());
    const std::vector<double> z = stats::zscore_standardize(values);
    for (Eigen::Index c = 0; c < combos; ++c) out.standardized(c, static_cast<Eigen::Index>(i)) = z[static_cast<std::size_t>(c)];
  }
  for (Eigen::Index c = 0; c < combos; ++c) out.consistency.push_back(out.standardized.row(c).mean());
  out.r = stats::pearson_r(out.consistency, out.sd_values);
  return out;
}

}  // namespace instab
