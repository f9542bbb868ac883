#include "commands.hpp"

#include "instab/analysis.hpp"
#include "instab/bundle.hpp"
#include "instab/prediction.hpp"
#include "instab/representation.hpp"
#include "instab/stats.hpp"
#include "instab/validity.hpp"

#include <charconv>
#include <optional>
#include <set>

namespace instab::cli {
namespace fs = std::filesystem;
namespace {

const std::vector<Measure> kEveryMeasure(std::begin(kAllMeasures), std::end(kAllMeasures));
const std::vector<Measure> kRepresentationMeasures{Measure::svcca, Measure::op, Measure::cka};

std::string name_of(Measure m) { return std::string(measure_name(m)); }

std::vector<Measure> resolve_measures(const std::string& flag, const std::vector<Measure>& fallback) {
  return flag.empty() ? fallback : parse_measure_list(flag);
}

Json measure_names(const std::vector<Measure>& measures) {
  Json out = Json::array();
  for (Measure m : measures) out.push_back(name_of(m));
  return out;
}

std::size_t parse_index(const std::string& text) {
  std::size_t value = 0;
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (text.empty() || ec != std::errc() || ptr != end) throw InvalidArgument("not a layer index: '" + text + "'");
  return value;
}

// "all" -> every layer, "top" -> the last one, otherwise ascending distinct indices.
std::vector<std::size_t> parse_layers(const std::string& flag, std::size_t layer_count) {
  std::vector<std::size_t> out;
  if (flag == "all") {
    for (std::size_t l = 0; l < layer_count; ++l) out.push_back(l);
    return out;
  }
  if (flag == "top") {
    if (layer_count > 0) out.push_back(layer_count - 1);
    return out;
  }
  std::set<std::size_t> picked;
  std::size_t start = 0;
  while (start <= flag.size()) {
    const std::size_t comma = std::min(flag.find(',', start), flag.size());
    const std::size_t l = parse_index(flag.substr(start, comma - start));
    if (l >= layer_count) {
      throw InvalidArgument("layer " + std::to_string(l) + " out of range (bundle has " + std::to_string(layer_count) +
                            " layers)");
    }
    picked.insert(l);
    start = comma + 1;
  }
  return {picked.begin(), picked.end()};
}

RepresentationOptions representation_options(const CommonOptions& o) {
  RepresentationOptions r;
  r.threads = std::max(1u, o.threads);
  r.svcca_threshold = o.svcca_threshold;
  if (o.op_variant == "corrected") {
    r.op_variant = OpVariant::corrected;
  } else if (o.op_variant == "literal") {
    r.op_variant = OpVariant::literal;
  } else {
    throw InvalidArgument("op variant must be corrected or literal, got '" + o.op_variant + "'");
  }
  return r;
}

void record_common(Report& report, const CommonOptions& o, const std::vector<Measure>& measures) {
  report.scale = o.raw ? "unit" : "percent";
  report.parameters["measures"] = measure_names(measures);
  report.parameters["op_variant"] = o.op_variant;
  report.parameters["svcca_threshold"] = o.svcca_threshold;
}

// Prediction measures and performance scores are shown on a 0-100 scale.
Json scaled(double value, bool raw) { return number(raw ? value : 100.0 * value); }
Json display(Measure m, double value, bool raw) { return is_prediction_measure(m) ? scaled(value, raw) : number(value); }

// Drops measures the bundles cannot support, with an annotation for each.
std::vector<Measure> supported(const std::vector<const EnsembleBundle*>& bundles, const std::vector<Measure>& measures,
                               Report& report) {
  bool probabilities = true, layers = true;
  for (const auto* b : bundles) {
    probabilities = probabilities && b->has_probabilities();
    layers = layers && b->layer_count > 0;
  }
  std::vector<Measure> out;
  for (Measure m : measures) {
    if (m == Measure::jsd && !probabilities) {
      report.annotations.push_back("jsd: skipped, bundle has no class probabilities");
    } else if (is_representation_measure(m) && !layers) {
      report.annotations.push_back(name_of(m) + ": skipped, bundle has no layer representations");
    } else {
      out.push_back(m);
    }
  }
  return out;
}

void require_representation(const std::vector<Measure>& measures, const char* command) {
  for (Measure m : measures) {
    if (!is_representation_measure(m)) {
      throw InvalidArgument(std::string(command) + " takes representation measures only, got " + name_of(m));
    }
  }
}

void correlation_table(Json& table, const CorrelationTable& corr) {
  for (std::size_t i = 0; i < corr.measures.size(); ++i) {
    Json row;
    row["measure"] = name_of(corr.measures[i]);
    for (std::size_t j = 0; j < corr.measures.size(); ++j) {
      row[name_of(corr.measures[j])] = number(corr.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    }
    table.push_back(std::move(row));
  }
}

void profile_rows(Json& table, const std::vector<LayerInstabilityProfile>& profiles, const std::string& group = {}) {
  for (const auto& p : profiles) {
    for (std::size_t i = 0; i < p.layers.size(); ++i) {
      Json row;
      if (!group.empty()) row["group"] = group;
      row["measure"] = name_of(p.measure);
      row["layer"] = p.layers[i];
      row["value"] = number(p.scores[i]);
      table.push_back(std::move(row));
    }
  }
}

EnsembleBundle load(Report& report, const fs::path& path) {
  EnsembleBundle b = load_bundle(path);
  report.add_input(path);
  return b;
}

}  // namespace

Report cmd_measure(const fs::path& path, const CommonOptions& o) {
  Report report;
  report.command = "measure";
  const EnsembleBundle b = load(report, path);
  const RepresentationOptions ropt = representation_options(o);
  const std::vector<Measure> requested = resolve_measures(o.measures, kEveryMeasure);
  const std::string layer_flag = o.layers.empty() ? "all" : o.layers;
  record_common(report, o, requested);
  report.parameters["layers"] = layer_flag;
  const std::vector<Measure> measures = supported({&b}, requested, report);

  std::vector<Measure> prediction, representation;
  for (Measure m : measures) (is_prediction_measure(m) ? prediction : representation).push_back(m);

  if (!prediction.empty()) {
    const PredictionReport pr = prediction_report(b);
    Json& runs = report.table("runs");
    for (std::size_t r = 0; r < b.runs.size(); ++r) {
      runs.push_back({{"run_id", b.runs[r].run_id}, {"score", scaled(pr.run_scores[r], o.raw)}});
    }
    const double sd = pr.scores.at(Measure::sd);
    report.table("performance").push_back({{"metric", std::string(metric_name(b.metric))},
                                           {"mean", scaled(pr.mean_score, o.raw)},
                                           {"sd", scaled(sd, o.raw)},
                                           {"display", stats::format_mean_sd(pr.mean_score, sd)},
                                           {"p_a", number(pr.agreement.p_a)},
                                           {"p_epsilon", number(pr.agreement.p_epsilon)}});
    Json& table = report.table("prediction");
    for (Measure m : prediction) {
      const auto it = pr.scores.find(m);
      table.push_back({{"measure", name_of(m)}, {"value", it == pr.scores.end() ? Json(nullptr) : scaled(it->second, o.raw)}});
    }
    for (const std::string& note : pr.notes) {
      for (Measure m : prediction) {
        if (m != Measure::jsd && note.rfind(name_of(m) + ":", 0) == 0) report.annotations.push_back(note);
      }
    }
  }
  if (!representation.empty()) {
    const auto layers = parse_layers(layer_flag, b.layer_count);
    profile_rows(report.table("representation"), representation_profile(b, representation, ropt, layers));
  }
  return report;
}

Report cmd_convergent(const fs::path& path, const CommonOptions& o) {
  Report report;
  report.command = "validity convergent";
  const EnsembleBundle b = load(report, path);
  const RepresentationOptions ropt = representation_options(o);
  const std::vector<Measure> measures = resolve_measures(o.measures, kRepresentationMeasures);
  require_representation(measures, "validity convergent");
  record_common(report, o, measures);
  const ConvergentReport cr = convergent_validity(b, measures, ropt);
  profile_rows(report.table("profiles"), cr.profiles);
  CorrelationTable corr;
  corr.measures = cr.measures;
  corr.values = cr.correlation;
  correlation_table(report.table("correlation"), corr);
  return report;
}

Report cmd_subsample(const fs::path& path, const CommonOptions& o, double rate, std::size_t count) {
  Report report;
  report.command = "validity subsample";
  const EnsembleBundle b = load(report, path);
  const RepresentationOptions ropt = representation_options(o);
  const std::vector<Measure> requested = resolve_measures(o.measures, kEveryMeasure);
  const std::string layer_flag = o.layers.empty() ? "all" : o.layers;
  record_common(report, o, requested);
  report.parameters["layers"] = layer_flag;
  report.parameters["rate"] = rate;
  report.parameters["count"] = count;
  report.parameters["seed"] = o.seed;
  const std::vector<Measure> measures = supported({&b}, requested, report);
  const auto layers = parse_layers(layer_flag, b.layer_count);
  const std::set<std::size_t> keep(layers.begin(), layers.end());

  const SubsampleReport sr = subsample_consistency(b, rate, count, o.seed, measures, ropt);
  Json& sets = report.table("subsamples");
  for (std::size_t i = 0; i < sr.index_sets.size(); ++i) {
    std::string rows;
    for (std::size_t r : sr.index_sets[i]) rows += (rows.empty() ? "" : " ") + std::to_string(r);
    sets.push_back({{"subsample", i}, {"size", sr.subsample_size}, {"rows", rows}});
  }
  Json& values = report.table("series");
  Json& dispersion = report.table("dispersion");
  for (const SubsampleSeries& s : sr.series) {
    if (s.layer && !keep.count(*s.layer)) continue;
    const Json layer = s.layer ? Json(*s.layer) : Json(nullptr);
    for (std::size_t i = 0; i < s.values.size(); ++i) {
      values.push_back({{"measure", name_of(s.measure)}, {"layer", layer}, {"subsample", i},
                        {"value", display(s.measure, s.values[i], o.raw)}});
    }
    dispersion.push_back({{"measure", name_of(s.measure)}, {"layer", layer},
                          {"full_value", display(s.measure, s.full_value, o.raw)},
                          {"mean", display(s.measure, stats::mean(s.values), o.raw)},
                          {"coefficient_of_variation", number(s.coefficient_of_variation)}});
  }
  return report;
}

Report cmd_runs(const fs::path& path, const CommonOptions& o) {
  Report report;
  report.command = "validity runs";
  const EnsembleBundle b = load(report, path);
  const RepresentationOptions ropt = representation_options(o);
  const std::vector<Measure> requested = resolve_measures(o.measures, kRepresentationMeasures);
  require_representation(requested, "validity runs");
  const std::string layer_flag = o.layers.empty() ? "all" : o.layers;
  record_common(report, o, requested);
  report.parameters["layers"] = layer_flag;
  const std::vector<Measure> measures = supported({&b}, requested, report);

  std::optional<RunSplitComparison> cmp;
  RunSplit split;
  if (measures.empty()) {
    split = split_runs(b);
  } else {
    try {
      cmp = run_split_comparison(b, measures, ropt);
      split = cmp->split;
    } catch (const InsufficientGroupError& e) {
      report.annotations.push_back(std::string("profiles: skipped, ") + e.what());
      split = split_runs(b);
    }
  }
  const std::set<std::string> failed(split.failed.begin(), split.failed.end());
  Json& runs = report.table("runs");
  for (std::size_t r = 0; r < b.runs.size(); ++r) {
    runs.push_back({{"run_id", b.runs[r].run_id},
                    {"accuracy", scaled(split.accuracies[r], o.raw)},
                    {"group", failed.count(b.runs[r].run_id) ? "failed" : "successful"}});
  }
  report.table("summary").push_back({{"majority_baseline", scaled(split.majority_baseline, o.raw)},
                                     {"successful", split.successful.size()},
                                     {"failed", split.failed.size()}});
  if (cmp) {
    const auto layers = parse_layers(layer_flag, b.layer_count);
    const std::set<std::size_t> keep(layers.begin(), layers.end());
    auto restrict = [&](std::vector<LayerInstabilityProfile> profiles) {
      for (auto& p : profiles) {
        LayerInstabilityProfile kept{p.measure, {}, {}};
        for (std::size_t i = 0; i < p.layers.size(); ++i) {
          if (keep.count(p.layers[i])) {
            kept.layers.push_back(p.layers[i]);
            kept.scores.push_back(p.scores[i]);
          }
        }
        p = std::move(kept);
      }
      return profiles;
    };
    profile_rows(report.table("profiles"), restrict(cmp->successful), "successful");
    profile_rows(report.table("profiles"), restrict(cmp->failed), "failed");
  }
  return report;
}

Report cmd_rank(const std::vector<fs::path>& paths, const CommonOptions& o) {
  Report report;
  report.command = "rank";
  if (paths.size() < 3) throw InvalidArgument("rank needs at least 3 bundles");
  std::vector<EnsembleBundle> bundles;
  for (const fs::path& p : paths) bundles.push_back(load(report, p));
  for (std::size_t i = 1; i < bundles.size(); ++i) {
    const auto& a = bundles.front();
    const auto& c = bundles[i];
    if (c.num_samples() != a.num_samples() || c.num_classes != a.num_classes || c.gold != a.gold) {
      throw InvalidArgument("bundle " + paths[i].generic_string() + " does not share the dataset of " +
                            paths.front().generic_string());
    }
  }
  const RepresentationOptions ropt = representation_options(o);
  const std::vector<Measure> requested = resolve_measures(o.measures, kEveryMeasure);
  const std::string layer_flag = o.layers.empty() ? "top" : o.layers;
  record_common(report, o, requested);
  report.parameters["layer"] = layer_flag;
  std::vector<const EnsembleBundle*> views;
  for (const auto& b : bundles) views.push_back(&b);
  const std::vector<Measure> measures = supported(views, requested, report);
  if (measures.empty()) throw InvalidArgument("rank: no measure is supported by every bundle");

  const bool wants_layers = std::any_of(measures.begin(), measures.end(), is_representation_measure);
  std::optional<std::size_t> layer;
  if (wants_layers && layer_flag != "top") {
    const std::size_t l = parse_index(layer_flag);
    for (std::size_t i = 0; i < bundles.size(); ++i) {
      if (l >= bundles[i].layer_count) throw InvalidArgument("layer " + layer_flag + " out of range for " + paths[i].generic_string());
    }
    layer = l;
  }

  std::vector<GroupScores> groups;
  Json& table = report.table("groups");
  for (std::size_t i = 0; i < bundles.size(); ++i) {
    groups.push_back(group_scores(bundles[i], paths[i].generic_string(), measures, ropt, layer));
    Json row;
    row["group"] = groups.back().group_id;
    if (wants_layers) row["layer"] = layer.value_or(bundles[i].layer_count - 1);
    for (Measure m : measures) row[name_of(m)] = display(m, groups.back().scores.at(m), o.raw);
    table.push_back(std::move(row));
  }
  const CorrelationTable tau = rank_groups(groups);
  correlation_table(report.table("kendall_tau"), tau);
  report.annotations.insert(report.annotations.end(), tau.undefined.begin(), tau.undefined.end());
  return report;
}

Report cmd_bootstrap(const fs::path& path, const CommonOptions& o, std::size_t iterations, const std::string& layer_flag,
                     bool emit_scores) {
  Report report;
  report.command = "bootstrap";
  const EnsembleBundle b = load(report, path);
  const RepresentationOptions ropt = representation_options(o);
  const std::vector<Measure> requested = resolve_measures(o.measures, kEveryMeasure);
  record_common(report, o, requested);
  report.parameters["iterations"] = iterations;
  report.parameters["seed"] = o.seed;
  report.parameters["layer"] = layer_flag;
  report.parameters["emit_scores"] = emit_scores;
  const std::vector<Measure> measures = supported({&b}, requested, report);
  if (measures.empty()) throw InvalidArgument("bootstrap: no requested measure is supported by the bundle");

  const bool wants_layers = std::any_of(measures.begin(), measures.end(), is_representation_measure);
  std::optional<std::size_t> layer;
  if (wants_layers && layer_flag != "top") layer = parse_index(layer_flag);
  const BootstrapResult result = bootstrap_correlations(b, iterations, o.seed, measures, ropt, layer);
  if (wants_layers) report.table("summary").push_back({{"iterations", result.iterations}, {"layer", result.layer}});
  else report.table("summary").push_back({{"iterations", result.iterations}, {"layer", nullptr}});

  correlation_table(report.table("correlation"), result.correlation);
  report.annotations.insert(report.annotations.end(), result.correlation.undefined.begin(),
                            result.correlation.undefined.end());
  if (emit_scores) {
    Json& scores = report.table("scores");
    for (Eigen::Index i = 0; i < result.scores.rows(); ++i) {
      Json row;
      row["iteration"] = i;
      for (std::size_t j = 0; j < measures.size(); ++j) {
        row[name_of(measures[j])] = display(measures[j], result.scores(i, static_cast<Eigen::Index>(j)), o.raw);
      }
      scores.push_back(std::move(row));
    }
  }
  return report;
}

void cmd_synth(const SynthConfig& config, const fs::path& out) {
  config.validate();
  std::error_code ec;
  if (fs::exists(out, ec) && !fs::is_empty(out, ec)) {
    throw InvalidArgument("output directory " + out.generic_string() + " exists and is not empty");
  }
  save_bundle(generate_ensemble(config), out);
}

}  // namespace instab::cli
