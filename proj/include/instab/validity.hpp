#ifndef INSTAB_VALIDITY_HPP
#define INSTAB_VALIDITY_HPP

#include "instab/representation.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace instab {

// Pearson r between the per-layer profiles of each pair of measures.
struct ConvergentReport {
  std::vector<Measure> measures;
  std::vector<LayerInstabilityProfile> profiles;
  Eigen::MatrixXd correlation;  // symmetric, unit diagonal
};

// Needs at least 3 layers. Throws UndefinedCorrelationError naming the
// measure whose profile is constant across layers.
ConvergentReport convergent_validity(const EnsembleBundle& bundle, const std::vector<Measure>& measures,
                                     const RepresentationOptions& options = {});

// Scores of one measure (at one layer, for representation measures) across subsamples.
struct SubsampleSeries {
  Measure measure = Measure::cka;
  std::optional<std::size_t> layer;
  std::vector<double> values;  // one per subsample
  double full_value = 0.0;     // same measure on the whole bundle
  double coefficient_of_variation = 0.0;
};

struct SubsampleReport {
  double rate = 0.5;
  std::size_t subsample_count = 4;
  std::size_t subsample_size = 0;
  std::uint64_t seed = 0;
  std::vector<std::vector<std::size_t>> index_sets;  // sorted sample rows per subsample
  std::vector<SubsampleSeries> series;

  // Largest coefficient of variation over the layers of `measure`.
  double max_cv(Measure measure) const;
};

// Subsample size is floor(rate * n); subsample i draws its rows without
// replacement from stream (seed, i). Every requested measure is recomputed on
// each row-restricted bundle, with representations re-centered per subsample.
SubsampleReport subsample_consistency(const EnsembleBundle& bundle, double rate, std::size_t count,
                                      std::uint64_t seed, const std::vector<Measure>& measures,
                                      const RepresentationOptions& options = {});

struct RunSplit {
  std::vector<std::string> successful;
  std::vector<std::string> failed;
  std::vector<double> accuracies;  // per run, bundle order
  double majority_baseline = 0.0;
};

// A run fails iff its accuracy <= the majority-class classifier's accuracy.
RunSplit split_runs(const EnsembleBundle& bundle);

struct RunSplitComparison {
  RunSplit split;
  std::vector<LayerInstabilityProfile> successful;
  std::vector<LayerInstabilityProfile> failed;
};

// Representation profiles computed within each group. Throws
// InsufficientGroupError when a group has fewer than 2 runs.
RunSplitComparison run_split_comparison(const EnsembleBundle& bundle, const std::vector<Measure>& measures,
                                        const RepresentationOptions& options = {});

}  // namespace instab

#endif  // INSTAB_VALIDITY_HPP
