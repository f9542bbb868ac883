#ifndef INSTAB_ANALYSIS_HPP
#define INSTAB_ANALYSIS_HPP

#include "instab/representation.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace instab {

// Pairwise correlation between measures. Entries that are undefined (a
// measure with zero variance or all ties) are NaN and listed in `undefined`.
struct CorrelationTable {
  std::vector<Measure> measures;
  Eigen::MatrixXd values;
  std::vector<std::string> undefined;

  double at(Measure a, Measure b) const;
};

// Scalar instability scores of one group of runs (e.g. one mitigation method).
struct GroupScores {
  std::string group_id;
  std::map<Measure, double> scores;
};

// Prediction measures on the whole bundle, representation measures on `layer`
// (topmost layer by default).
GroupScores group_scores(const EnsembleBundle& bundle, std::string group_id, const std::vector<Measure>& measures,
                         const RepresentationOptions& options = {}, std::optional<std::size_t> layer = {});

// Kendall tau-b between the group orderings induced by each pair of measures.
// Needs at least 3 groups sharing the measure set.
CorrelationTable rank_groups(const std::vector<GroupScores>& groups);

struct BootstrapResult {
  std::size_t iterations = 0;
  std::uint64_t seed = 0;
  std::size_t layer = 0;
  std::vector<Measure> measures;
  Eigen::MatrixXd scores;  // iterations x measures, in iteration order
  CorrelationTable correlation;
};

// Each iteration draws m run indices with replacement; pairwise terms run over
// all position pairs of the multiset, so duplicate draws add zero-distance
// pairs. Representation measures use `layer` (topmost by default).
BootstrapResult bootstrap_correlations(const EnsembleBundle& bundle, std::size_t iterations, std::uint64_t seed,
                                       const std::vector<Measure>& measures, const RepresentationOptions& options = {},
                                       std::optional<std::size_t> layer = {});

// Pearson r of the columns of a score table; the shared core of bootstrap_correlations.
CorrelationTable correlate_columns(const Eigen::MatrixXd& scores, const std::vector<Measure>& measures);

struct RegressionResult {
  std::vector<Measure> measures;
  Eigen::MatrixXd mean_correlation;   // combinations x measures: mean off-diagonal r per measure
  Eigen::MatrixXd standardized;       // same, z-scored down each column
  std::vector<double> consistency;    // per combination: mean standardized correlation
  std::vector<double> sd_values;
  double r = 0.0;                     // pearson(consistency, sd_values)
};

// Relates measure consistency to instability across several (bootstrap, SD)
// combinations. Needs >= 3 combinations with identical measure sets.
RegressionResult stability_consistency_regression(const std::vector<std::pair<BootstrapResult, double>>& results);

}  // namespace instab

#endif  // INSTAB_ANALYSIS_HPP
