#ifndef INSTAB_BUNDLE_HPP
#define INSTAB_BUNDLE_HPP

#include "instab/common.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace instab {

// One fine-tuning run evaluated on the shared test set.
struct RunRecord {
  std::string run_id;
  std::int64_t seed = 0;
  LabelVector predictions;                     // length n
  std::optional<Eigen::MatrixXd> probabilities;  // n x k, rows are distributions
  std::vector<Eigen::MatrixXd> layers;           // L matrices, n x e_l, bottom layer first
  std::map<std::string, std::string> tags;

  // Shape-aware exact comparison (Eigen's operator== requires equal sizes).
  bool operator==(const RunRecord& other) const;
};

// m >= 2 runs of one model configuration over one test set.
struct EnsembleBundle {
  std::string dataset_name;
  MetricKind metric = MetricKind::accuracy;
  int num_classes = 2;
  std::size_t layer_count = 0;
  LabelVector gold;
  std::vector<RunRecord> runs;

  std::size_t num_runs() const noexcept { return runs.size(); }
  std::size_t num_samples() const noexcept { return gold.size(); }
  bool has_probabilities() const noexcept;  // true iff every run carries probabilities
  Eigen::Index layer_width(std::size_t layer) const { return runs.front().layers.at(layer).cols(); }

  bool operator==(const EnsembleBundle& other) const;
};

// Checks every RunRecord and EnsembleBundle invariant; throws BundleError
// naming the offending run. Tolerance for probability row sums is 1e-6.
void validate(const EnsembleBundle& bundle);

// Returns a bundle restricted to the given sample rows (in the given order).
EnsembleBundle select_samples(const EnsembleBundle& bundle, const std::vector<std::size_t>& rows);
// Returns a bundle restricted to the given runs (duplicates allowed).
EnsembleBundle select_runs(const EnsembleBundle& bundle, const std::vector<std::size_t>& runs);

// Directory layout:
//   manifest.json
//   gold.csv
//   runs/<run_id>/predictions.csv
//   runs/<run_id>/probabilities.mtx        (optional)
//   runs/<run_id>/layers/layer_<ll>.mtx    (ll zero-padded, 00 = bottom)
EnsembleBundle load_bundle(const std::filesystem::path& dir);
void save_bundle(const EnsembleBundle& bundle, const std::filesystem::path& dir);

// Label CSV: header row, then `sample_id,label` lines with sample ids 0..n-1 in order.
LabelVector read_label_csv(const std::filesystem::path& path, const std::string& run_id = {});
void write_label_csv(const std::filesystem::path& path, const LabelVector& labels);

// Lowest index wins on ties.
int argmax_row(const Eigen::MatrixXd& probabilities, Eigen::Index row);

}  // namespace instab

#endif  // INSTAB_BUNDLE_HPP
