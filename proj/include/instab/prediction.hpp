#ifndef INSTAB_PREDICTION_HPP
#define INSTAB_PREDICTION_HPP

#include "instab/bundle.hpp"

#include <map>
#include <string>
#include <vector>

namespace instab {

// m x n matrix of discrete predictions, one row per run.
struct PredictionSet {
  Eigen::MatrixXi labels;
  int num_classes = 2;

  Eigen::Index num_runs() const noexcept { return labels.rows(); }
  Eigen::Index num_samples() const noexcept { return labels.cols(); }
};

// m matrices of shape n x k.
struct ProbabilitySet {
  std::vector<Eigen::MatrixXd> runs;
};

struct AgreementStats {
  double p_a = 1.0;        // mean fraction of agreeing run pairs per item
  double p_epsilon = 0.0;  // chance agreement from pooled class marginals
};

PredictionSet prediction_set(const EnsembleBundle& bundle);
ProbabilitySet probability_set(const EnsembleBundle& bundle);  // CapabilityError without probabilities

// Rows of `set` picked by `runs`; duplicates allowed (bootstrap multisets).
PredictionSet resample_runs(const PredictionSet& set, const std::vector<std::size_t>& runs);
ProbabilitySet resample_runs(const ProbabilitySet& set, const std::vector<std::size_t>& runs);

// Mean fraction of disagreeing (run, run) pairs per item. Computed from
// per-item class tallies, so the result is an exact ratio of integers.
double pairwise_disagreement(const PredictionSet& preds);

AgreementStats agreement_stats(const PredictionSet& preds);

// 1 - Fleiss' kappa. Satisfies instability * (1 - p_eps) == pairwise_disagreement
// up to rounding. Exceeds 1 when kappa is negative. Throws DegenerateInputError
// when every prediction is the same class (p_eps = 1).
double fleiss_kappa_instability(const PredictionSet& preds);

// Base-2 Jensen-Shannon divergence of two distributions, 0 log 0 = 0.
double jensen_shannon(const Eigen::Ref<const Eigen::RowVectorXd>& p, const Eigen::Ref<const Eigen::RowVectorXd>& q);

// Symmetric m x m matrix whose (a, b) entry is the mean JSD between runs a
// and b over all items; zero diagonal.
Eigen::MatrixXd pairwise_jsd_matrix(const ProbabilitySet& probs);

// Mean base-2 JSD over all run pairs and items.
double pairwise_jsd(const ProbabilitySet& probs);

struct PredictionReport {
  std::vector<double> run_scores;  // per-run performance against gold
  double mean_score = 0.0;
  std::map<Measure, double> scores;  // sd, pwd, kappa, jsd; a measure is absent when undefined
  AgreementStats agreement;
  std::vector<std::string> notes;    // capability gaps and range flags
};

// Computes SD, I_pwd, I_kappa and I_JSD for a validated bundle. JSD is
// skipped with a note when probabilities are missing.
PredictionReport prediction_report(const EnsembleBundle& bundle);

}  // namespace instab

#endif  // INSTAB_PREDICTION_HPP
