#include "instab/prediction.hpp"

#include "instab/stats.hpp"

#include <cmath>

namespace instab {
namespace {

void require_pairs(Eigen::Index m, const char* what) {
  if (m < 2) throw InvalidArgument(std::string(what) + ": need at least 2 runs");
}

struct Tallies {
  std::uint64_t agreeing_pairs = 0;     // sum over items and classes of C(x_ij, 2)
  std::vector<std::uint64_t> class_totals;  // sum over items of x_ij
};

Tallies tally(const PredictionSet& preds) {
  const Eigen::Index m = preds.num_runs();
  const Eigen::Index n = preds.num_samples();
  Tallies t;
  t.class_totals.assign(static_cast<std::size_t>(preds.num_classes), 0);
  std::vector<std::uint64_t> counts(static_cast<std::size_t>(preds.num_classes));
  for (Eigen::Index item = 0; item < n; ++item) {
    std::fill(counts.begin(), counts.end(), 0);
    for (Eigen::Index run = 0; run < m; ++run) {
      const int label = preds.labels(run, item);
      if (label < 0 || label >= preds.num_classes) throw InvalidArgument("prediction label out of range");
      ++counts[static_cast<std::size_t>(label)];
    }
    for (std::size_t c = 0; c < counts.size(); ++c) {
      if (counts[c] > 1) t.agreeing_pairs += counts[c] * (counts[c] - 1) / 2;
      t.class_totals[c] += counts[c];
    }
  }
  return t;
}

std::uint64_t total_pairs(const PredictionSet& preds) {
  const auto m = static_cast<std::uint64_t>(preds.num_runs());
  return static_cast<std::uint64_t>(preds.num_samples()) * (m * (m - 1) / 2);
}

unsigned __int128 gcd_wide(unsigned __int128 a, unsigned __int128 b) {
  while (b != 0) {
    const unsigned __int128 r = a % b;
    a = b;
    b = r;
  }
  return a == 0 ? 1 : a;
}

double entropy2(const Eigen::Ref<const Eigen::RowVectorXd>& p) {
  double h = 0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p[i] > 0) h -= p[i] * std::log2(p[i]);
  }
  return h;
}

}  // namespace

PredictionSet prediction_set(const EnsembleBundle& b) {
  PredictionSet out;
  out.num_classes = b.num_classes;
  out.labels.resize(static_cast<Eigen::Index>(b.runs.size()), static_cast<Eigen::Index>(b.num_samples()));
  for (std::size_t r = 0; r < b.runs.size(); ++r) {
    for (std::size_t i = 0; i < b.num_samples(); ++i) {
      out.labels(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(i)) = b.runs[r].predictions.at(i);
    }
  }
  return out;
}

ProbabilitySet probability_set(const EnsembleBundle& b) {
  if (!b.has_probabilities()) throw CapabilityError("jsd requires class probabilities, which this bundle lacks");
  ProbabilitySet out;
  for (const RunRecord& run : b.runs) out.runs.push_back(*run.probabilities);
  return out;
}

PredictionSet resample_runs(const PredictionSet& set, const std::vector<std::size_t>& runs) {
  PredictionSet out;
  out.num_classes = set.num_classes;
  const std::vector<Eigen::Index> idx(runs.begin(), runs.end());
  out.labels = set.labels(idx, Eigen::all);
  return out;
}

ProbabilitySet resample_runs(const ProbabilitySet& set, const std::vector<std::size_t>& runs) {
  ProbabilitySet out;
  for (std::size_t r : runs) out.runs.push_back(set.runs.at(r));
  return out;
}

double pairwise_disagreement(const PredictionSet& preds) {
  require_pairs(preds.num_runs(), "pairwise_disagreement");
  const std::uint64_t total = total_pairs(preds);
  if (total == 0) throw InvalidArgument("pairwise_disagreement: no samples");
  const Tallies t = tally(preds);
  return static_cast<double>(total - t.agreeing_pairs) / static_cast<double>(total);
}

AgreementStats agreement_stats(const PredictionSet& preds) {
  require_pairs(preds.num_runs(), "agreement_stats");
  const std::uint64_t total = total_pairs(preds);
  if (total == 0) throw InvalidArgument("agreement_stats: no samples");
  const Tallies t = tally(preds);
  const double ratings = static_cast<double>(preds.num_runs()) * static_cast<double>(preds.num_samples());
  AgreementStats s;
  s.p_a = static_cast<double>(t.agreeing_pairs) / static_cast<double>(total);
  s.p_epsilon = 0;
  for (std::uint64_t c : t.class_totals) {
    const double share = static_cast<double>(c) / ratings;
    s.p_epsilon += share * share;
  }
  return s;
}

double fleiss_kappa_instability(const PredictionSet& preds) {
  require_pairs(preds.num_runs(), "fleiss_kappa_instability");
  const std::uint64_t total = total_pairs(preds);
  if (total == 0) throw InvalidArgument("fleiss_kappa_instability: no samples");
  const Tallies t = tally(preds);
  // 1 - (p_a - p_eps) / (1 - p_eps) reduces to N^2 (P - A) / (P (N^2 - S)) with
  // N ratings, P run pairs, A agreeing pairs and S the sum of squared class
  // totals. Evaluating that fraction in integers and dividing once gives the
  // correctly rounded value whenever both reduced terms fit in 53 bits.
  using Wide = unsigned __int128;
  const Wide ratings = static_cast<Wide>(preds.num_runs()) * static_cast<Wide>(preds.num_samples());
  Wide squares = 0;
  for (std::uint64_t c : t.class_totals) squares += static_cast<Wide>(c) * c;
  const Wide chance_gap = ratings * ratings - squares;
  if (chance_gap == 0) throw DegenerateInputError("fleiss kappa undefined: every prediction is the same class (p_eps = 1)");
  Wide num = ratings * ratings * (total - t.agreeing_pairs);
  Wide den = static_cast<Wide>(total) * chance_gap;
  const Wide g = gcd_wide(num, den);
  num /= g;
  den /= g;
  return static_cast<double>(num) / static_cast<double>(den);
}

double jensen_shannon(const Eigen::Ref<const Eigen::RowVectorXd>& p, const Eigen::Ref<const Eigen::RowVectorXd>& q) {
  if (p.size() != q.size()) throw InvalidArgument("jensen_shannon: distributions differ in length");
  const Eigen::RowVectorXd mix = 0.5 * (p + q);
  return std::max(0.0, entropy2(mix) - 0.5 * (entropy2(p) + entropy2(q)));
}

Eigen::MatrixXd pairwise_jsd_matrix(const ProbabilitySet& probs) {
  const std::size_t m = probs.runs.size();
  require_pairs(static_cast<Eigen::Index>(m), "pairwise_jsd");
  const Eigen::Index n = probs.runs.front().rows();
  for (const auto& p : probs.runs) {
    if (p.rows() != n || p.cols() != probs.runs.front().cols()) throw InvalidArgument("pairwise_jsd: shape mismatch");
  }
  if (n == 0) throw InvalidArgument("pairwise_jsd: no samples");
  // Row entropies are shared by every pair a run takes part in.
  Eigen::MatrixXd row_entropy(static_cast<Eigen::Index>(m), n);
  for (std::size_t r = 0; r < m; ++r) {
    for (Eigen::Index i = 0; i < n; ++i) row_entropy(static_cast<Eigen::Index>(r), i) = entropy2(probs.runs[r].row(i));
  }
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
  Eigen::RowVectorXd mix(probs.runs.front().cols());
  for (std::size_t a = 0; a < m; ++a) {
    const auto ia = static_cast<Eigen::Index>(a);
    for (std::size_t b = a + 1; b < m; ++b) {
      const auto ib = static_cast<Eigen::Index>(b);
      double pair_sum = 0;
      for (Eigen::Index i = 0; i < n; ++i) {
        mix = 0.5 * (probs.runs[a].row(i) + probs.runs[b].row(i));
        pair_sum += std::max(0.0, entropy2(mix) - 0.5 * (row_entropy(ia, i) + row_entropy(ib, i)));
      }
      out(ia, ib) = out(ib, ia) = pair_sum / static_cast<double>(n);
    }
  }
  return out;
}

double pairwise_jsd(const ProbabilitySet& probs) {
  const Eigen::MatrixXd d = pairwise_jsd_matrix(probs);
  const Eigen::Index m = d.rows();
  double sum = 0;
  for (Eigen::Index a = 0; a < m; ++a) {
    for (Eigen::Index b = a + 1; b < m; ++b) sum += d(a, b);
  }
  return sum / (static_cast<double>(m) * static_cast<double>(m - 1) / 2.0);
}

PredictionReport prediction_report(const EnsembleBundle& b) {
  PredictionReport report;
  for (const RunRecord& run : b.runs) {
    report.run_scores.push_back(stats::performance_score(run.predictions, b.gold, b.metric, b.num_classes));
  }
  report.mean_score = stats::mean(report.run_scores);
  report.scores[Measure::sd] = stats::sd_of_scores(report.run_scores);

  const PredictionSet preds = prediction_set(b);
  report.agreement = agreement_stats(preds);
  report.scores[Measure::pwd] = pairwise_disagreement(preds);
  try {
    const double kappa = fleiss_kappa_instability(preds);
    report.scores[Measure::kappa] = kappa;
    if (kappa > 1.0) {
      report.notes.push_back("kappa: instability exceeds 1 (worse-than-chance agreement between runs)");
    }
  } catch (const DegenerateInputError& e) {
    report.notes.push_back(std::string("kappa: ") + e.what());
  }
  if (b.has_probabilities()) {
    report.scores[Measure::jsd] = pairwise_jsd(probability_set(b));
  } else {
    report.notes.push_back("jsd: bundle has no class probabilities");
  }
  return report;
}

}  // namespace instab
