#include "instab/oracle.hpp"
#include "instab/prediction.hpp"

#include "support.hpp"

#include <doctest.h>

#include <cmath>

using namespace instab;
using doctest::Approx;

namespace {

PredictionSet runs(std::initializer_list<std::vector<int>> rows, int k = 2) {
  PredictionSet p;
  p.num_classes = k;
  p.labels.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index r = 0;
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) p.labels(r, static_cast<Eigen::Index>(i)) = row[i];
    ++r;
  }
  return p;
}

ProbabilitySet single_rows(std::initializer_list<std::vector<double>> rows) {
  ProbabilitySet out;
  for (const auto& row : rows) out.runs.push_back(Eigen::Map<const Eigen::RowVectorXd>(row.data(), static_cast<Eigen::Index>(row.size())));
  return out;
}

PredictionSet random_set(std::mt19937_64& rng, Eigen::Index m, Eigen::Index n, int k) {
  PredictionSet p;
  p.num_classes = k;
  p.labels.resize(m, n);
  std::uniform_int_distribution<int> label(0, k - 1);
  for (Eigen::Index r = 0; r < m; ++r) {
    for (Eigen::Index i = 0; i < n; ++i) p.labels(r, i) = label(rng);
  }
  return p;
}

}  // namespace

TEST_CASE("pairwise disagreement by direct pair count") {
  CHECK(pairwise_disagreement(runs({{0, 1, 1}, {0, 1, 1}, {0, 1, 1}})) == 0.0);
  CHECK(pairwise_disagreement(runs({{0, 0, 1, 1}, {0, 1, 1, 0}})) == 0.5);
  CHECK(pairwise_disagreement(runs({{0, 0}, {0, 1}, {1, 1}})) == Approx(2.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("agreement statistics by hand") {
  const AgreementStats same = agreement_stats(runs({{0, 1}, {0, 1}}));
  CHECK(same.p_a == 1.0);

  const AgreementStats a = agreement_stats(runs({{0, 1}, {0, 0}}));
  CHECK(a.p_a == 0.5);
  CHECK(a.p_epsilon == 0.625);

  const AgreementStats b = agreement_stats(runs({{0, 0, 1, 1}, {0, 1, 1, 0}}));
  CHECK(b.p_a == 0.5);
  CHECK(b.p_epsilon == 0.5);
}

TEST_CASE("fleiss kappa instability") {
  CHECK(fleiss_kappa_instability(runs({{0, 1, 1}, {0, 1, 1}, {0, 1, 1}})) == 0.0);
  CHECK(fleiss_kappa_instability(runs({{0, 0, 1, 1}, {0, 1, 1, 0}})) == Approx(1.0).epsilon(1e-15));
  // Worse-than-chance agreement pushes the score above 1; it is reported as is.
  CHECK(fleiss_kappa_instability(runs({{0, 1}, {0, 0}})) == Approx(4.0 / 3.0).epsilon(1e-15));
  CHECK_THROWS_AS(fleiss_kappa_instability(runs({{1, 1}, {1, 1}})), DegenerateInputError);
}

TEST_CASE("jensen-shannon divergence, base 2") {
  CHECK(pairwise_jsd(single_rows({{0.3, 0.7}, {0.3, 0.7}})) == 0.0);
  CHECK(pairwise_jsd(single_rows({{1, 0}, {0, 1}})) == Approx(1.0).epsilon(1e-15));
  CHECK(pairwise_jsd(single_rows({{1, 0}, {0.5, 0.5}})) == Approx(0.3112781245).epsilon(1e-10));
}

TEST_CASE("jsd is symmetric and bounded on random distributions") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 500; ++trial) {
    Eigen::RowVectorXd p(4), q(4);
    for (int c = 0; c < 4; ++c) {
      p[c] = unit(rng) * (trial % 3 == 0 && c == 0 ? 0.0 : 1.0);
      q[c] = unit(rng);
    }
    p /= p.sum();
    q /= q.sum();
    const double d = jensen_shannon(p, q);
    CHECK(d >= 0.0);
    CHECK(d <= 1.0);
    CHECK(d == Approx(jensen_shannon(q, p)).epsilon(1e-14));
    CHECK(std::abs(d - oracle::jensen_shannon(p, q)) <= 1e-12);
  }
}

TEST_CASE("kappa identity and oracle agreement on random prediction sets") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 300; ++trial) {
    const Eigen::Index m = 2 + trial % 7;
    const Eigen::Index n = 1 + (trial * 7) % 40;
    const int k = 2 + trial % 4;
    const PredictionSet p = random_set(rng, m, n, k);
    const double pwd = pairwise_disagreement(p);
    CHECK(pwd == oracle::pairwise_disagreement(p.labels));
    CHECK(pwd >= 0.0);
    CHECK(pwd <= 1.0);
    const AgreementStats s = agreement_stats(p);
    CHECK(std::abs((1.0 - s.p_a) - pwd) <= 1e-15);
    if (s.p_epsilon < 1.0) {
      const double kappa = fleiss_kappa_instability(p);
      CHECK(std::abs(kappa * (1.0 - s.p_epsilon) - pwd) <= 1e-12);
      CHECK(std::abs(kappa - oracle::fleiss_kappa_instability(p.labels, k)) <= 1e-12);
      CHECK(kappa >= pwd - 1e-12);
    }
  }
}

TEST_CASE("measures are invariant to run order") {
  std::mt19937_64 rng(23);
  const PredictionSet p = random_set(rng, 6, 30, 3);
  const PredictionSet shuffled = resample_runs(p, {3, 0, 5, 1, 4, 2});
  CHECK(pairwise_disagreement(p) == pairwise_disagreement(shuffled));
  CHECK(fleiss_kappa_instability(p) == Approx(fleiss_kappa_instability(shuffled)).epsilon(1e-14));
}

TEST_CASE("prediction_report on identical and two-run bundles") {
  EnsembleBundle b;
  b.num_classes = 2;
  b.gold = {1, 0, 1, 0, 1, 0, 1, 0, 1, 0};
  RunRecord a;
  a.run_id = "a";
  a.predictions = {1, 0, 1, 0, 1, 0, 1, 1, 0, 1};  // 7 of 10 correct
  std::mt19937_64 rng(1);
  a.probabilities = testing::probabilities_for(rng, a.predictions, 2);
  RunRecord c = a;
  c.run_id = "c";
  validate(EnsembleBundle{b.dataset_name, b.metric, b.num_classes, 0, b.gold, {a, c}});

  b.runs = {a, c};
  const PredictionReport same = prediction_report(b);
  CHECK(same.scores.at(Measure::sd) == 0.0);
  CHECK(same.scores.at(Measure::pwd) == 0.0);
  CHECK(same.scores.at(Measure::kappa) == 0.0);
  CHECK(same.scores.at(Measure::jsd) == 0.0);

  c.predictions = {1, 0, 1, 0, 1, 0, 1, 0, 0, 1};  // 8 of 10 correct
  c.probabilities = testing::probabilities_for(rng, c.predictions, 2);
  b.runs = {a, c};
  const PredictionReport two = prediction_report(b);
  CHECK(two.run_scores == std::vector<double>{0.7, 0.8});
  CHECK(two.scores.at(Measure::sd) == Approx(0.0707106781).epsilon(1e-9));
  CHECK(two.scores.at(Measure::pwd) == 0.1);
}

TEST_CASE("prediction_report notes missing probabilities and degenerate kappa") {
  EnsembleBundle b;
  b.num_classes = 2;
  b.gold = {0, 0, 1};
  RunRecord a;
  a.run_id = "a";
  a.predictions = {0, 0, 0};
  RunRecord c = a;
  c.run_id = "c";
  b.runs = {a, c};
  const PredictionReport r = prediction_report(b);
  CHECK(r.scores.count(Measure::jsd) == 0);
  CHECK(r.scores.count(Measure::kappa) == 0);
  CHECK(r.scores.at(Measure::pwd) == 0.0);
  CHECK(r.notes.size() == 2);
  CHECK_THROWS_AS(probability_set(b), CapabilityError);
}
