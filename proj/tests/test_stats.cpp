#include "instab/stats.hpp"

#include "support.hpp"

#include <doctest.h>

#include <cmath>

using namespace instab;
using doctest::Approx;

namespace {

std::vector<double> affine(const std::vector<double>& v, double a, double b) {
  std::vector<double> out;
  for (double x : v) out.push_back(a * x + b);
  return out;
}

}  // namespace

TEST_CASE("performance_score on hand-counted confusion matrices") {
  const LabelVector gold{1, 1, 1, 0};
  CHECK(stats::performance_score(gold, gold, MetricKind::accuracy) == 1.0);
  CHECK(stats::performance_score(LabelVector{1, 1, 0, 0}, gold, MetricKind::f1) == Approx(0.8).epsilon(1e-15));
  CHECK(stats::performance_score(LabelVector{1, 1, 0, 0}, LabelVector{1, 0, 1, 0}, MetricKind::mcc) == 0.0);
  CHECK(stats::performance_score(LabelVector{1, 1, 0, 0}, gold, MetricKind::accuracy) == 0.75);
  CHECK(stats::performance_score(LabelVector{0, 1, 2}, LabelVector{0, 2, 2}, MetricKind::accuracy, 3) ==
        Approx(2.0 / 3.0));
}

TEST_CASE("f1 and mcc are 0 when their denominators vanish") {
  CHECK(stats::performance_score(LabelVector{0, 0}, LabelVector{0, 0}, MetricKind::f1) == 0.0);
  CHECK(stats::performance_score(LabelVector{1, 1}, LabelVector{1, 0}, MetricKind::mcc) == 0.0);
}

TEST_CASE("mcc is +1 and -1 on perfect and inverted predictions") {
  const LabelVector gold{1, 0, 1, 0, 1};
  CHECK(stats::performance_score(gold, gold, MetricKind::mcc) == Approx(1.0));
  CHECK(stats::performance_score(LabelVector{0, 1, 0, 1, 0}, gold, MetricKind::mcc) == Approx(-1.0));
}

TEST_CASE("performance_score rejects length mismatch and multi-class f1") {
  CHECK_THROWS_AS(stats::performance_score(LabelVector{0, 1}, LabelVector{0}, MetricKind::accuracy), InvalidArgument);
  CHECK_THROWS_AS(stats::performance_score(LabelVector{0, 2}, LabelVector{0, 1}, MetricKind::f1, 3), InvalidArgument);
}

TEST_CASE("sd_of_scores uses the sample formula") {
  CHECK(stats::sd_of_scores(std::vector<double>{0.7, 0.7, 0.7}) == 0.0);
  CHECK(stats::sd_of_scores(std::vector<double>{0.7, 0.8}) == Approx(0.0707106781).epsilon(1e-9));
  CHECK(stats::sd_of_scores(std::vector<double>{1, 2, 3, 4}) == Approx(std::sqrt(5.0 / 3.0)));
  CHECK_THROWS_AS(stats::sd_of_scores(std::vector<double>{0.5}), InvalidArgument);
}

TEST_CASE("format_mean_sd renders percent with one decimal") {
  CHECK(stats::format_mean_sd(0.713, 0.018) == "71.3 ± 1.8");
  CHECK(stats::format_percent(0.138) == "13.8");
}

TEST_CASE("pearson_r closed forms") {
  const std::vector<double> x{1, 2, 3};
  CHECK(stats::pearson_r(x, x) == Approx(1.0));
  CHECK(stats::pearson_r(x, affine(x, -1, 0)) == Approx(-1.0));
  CHECK(stats::pearson_r(x, std::vector<double>{2, 4, 7}) == Approx(15.0 / std::sqrt(228.0)).epsilon(1e-12));
  CHECK_THROWS_AS(stats::pearson_r(x, std::vector<double>{5, 5, 5}), UndefinedCorrelationError);
}

TEST_CASE("kendall_tau counts concordant pairs") {
  const std::vector<double> x{1, 2, 3, 4, 5};
  CHECK(stats::kendall_tau(x, x) == 1.0);
  CHECK(stats::kendall_tau(x, std::vector<double>{5, 4, 3, 2, 1}) == -1.0);
  CHECK(stats::kendall_tau(x, std::vector<double>{1, 3, 2, 4, 5}) == Approx(0.8).epsilon(1e-15));
  CHECK_THROWS_AS(stats::kendall_tau(x, std::vector<double>{2, 2, 2, 2, 2}), UndefinedCorrelationError);
}

TEST_CASE("kendall_tau handles ties with the tau-b correction") {
  // x ties (1,2); pairs: 9 usable, concordant 8, discordant 0, one x-tie.
  const std::vector<double> x{1, 1, 2, 3, 4};
  const std::vector<double> y{1, 2, 3, 4, 5};
  CHECK(stats::kendall_tau(x, y) == Approx(9.0 / std::sqrt(9.0 * 10.0)));
}

TEST_CASE("zscore_standardize") {
  const auto z = stats::zscore_standardize(std::vector<double>{1, 2, 3});
  REQUIRE(z.size() == 3);
  CHECK(z[0] == Approx(-1.0));
  CHECK(z[1] == Approx(0.0));
  CHECK(z[2] == Approx(1.0));
  const auto again = stats::zscore_standardize(z);
  for (std::size_t i = 0; i < z.size(); ++i) CHECK(std::abs(again[i] - z[i]) <= 1e-12);

  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal;
  std::vector<double> v(20);
  for (double& x : v) x = normal(rng);
  const auto base = stats::zscore_standardize(v);
  const auto shifted = stats::zscore_standardize(affine(v, 3.5, -2.0));
  for (std::size_t i = 0; i < v.size(); ++i) CHECK(shifted[i] == Approx(base[i]).epsilon(1e-12));
  CHECK_THROWS_AS(stats::zscore_standardize(std::vector<double>{4, 4}), UndefinedCorrelationError);
}

TEST_CASE("pearson_r and kendall_tau stay in range and are symmetric on random data") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> x(8), y(8);
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] = normal(rng);
      y[i] = 0.5 * x[i] + normal(rng);
    }
    const double r = stats::pearson_r(x, y);
    const double tau = stats::kendall_tau(x, y);
    CHECK(std::abs(r) <= 1.0);
    CHECK(std::abs(tau) <= 1.0);
    CHECK(r == stats::pearson_r(y, x));
    CHECK(tau == stats::kendall_tau(y, x));
    CHECK(stats::pearson_r(affine(x, 2.0, 1.0), y) == Approx(r).epsilon(1e-12));
  }
}

TEST_CASE("coefficient_of_variation") {
  CHECK(stats::coefficient_of_variation(std::vector<double>{0.3, 0.3, 0.3}) == 0.0);
  CHECK(stats::coefficient_of_variation(std::vector<double>{1, 2, 3}) == Approx(0.5));
  CHECK(std::isnan(stats::coefficient_of_variation(std::vector<double>{-1, 1})));
}
