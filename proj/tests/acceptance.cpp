#include "instab/analysis.hpp"
#include "instab/bundle.hpp"
#include "instab/oracle.hpp"
#include "instab/prediction.hpp"
#include "instab/representation.hpp"
#include "instab/stats.hpp"
#include "instab/synth.hpp"
#include "instab/validity.hpp"

#include "support.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <set>
#include <sys/wait.h>

using namespace instab;
using testing::TempDir;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* pattern, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, pattern, args...);
  return buf;
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  return stats::pearson_r(testing::ranks(x), testing::ranks(y));
}

// 1. I_kappa (1 - p_eps) equals I_pwd on random prediction sets.
Outcome kappa_identity() {
  std::mt19937_64 rng(101);
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  double worst = 0;
  int evaluated = 0;
  const auto start = Clock::now();
  while (evaluated < 1000) {
    const int m = pick(2, 10), n = pick(1, 50), k = pick(2, 5);
    PredictionSet preds{Eigen::MatrixXi(m, n), k};
    for (int r = 0; r < m; ++r) {
      for (int i = 0; i < n; ++i) preds.labels(r, i) = pick(0, k - 1);
    }
    const AgreementStats s = agreement_stats(preds);
    if (s.p_epsilon == 1.0) continue;  // kappa undefined; redraw
    const double lhs = fleiss_kappa_instability(preds) * (1.0 - s.p_epsilon);
    worst = std::max(worst, std::abs(lhs - pairwise_disagreement(preds)));
    ++evaluated;
  }
  const double elapsed = seconds_since(start);
  return {worst <= 1e-12 && elapsed < 5.0,
          fmt("max |I_kappa(1-p_eps) - I_pwd| = %.3g over %d sets, %.3f s", worst, evaluated, elapsed)};
}

// 2. Main paths against the naive oracle on random small bundles.
Outcome oracle_equivalence() {
  std::mt19937_64 rng(202);
  const testing::RandomBundleShape shape{6, 30, 4, 3, 40, true};
  int bundles = 0, mismatched_exact = 0;
  double worst_jsd = 0, worst_repr = 0;
  const auto start = Clock::now();
  while (bundles < 100) {
    const EnsembleBundle b = testing::random_bundle(rng, shape);
    if (!b.has_probabilities() || b.layer_count == 0) continue;
    const PredictionSet preds = prediction_set(b);
    if (agreement_stats(preds).p_epsilon == 1.0) continue;
    const auto ref = oracle::oracle_measures(b);
    if (ref.at("pwd") != pairwise_disagreement(preds)) ++mismatched_exact;
    if (ref.at("kappa") != fleiss_kappa_instability(preds)) ++mismatched_exact;
    worst_jsd = std::max(worst_jsd, std::abs(ref.at("jsd") - pairwise_jsd(probability_set(b))));
    for (std::size_t l = 0; l < b.layer_count; ++l) {
      for (Measure m : {Measure::svcca, Measure::op, Measure::cka}) {
        const std::string key = std::string(measure_name(m)) + "@" + std::to_string(l);
        worst_repr = std::max(worst_repr, std::abs(ref.at(key) - layer_instability(b, m, l)));
      }
    }
    ++bundles;
  }
  const double elapsed = seconds_since(start);
  return {mismatched_exact == 0 && worst_jsd <= 1e-12 && worst_repr <= 1e-8 && elapsed < 60.0,
          fmt("%d bundles: pwd/kappa exact mismatches %d, max jsd diff %.3g, max cka/op/svcca diff %.3g, %.2f s",
              bundles, mismatched_exact, worst_jsd, worst_repr, elapsed)};
}

// 3. Identity, orthogonal, scaling and symmetry invariances.
Outcome invariance_suite() {
  std::mt19937_64 rng(303);
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  std::uniform_real_distribution<double> scale_dist(0.01, 100.0);
  using Fn = std::function<double(const Eigen::MatrixXd&, const Eigen::MatrixXd&)>;
  const std::vector<std::pair<std::string, Fn>> measures{
      {"cca", [](const auto& x, const auto& y) { return cca_distance(x, y); }},
      {"svcca", [](const auto& x, const auto& y) { return svcca_distance(x, y); }},
      {"op", [](const auto& x, const auto& y) { return op_distance(x, y); }},
      {"cka", [](const auto& x, const auto& y) { return cka_distance(x, y); }},
  };
  std::map<std::string, double> self, orth, scale, sym;
  int wide = 0, tall = 0;
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::Index n, ex, ey;
    if (trial % 2 == 0) {
      n = pick(6, 20);
      ex = pick(static_cast<int>(n) + 1, 40);
      ey = pick(static_cast<int>(n) + 1, 40);
      ++wide;
    } else {
      n = pick(30, 90);
      ex = pick(2, 16);
      ey = pick(2, 16);
      ++tall;
    }
    const Eigen::MatrixXd x = testing::random_centered(rng, n, ex);
    const Eigen::MatrixXd mix = testing::gaussian(rng, ex, ey);
    const Eigen::MatrixXd y = center(x * mix + 0.5 * testing::gaussian(rng, n, ey));
    const Eigen::MatrixXd xr = x * testing::random_orthogonal(rng, ex);
    const Eigen::MatrixXd yr = y * testing::random_orthogonal(rng, ey);
    const double c = scale_dist(rng);
    for (const auto& [name, d] : measures) {
      const double base = d(x, y);
      self[name] = std::max(self[name], std::abs(d(x, x)));
      orth[name] = std::max(orth[name], std::abs(d(xr, yr) - base));
      scale[name] = std::max(scale[name], std::abs(d(c * x, y) - base));
      sym[name] = std::max(sym[name], std::abs(d(y, x) - base));
    }
  }
  bool pass = wide > 0 && tall > 0;
  std::string detail = fmt("%d matrices (%d with n<e, %d with n>e);", wide + tall, wide, tall);
  for (const auto& [name, fn] : measures) {
    const double self_tol = (name == "op" || name == "cka") ? 1e-10 : 1e-8;
    pass = pass && self[name] <= self_tol && orth[name] <= 1e-8 && sym[name] <= 1e-10;
    if (name == "op" || name == "cka") pass = pass && scale[name] <= 1e-8;
    detail += fmt(" %s self %.2g orth %.2g scale %.2g sym %.2g;", name.c_str(), self[name], orth[name], scale[name],
                  sym[name]);
  }
  return {pass, detail};
}

// 4. One-dimensional closed forms.
Outcome one_dimensional() {
  std::mt19937_64 rng(404);
  double worst_cka = 0, worst_op = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::MatrixXd x = testing::random_centered(rng, 50, 1);
    const Eigen::MatrixXd y = center(0.3 * (trial % 7 - 3) * x + testing::gaussian(rng, 50, 1));
    std::vector<double> xv(x.data(), x.data() + 50), yv(y.data(), y.data() + 50);
    const double rho = stats::pearson_r(xv, yv);
    worst_cka = std::max(worst_cka, std::abs(cka_similarity(x, y) - rho * rho));
    worst_op = std::max(worst_op, std::abs(op_similarity(x, y) - std::abs(rho)));
  }
  return {worst_cka <= 1e-10 && worst_op <= 1e-10,
          fmt("200 pairs: max |cka - rho^2| = %.3g, max |op - |rho|| = %.3g", worst_cka, worst_op)};
}

std::map<std::string, double> all_scores(const EnsembleBundle& b) {
  std::map<std::string, double> out;
  for (const auto& [m, v] : prediction_report(b).scores) out[std::string(measure_name(m))] = v;
  for (const auto& p : representation_profile(b, {Measure::svcca, Measure::op, Measure::cka})) {
    for (std::size_t l = 0; l < p.scores.size(); ++l) {
      out[std::string(measure_name(p.measure)) + "@" + std::to_string(p.layers[l])] = p.scores[l];
    }
  }
  return out;
}

// 5. Every measure rises along a ten-level noise ladder.
Outcome noise_ladder() {
  std::vector<double> sigmas;
  std::map<std::string, std::vector<double>> series;
  for (int i = 0; i < 10; ++i) {
    SynthConfig cfg;
    cfg.n = 256;
    cfg.layer_widths = {32, 32, 32, 32};
    cfg.m = 10;
    cfg.noise_scale = 0.002 * std::pow(1.8, i);
    cfg.seed = 7;
    sigmas.push_back(cfg.noise_scale);
    for (const auto& [name, v] : all_scores(generate_ensemble(cfg))) series[name].push_back(v);
  }
  double lowest = 1.0;
  std::string lowest_name;
  int monotone = 0;
  for (const auto& [name, values] : series) {
    const double rho = spearman(sigmas, values);
    if (rho < lowest) {
      lowest = rho;
      lowest_name = name;
    }
    if (std::is_sorted(values.begin(), values.end())) ++monotone;
  }
  return {lowest >= 0.9 && series.size() == 4 + 12,
          fmt("%zu series, min Spearman %.4f (%s), %d strictly ordered", series.size(), lowest, lowest_name.c_str(),
              monotone)};
}

// 6. Failed-run profiles sit below successful ones; the split recovers them.
Outcome failed_runs() {
  SynthConfig cfg;
  cfg.n = 256;
  cfg.layer_widths = {32, 32, 32, 32};
  cfg.m = 20;
  cfg.noise_scale = 0.1;
  cfg.failed_fraction = 0.45;
  cfg.failed_update_scale = 0.1;
  cfg.seed = 3;
  const EnsembleBundle b = generate_ensemble(cfg);
  std::set<std::string> constructed;
  for (const auto& run : b.runs) {
    if (run.tags.at("role") == "failed") constructed.insert(run.run_id);
  }
  const RunSplitComparison cmp = run_split_comparison(b, {Measure::cka, Measure::op});
  const std::set<std::string> recovered(cmp.split.failed.begin(), cmp.split.failed.end());
  bool below = true;
  double widest = -1;  // largest failed - successful gap, must stay negative
  for (std::size_t i = 0; i < cmp.successful.size(); ++i) {
    for (std::size_t l = 0; l < cmp.successful[i].scores.size(); ++l) {
      const double gap = cmp.failed[i].scores[l] - cmp.successful[i].scores[l];
      widest = std::max(widest, gap);
      below = below && gap < 0;
    }
  }
  return {below && recovered == constructed && !constructed.empty(),
          fmt("%zu constructed failures, %zu recovered, sets equal: %s; max failed-successful gap %.4f", constructed.size(),
              recovered.size(), recovered == constructed ? "yes" : "no", widest)};
}

// 7. Subsample dispersion on an i.i.d. bundle; zero at rate 1.
Outcome subsample_dispersion(std::vector<std::string>& info) {
  SynthConfig cfg;
  cfg.n = 512;
  cfg.layer_widths = {16, 16, 16};
  cfg.m = 10;
  cfg.noise_scale = 0.3;
  cfg.seed = 1;
  const EnsembleBundle b = generate_ensemble(cfg);
  const std::vector<Measure> measures(std::begin(kAllMeasures), std::end(kAllMeasures));
  const SubsampleReport half = subsample_consistency(b, 0.5, 4, 11, measures);
  double worst = 0;
  std::string worst_name;
  for (const auto& s : half.series) {
    const std::string name =
        std::string(measure_name(s.measure)) + (s.layer ? "@" + std::to_string(*s.layer) : std::string());
    if (s.measure == Measure::sd) {
      info.push_back(fmt("sd coefficient of variation %.4f (not asserted)", s.coefficient_of_variation));
      continue;
    }
    if (s.coefficient_of_variation > worst) {
      worst = s.coefficient_of_variation;
      worst_name = name;
    }
  }
  const SubsampleReport full = subsample_consistency(b, 1.0, 4, 11, measures);
  double full_worst = 0;
  for (const auto& s : full.series) full_worst = std::max(full_worst, s.coefficient_of_variation);
  return {worst < 0.05 && full_worst == 0.0,
          fmt("rate 0.5: max CV %.4f (%s) over pwd, kappa, jsd and every layer of svcca, op, cka; rate 1.0: max CV %g",
              worst, worst_name.c_str(), full_worst)};
}

// 8. Bootstrap correlations on a heterogeneous ensemble.
Outcome bootstrap_consistency() {
  SynthConfig cfg;
  cfg.n = 200;
  cfg.layer_widths = {64, 64};
  cfg.m = 10;
  cfg.noise_scale = 0.2;
  cfg.seed = 1;
  const EnsembleBundle b = generate_ensemble(cfg);
  const std::vector<Measure> measures(std::begin(kAllMeasures), std::end(kAllMeasures));
  const auto start = Clock::now();
  const BootstrapResult r = bootstrap_correlations(b, 1000, 5, measures);
  const double elapsed = seconds_since(start);
  const double pwd_kappa = r.correlation.at(Measure::pwd, Measure::kappa);
  const double sd_cka = r.correlation.at(Measure::sd, Measure::cka);
  return {pwd_kappa >= 0.95 && pwd_kappa > sd_cka && elapsed < 60.0,
          fmt("B=1000: r(pwd,kappa) = %.4f, r(sd,cka) = %.4f, %.2f s", pwd_kappa, sd_cka, elapsed)};
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(INSTAB_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::map<std::string, std::string> tree_bytes(const fs::path& root) {
  std::map<std::string, std::string> out;
  if (fs::is_regular_file(root)) {
    out[""] = testing::read_file(root);
    return out;
  }
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (entry.is_regular_file()) out[fs::relative(entry.path(), root).string()] = testing::read_file(entry.path());
  }
  return out;
}

// 9. Seeded commands are byte-reproducible, including across thread counts.
Outcome cli_determinism() {
  TempDir dir("instab-accept");
  const std::string synth_flags = " --n 160 --k 3 --e 12,12,12 --m 8 --failed-fraction 0.25";
  int compared = 0, differing = 0, failures = 0;
  std::vector<std::string> bundles;
  for (int g = 0; g < 3; ++g) {
    const std::string a = (dir / ("s" + std::to_string(g) + "a")).string();
    const std::string b = (dir / ("s" + std::to_string(g) + "b")).string();
    const std::string flags = synth_flags + " --seed 9 --noise 0." + std::to_string(g + 1);
    failures += run_cli("synth" + flags + " --out " + a) != 0;
    failures += run_cli("synth" + flags + " --out " + b) != 0;
    ++compared;
    differing += tree_bytes(a) != tree_bytes(b);
    bundles.push_back(a);
  }
  const std::string& bundle = bundles[0];
  const std::vector<std::string> commands{
      "measure " + bundle,
      "validity convergent " + bundle,
      "validity subsample " + bundle + " --rate 0.5 --count 4 --seed 3",
      "validity runs " + bundle,
      "rank " + bundles[0] + " " + bundles[1] + " " + bundles[2],
      "bootstrap " + bundle + " --iters 200 --seed 4 --emit-scores",
  };
  int index = 0;
  for (const auto& command : commands) {
    for (const char* format : {"json", "csv"}) {
      const std::string tag = std::to_string(index++);
      const fs::path first = dir / ("o" + tag + "a"), second = dir / ("o" + tag + "b"), third = dir / ("o" + tag + "c");
      const std::string base = command + " --format " + format + " --out ";
      failures += run_cli(base + first.string()) != 0;
      failures += run_cli(base + second.string()) != 0;
      failures += run_cli(base + third.string() + " --threads 8") != 0;
      const auto ref = tree_bytes(first);
      compared += 2;
      differing += (ref != tree_bytes(second)) + (ref != tree_bytes(third));
      if (ref.empty()) ++failures;
    }
  }
  return {failures == 0 && differing == 0,
          fmt("%d comparisons over synth and %zu commands in json and csv, %d differing, %d failed runs", compared,
              commands.size(), differing, failures)};
}

// 10. Random bundles survive save -> load -> save byte for byte.
Outcome format_round_trip() {
  std::mt19937_64 rng(1010);
  TempDir dir("instab-roundtrip");
  int identical = 0, equal_values = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const EnsembleBundle original = testing::random_bundle(rng);
    const fs::path a = dir / ("a" + std::to_string(trial)), b = dir / ("b" + std::to_string(trial));
    save_bundle(original, a);
    const EnsembleBundle loaded = load_bundle(a);
    equal_values += loaded == original;
    save_bundle(loaded, b);
    identical += tree_bytes(a) == tree_bytes(b);
  }
  return {identical == 100 && equal_values == 100,
          fmt("100 bundles: %d byte-identical rewrites, %d value-equal loads", identical, equal_values)};
}

}  // namespace

int main() {
  std::vector<std::string> info;
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"kappa-disagreement identity", kappa_identity},
      {"oracle equivalence", oracle_equivalence},
      {"representation invariances", invariance_suite},
      {"one-dimensional closed forms", one_dimensional},
      {"noise ladder monotonicity", noise_ladder},
      {"failed-run separation", failed_runs},
      {"subsample dispersion", [&] { return subsample_dispersion(info); }},
      {"bootstrap consistency", bootstrap_consistency},
      {"cli determinism", cli_determinism},
      {"bundle round trip", format_round_trip},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome outcome;
    try {
      outcome = criteria[i].second();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    failed += !outcome.pass;
    std::printf("%s [%zu] %s: %s\n", outcome.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                outcome.detail.c_str());
    for (const auto& line : info) std::printf("     info: %s\n", line.c_str());
    info.clear();
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
