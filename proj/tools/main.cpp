#include "commands.hpp"

#include "instab/common.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <functional>
#include <iostream>

namespace {

namespace fs = std::filesystem;
using instab::cli::CommonOptions;
using instab::cli::Report;

struct Output {
  std::string format = "json";
  std::string out;
};

void add_common(CLI::App* cmd, CommonOptions& common, Output& output, bool seeded, bool layered) {
  cmd->add_option("--measures", common.measures, "Comma-separated measures: sd,pwd,kappa,jsd,svcca,op,cka");
  if (layered) cmd->add_option("--layers", common.layers, "all, top, or comma-separated layer indices");
  if (seeded) cmd->add_option("--seed", common.seed, "Seed for resampling")->capture_default_str();
  cmd->add_option("--threads", common.threads, "Worker threads")->check(CLI::Range(1u, 1024u))->capture_default_str();
  cmd->add_option("--format", output.format, "Report format")->check(CLI::IsMember({"json", "csv"}))->capture_default_str();
  cmd->add_option("--out", output.out, "Report file (json) or directory (csv); json defaults to stdout");
  cmd->add_flag("--raw", common.raw, "Report prediction measures on a 0-1 scale instead of percent");
  cmd->add_option("--op-variant", common.op_variant, "Orthogonal Procrustes normalization")
      ->check(CLI::IsMember({"corrected", "literal"}))
      ->capture_default_str();
  cmd->add_option("--svcca-threshold", common.svcca_threshold, "Share of squared singular mass SVCCA keeps")
      ->check(CLI::Range(1e-9, 1.0))
      ->capture_default_str();
}

void emit(const Report& report, const Output& output) {
  if (output.format == "csv") {
    if (output.out.empty()) throw instab::InvalidArgument("--format csv needs --out <directory>");
    instab::cli::write_csv(report, output.out);
    return;
  }
  const std::string text = instab::cli::render_json(report);
  if (output.out.empty()) {
    std::cout << text;
    return;
  }
  const fs::path path(output.out);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream file(path, std::ios::binary);
  file << text;
  if (!file) throw instab::Error("cannot write " + path.string());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Instability measures for ensembles of fine-tuned models", "instab"};
  app.set_version_flag("--version", instab::cli::kToolVersion);
  app.require_subcommand(1);

  CommonOptions common;
  Output output;
  std::string bundle;
  std::vector<std::string> bundles;
  double rate = 0.5;
  std::size_t count = 4;
  std::size_t iterations = 1000;
  std::string layer = "top";
  bool emit_scores = false;
  instab::SynthConfig synth;
  std::string synth_out;
  std::string synth_metric = "accuracy";
  std::function<Report()> run;

  auto* measure = app.add_subcommand("measure", "Prediction and per-layer representation instability of one bundle");
  measure->add_option("bundle", bundle, "Bundle directory")->required();
  add_common(measure, common, output, false, true);
  measure->callback([&] { run = [&] { return instab::cli::cmd_measure(bundle, common); }; });

  auto* validity = app.add_subcommand("validity", "Validity checks for the measures");
  validity->require_subcommand(1);
  auto* convergent = validity->add_subcommand("convergent", "Correlation of layer profiles across representation measures");
  convergent->add_option("bundle", bundle, "Bundle directory")->required();
  add_common(convergent, common, output, false, false);
  convergent->callback([&] { run = [&] { return instab::cli::cmd_convergent(bundle, common); }; });

  auto* subsample = validity->add_subcommand("subsample", "Measure consistency across random sample subsets");
  subsample->add_option("bundle", bundle, "Bundle directory")->required();
  subsample->add_option("--rate", rate, "Fraction of samples per subset")->check(CLI::Range(1e-9, 1.0))->capture_default_str();
  subsample->add_option("--count", count, "Number of subsets")->check(CLI::PositiveNumber)->capture_default_str();
  add_common(subsample, common, output, true, true);
  subsample->callback([&] { run = [&] { return instab::cli::cmd_subsample(bundle, common, rate, count); }; });

  auto* runs = validity->add_subcommand("runs", "Compare successful and failed runs");
  runs->add_option("bundle", bundle, "Bundle directory")->required();
  add_common(runs, common, output, false, true);
  runs->callback([&] { run = [&] { return instab::cli::cmd_runs(bundle, common); }; });

  auto* rank = app.add_subcommand("rank", "Kendall tau between measure rankings of several bundles");
  rank->add_option("bundles", bundles, "Bundle directories (at least 3)")->required()->expected(3, -1);
  add_common(rank, common, output, false, true);
  rank->callback([&] {
    run = [&] {
      std::vector<fs::path> paths(bundles.begin(), bundles.end());
      return instab::cli::cmd_rank(paths, common);
    };
  });

  auto* bootstrap = app.add_subcommand("bootstrap", "Pearson r between measures over run resamples");
  bootstrap->add_option("bundle", bundle, "Bundle directory")->required();
  bootstrap->add_option("--iters", iterations, "Bootstrap iterations")->check(CLI::Range(std::size_t{2}, std::size_t{10000000}))->capture_default_str();
  bootstrap->add_option("--layer", layer, "Layer for representation measures: top or an index")->capture_default_str();
  bootstrap->add_flag("--emit-scores", emit_scores, "Include the per-iteration score table");
  add_common(bootstrap, common, output, true, false);
  bootstrap->callback([&] { run = [&] { return instab::cli::cmd_bootstrap(bundle, common, iterations, layer, emit_scores); }; });

  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic ensemble bundle");
  synth_cmd->add_option("--n", synth.n, "Samples")->capture_default_str();
  synth_cmd->add_option("--k", synth.k, "Classes")->capture_default_str();
  synth_cmd->add_option("--e", synth.layer_widths, "Comma-separated layer widths")->delimiter(',')->capture_default_str();
  synth_cmd->add_option("--m", synth.m, "Runs")->capture_default_str();
  synth_cmd->add_option("--noise", synth.noise_scale, "Perturbation scale sigma")->capture_default_str();
  synth_cmd->add_option("--seed", synth.seed, "Generator seed")->capture_default_str();
  synth_cmd->add_option("--out", synth_out, "Output bundle directory")->required();
  synth_cmd->add_option("--failed-fraction", synth.failed_fraction, "Share of runs built as failed")->capture_default_str();
  synth_cmd->add_option("--failed-update-scale", synth.failed_update_scale, "Perturbation multiplier for failed runs")
      ->capture_default_str();
  synth_cmd->add_option("--failed-blend", synth.failed_blend, "Majority one-hot weight in failed readouts")->capture_default_str();
  synth_cmd->add_option("--label-noise", synth.label_noise, "Chance a gold label is flipped")->capture_default_str();
  synth_cmd->add_option("--logit-scale", synth.logit_scale, "Spread of base logits")->capture_default_str();
  synth_cmd->add_option("--metric", synth_metric, "accuracy, f1 or mcc")->capture_default_str();
  synth_cmd->add_option("--dataset-name", synth.dataset_name, "Dataset name in the manifest")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (synth_cmd->parsed()) {
      synth.metric = instab::parse_metric(synth_metric);
      instab::cli::cmd_synth(synth, synth_out);
      return 0;
    }
    emit(run(), output);
  } catch (const std::exception& e) {
    std::cerr << "instab: error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
