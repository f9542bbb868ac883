#ifndef INSTAB_TOOLS_COMMANDS_HPP
#define INSTAB_TOOLS_COMMANDS_HPP

#include "report.hpp"

#include "instab/synth.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace instab::cli {

// Flags shared by the analysis commands. Thread count and output location
// never reach the report, so they cannot change its bytes.
struct CommonOptions {
  std::string measures;           // comma list; empty selects the command default
  std::string layers;             // "all", "top" or a comma list of indices; empty selects the command default
  std::uint64_t seed = 0;
  unsigned threads = 1;
  bool raw = false;               // unit-scaled prediction measures
  std::string op_variant = "corrected";
  double svcca_threshold = 0.99;
};

Report cmd_measure(const std::filesystem::path& bundle, const CommonOptions& options);
Report cmd_convergent(const std::filesystem::path& bundle, const CommonOptions& options);
Report cmd_subsample(const std::filesystem::path& bundle, const CommonOptions& options, double rate, std::size_t count);
Report cmd_runs(const std::filesystem::path& bundle, const CommonOptions& options);
Report cmd_rank(const std::vector<std::filesystem::path>& bundles, const CommonOptions& options);
Report cmd_bootstrap(const std::filesystem::path& bundle, const CommonOptions& options, std::size_t iterations,
                     const std::string& layer, bool emit_scores);
// Refuses a non-empty output directory.
void cmd_synth(const SynthConfig& config, const std::filesystem::path& out);

}  // namespace instab::cli

#endif  // INSTAB_TOOLS_COMMANDS_HPP
