#ifndef INSTAB_TOOLS_REPORT_HPP
#define INSTAB_TOOLS_REPORT_HPP

// Report documents emitted by the command-line tool. Results are named
// tables, each an array of flat records sharing one key set, so the same
// document renders to JSON or to one CSV file per table.

#include <json.hpp>

#include <deque>
#include <filesystem>
#include <string>
#include <vector>

namespace instab::cli {

using Json = nlohmann::ordered_json;

inline constexpr const char* kToolName = "instab";
inline constexpr const char* kToolVersion = "1.0.0";

struct Report {
  std::string command;
  Json parameters = Json::object();
  Json inputs = Json::array();  // {path, digest} per bundle, in argument order
  std::string scale = "percent";  // rendering of prediction measures and performance scores
  std::deque<std::pair<std::string, Json>> tables;  // stable references from table()
  std::vector<std::string> annotations;

  Json& table(const std::string& name);  // creates an empty table on first use
  void add_input(const std::filesystem::path& bundle_dir);
  Json to_json() const;
};

// NaN and infinities become null.
Json number(double value);

// FNV-1a 64 over every regular file below `dir`, visited in sorted relative
// path order; each file contributes its relative path, a NUL, its size and
// its bytes.
std::string bundle_digest(const std::filesystem::path& dir);

std::string render_json(const Report& report);
// Writes <table>.csv per table plus metadata.csv and annotations.csv.
void write_csv(const Report& report, const std::filesystem::path& dir);

}  // namespace instab::cli

#endif  // INSTAB_TOOLS_REPORT_HPP
