#include "report.hpp"

#include "instab/common.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace instab::cli {
namespace fs = std::filesystem;
namespace {

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

void fnv_update(std::uint64_t& h, const char* data, std::size_t size) {
  for (std::size_t i = 0; i < size; ++i) {
    h ^= static_cast<unsigned char>(data[i]);
    h *= kFnvPrime;
  }
}

std::string csv_cell(const Json& v) {
  if (v.is_null()) return "";
  if (v.is_string()) {
    const auto& s = v.get_ref<const std::string&>();
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string quoted = "\"";
    for (char c : s) {
      if (c == '"') quoted += '"';
      quoted += c;
    }
    return quoted + "\"";
  }
  if (v.is_number_float()) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v.get<double>());
    return buf;
  }
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number()) return v.dump();
  return v.dump();
}

void write_rows(const fs::path& path, const std::vector<std::string>& header, const std::vector<std::vector<Json>>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << csv_cell(Json(header[i]));
  out << '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << csv_cell(row[i]);
    out << '\n';
  }
  if (!out) throw Error("cannot write " + path.string());
}

}  // namespace

Json& Report::table(const std::string& name) {
  for (auto& [key, rows] : tables) {
    if (key == name) return rows;
  }
  tables.emplace_back(name, Json::array());
  return tables.back().second;
}

void Report::add_input(const fs::path& bundle_dir) {
  inputs.push_back({{"path", bundle_dir.generic_string()}, {"digest", bundle_digest(bundle_dir)}});
}

Json Report::to_json() const {
  Json doc;
  doc["tool"] = kToolName;
  doc["version"] = kToolVersion;
  doc["command"] = command;
  doc["parameters"] = parameters;
  doc["inputs"] = inputs;
  doc["scale"] = scale;
  Json results = Json::object();
  for (const auto& [name, rows] : tables) results[name] = rows;
  doc["results"] = results;
  doc["annotations"] = annotations;
  return doc;
}

Json number(double value) { return std::isfinite(value) ? Json(value) : Json(nullptr); }

std::string bundle_digest(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file()) files.push_back(fs::relative(entry.path(), dir));
  }
  std::sort(files.begin(), files.end(), [](const fs::path& a, const fs::path& b) {
    return a.generic_string() < b.generic_string();
  });
  std::uint64_t h = kFnvOffset;
  std::vector<char> buffer(1 << 16);
  for (const fs::path& rel : files) {
    const std::string name = rel.generic_string();
    fnv_update(h, name.c_str(), name.size() + 1);
    const std::uint64_t size = fs::file_size(dir / rel);
    char size_bytes[8];
    for (int i = 0; i < 8; ++i) size_bytes[i] = static_cast<char>((size >> (8 * i)) & 0xff);
    fnv_update(h, size_bytes, 8);
    std::ifstream in(dir / rel, std::ios::binary);
    if (!in) throw Error("cannot read " + (dir / rel).string());
    while (in) {
      in.read(buffer.data(), static_cast<std::streamsize>(buffer.size()));
      fnv_update(h, buffer.data(), static_cast<std::size_t>(in.gcount()));
    }
  }
  char out[32];
  std::snprintf(out, sizeof out, "fnv1a64:%016" PRIx64, h);
  return out;
}

std::string render_json(const Report& report) { return report.to_json().dump(2) + "\n"; }

void write_csv(const Report& report, const fs::path& dir) {
  fs::create_directories(dir);
  for (const auto& [name, rows] : report.tables) {
    std::vector<std::string> header;
    if (!rows.empty()) {
      for (const auto& item : rows.front().items()) header.push_back(item.key());
    }
    std::vector<std::vector<Json>> cells;
    for (const auto& record : rows) {
      std::vector<Json> row;
      for (const auto& key : header) row.push_back(record.contains(key) ? record.at(key) : Json(nullptr));
      cells.push_back(std::move(row));
    }
    write_rows(dir / (name + ".csv"), header, cells);
  }

  std::vector<std::vector<Json>> meta{{"tool", kToolName}, {"version", kToolVersion}, {"command", report.command},
                                      {"scale", report.scale}};
  for (const auto& item : report.parameters.items()) {
    const Json& v = item.value();
    meta.push_back({"parameter." + item.key(), v.is_structured() ? Json(v.dump()) : v});
  }
  for (std::size_t i = 0; i < report.inputs.size(); ++i) {
    meta.push_back({"input." + std::to_string(i) + ".path", report.inputs[i].at("path")});
    meta.push_back({"input." + std::to_string(i) + ".digest", report.inputs[i].at("digest")});
  }
  write_rows(dir / "metadata.csv", {"key", "value"}, meta);

  std::vector<std::vector<Json>> notes;
  for (const auto& a : report.annotations) notes.push_back({a});
  write_rows(dir / "annotations.csv", {"annotation"}, notes);
}

}  // namespace instab::cli
