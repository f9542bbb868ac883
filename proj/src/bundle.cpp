#include "instab/bundle.hpp"

#include "instab/imtx.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace instab {
namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr int kManifestVersion = 1;
constexpr double kRowSumTolerance = 1e-6;

bool same_matrix(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && (a.array() == b.array()).all();
}

std::string layer_file_name(std::size_t layer) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "layer_%02zu.mtx", layer);
  return buf;
}

bool valid_run_id(const std::string& id) {
  if (id.empty() || id == "." || id == "..") return false;
  for (char c : id) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' ||
                    c == '-' || c == '.';
    if (!ok) return false;
  }
  return true;
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool parse_int(const std::string& text, long long& out) {
  if (text.empty()) return false;
  std::size_t pos = 0;
  try {
    out = std::stoll(text, &pos);
  } catch (...) {
    return false;
  }
  return pos == text.size();
}

template <typename T>
T json_field(const ordered_json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw BundleError(std::string("manifest missing field '") + key + "'", {}, where);
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw BundleError(std::string("manifest field '") + key + "' has wrong type", {}, where);
  }
}

}  // namespace

bool RunRecord::operator==(const RunRecord& other) const {
  if (run_id != other.run_id || seed != other.seed || predictions != other.predictions || tags != other.tags)
    return false;
  if (probabilities.has_value() != other.probabilities.has_value()) return false;
  if (probabilities && !same_matrix(*probabilities, *other.probabilities)) return false;
  if (layers.size() != other.layers.size()) return false;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (!same_matrix(layers[l], other.layers[l])) return false;
  }
  return true;
}

bool EnsembleBundle::operator==(const EnsembleBundle& other) const {
  return dataset_name == other.dataset_name && metric == other.metric && num_classes == other.num_classes &&
         layer_count == other.layer_count && gold == other.gold && runs == other.runs;
}

bool EnsembleBundle::has_probabilities() const noexcept {
  return !runs.empty() && std::all_of(runs.begin(), runs.end(), [](const RunRecord& r) { return r.probabilities; });
}

int argmax_row(const Eigen::MatrixXd& probabilities, Eigen::Index row) {
  Eigen::Index best = 0;
  for (Eigen::Index c = 1; c < probabilities.cols(); ++c) {
    if (probabilities(row, c) > probabilities(row, best)) best = c;
  }
  return static_cast<int>(best);
}

void validate(const EnsembleBundle& b) {
  if (b.num_classes < 2) throw BundleError("num_classes must be >= 2");
  if ((b.metric == MetricKind::f1 || b.metric == MetricKind::mcc) && b.num_classes != 2) {
    throw BundleError(std::string(metric_name(b.metric)) + " requires binary labels (num_classes = 2)");
  }
  if (b.runs.size() < 2) throw BundleError("bundle needs at least 2 runs, got " + std::to_string(b.runs.size()));
  const std::size_t n = b.gold.size();
  if (n == 0) throw BundleError("gold labels are empty");
  for (std::size_t i = 0; i < n; ++i) {
    if (b.gold[i] < 0 || b.gold[i] >= b.num_classes) {
      throw BundleError("gold label out of range at sample " + std::to_string(i));
    }
  }

  const bool with_probs = b.runs.front().probabilities.has_value();
  const RunRecord& ref = b.runs.front();
  std::set<std::string> ids;
  for (const RunRecord& run : b.runs) {
    const std::string& id = run.run_id;
    if (!valid_run_id(id)) throw BundleError("invalid run id '" + id + "'", id);
    if (!ids.insert(id).second) throw BundleError("duplicate run id", id);
    if (run.predictions.size() != n) {
      throw BundleError("shape mismatch: " + std::to_string(run.predictions.size()) + " predictions, expected " +
                            std::to_string(n),
                        id);
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (run.predictions[i] < 0 || run.predictions[i] >= b.num_classes) {
        throw BundleError("prediction label out of range at sample " + std::to_string(i), id);
      }
    }
    if (run.probabilities.has_value() != with_probs) {
      throw BundleError("probabilities must be present for all runs or for none", id);
    }
    if (run.probabilities) {
      const Eigen::MatrixXd& p = *run.probabilities;
      if (p.rows() != static_cast<Eigen::Index>(n) || p.cols() != b.num_classes) {
        throw BundleError("shape mismatch: probabilities are " + std::to_string(p.rows()) + "x" +
                              std::to_string(p.cols()) + ", expected " + std::to_string(n) + "x" +
                              std::to_string(b.num_classes),
                          id);
      }
      if (!p.allFinite()) throw BundleError("non-finite probability", id);
      for (Eigen::Index r = 0; r < p.rows(); ++r) {
        if ((p.row(r).array() < 0.0).any()) {
          throw BundleError("negative probability in row " + std::to_string(r), id);
        }
        if (std::abs(p.row(r).sum() - 1.0) > kRowSumTolerance) {
          throw BundleError("probability row " + std::to_string(r) + " is not normalized", id);
        }
        if (argmax_row(p, r) != run.predictions[static_cast<std::size_t>(r)]) {
          throw BundleError("prediction at sample " + std::to_string(r) + " is not the probability argmax", id);
        }
      }
    }
    if (run.layers.size() != b.layer_count) {
      throw BundleError("shape mismatch: " + std::to_string(run.layers.size()) + " layers, expected " +
                            std::to_string(b.layer_count),
                        id);
    }
    for (std::size_t l = 0; l < run.layers.size(); ++l) {
      const Eigen::MatrixXd& x = run.layers[l];
      if (x.rows() != static_cast<Eigen::Index>(n) || x.cols() < 1 || x.cols() != ref.layers[l].cols()) {
        throw BundleError("shape mismatch at layer " + std::to_string(l) + ": " + std::to_string(x.rows()) + "x" +
                              std::to_string(x.cols()),
                          id);
      }
      if (!x.allFinite()) throw BundleError("non-finite value in layer " + std::to_string(l), id);
    }
  }
}

EnsembleBundle select_samples(const EnsembleBundle& b, const std::vector<std::size_t>& rows) {
  EnsembleBundle out;
  out.dataset_name = b.dataset_name;
  out.metric = b.metric;
  out.num_classes = b.num_classes;
  out.layer_count = b.layer_count;
  out.gold.reserve(rows.size());
  for (std::size_t r : rows) out.gold.push_back(b.gold.at(r));
  std::vector<Eigen::Index> idx(rows.begin(), rows.end());
  for (const RunRecord& run : b.runs) {
    RunRecord sub;
    sub.run_id = run.run_id;
    sub.seed = run.seed;
    sub.tags = run.tags;
    sub.predictions.reserve(rows.size());
    for (std::size_t r : rows) sub.predictions.push_back(run.predictions.at(r));
    if (run.probabilities) sub.probabilities = (*run.probabilities)(idx, Eigen::all);
    for (const Eigen::MatrixXd& layer : run.layers) sub.layers.emplace_back(layer(idx, Eigen::all));
    out.runs.push_back(std::move(sub));
  }
  return out;
}

EnsembleBundle select_runs(const EnsembleBundle& b, const std::vector<std::size_t>& runs) {
  EnsembleBundle out;
  out.dataset_name = b.dataset_name;
  out.metric = b.metric;
  out.num_classes = b.num_classes;
  out.layer_count = b.layer_count;
  out.gold = b.gold;
  for (std::size_t r : runs) out.runs.push_back(b.runs.at(r));
  return out;
}

LabelVector read_label_csv(const fs::path& path, const std::string& run_id) {
  std::ifstream in(path);
  if (!in) throw BundleError("missing file", run_id, path.string());
  std::string line;
  if (!std::getline(in, line)) throw BundleError("empty CSV (header row required)", run_id, path.string());
  {
    std::string header = trim(line);
    if (header.size() >= 3 && header.compare(0, 3, "\xEF\xBB\xBF") == 0) header = header.substr(3);
    if (header != "sample_id,label") {
      throw BundleError("CSV header must be 'sample_id,label'", run_id, path.string());
    }
  }
  LabelVector labels;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    const auto comma = line.find(',');
    long long sample = 0;
    long long label = 0;
    if (comma == std::string::npos || !parse_int(trim(line.substr(0, comma)), sample) ||
        !parse_int(trim(line.substr(comma + 1)), label)) {
      throw BundleError("malformed CSV line " + std::to_string(line_no), run_id, path.string());
    }
    if (sample != static_cast<long long>(labels.size())) {
      throw BundleError("sample ids must be 0..n-1 in order (line " + std::to_string(line_no) + ")", run_id,
                        path.string());
    }
    if (label < 0 || label > std::numeric_limits<int>::max()) {
      throw BundleError("label out of range at line " + std::to_string(line_no), run_id, path.string());
    }
    labels.push_back(static_cast<int>(label));
  }
  return labels;
}

void write_label_csv(const fs::path& path, const LabelVector& labels) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open for writing: " + path.string());
  out << "sample_id,label\n";
  for (std::size_t i = 0; i < labels.size(); ++i) out << i << ',' << labels[i] << '\n';
  if (!out.flush()) throw Error("write failed: " + path.string());
}

EnsembleBundle load_bundle(const fs::path& dir) {
  const fs::path manifest_path = dir / "manifest.json";
  std::ifstream in(manifest_path);
  if (!in) throw BundleError("missing file", {}, manifest_path.string());
  ordered_json manifest;
  try {
    manifest = ordered_json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw BundleError(std::string("manifest is not valid JSON: ") + e.what(), {}, manifest_path.string());
  }
  const std::string where = manifest_path.string();
  const int version = json_field<int>(manifest, "version", where);
  if (version != kManifestVersion) throw BundleError("unsupported manifest version", {}, where);

  EnsembleBundle b;
  b.dataset_name = json_field<std::string>(manifest, "dataset_name", where);
  try {
    b.metric = parse_metric(json_field<std::string>(manifest, "metric", where));
  } catch (const InvalidArgument& e) {
    throw BundleError(e.what(), {}, where);
  }
  b.num_classes = json_field<int>(manifest, "num_classes", where);
  b.layer_count = json_field<std::size_t>(manifest, "layer_count", where);
  b.gold = read_label_csv(dir / json_field<std::string>(manifest, "gold", where));

  const auto& runs = manifest.contains("runs") ? manifest.at("runs") : ordered_json();
  if (!runs.is_array()) throw BundleError("manifest 'runs' must be an array", {}, where);
  std::set<std::string> seen;
  for (const auto& entry : runs) {
    RunRecord run;
    run.run_id = json_field<std::string>(entry, "id", where);
    if (!seen.insert(run.run_id).second) throw BundleError("duplicate run id", run.run_id, where);
    run.seed = json_field<std::int64_t>(entry, "seed", where);
    const fs::path pred_path = dir / json_field<std::string>(entry, "predictions", where);
    run.predictions = read_label_csv(pred_path, run.run_id);
    if (run.predictions.size() != b.gold.size()) {
      throw BundleError("shape mismatch: " + std::to_string(run.predictions.size()) + " predictions, expected " +
                            std::to_string(b.gold.size()),
                        run.run_id, pred_path.string());
    }
    if (entry.contains("probabilities") && !entry.at("probabilities").is_null()) {
      const fs::path p = dir / json_field<std::string>(entry, "probabilities", where);
      try {
        run.probabilities = imtx::read(p);
      } catch (const BundleError& e) {
        throw BundleError(e.what(), run.run_id);
      }
    }
    const auto layer_paths = entry.contains("layers") ? json_field<std::vector<std::string>>(entry, "layers", where)
                                                      : std::vector<std::string>{};
    for (const std::string& rel : layer_paths) {
      try {
        run.layers.push_back(imtx::read(dir / rel));
      } catch (const BundleError& e) {
        throw BundleError(e.what(), run.run_id);
      }
      if (run.layers.back().rows() != static_cast<Eigen::Index>(b.gold.size())) {
        throw BundleError("shape mismatch: layer has " + std::to_string(run.layers.back().rows()) + " rows, expected " +
                              std::to_string(b.gold.size()),
                          run.run_id, (dir / rel).string());
      }
    }
    if (entry.contains("tags")) run.tags = json_field<std::map<std::string, std::string>>(entry, "tags", where);
    b.runs.push_back(std::move(run));
  }
  validate(b);
  return b;
}

void save_bundle(const EnsembleBundle& b, const fs::path& dir) {
  validate(b);
  std::error_code ec;
  fs::create_directories(dir / "runs", ec);
  if (ec) throw Error("cannot create directory " + (dir / "runs").string() + ": " + ec.message());

  ordered_json manifest;
  manifest["version"] = kManifestVersion;
  manifest["dataset_name"] = b.dataset_name;
  manifest["metric"] = metric_name(b.metric);
  manifest["num_classes"] = b.num_classes;
  manifest["layer_count"] = b.layer_count;
  manifest["gold"] = "gold.csv";
  manifest["runs"] = ordered_json::array();

  write_label_csv(dir / "gold.csv", b.gold);
  for (const RunRecord& run : b.runs) {
    const fs::path rel = fs::path("runs") / run.run_id;
    fs::create_directories(dir / rel / "layers", ec);
    if (ec) throw Error("cannot create directory " + (dir / rel).string() + ": " + ec.message());

    ordered_json entry;
    entry["id"] = run.run_id;
    entry["seed"] = run.seed;
    entry["predictions"] = (rel / "predictions.csv").generic_string();
    write_label_csv(dir / rel / "predictions.csv", run.predictions);
    if (run.probabilities) {
      entry["probabilities"] = (rel / "probabilities.mtx").generic_string();
      imtx::write(dir / rel / "probabilities.mtx", *run.probabilities);
    }
    entry["layers"] = ordered_json::array();
    for (std::size_t l = 0; l < run.layers.size(); ++l) {
      const fs::path layer_rel = rel / "layers" / layer_file_name(l);
      entry["layers"].push_back(layer_rel.generic_string());
      imtx::write(dir / layer_rel, run.layers[l]);
    }
    entry["tags"] = ordered_json::object();
    for (const auto& [k, v] : run.tags) entry["tags"][k] = v;
    manifest["runs"].push_back(std::move(entry));
  }

  std::ofstream out(dir / "manifest.json", std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open for writing: " + (dir / "manifest.json").string());
  out << manifest.dump(2) << '\n';
  if (!out.flush()) throw Error("write failed: " + (dir / "manifest.json").string());
}

}  // namespace instab
