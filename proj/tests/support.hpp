#ifndef INSTAB_TESTS_SUPPORT_HPP
#define INSTAB_TESTS_SUPPORT_HPP

#include "instab/bundle.hpp"
#include "instab/representation.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <string>
#include <unistd.h>

namespace testing {

namespace fs = std::filesystem;

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "instab") {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            (tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter.fetch_add(1)));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

inline Eigen::MatrixXd gaussian(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<double> normal;
  Eigen::MatrixXd out(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) out(r, c) = normal(rng);
  }
  return out;
}

inline Eigen::MatrixXd random_orthogonal(std::mt19937_64& rng, Eigen::Index size) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(gaussian(rng, size, size));
  return qr.householderQ() * Eigen::MatrixXd::Identity(size, size);
}

inline Eigen::MatrixXd random_centered(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
  return instab::center(gaussian(rng, rows, cols));
}

// Random probability rows whose argmax (lowest index on ties) is `labels[i]`.
inline Eigen::MatrixXd probabilities_for(std::mt19937_64& rng, const instab::LabelVector& labels, int k) {
  std::uniform_real_distribution<double> unit(0.05, 1.0);
  Eigen::MatrixXd p(static_cast<Eigen::Index>(labels.size()), k);
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    for (int c = 0; c < k; ++c) p(i, c) = unit(rng);
    p(i, labels[static_cast<std::size_t>(i)]) = p.row(i).maxCoeff() + 0.5;
    p.row(i) /= p.row(i).sum();
  }
  return p;
}

struct RandomBundleShape {
  std::size_t max_runs = 6;
  std::size_t max_samples = 30;
  int max_classes = 4;
  std::size_t max_layers = 3;
  std::size_t max_width = 8;
  bool probabilities = true;
};

// Valid bundle with random shape, labels, probabilities and layers.
inline instab::EnsembleBundle random_bundle(std::mt19937_64& rng, const RandomBundleShape& shape = {}) {
  auto pick = [&](std::size_t lo, std::size_t hi) { return std::uniform_int_distribution<std::size_t>(lo, hi)(rng); };
  instab::EnsembleBundle b;
  b.dataset_name = "random-" + std::to_string(pick(0, 999));
  b.num_classes = static_cast<int>(pick(2, static_cast<std::size_t>(shape.max_classes)));
  b.metric = b.num_classes == 2 ? static_cast<instab::MetricKind>(pick(0, 2)) : instab::MetricKind::accuracy;
  const std::size_t n = pick(3, shape.max_samples);
  const std::size_t m = pick(2, shape.max_runs);
  b.layer_count = pick(0, shape.max_layers);
  std::vector<Eigen::Index> widths;
  for (std::size_t l = 0; l < b.layer_count; ++l) widths.push_back(static_cast<Eigen::Index>(pick(1, shape.max_width)));
  std::uniform_int_distribution<int> label(0, b.num_classes - 1);
  for (std::size_t i = 0; i < n; ++i) b.gold.push_back(label(rng));
  const bool probs = shape.probabilities && pick(0, 3) != 0;
  for (std::size_t r = 0; r < m; ++r) {
    instab::RunRecord run;
    run.run_id = "run-" + std::to_string(r) + (pick(0, 1) ? ".a" : "_b");
    run.seed = static_cast<std::int64_t>(pick(0, 1u << 30)) - (1 << 29);
    for (std::size_t i = 0; i < n; ++i) run.predictions.push_back(label(rng));
    if (probs) run.probabilities = probabilities_for(rng, run.predictions, b.num_classes);
    for (Eigen::Index w : widths) run.layers.push_back(gaussian(rng, static_cast<Eigen::Index>(n), w));
    if (pick(0, 1)) run.tags["role"] = pick(0, 1) ? "successful" : "failed";
    if (pick(0, 1)) run.tags["lr"] = "2e-5";
    b.runs.push_back(std::move(run));
  }
  return b;
}

inline std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    double below = 0, ties = 0;
    for (std::size_t j = 0; j < v.size(); ++j) {
      if (v[j] < v[i]) ++below;
      if (v[j] == v[i]) ++ties;
    }
    out[i] = below + (ties + 1) / 2.0;
  }
  return out;
}

}  // namespace testing

#endif  // INSTAB_TESTS_SUPPORT_HPP
