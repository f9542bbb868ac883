#include "instab/synth.hpp"

#include <cmath>
#include <cstdio>
#include <random>

namespace instab {
namespace {

Eigen::MatrixXd gaussian(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd out(rows, cols);
  // Row-major fill keeps the draw order independent of Eigen's storage order.
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) out(r, c) = normal(rng);
  }
  return out;
}

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd out(logits.rows(), logits.cols());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const Eigen::RowVectorXd shifted = logits.row(r).array() - logits.row(r).maxCoeff();
    const Eigen::RowVectorXd e = shifted.array().exp();
    out.row(r) = e / e.sum();
  }
  return out;
}

std::string run_name(std::size_t r) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "run_%02zu", r);
  return buf;
}

}  // namespace

std::size_t SynthConfig::failed_count() const {
  return static_cast<std::size_t>(std::floor(failed_fraction * static_cast<double>(m) + 1e-9));
}

void SynthConfig::validate() const {
  if (n < 2) throw InvalidArgument("synth: n must be >= 2");
  if (k < 2) throw InvalidArgument("synth: k must be >= 2");
  if (m < 2) throw InvalidArgument("synth: m must be >= 2");
  for (std::size_t e : layer_widths) {
    if (e < 1) throw InvalidArgument("synth: layer widths must be >= 1");
  }
  if (layer_widths.size() > 100) throw InvalidArgument("synth: at most 100 layers");
  if (!(noise_scale >= 0) || !std::isfinite(noise_scale)) throw InvalidArgument("synth: noise scale must be >= 0");
  auto fraction = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!fraction(failed_fraction)) throw InvalidArgument("synth: failed fraction must lie in [0, 1]");
  if (!fraction(failed_update_scale)) throw InvalidArgument("synth: failed update scale must lie in [0, 1]");
  if (!(failed_blend > 0.5 && failed_blend <= 1.0)) throw InvalidArgument("synth: failed blend must lie in (0.5, 1]");
  if (!fraction(label_noise)) throw InvalidArgument("synth: label noise must lie in [0, 1]");
  if (!(logit_scale > 0) || !std::isfinite(logit_scale)) throw InvalidArgument("synth: logit scale must be > 0");
  if ((metric == MetricKind::f1 || metric == MetricKind::mcc) && k != 2) {
    throw InvalidArgument("synth: f1 and mcc need k = 2");
  }
}

EnsembleBundle generate_ensemble(const SynthConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  const auto n = static_cast<Eigen::Index>(cfg.n);
  const std::size_t depth = cfg.layer_widths.size();

  // Base representations with a decaying column scale, so each layer has a
  // spread-out singular spectrum rather than a flat one.
  std::vector<Eigen::MatrixXd> base;
  for (std::size_t e : cfg.layer_widths) {
    Eigen::MatrixXd layer = gaussian(rng, n, static_cast<Eigen::Index>(e));
    for (Eigen::Index c = 0; c < layer.cols(); ++c) layer.col(c) /= std::sqrt(1.0 + static_cast<double>(c));
    base.push_back(std::move(layer));
  }

  // Readout from the top layer, or from a fixed random feature block when the
  // bundle has no layers.
  Eigen::MatrixXd top_base = depth > 0 ? base.back() : gaussian(rng, n, 8);
  const Eigen::MatrixXd readout = gaussian(rng, top_base.cols(), cfg.k);
  double feature_energy = 0;
  for (Eigen::Index c = 0; c < top_base.cols(); ++c) feature_energy += 1.0 / (1.0 + static_cast<double>(c));
  const double gain = cfg.logit_scale / std::sqrt(feature_energy);

  EnsembleBundle b;
  b.dataset_name = cfg.dataset_name;
  b.metric = cfg.metric;
  b.num_classes = cfg.k;
  b.layer_count = depth;

  const Eigen::MatrixXd base_probs = softmax_rows(gain * top_base * readout);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> other_class(1, cfg.k - 1);
  b.gold.resize(cfg.n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int clean = argmax_row(base_probs, i);
    const double u = unit(rng);
    const int shift = other_class(rng);
    b.gold[static_cast<std::size_t>(i)] = u < cfg.label_noise ? (clean + shift) % cfg.k : clean;
  }
  std::vector<std::size_t> counts(static_cast<std::size_t>(cfg.k), 0);
  for (int g : b.gold) ++counts[static_cast<std::size_t>(g)];
  const int majority = static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());

  const std::size_t failed_from = cfg.m - cfg.failed_count();
  for (std::size_t r = 0; r < cfg.m; ++r) {
    const bool failed = r >= failed_from;
    const double update = cfg.noise_scale * (failed ? cfg.failed_update_scale : 1.0);

    RunRecord run;
    run.run_id = run_name(r);
    run.seed = static_cast<std::int64_t>(r);
    run.tags["role"] = failed ? "failed" : "successful";
    for (std::size_t l = 0; l < depth; ++l) {
      const double depth_scale = 1.0 + static_cast<double>(l) / static_cast<double>(depth);
      const Eigen::MatrixXd noise = gaussian(rng, n, base[l].cols());
      run.layers.push_back(base[l] + (update * depth_scale) * noise);
    }
    const Eigen::MatrixXd readout_noise = gaussian(rng, readout.rows(), readout.cols());
    const Eigen::MatrixXd& top = depth > 0 ? run.layers.back() : top_base;
    Eigen::MatrixXd probs = softmax_rows(gain * top * (readout + update * readout_noise));
    if (failed) {
      probs *= 1.0 - cfg.failed_blend;
      probs.col(majority).array() += cfg.failed_blend;
    }
    run.predictions.resize(cfg.n);
    for (Eigen::Index i = 0; i < n; ++i) run.predictions[static_cast<std::size_t>(i)] = argmax_row(probs, i);
    run.probabilities = std::move(probs);
    b.runs.push_back(std::move(run));
  }
  return b;
}

}  // namespace instab
