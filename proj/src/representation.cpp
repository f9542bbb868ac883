#include "instab/representation.hpp"

namespace instab {
namespace {

// Per-run quantities reused by every pair a run takes part in.
struct Prepared {
  Eigen::MatrixXd factor;  // basis (cca/svcca), compressed data (op), data or Gram (cka)
  double self_norm = 1.0;  // op literal: ||X^T X||_F; cka: ||X^T X||_F or ||X X^T||_F
  bool gram = false;
};

Prepared prepare(Measure measure, const Eigen::MatrixXd& x, const RepresentationOptions& opt, bool use_gram) {
  Prepared p;
  switch (measure) {
    case Measure::svcca:
      p.factor = orthonormal_basis(svcca_projection(x, opt.svcca_threshold));
      break;
    case Measure::op:
      detail::require_nonzero(x, "op");
      if (opt.op_variant == OpVariant::corrected) {
        p.factor = detail::compress_features(x / x.norm());
      } else {
        p.factor = detail::compress_features(x);
        p.self_norm = (p.factor.transpose() * p.factor).norm();
      }
      break;
    case Measure::cka:
      detail::require_nonzero(x, "cka");
      p.gram = use_gram;
      if (use_gram) {
        p.factor = x * x.transpose();
        p.self_norm = p.factor.norm();
      } else {
        p.factor = x;
        p.self_norm = (x.transpose() * x).norm();
      }
      break;
    default:
      throw InvalidArgument("not a representation measure: " + std::string(measure_name(measure)));
  }
  return p;
}

double pair_distance(Measure measure, const Prepared& a, const Prepared& b, const RepresentationOptions& opt) {
  switch (measure) {
    case Measure::svcca:
      return mean_cca_distance(cca_from_bases(a.factor, b.factor));
    case Measure::op: {
      const double nuclear = detail::nuclear_norm_of_cross(a.factor, b.factor);
      if (opt.op_variant == OpVariant::corrected) return 1.0 - std::min(1.0, nuclear);
      return 1.0 - nuclear / (a.self_norm * b.self_norm);
    }
    case Measure::cka: {
      const double cross =
          a.gram ? (a.factor.array() * b.factor.array()).sum() : (a.factor.transpose() * b.factor).squaredNorm();
      return 1.0 - std::clamp(cross / (a.self_norm * b.self_norm), 0.0, 1.0);
    }
    default:
      throw InvalidArgument("not a representation measure: " + std::string(measure_name(measure)));
  }
}

}  // namespace

double representation_distance(Measure measure, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                               const RepresentationOptions& opt) {
  switch (measure) {
    case Measure::svcca: return svcca_distance(x, y, opt.svcca_threshold);
    case Measure::op: return op_distance(x, y, opt.op_variant);
    case Measure::cka: return cka_distance(x, y);
    default:
      throw InvalidArgument("not a representation measure: " + std::string(measure_name(measure)));
  }
}

Eigen::MatrixXd pairwise_distances(const std::vector<Eigen::MatrixXd>& centered, Measure measure,
                                   const RepresentationOptions& opt) {
  const std::size_t m = centered.size();
  if (m < 2) throw InvalidArgument("pairwise_distances: need at least 2 runs");
  const Eigen::Index n = centered.front().rows();
  for (const auto& x : centered) {
    if (x.rows() != n || x.cols() != centered.front().cols()) throw InvalidArgument("pairwise_distances: shape mismatch");
    require_centered(x, "pairwise_distances");
  }
  const bool use_gram = centered.front().cols() > n;

  std::vector<Prepared> prepared(m);
  parallel_for(m, opt.threads, [&](std::size_t r) { prepared[r] = prepare(measure, centered[r], opt, use_gram); });

  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  pairs.reserve(m * (m - 1) / 2);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) pairs.emplace_back(i, j);
  }
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
  parallel_for(pairs.size(), opt.threads, [&](std::size_t p) {
    const auto [i, j] = pairs[p];
    const double d = pair_distance(measure, prepared[i], prepared[j], opt);
    out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = d;
    out(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = d;
  });
  return out;
}

double mean_pair_distance(const Eigen::MatrixXd& d) {
  const Eigen::Index m = d.rows();
  if (m < 2 || d.cols() != m) throw InvalidArgument("mean_pair_distance: need a square matrix of >= 2 runs");
  double sum = 0;
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = i + 1; j < m; ++j) sum += d(i, j);
  }
  return sum / (static_cast<double>(m) * static_cast<double>(m - 1) / 2.0);
}

double mean_pair_distance(const Eigen::MatrixXd& d, const std::vector<std::size_t>& idx) {
  const std::size_t m = idx.size();
  if (m < 2) throw InvalidArgument("mean_pair_distance: need at least 2 runs");
  double sum = 0;
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = a + 1; b < m; ++b) {
      if (idx[a] != idx[b]) sum += d(static_cast<Eigen::Index>(idx[a]), static_cast<Eigen::Index>(idx[b]));
    }
  }
  return sum / (static_cast<double>(m) * static_cast<double>(m - 1) / 2.0);
}

CenteredLayers::CenteredLayers(const EnsembleBundle& b, unsigned threads) {
  const std::size_t m = b.runs.size();
  by_layer_.assign(b.layer_count, std::vector<Eigen::MatrixXd>(m));
  parallel_for(b.layer_count * m, threads, [&](std::size_t t) {
    const std::size_t l = t / m;
    const std::size_t r = t % m;
    by_layer_[l][r] = center(b.runs[r].layers.at(l));
  });
}

double layer_instability(const EnsembleBundle& b, Measure measure, std::size_t layer, const RepresentationOptions& opt) {
  if (layer >= b.layer_count) throw InvalidArgument("layer index " + std::to_string(layer) + " out of range");
  std::vector<Eigen::MatrixXd> centered;
  centered.reserve(b.runs.size());
  for (const RunRecord& run : b.runs) centered.push_back(center(run.layers.at(layer)));
  return mean_pair_distance(pairwise_distances(centered, measure, opt));
}

std::vector<LayerInstabilityProfile> representation_profile(const CenteredLayers& centered,
                                                            const std::vector<Measure>& measures,
                                                            const RepresentationOptions& opt,
                                                            std::optional<std::vector<std::size_t>> layers) {
  if (centered.layer_count() == 0) throw CapabilityError("bundle has no layer representations");
  std::vector<std::size_t> selected;
  if (layers) {
    selected = *layers;
    std::sort(selected.begin(), selected.end());
    selected.erase(std::unique(selected.begin(), selected.end()), selected.end());
  } else {
    for (std::size_t l = 0; l < centered.layer_count(); ++l) selected.push_back(l);
  }
  for (std::size_t l : selected) {
    if (l >= centered.layer_count()) throw InvalidArgument("layer index " + std::to_string(l) + " out of range");
  }

  std::vector<LayerInstabilityProfile> out;
  for (Measure measure : measures) {
    if (!is_representation_measure(measure)) {
      throw InvalidArgument(std::string(measure_name(measure)) + " is not a representation measure");
    }
    LayerInstabilityProfile profile;
    profile.measure = measure;
    profile.layers = selected;
    for (std::size_t l : selected) {
      profile.scores.push_back(mean_pair_distance(pairwise_distances(centered.layer(l), measure, opt)));
    }
    out.push_back(std::move(profile));
  }
  return out;
}

std::vector<LayerInstabilityProfile> representation_profile(const EnsembleBundle& b,
                                                            const std::vector<Measure>& measures,
                                                            const RepresentationOptions& opt,
                                                            std::optional<std::vector<std::size_t>> layers) {
  if (b.layer_count == 0) throw CapabilityError("bundle has no layer representations");
  return representation_profile(CenteredLayers(b, opt.threads), measures, opt, std::move(layers));
}

}  // namespace instab
