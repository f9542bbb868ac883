#ifndef INSTAB_REPRESENTATION_HPP
#define INSTAB_REPRESENTATION_HPP

#include "instab/bundle.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

namespace instab {

// Which Procrustes normalization to use. `corrected` normalizes each input by
// its Frobenius norm, giving 1 - ||X~^T Y~||_* in [0, 1]. `literal` divides the
// nuclear norm by ||X^T X||_F ||Y^T Y||_F, which is not zero for X == Y once
// rank(X) >= 2; it is kept for auditing against published numbers.
enum class OpVariant { corrected, literal };

struct RepresentationOptions {
  double svcca_threshold = 0.99;  // fraction of squared singular mass kept
  OpVariant op_variant = OpVariant::corrected;
  unsigned threads = 1;
};

// Canonical correlations, descending, clamped to [0, 1].
template <typename Scalar>
struct CCAResult {
  Vector<Scalar> correlations;
  Eigen::Index dims_x = 0;  // retained rank of each side
  Eigen::Index dims_y = 0;
};

namespace detail {

template <typename Scalar>
Scalar centering_tolerance(Scalar magnitude) {
  const Scalar base = std::max<Scalar>(Scalar(1e-9), Scalar(1000) * std::numeric_limits<Scalar>::epsilon());
  return base * std::max<Scalar>(Scalar(1), magnitude);
}

// Singular values below this fraction of the largest are treated as zero.
inline constexpr double kRankTolerance = 1e-10;

}  // namespace detail

// Subtracts column means. Requires at least two rows.
template <typename Derived>
Matrix<typename Derived::Scalar> center(const Eigen::MatrixBase<Derived>& x) {
  if (x.rows() < 2) throw InvalidArgument("center: need at least 2 samples");
  Matrix<typename Derived::Scalar> out = x;
  out.rowwise() -= out.colwise().mean();
  return out;
}

template <typename Derived>
bool is_centered(const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  if (x.size() == 0) return true;
  const Scalar tol = detail::centering_tolerance<Scalar>(x.cwiseAbs().maxCoeff());
  return (x.colwise().mean().cwiseAbs().array() <= tol).all();
}

template <typename Derived>
void require_centered(const Eigen::MatrixBase<Derived>& x, const char* what) {
  if (!is_centered(x)) throw InvalidArgument(std::string(what) + ": input is not column-centered");
}

// Orthonormal basis of the column space of x, from a thin SVD with
// singular values below 1e-10 * max dropped. Throws DegenerateInputError on
// a zero matrix.
template <typename Derived>
Matrix<typename Derived::Scalar> orthonormal_basis(const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  Eigen::BDCSVD<Matrix<Scalar>> svd(x.derived(), Eigen::ComputeThinU);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || !(s[0] > Scalar(0))) throw DegenerateInputError("representation has rank zero");
  const Scalar cutoff = Scalar(detail::kRankTolerance) * s[0];
  Eigen::Index rank = 0;
  while (rank < s.size() && s[rank] > cutoff) ++rank;
  return svd.matrixU().leftCols(rank);
}

// Canonical correlations between two orthonormal bases of equal row count.
template <typename DX, typename DY>
CCAResult<typename DX::Scalar> cca_from_bases(const Eigen::MatrixBase<DX>& bx, const Eigen::MatrixBase<DY>& by) {
  using Scalar = typename DX::Scalar;
  if (bx.rows() != by.rows()) throw InvalidArgument("cca: sample counts differ");
  CCAResult<Scalar> out;
  out.dims_x = bx.cols();
  out.dims_y = by.cols();
  const Matrix<Scalar> cross = bx.transpose() * by;
  Eigen::BDCSVD<Matrix<Scalar>> svd(cross);
  out.correlations = svd.singularValues().cwiseMax(Scalar(0)).cwiseMin(Scalar(1));
  return out;
}

template <typename DX, typename DY>
CCAResult<typename DX::Scalar> canonical_correlations(const Eigen::MatrixBase<DX>& x, const Eigen::MatrixBase<DY>& y) {
  if (x.rows() != y.rows()) throw InvalidArgument("cca: sample counts differ");
  require_centered(x, "cca");
  require_centered(y, "cca");
  return cca_from_bases(orthonormal_basis(x), orthonormal_basis(y));
}

template <typename Scalar>
Scalar mean_cca_distance(const CCAResult<Scalar>& cca) {
  // There are min(dims_x, dims_y) canonical correlations.
  return Scalar(1) - cca.correlations.mean();
}

// 1 - mean canonical correlation.
template <typename DX, typename DY>
typename DX::Scalar cca_distance(const Eigen::MatrixBase<DX>& x, const Eigen::MatrixBase<DY>& y) {
  return mean_cca_distance(canonical_correlations(x, y));
}

// Projects x onto its leading singular directions: U_k * diag(s_k) with the
// smallest k such that sum(s_1..k ^2) >= threshold * sum(s^2).
template <typename Derived>
Matrix<typename Derived::Scalar> svcca_projection(const Eigen::MatrixBase<Derived>& x, double threshold = 0.99) {
  using Scalar = typename Derived::Scalar;
  if (!(threshold > 0.0 && threshold <= 1.0)) throw InvalidArgument("svcca threshold must lie in (0, 1]");
  Eigen::BDCSVD<Matrix<Scalar>> svd(x.derived(), Eigen::ComputeThinU);
  const Vector<Scalar> energy = svd.singularValues().array().square();
  const Scalar total = energy.sum();
  if (!(total > Scalar(0))) throw DegenerateInputError("representation has rank zero");
  const Scalar target = Scalar(threshold) * total;
  Eigen::Index keep = 0;
  Scalar running = 0;
  while (keep < energy.size()) {
    running += energy[keep++];
    if (running >= target) break;
  }
  return svd.matrixU().leftCols(keep) * svd.singularValues().head(keep).asDiagonal();
}

template <typename DX, typename DY>
typename DX::Scalar svcca_distance(const Eigen::MatrixBase<DX>& x, const Eigen::MatrixBase<DY>& y,
                                   double threshold = 0.99) {
  if (x.rows() != y.rows()) throw InvalidArgument("svcca: sample counts differ");
  require_centered(x, "svcca");
  require_centered(y, "svcca");
  return mean_cca_distance(
      cca_from_bases(orthonormal_basis(svcca_projection(x, threshold)), orthonormal_basis(svcca_projection(y, threshold))));
}

namespace detail {

template <typename Derived>
void require_nonzero(const Eigen::MatrixBase<Derived>& x, const char* what) {
  if (!(x.squaredNorm() > 0)) throw DegenerateInputError(std::string(what) + ": zero representation");
}

// Returns a matrix c with c^T c == x^T x up to an orthogonal change of basis
// on the feature side, and at most min(n, e) columns. Cross products and
// their singular values are preserved: x^T y and c_x^T c_y share them.
template <typename Derived>
Matrix<typename Derived::Scalar> compress_features(const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  if (x.cols() <= x.rows()) return x;
  Eigen::HouseholderQR<Matrix<Scalar>> qr(x.transpose());
  const Eigen::Index n = x.rows();
  return qr.matrixQR().topRows(n).template triangularView<Eigen::Upper>().toDenseMatrix().transpose();
}

template <typename DX, typename DY>
typename DX::Scalar nuclear_norm_of_cross(const Eigen::MatrixBase<DX>& cx, const Eigen::MatrixBase<DY>& cy) {
  using Scalar = typename DX::Scalar;
  const Matrix<Scalar> cross = cx.transpose() * cy;
  Eigen::BDCSVD<Matrix<Scalar>> svd(cross);
  return svd.singularValues().sum();
}

}  // namespace detail

// ||X~^T Y~||_* for Frobenius-normalized inputs; 1 means identical up to an
// orthogonal map and scale.
template <typename DX, typename DY>
typename DX::Scalar op_similarity(const Eigen::MatrixBase<DX>& x, const Eigen::MatrixBase<DY>& y) {
  using Scalar = typename DX::Scalar;
  if (x.rows() != y.rows()) throw InvalidArgument("op: sample counts differ");
  require_centered(x, "op");
  require_centered(y, "op");
  detail::require_nonzero(x, "op");
  detail::require_nonzero(y, "op");
  const Matrix<Scalar> cx = detail::compress_features(x / x.norm());
  const Matrix<Scalar> cy = detail::compress_features(y / y.norm());
  return std::min<Scalar>(Scalar(1), detail::nuclear_norm_of_cross(cx, cy));
}

template <typename DX, typename DY>
typename DX::Scalar op_distance(const Eigen::MatrixBase<DX>& x, const Eigen::MatrixBase<DY>& y,
                                OpVariant variant = OpVariant::corrected) {
  using Scalar = typename DX::Scalar;
  if (variant == OpVariant::corrected) return Scalar(1) - op_similarity(x, y);
  if (x.rows() != y.rows()) throw InvalidArgument("op: sample counts differ");
  require_centered(x, "op");
  require_centered(y, "op");
  detail::require_nonzero(x, "op");
  detail::require_nonzero(y, "op");
  const Matrix<Scalar> cx = detail::compress_features(x);
  const Matrix<Scalar> cy = detail::compress_features(y);
  const Scalar denom = (cx.transpose() * cx).norm() * (cy.transpose() * cy).norm();
  return Scalar(1) - detail::nuclear_norm_of_cross(cx, cy) / denom;
}

// Linear CKA similarity ||X^T Y||_F^2 / (||X^T X||_F ||Y^T Y||_F), using the
// e x e cross products when e <= n and the n x n Gram matrices otherwise.
template <typename DX, typename DY>
typename DX::Scalar cka_similarity(const Eigen::MatrixBase<DX>& x, const Eigen::MatrixBase<DY>& y) {
  using Scalar = typename DX::Scalar;
  if (x.rows() != y.rows()) throw InvalidArgument("cka: sample counts differ");
  require_centered(x, "cka");
  require_centered(y, "cka");
  detail::require_nonzero(x, "cka");
  detail::require_nonzero(y, "cka");
  const Eigen::Index n = x.rows();
  Scalar sim;
  if (x.cols() <= n && y.cols() <= n) {
    sim = (x.transpose() * y).squaredNorm() / ((x.transpose() * x).norm() * (y.transpose() * y).norm());
  } else {
    const Matrix<Scalar> kx = x * x.transpose();
    const Matrix<Scalar> ky = y * y.transpose();
    sim = (kx.array() * ky.array()).sum() / (kx.norm() * ky.norm());
  }
  return std::clamp<Scalar>(sim, Scalar(0), Scalar(1));
}

template <typename DX, typename DY>
typename DX::Scalar cka_distance(const Eigen::MatrixBase<DX>& x, const Eigen::MatrixBase<DY>& y) {
  return typename DX::Scalar(1) - cka_similarity(x, y);
}

// One representation distance between two centered matrices.
double representation_distance(Measure measure, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                               const RepresentationOptions& options = {});

// Symmetric m x m matrix of pair distances for one layer. Inputs must be
// centered. Per-run factorizations are computed once and reused across pairs.
Eigen::MatrixXd pairwise_distances(const std::vector<Eigen::MatrixXd>& centered, Measure measure,
                                   const RepresentationOptions& options = {});

// Mean of the strict upper triangle, summed in (i < j) order.
double mean_pair_distance(const Eigen::MatrixXd& distances);
// Mean over position pairs a < b of distances(idx[a], idx[b]); repeated
// indices contribute zero-distance pairs.
double mean_pair_distance(const Eigen::MatrixXd& distances, const std::vector<std::size_t>& multiset);

// Centered layer matrices for every run, computed once.
class CenteredLayers {
 public:
  CenteredLayers(const EnsembleBundle& bundle, unsigned threads = 1);

  const std::vector<Eigen::MatrixXd>& layer(std::size_t l) const { return by_layer_.at(l); }
  std::size_t layer_count() const noexcept { return by_layer_.size(); }
  std::size_t num_runs() const noexcept { return by_layer_.empty() ? 0 : by_layer_.front().size(); }

 private:
  std::vector<std::vector<Eigen::MatrixXd>> by_layer_;  // [layer][run]
};

// I^l: mean distance over all unordered run pairs at one layer.
double layer_instability(const EnsembleBundle& bundle, Measure measure, std::size_t layer,
                         const RepresentationOptions& options = {});

struct LayerInstabilityProfile {
  Measure measure = Measure::cka;
  std::vector<std::size_t> layers;  // ascending, bottom first
  std::vector<double> scores;       // I^l per entry of `layers`
};

// One profile per requested representation measure. `layers` defaults to all
// layers; pass {layer_count - 1} for the topmost layer only.
std::vector<LayerInstabilityProfile> representation_profile(const EnsembleBundle& bundle,
                                                            const std::vector<Measure>& measures,
                                                            const RepresentationOptions& options = {},
                                                            std::optional<std::vector<std::size_t>> layers = {});
std::vector<LayerInstabilityProfile> representation_profile(const CenteredLayers& centered,
                                                            const std::vector<Measure>& measures,
                                                            const RepresentationOptions& options = {},
                                                            std::optional<std::vector<std::size_t>> layers = {});

}  // namespace instab

#endif  // INSTAB_REPRESENTATION_HPP
