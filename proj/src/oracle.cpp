#include "instab/oracle.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <cmath>

namespace instab::oracle {
namespace {

Eigen::MatrixXd centered(const Eigen::MatrixXd& x) {
  Eigen::MatrixXd out = x;
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    double sum = 0;
    for (Eigen::Index r = 0; r < x.rows(); ++r) sum += x(r, c);
    const double mean = sum / static_cast<double>(x.rows());
    for (Eigen::Index r = 0; r < x.rows(); ++r) out(r, c) -= mean;
  }
  return out;
}

// sum_{a,b} (sum_k x_ka y_kb)^2, by explicit loops.
double cross_frobenius_sq(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
  double total = 0;
  for (Eigen::Index a = 0; a < x.cols(); ++a) {
    for (Eigen::Index b = 0; b < y.cols(); ++b) {
      double dot = 0;
      for (Eigen::Index k = 0; k < x.rows(); ++k) dot += x(k, a) * y(k, b);
      total += dot * dot;
    }
  }
  return total;
}

// Symmetric inverse square root on the eigen-subspace with eigenvalues above
// 1e-12 of the largest; also reports that subspace's dimension.
Eigen::MatrixXd inverse_sqrt(const Eigen::MatrixXd& cov, Eigen::Index& rank) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  const Eigen::VectorXd& lambda = eig.eigenvalues();
  const double cutoff = 1e-12 * lambda.maxCoeff();
  Eigen::VectorXd scale = Eigen::VectorXd::Zero(lambda.size());
  rank = 0;
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    if (lambda[i] > cutoff) {
      scale[i] = 1.0 / std::sqrt(lambda[i]);
      ++rank;
    }
  }
  return eig.eigenvectors() * scale.asDiagonal() * eig.eigenvectors().transpose();
}

double whitened_cca_distance(const Eigen::MatrixXd& px, const Eigen::MatrixXd& py) {
  Eigen::Index rx = 0, ry = 0;
  const Eigen::MatrixXd wx = inverse_sqrt(px.transpose() * px, rx);
  const Eigen::MatrixXd wy = inverse_sqrt(py.transpose() * py, ry);
  const Eigen::MatrixXd t = wx * (px.transpose() * py) * wy;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(t);
  const Eigen::Index count = std::min(rx, ry);
  double sum = 0;
  for (Eigen::Index i = 0; i < count; ++i) sum += std::min(1.0, svd.singularValues()[i]);
  return 1.0 - sum / static_cast<double>(count);
}

Eigen::MatrixXd truncated_projection(const Eigen::MatrixXd& x, double threshold) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeFullU);
  const Eigen::VectorXd& s = svd.singularValues();
  double total = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) total += s[i] * s[i];
  double running = 0;
  Eigen::Index keep = 0;
  while (keep < s.size()) {
    running += s[keep] * s[keep];
    ++keep;
    if (running >= threshold * total) break;
  }
  Eigen::MatrixXd out(x.rows(), keep);
  for (Eigen::Index j = 0; j < keep; ++j) out.col(j) = svd.matrixU().col(j) * s[j];
  return out;
}

}  // namespace

double pairwise_disagreement(const Eigen::MatrixXi& labels) {
  const Eigen::Index m = labels.rows();
  const Eigen::Index n = labels.cols();
  std::uint64_t disagreements = 0;
  std::uint64_t comparisons = 0;
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = i + 1; j < m; ++j) {
      for (Eigen::Index k = 0; k < n; ++k) {
        disagreements += labels(i, k) != labels(j, k);
        ++comparisons;
      }
    }
  }
  return static_cast<double>(disagreements) / static_cast<double>(comparisons);
}

double fleiss_kappa_instability(const Eigen::MatrixXi& labels, int num_classes) {
  // Exact rationals: p_a = pa_num / pa_den, p_e = pe_num / pe_den.
  using Wide = __int128;
  const Eigen::Index m = labels.rows();
  const Eigen::Index n = labels.cols();
  std::vector<std::vector<Wide>> x(static_cast<std::size_t>(n), std::vector<Wide>(static_cast<std::size_t>(num_classes), 0));
  for (Eigen::Index r = 0; r < m; ++r) {
    for (Eigen::Index i = 0; i < n; ++i) x[static_cast<std::size_t>(i)][static_cast<std::size_t>(labels(r, i))] += 1;
  }
  const Wide mw = m, nw = n;
  Wide pa_num = 0;  // sum_i (sum_j x_ij^2 - m)
  for (const auto& item : x) {
    Wide sq = 0;
    for (Wide c : item) sq += c * c;
    pa_num += sq - mw;
  }
  const Wide pa_den = nw * mw * (mw - 1);
  Wide pe_num = 0;
  for (int j = 0; j < num_classes; ++j) {
    Wide column = 0;
    for (const auto& item : x) column += item[static_cast<std::size_t>(j)];
    pe_num += column * column;
  }
  const Wide pe_den = nw * mw * nw * mw;
  // kappa = (p_a - p_e) / (1 - p_e), then 1 - kappa, all as one fraction.
  const Wide kappa_num = pa_num * pe_den - pe_num * pa_den;
  const Wide kappa_den = pa_den * (pe_den - pe_num);
  Wide num = kappa_den - kappa_num;
  Wide den = kappa_den;
  Wide a = num < 0 ? -num : num, b = den;
  while (b != 0) {
    const Wide t = a % b;
    a = b;
    b = t;
  }
  if (a != 0) {
    num /= a;
    den /= a;
  }
  return static_cast<double>(num) / static_cast<double>(den);
}

double jensen_shannon(const Eigen::RowVectorXd& p, const Eigen::RowVectorXd& q) {
  double kl_p = 0, kl_q = 0;
  for (Eigen::Index c = 0; c < p.size(); ++c) {
    const double mix = 0.5 * (p[c] + q[c]);
    if (p[c] > 0) kl_p += p[c] * std::log(p[c] / mix);
    if (q[c] > 0) kl_q += q[c] * std::log(q[c] / mix);
  }
  return 0.5 * (kl_p + kl_q) / std::log(2.0);
}

double pairwise_jsd(const std::vector<Eigen::MatrixXd>& probabilities) {
  const std::size_t m = probabilities.size();
  const Eigen::Index n = probabilities.front().rows();
  double total = 0;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      for (Eigen::Index k = 0; k < n; ++k) total += jensen_shannon(probabilities[i].row(k), probabilities[j].row(k));
    }
  }
  return 2.0 * total / (static_cast<double>(n) * static_cast<double>(m) * static_cast<double>(m - 1));
}

double cka_distance(const Eigen::MatrixXd& x_raw, const Eigen::MatrixXd& y_raw) {
  const Eigen::MatrixXd x = centered(x_raw);
  const Eigen::MatrixXd y = centered(y_raw);
  const double xy = cross_frobenius_sq(x, y);
  const double xx = std::sqrt(cross_frobenius_sq(x, x));
  const double yy = std::sqrt(cross_frobenius_sq(y, y));
  return 1.0 - xy / (xx * yy);
}

double op_distance(const Eigen::MatrixXd& x_raw, const Eigen::MatrixXd& y_raw) {
  Eigen::MatrixXd x = centered(x_raw);
  Eigen::MatrixXd y = centered(y_raw);
  x /= std::sqrt(x.cwiseAbs2().sum());
  y /= std::sqrt(y.cwiseAbs2().sum());
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(x.transpose() * y, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::MatrixXd rotation = svd.matrixU() * svd.matrixV().transpose();
  return 0.5 * (y - x * rotation).cwiseAbs2().sum();
}

double svcca_distance(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, double threshold) {
  return whitened_cca_distance(truncated_projection(centered(x), threshold),
                               truncated_projection(centered(y), threshold));
}

double cca_distance(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
  return whitened_cca_distance(centered(x), centered(y));
}

std::map<std::string, double> oracle_measures(const EnsembleBundle& b, double svcca_threshold) {
  std::map<std::string, double> out;
  const auto m = static_cast<Eigen::Index>(b.runs.size());
  const auto n = static_cast<Eigen::Index>(b.num_samples());
  Eigen::MatrixXi labels(m, n);
  for (Eigen::Index r = 0; r < m; ++r) {
    for (Eigen::Index i = 0; i < n; ++i) labels(r, i) = b.runs[static_cast<std::size_t>(r)].predictions[static_cast<std::size_t>(i)];
  }
  out["pwd"] = pairwise_disagreement(labels);
  out["kappa"] = fleiss_kappa_instability(labels, b.num_classes);
  if (b.has_probabilities()) {
    std::vector<Eigen::MatrixXd> probs;
    for (const RunRecord& run : b.runs) probs.push_back(*run.probabilities);
    out["jsd"] = pairwise_jsd(probs);
  }
  for (std::size_t l = 0; l < b.layer_count; ++l) {
    double cka = 0, op = 0, svcca = 0;
    for (std::size_t i = 0; i < b.runs.size(); ++i) {
      for (std::size_t j = i + 1; j < b.runs.size(); ++j) {
        const auto& x = b.runs[i].layers[l];
        const auto& y = b.runs[j].layers[l];
        cka += cka_distance(x, y);
        op += op_distance(x, y);
        svcca += svcca_distance(x, y, svcca_threshold);
      }
    }
    const double pairs = static_cast<double>(m) * static_cast<double>(m - 1) / 2.0;
    const std::string suffix = "@" + std::to_string(l);
    out["cka" + suffix] = cka / pairs;
    out["op" + suffix] = op / pairs;
    out["svcca" + suffix] = svcca / pairs;
  }
  return out;
}

}  // namespace instab::oracle
