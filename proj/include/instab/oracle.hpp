#ifndef INSTAB_ORACLE_HPP
#define INSTAB_ORACLE_HPP

// Slow reference implementations used to cross-check the main measures.
// Nothing here shares code with prediction.cpp or representation.cpp:
// prediction measures are direct double loops over run pairs, and
// representation distances go through full Jacobi SVDs and explicit
// covariance whitening. Intended for small inputs (n * m * e <= 1e6).

#include "instab/bundle.hpp"

#include <map>

namespace instab::oracle {

// Integer-exact pair counting; same result as the main path bit for bit.
double pairwise_disagreement(const Eigen::MatrixXi& labels);
// Per-item agreement and pooled chance term as exact rationals, one final division.
double fleiss_kappa_instability(const Eigen::MatrixXi& labels, int num_classes);
// KL form: 0.5 KL(p || mix) + 0.5 KL(q || mix), base 2.
double jensen_shannon(const Eigen::RowVectorXd& p, const Eigen::RowVectorXd& q);
double pairwise_jsd(const std::vector<Eigen::MatrixXd>& probabilities);

// Inputs are centered by the oracle itself.
double cka_distance(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y);
// Solves the Procrustes problem explicitly (R = U V^T) and returns half the
// residual ||Y~ - X~ R||_F^2 on Frobenius-normalized inputs.
double op_distance(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y);
// Full-SVD truncation, then CCA via Cxx^-1/2 Cxy Cyy^-1/2.
double svcca_distance(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, double threshold = 0.99);
double cca_distance(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y);

// Every measure the bundle supports: pwd, kappa, jsd (with probabilities) and
// I^l for cka, op and svcca, keyed as "<measure>" or "<measure>@<layer>".
std::map<std::string, double> oracle_measures(const EnsembleBundle& bundle, double svcca_threshold = 0.99);

}  // namespace instab::oracle

#endif  // INSTAB_ORACLE_HPP
