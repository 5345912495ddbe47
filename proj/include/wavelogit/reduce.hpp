#pragma once

#include <optional>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace wavelogit {

enum class ReductionKind { pca, pls, sparse_pca, sparse_pls };

std::string reduction_name(ReductionKind kind);
ReductionKind parse_reduction(std::string_view name);

/// d x q loadings V_q with per-component scale values.
///
/// For pca, scores_scale holds the covariance eigenvalues a_1 >= ... >= a_q.
/// For pls, it holds the norm of the residual cross-covariance theta_res' y_c
/// / (n - 1) at each step. For the sparse kinds, the sample variance of each
/// component's scores.
struct ReducedBasis {
  Eigen::MatrixXd loadings;
  Eigen::VectorXd scores_scale;
  ReductionKind kind = ReductionKind::pca;
  Eigen::VectorXd center;

  int d() const { return static_cast<int>(loadings.rows()); }
  int q() const { return static_cast<int>(loadings.cols()); }
};

/// Leading q eigenvectors of the sample covariance (divisor n - 1) of the
/// column-centered rows of theta. Each column's largest-magnitude entry is
/// made positive.
ReducedBasis pca_fit(const Eigen::MatrixXd& theta, int q);

/// Univariate-response NIPALS on centered theta and centered 0/1 labels.
/// Throws RankError when the residual cross-covariance vanishes before q
/// components are extracted.
ReducedBasis pls_fit(const Eigen::MatrixXd& theta,
                     const Eigen::VectorXd& labels, int q);

/// Rank-one soft-thresholded alternating fit per component, then deflation.
/// kind must be sparse_pca (labels ignored) or sparse_pls (labels required).
/// tau is applied to the unit-normalized update direction, so it lives on
/// the scale of loading entries (0 <= tau < 1 keeps at least the largest).
ReducedBasis sparse_component_fit(const Eigen::MatrixXd& theta,
                                  const std::optional<Eigen::VectorXd>& labels,
                                  int q, double tau, ReductionKind kind);

/// V_q' (theta_row - center)
Eigen::VectorXd reduce(const ReducedBasis& basis,
                       const Eigen::Ref<const Eigen::VectorXd>& theta_row);

/// V_q gamma (no center added)
Eigen::VectorXd expand(const ReducedBasis& basis,
                       const Eigen::Ref<const Eigen::VectorXd>& gamma);

}  // namespace wavelogit
