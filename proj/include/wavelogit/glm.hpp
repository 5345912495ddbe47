#pragma once

#include <limits>
#include <vector>

#include <Eigen/Dense>

namespace wavelogit {

/// Wavelet coefficients of n curves (row i = theta_i) with 0/1 labels.
struct LabeledCoefficients {
  Eigen::MatrixXd theta;
  Eigen::VectorXd labels;
  int j0 = 0;

  int n() const { return static_cast<int>(theta.rows()); }
  int d() const { return static_cast<int>(theta.cols()); }
  /// Number of unpenalized scale coefficients, 2^j0 (clipped to d).
  int scale_count() const;

  LabeledCoefficients subset(const std::vector<int>& rows) const;
};

/// Throws DataError unless shapes agree, labels are 0/1 and n >= 2. With
/// require_both_classes, also requires at least one label of each class.
void validate(const LabeledCoefficients& data, bool require_both_classes);

/// Wavelet-domain coefficient vector plus an unpenalized intercept.
struct LinearModelState {
  Eigen::VectorXd omega;
  double intercept = 0.0;
};

struct NllGradient {
  Eigen::VectorXd omega;
  double intercept = 0.0;
};

double linear_predictor(const LinearModelState& state,
                        const Eigen::Ref<const Eigen::VectorXd>& theta_row);

/// Linear predictors for every row of theta.
Eigen::VectorXd linear_predictors(const LinearModelState& state,
                                  const Eigen::MatrixXd& theta);

/// 1 / (1 + exp(-eta)), evaluated without overflow.
double link_logistic(double eta);

/// -sum_i [y_i log p_i + (1 - y_i) log(1 - p_i)], computed in the
/// softplus form log(1 + e^eta) - y eta so it stays finite under separation.
double neg_log_likelihood(const LinearModelState& state,
                          const LabeledCoefficients& data);

/// Same quantity from precomputed linear predictors.
double neg_log_likelihood_from_eta(const Eigen::VectorXd& eta,
                                   const Eigen::VectorXd& labels);

NllGradient nll_gradient(const LinearModelState& state,
                         const LabeledCoefficients& data);

struct IrlsOptions {
  int max_iter = 100;
  double tol = 1e-8;
  /// Abort with SeparationError once any |omega_l| exceeds this.
  double coef_bound = std::numeric_limits<double>::infinity();
};

/// Unpenalized maximum likelihood by Newton/IRLS with step halving.
/// Converged when the sup-norm of the gradient is at most tol.
/// Throws ConvergenceError (with the last iterate) at the iteration cap.
LinearModelState irls_fit(const LabeledCoefficients& data,
                          const IrlsOptions& options);

inline LinearModelState irls_fit(const LabeledCoefficients& data,
                                 int max_iter, double tol) {
  return irls_fit(data, IrlsOptions{max_iter, tol});
}

}  // namespace wavelogit
