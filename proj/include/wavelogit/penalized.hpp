#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "wavelogit/glm.hpp"
#include "wavelogit/reduce.hpp"
#include "wavelogit/wavelet.hpp"

namespace wavelogit {

// wnet: l1 on detail coefficients.
// wcr / wls: sparse PCA / sparse PLS loadings, unpenalized likelihood.
// wpcr / wpls: PCA / PLS constraint omega = V_q gamma plus the l1 penalty.
enum class Estimator { wnet, wcr, wls, wpcr, wpls };

std::string estimator_name(Estimator estimator);
Estimator parse_estimator(std::string_view name);
bool uses_reduction(Estimator estimator);
bool uses_penalty(Estimator estimator);
bool uses_tau(Estimator estimator);

struct FitConfig {
  Estimator estimator = Estimator::wnet;
  double lambda = 0.0;
  int q = 1;
  double tau = 0.0;
  /// Relative objective change that triggers a KKT check.
  double tol = 1e-7;
  /// Required KKT residual (proximal gradient) at exit.
  double kkt_tol = 1e-5;
  /// ADMM primal/dual residual scale: stop when both are below
  /// admm_tol * sqrt(dimension).
  double admm_tol = 1e-6;
  int max_iter = 5000;
  std::uint64_t seed = 0;
};

struct PenalizedSolution {
  Eigen::VectorXd omega;
  double intercept = 0.0;
  std::optional<Eigen::VectorXd> gamma;
  /// Objective after every accepted iteration. For ADMM this is the best
  /// feasible objective reached so far.
  std::vector<double> objective_trace;
  double kkt_residual = 0.0;
  /// Exact nonzeros among detail coefficients; for the ADMM fits, exact
  /// nonzeros of the split variable z = D V_q gamma.
  int nonzero_detail_count = 0;
  /// Effective number of free parameters, intercept included.
  int degrees_of_freedom = 0;
  int iterations = 0;

  LinearModelState state() const { return {omega, intercept}; }
};

/// sign(z) * max(|z| - t, 0)
double soft_threshold(double z, double t);

/// Sup-norm of the detail-block gradient at the unpenalized fit that keeps
/// every detail coefficient at zero. Any lambda >= this value yields an
/// all-zero detail block.
double lambda_max(const LabeledCoefficients& data);

/// Worst violation of the subgradient optimality conditions of
/// NLL + lambda * sum_{l >= 2^j0} |omega_l| at state.
double kkt_residual(const LinearModelState& state,
                    const LabeledCoefficients& data, double lambda);

/// l1-penalized logistic fit by accelerated proximal gradient with
/// backtracking and function-value restart; once the sign pattern settles,
/// a Newton solve on it may finish the job. Throws ConvergenceError when
/// config.max_iter passes without meeting config.kkt_tol.
PenalizedSolution fit_wnet(const LabeledCoefficients& data,
                           const FitConfig& config,
                           const LinearModelState* warm_start = nullptr);

/// NLL(V_q gamma) + lambda * ||D V_q gamma||_1 by ADMM on z = D V_q gamma.
/// rho starts at max(lambda, 1) and is rebalanced a bounded number of
/// times; an exact solve on the zero pattern of z finishes when it passes
/// the KKT test. lambda = 0 reduces to the unpenalized fit on the reduced
/// design.
PenalizedSolution fit_reduced_penalized(const LabeledCoefficients& data,
                                        const ReducedBasis& basis,
                                        const FitConfig& config);

/// Unpenalized IRLS on the reduced design theta * V_q. Throws
/// SeparationError when |gamma| grows past 1e3 or the fitted scores split
/// the classes completely.
PenalizedSolution fit_reduced_unpenalized(const LabeledCoefficients& data,
                                          const ReducedBasis& basis,
                                          const FitConfig& config);

/// Sampled discriminant function beta = W' omega.
Eigen::VectorXd beta_estimate(const PenalizedSolution& solution,
                              const WaveletBasis& basis);

/// A fitted estimator: its solution and, if any, the reduction it used.
struct EstimatorFit {
  FitConfig config;
  PenalizedSolution solution;
  std::optional<ReducedBasis> reduction;
};

/// Builds the reduction required by config.estimator on data.theta, then
/// runs the matching solver.
EstimatorFit fit_estimator(const LabeledCoefficients& data,
                           const FitConfig& config,
                           const LinearModelState* warm_start = nullptr);

}  // namespace wavelogit
