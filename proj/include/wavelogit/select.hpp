#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "wavelogit/glm.hpp"
#include "wavelogit/penalized.hpp"

namespace wavelogit {

/// Stratified k-fold assignment: assignments[i] in [0, k).
struct FoldPlan {
  int k = 5;
  std::vector<int> assignments;
  std::uint64_t seed = 0;

  std::vector<int> train_indices(int fold) const;
  std::vector<int> test_indices(int fold) const;
};

/// Each class is shuffled with the seed and dealt round-robin onto the folds,
/// class 1 continuing where class 0 stopped, so per-fold class counts and
/// fold sizes both differ by at most one.
FoldPlan make_folds(const Eigen::VectorXd& labels, int k, std::uint64_t seed);

enum class CriterionKind { cv_auc, cv_deviance, aicc };

std::string criterion_name(CriterionKind kind);
CriterionKind parse_criterion(std::string_view name);

struct GridEntry {
  FitConfig config;
  /// Mean held-out AUC, mean held-out deviance per observation, or AICc.
  double criterion = 0.0;
  bool failed = false;
  std::string failure;
  std::vector<double> fold_scores;
  /// FNV-1a of each fold's fitted (omega, intercept) bytes.
  std::vector<std::uint64_t> fold_checksums;
};

struct SelectionResult {
  double best_lambda = 0.0;
  int best_q = 0;
  double best_tau = 0.0;
  std::size_t best_index = 0;
  FitConfig best_config;
  CriterionKind criterion_kind = CriterionKind::cv_auc;
  std::vector<GridEntry> criterion_table;
};

struct CvOptions {
  CriterionKind criterion = CriterionKind::cv_auc;
  /// Worker threads over folds; 0 picks the hardware concurrency.
  int threads = 1;
};

struct FoldOutcome {
  EstimatorFit fit;
  double score = 0.0;
  std::uint64_t checksum = 0;
};

/// Fits config on every fold except `fold` and scores the held-out part.
FoldOutcome evaluate_fold(const LabeledCoefficients& data,
                          const FitConfig& config, const FoldPlan& folds,
                          int fold, CriterionKind criterion,
                          const LinearModelState* warm_start = nullptr);

/// Grid search by k-fold cross-validation. Failed fits mark their grid
/// point as failed; the best surviving point wins, ties going to the larger
/// lambda, then the smaller q, then the larger tau. Throws SelectionError if
/// every point fails. Consecutive wnet entries in a fold are warm-started
/// from one another, so list lambdas in descending order.
SelectionResult cross_validate(const LabeledCoefficients& data,
                               const std::vector<FitConfig>& grid,
                               const FoldPlan& folds,
                               const CvOptions& options = {});

/// 2 NLL + 2k + 2k(k+1)/(n-k-1); throws ParameterError when n <= k + 1.
double aicc_value(double nll, int k_eff, int n);

/// AICc with k_eff = solution.degrees_of_freedom.
double aicc(const PenalizedSolution& solution, const LabeledCoefficients& data);

/// Fits every grid point on all of data and keeps the smallest AICc.
SelectionResult select_by_aicc(const LabeledCoefficients& data,
                               const std::vector<FitConfig>& grid);

/// `points` values from lambda_max down to min_ratio * lambda_max,
/// log-spaced, descending.
std::vector<double> default_lambda_grid(const LabeledCoefficients& data,
                                        int points = 20,
                                        double min_ratio = 1e-4);

/// {1, 2, 4, 8, 16} restricted to [1, min(n - 1, d)].
std::vector<int> default_q_grid(int n, int d);

/// {0, t, 2t} with t the median absolute entry of the dense (PCA or PLS)
/// loadings at q components.
std::vector<double> default_tau_grid(const LabeledCoefficients& data,
                                     Estimator estimator, int q);

/// Cartesian grid in q-major, then tau, then lambda order. Axes that the
/// estimator does not use collapse to a single value.
std::vector<FitConfig> build_grid(Estimator estimator,
                                  const std::vector<double>& lambdas,
                                  const std::vector<int>& qs,
                                  const std::vector<double>& taus,
                                  const FitConfig& base = {});

}  // namespace wavelogit
