#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace wavelogit {

struct RocPoint {
  double fpr;
  double tpr;
};

/// ROC curve from (0,0) to (1,1). thresholds[k] is the score cutoff at
/// which points[k] is reached (predict positive when score >= cutoff); the
/// leading (0,0) point uses +infinity.
struct RocCurve {
  std::vector<RocPoint> points;
  std::vector<double> thresholds;
};

/// One point per distinct score; tied scores move along a single diagonal
/// segment.
RocCurve roc_curve(const Eigen::VectorXd& scores,
                   const Eigen::VectorXd& labels);

/// Mann-Whitney AUC with ties counted 1/2, via one sort.
double auc(const Eigen::VectorXd& scores, const Eigen::VectorXd& labels);

/// Trapezoidal area under a ROC curve.
double trapezoid_area(const RocCurve& curve);

enum class Verdict { validated, not_validated };

/// The conventional acceptable-discrimination cutoff: AUC strictly above 0.7.
inline constexpr double kDiscriminationThreshold = 0.7;

Verdict discrimination_verdict(double auc_value);
std::string verdict_name(Verdict verdict);

}  // namespace wavelogit
