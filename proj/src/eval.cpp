#include "wavelogit/eval.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "wavelogit/error.hpp"

namespace wavelogit {

namespace {

struct ClassCounts {
  long positives = 0;
  long negatives = 0;
};

ClassCounts count_classes(const Eigen::VectorXd& scores,
                          const Eigen::VectorXd& labels) {
  if (scores.size() != labels.size()) {
    throw DimensionError("scores and labels differ in length");
  }
  ClassCounts c;
  for (Eigen::Index i = 0; i < labels.size(); ++i) {
    if (labels[i] == 1.0) {
      ++c.positives;
    } else if (labels[i] == 0.0) {
      ++c.negatives;
    } else {
      throw DataError("labels must be 0 or 1");
    }
    if (!std::isfinite(scores[i])) throw DataError("non-finite score");
  }
  if (c.positives == 0 || c.negatives == 0) {
    throw DataError("ROC/AUC need both classes present");
  }
  return c;
}

// Indices ordered by descending score; stable so ties keep input order.
std::vector<Eigen::Index> descending_order(const Eigen::VectorXd& scores) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(scores.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) {
                     return scores[a] > scores[b];
                   });
  return order;
}

}  // namespace

RocCurve roc_curve(const Eigen::VectorXd& scores,
                   const Eigen::VectorXd& labels) {
  const ClassCounts c = count_classes(scores, labels);
  const auto order = descending_order(scores);

  RocCurve curve;
  curve.points.push_back({0.0, 0.0});
  curve.thresholds.push_back(std::numeric_limits<double>::infinity());
  long tp = 0;
  long fp = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    const double cutoff = scores[order[i]];
    while (i < order.size() && scores[order[i]] == cutoff) {
      if (labels[order[i]] == 1.0) ++tp; else ++fp;
      ++i;
    }
    curve.points.push_back({static_cast<double>(fp) / c.negatives,
                            static_cast<double>(tp) / c.positives});
    curve.thresholds.push_back(cutoff);
  }
  // Exact endpoint despite division.
  curve.points.back() = {1.0, 1.0};
  return curve;
}

double auc(const Eigen::VectorXd& scores, const Eigen::VectorXd& labels) {
  const ClassCounts c = count_classes(scores, labels);
  const auto order = descending_order(scores);
  // Walk tie groups from the top: each positive beats the negatives below
  // it and ties with negatives in its group. Counts are doubled to stay
  // integral.
  long double twice_concordant = 0.0L;
  long negatives_seen = 0;
  std::size_t i = 0;
  const long total_neg = c.negatives;
  while (i < order.size()) {
    const double cutoff = scores[order[i]];
    long group_pos = 0;
    long group_neg = 0;
    while (i < order.size() && scores[order[i]] == cutoff) {
      if (labels[order[i]] == 1.0) ++group_pos; else ++group_neg;
      ++i;
    }
    negatives_seen += group_neg;
    const long below = total_neg - negatives_seen;
    twice_concordant += static_cast<long double>(group_pos) *
                        (2.0L * below + group_neg);
  }
  return static_cast<double>(twice_concordant /
                             (2.0L * c.positives * c.negatives));
}

double trapezoid_area(const RocCurve& curve) {
  double area = 0.0;
  for (std::size_t k = 1; k < curve.points.size(); ++k) {
    const auto& a = curve.points[k - 1];
    const auto& b = curve.points[k];
    area += (b.fpr - a.fpr) * (a.tpr + b.tpr) * 0.5;
  }
  return area;
}

Verdict discrimination_verdict(double auc_value) {
  return auc_value > kDiscriminationThreshold ? Verdict::validated
                                              : Verdict::not_validated;
}

std::string verdict_name(Verdict verdict) {
  return verdict == Verdict::validated ? "validated" : "not_validated";
}

}  // namespace wavelogit
