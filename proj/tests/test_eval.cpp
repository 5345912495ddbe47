#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "wavelogit/error.hpp"
#include "wavelogit/eval.hpp"

using namespace wavelogit;

namespace {

bool has_point(const RocCurve& c, double fpr, double tpr) {
  for (const RocPoint& p : c.points) {
    if (std::abs(p.fpr - fpr) < 1e-15 && std::abs(p.tpr - tpr) < 1e-15) return true;
  }
  return false;
}

void check_shape(const RocCurve& c) {
  REQUIRE(c.points.size() >= 2);
  CHECK(c.points.size() == c.thresholds.size());
  CHECK(c.points.front().fpr == 0.0);
  CHECK(c.points.front().tpr == 0.0);
  CHECK(c.points.back().fpr == 1.0);
  CHECK(c.points.back().tpr == 1.0);
  CHECK(std::isinf(c.thresholds.front()));
  for (std::size_t k = 1; k < c.points.size(); ++k) {
    CHECK(c.points[k].fpr >= c.points[k - 1].fpr);
    CHECK(c.points[k].tpr >= c.points[k - 1].tpr);
    CHECK(c.thresholds[k] < c.thresholds[k - 1]);
  }
}

}  // namespace

TEST_CASE("ROC: four-point example") {
  const Eigen::Vector4d scores(0.8, 0.4, 0.6, 0.2);
  const Eigen::Vector4d labels(1, 1, 0, 0);
  const RocCurve c = roc_curve(scores, labels);
  check_shape(c);
  CHECK(c.points.size() == 5);
  CHECK(has_point(c, 0.0, 0.5));
  CHECK(has_point(c, 0.5, 0.5));
  CHECK(has_point(c, 0.5, 1.0));
  // (0.5, 0.5) is reached by predicting positive at scores >= 0.6.
  for (std::size_t k = 0; k < c.points.size(); ++k) {
    if (c.points[k].fpr == 0.5 && c.points[k].tpr == 0.5) CHECK(c.thresholds[k] == 0.6);
  }
  CHECK(auc(scores, labels) == 0.75);
  CHECK(trapezoid_area(c) == doctest::Approx(0.75).epsilon(1e-15));
}

TEST_CASE("ROC: perfect ordering and full ties") {
  const Eigen::Vector4d labels(1, 0, 1, 0);
  const RocCurve perfect = roc_curve(Eigen::Vector4d(3, 1, 4, 2), labels);
  check_shape(perfect);
  CHECK(has_point(perfect, 0.0, 1.0));
  CHECK(auc(Eigen::Vector4d(3, 1, 4, 2), labels) == 1.0);

  const RocCurve tied = roc_curve(Eigen::Vector4d::Constant(0.3), labels);
  check_shape(tied);
  CHECK(tied.points.size() == 2);
  CHECK(auc(Eigen::Vector4d::Constant(0.3), labels) == 0.5);
}

TEST_CASE("AUC matches pair counting and the trapezoid on 1000 instances") {
  std::mt19937_64 rng(99);
  for (int inst = 0; inst < 1000; ++inst) {
    const int m = std::uniform_int_distribution<int>(2, 50)(rng);
    Eigen::VectorXd scores(m), labels(m);
    // Coarse scores force plenty of ties.
    std::uniform_int_distribution<int> level(0, inst % 2 ? 5 : 1000);
    for (int i = 0; i < m; ++i) {
      scores[i] = level(rng) / 7.0;
      labels[i] = i % 2;
    }
    std::shuffle(labels.data(), labels.data() + m, rng);
    const double a = auc(scores, labels);
    CHECK(std::abs(a - oracle::pairwise_auc(scores, labels)) <= 1e-12);
    const RocCurve c = roc_curve(scores, labels);
    check_shape(c);
    CHECK(std::abs(trapezoid_area(c) - a) <= 1e-12);

    const Eigen::VectorXd swapped = 1.0 - labels.array();
    CHECK(std::abs(auc(scores, swapped) - (1.0 - a)) <= 1e-12);

    const Eigen::VectorXd positive = scores.array() + 0.1;
    CHECK(auc(2.0 * scores.array() + 1.0, labels) == a);
    CHECK(auc(positive.array().cube(), labels) == a);
  }
}

TEST_CASE("AUC errors") {
  CHECK_THROWS_AS(auc(Eigen::Vector3d(1, 2, 3), Eigen::Vector3d(1, 1, 1)), DataError);
  CHECK_THROWS_AS(roc_curve(Eigen::Vector3d(1, 2, 3), Eigen::Vector3d(0, 0, 0)), DataError);
  CHECK_THROWS_AS(auc(Eigen::Vector3d(1, 2, 3), Eigen::Vector2d(0, 1)), DimensionError);
  CHECK_THROWS_AS(auc(Eigen::Vector3d(1, 2, 3), Eigen::Vector3d(0, 2, 1)), DataError);
  CHECK_THROWS_AS(auc(Eigen::Vector2d(NAN, 1), Eigen::Vector2d(0, 1)), DataError);
}

TEST_CASE("discrimination verdict") {
  CHECK(discrimination_verdict(0.708) == Verdict::validated);
  CHECK(discrimination_verdict(0.7) == Verdict::not_validated);
  CHECK(discrimination_verdict(0.533) == Verdict::not_validated);
  CHECK(discrimination_verdict(std::nextafter(0.7, 1.0)) == Verdict::validated);
  CHECK(verdict_name(Verdict::validated) == "validated");
  CHECK(verdict_name(Verdict::not_validated) == "not_validated");
}
