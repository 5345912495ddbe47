#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "wavelogit/error.hpp"
#include "wavelogit/reduce.hpp"

using namespace wavelogit;

namespace {

Eigen::MatrixXd sample_covariance(const Eigen::MatrixXd& x) {
  const Eigen::MatrixXd xc = x.rowwise() - x.colwise().mean();
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(x.cols(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    cov += xc.row(i).transpose() * xc.row(i);
  }
  return cov / static_cast<double>(x.rows() - 1);
}

Eigen::VectorXd balanced_labels(int n) {
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) y[i] = i % 2;
  return y;
}

double max_abs(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("reduction names") {
  CHECK(parse_reduction("sparse_pls") == ReductionKind::sparse_pls);
  CHECK(reduction_name(ReductionKind::pca) == "pca");
  CHECK_THROWS_AS(parse_reduction("ica"), ParseError);
}

TEST_CASE("PCA: two points on a line") {
  Eigen::MatrixXd x(2, 2);
  x << 1, 0, -1, 0;
  const ReducedBasis b = pca_fit(x, 1);
  CHECK(b.kind == ReductionKind::pca);
  CHECK(b.scores_scale[0] == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(b.loadings(0, 0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(std::abs(b.loadings(1, 0)) < 1e-14);
  CHECK_THROWS_AS(pca_fit(x, 2), ParameterError);
  CHECK_THROWS_AS(pca_fit(x, 0), ParameterError);
}

TEST_CASE("PCA: isotropic spectrum") {
  const int d = 6;
  const ReducedBasis b = pca_fit(3.0 * Eigen::MatrixXd::Identity(d, d), d - 1);
  for (int k = 1; k < d - 1; ++k) {
    CHECK(std::abs(b.scores_scale[k] - b.scores_scale[0]) < 1e-10);
  }
  CHECK(max_abs(b.loadings.transpose() * b.loadings - Eigen::MatrixXd::Identity(d - 1, d - 1)) <
        1e-10);
}

TEST_CASE("PCA: full decomposition reconstructs the covariance") {
  std::mt19937_64 rng(50);
  Eigen::MatrixXd x = oracle::gaussian_matrix(rng, 50, 16);
  x = x * oracle::gaussian_matrix(rng, 16, 16);  // correlated columns
  const ReducedBasis b = pca_fit(x, 16);
  const Eigen::MatrixXd cov = sample_covariance(x);
  const Eigen::MatrixXd rebuilt =
      b.loadings * b.scores_scale.asDiagonal() * b.loadings.transpose();
  CHECK((rebuilt - cov).norm() < 1e-8);
  CHECK(std::abs(b.scores_scale.sum() - cov.trace()) <= 1e-8 * cov.trace());

  // Row norms of the centered data survive projection onto the full basis.
  const Eigen::MatrixXd xc = x.rowwise() - b.center.transpose();
  const Eigen::MatrixXd proj = xc * b.loadings;
  for (int i = 0; i < 50; ++i) {
    CHECK(std::abs(proj.row(i).norm() - xc.row(i).norm()) <= 1e-8 * xc.row(i).norm());
  }
}

TEST_CASE("PCA invariants on 200 seeded matrices, both routes") {
  std::mt19937_64 rng(51);
  std::uniform_int_distribution<int> dim(2, 24);
  for (int inst = 0; inst < 200; ++inst) {
    const int n = dim(rng) + 1, d = dim(rng);
    const int q = std::uniform_int_distribution<int>(1, std::min(n - 1, d))(rng);
    const Eigen::MatrixXd x = oracle::gaussian_matrix(rng, n, d);
    const ReducedBasis b = pca_fit(x, q);
    CHECK(max_abs(b.loadings.transpose() * b.loadings - Eigen::MatrixXd::Identity(q, q)) < 1e-10);
    for (int k = 0; k < q; ++k) {
      CHECK(b.scores_scale[k] >= -1e-12);
      if (k > 0) CHECK(b.scores_scale[k] <= b.scores_scale[k - 1] + 1e-12);
      // Eigen-equation against the naive covariance, and the sign rule.
      const Eigen::VectorXd v = b.loadings.col(k);
      const Eigen::MatrixXd cov = sample_covariance(x);
      CHECK((cov * v - b.scores_scale[k] * v).norm() < 1e-8 * std::max(1.0, cov.norm()));
      Eigen::Index at;
      v.cwiseAbs().maxCoeff(&at);
      CHECK(v[at] > 0.0);
    }
  }
}

TEST_CASE("PCA determinism") {
  std::mt19937_64 rng(52);
  const Eigen::MatrixXd x = oracle::gaussian_matrix(rng, 20, 64);
  const ReducedBasis a = pca_fit(x, 5), b = pca_fit(x, 5);
  CHECK((a.loadings.array() == b.loadings.array()).all());
  CHECK((a.scores_scale.array() == b.scores_scale.array()).all());
}

TEST_CASE("PLS: label covariance in one coordinate") {
  const int n = 20;
  const Eigen::VectorXd y = balanced_labels(n);
  const Eigen::VectorXd yc = y.array() - y.mean();
  Eigen::MatrixXd x(n, 2);
  x.col(0) = yc;
  // A column orthogonal to yc and to the constant.
  for (int i = 0; i < n; ++i) x(i, 1) = (i / 2) % 2 == 0 ? 1.0 : -1.0;
  REQUIRE(std::abs(x.col(1).dot(yc)) < 1e-14);
  const ReducedBasis b = pls_fit(x, y, 1);
  CHECK(std::abs(b.loadings(0, 0) - 1.0) < 1e-8);
  CHECK(std::abs(b.loadings(1, 0)) < 1e-8);
}

TEST_CASE("PLS: single class is rejected") {
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(6, 3);
  CHECK_THROWS_AS(pls_fit(x, Eigen::VectorXd::Ones(6), 1), DataError);
}

TEST_CASE("PLS: first component and orthogonal scores") {
  std::mt19937_64 rng(60);
  const Eigen::MatrixXd x = oracle::gaussian_matrix(rng, 60, 8);
  const Eigen::VectorXd y = oracle::bernoulli_labels(rng, x.col(0) - x.col(3));
  const ReducedBasis b = pls_fit(x, y, 2);

  // One-step hand computation with plain loops.
  Eigen::VectorXd direct = Eigen::VectorXd::Zero(8);
  const double ybar = y.mean();
  for (int k = 0; k < 8; ++k) {
    double mean = 0.0;
    for (int i = 0; i < 60; ++i) mean += x(i, k);
    mean /= 60.0;
    for (int i = 0; i < 60; ++i) direct[k] += (x(i, k) - mean) * (y[i] - ybar);
  }
  direct /= direct.norm();
  CHECK((b.loadings.col(0) - direct).cwiseAbs().maxCoeff() < 1e-10);
  for (int k = 0; k < 2; ++k) CHECK(std::abs(b.loadings.col(k).norm() - 1.0) < 1e-10);

  // Scores of successive components on the deflated residuals.
  const int q = 6;
  const ReducedBasis full = pls_fit(x, y, q);
  Eigen::MatrixXd res = x.rowwise() - x.colwise().mean();
  Eigen::MatrixXd scores(60, q);
  for (int k = 0; k < q; ++k) {
    scores.col(k) = res * full.loadings.col(k);
    const Eigen::VectorXd t = scores.col(k);
    res -= t * (res.transpose() * t / t.squaredNorm()).transpose();
  }
  for (int a = 0; a < q; ++a) {
    for (int c = a + 1; c < q; ++c) {
      CHECK(std::abs(scores.col(a).dot(scores.col(c))) <
            1e-8 * scores.col(a).norm() * scores.col(c).norm());
    }
  }
}

TEST_CASE("sparse fits with tau = 0 reproduce the dense ones") {
  std::mt19937_64 rng(70);
  for (int inst = 0; inst < 10; ++inst) {
    const Eigen::MatrixXd x = oracle::gaussian_matrix(rng, 40, 16) *
                              oracle::gaussian_matrix(rng, 16, 16);
    const Eigen::VectorXd y = oracle::bernoulli_labels(rng, x.col(2));
    const int q = 3;
    const ReducedBasis pca = pca_fit(x, q);
    const ReducedBasis spca = sparse_component_fit(x, std::nullopt, q, 0.0, ReductionKind::sparse_pca);
    CHECK(spca.kind == ReductionKind::sparse_pca);
    CHECK(max_abs(pca.loadings - spca.loadings) < 1e-8);
    const ReducedBasis pls = pls_fit(x, y, q);
    const ReducedBasis spls = sparse_component_fit(x, y, q, 0.0, ReductionKind::sparse_pls);
    CHECK(max_abs(pls.loadings - spls.loadings) < 1e-8);
  }
}

TEST_CASE("sparse fit picks out a single active coordinate") {
  std::mt19937_64 rng(71);
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(30, 10);
  x.col(4) = oracle::gaussian_matrix(rng, 30, 1);
  const Eigen::VectorXd y = oracle::bernoulli_labels(rng, 3.0 * x.col(4));
  for (double tau : {0.0, 0.3, 0.9}) {
    const ReducedBasis b = sparse_component_fit(x, std::nullopt, 1, tau, ReductionKind::sparse_pca);
    Eigen::VectorXd e = Eigen::VectorXd::Zero(10);
    e[4] = 1.0;
    CHECK(max_abs(b.loadings.col(0) - e) < 1e-12);
    const ReducedBasis s = sparse_component_fit(x, y, 1, tau, ReductionKind::sparse_pls);
    CHECK(std::abs(std::abs(s.loadings(4, 0)) - 1.0) < 1e-12);
  }
}

TEST_CASE("sparse PCA concentrates on a planted support") {
  std::mt19937_64 rng(72);
  const std::vector<int> support = {1, 6, 9, 13};
  int good = 0;
  for (int inst = 0; inst < 10; ++inst) {
    Eigen::VectorXd factor = Eigen::VectorXd::Zero(16);
    for (int k : support) factor[k] = 0.5;
    const Eigen::MatrixXd scores = 3.0 * oracle::gaussian_matrix(rng, 40, 1);
    const Eigen::MatrixXd x =
        scores * factor.transpose() + oracle::gaussian_matrix(rng, 40, 16);
    const ReducedBasis b = sparse_component_fit(x, std::nullopt, 1, 0.2, ReductionKind::sparse_pca);
    double mass = 0.0;
    for (int k : support) mass += b.loadings(k, 0) * b.loadings(k, 0);
    CHECK(mass >= 0.7);
    good += (b.loadings.col(0).array() != 0.0).count() <= 8;
  }
  // The threshold should zero most off-support entries.
  CHECK(good >= 8);
}

TEST_CASE("sparse fit errors") {
  std::mt19937_64 rng(73);
  const Eigen::MatrixXd x = oracle::gaussian_matrix(rng, 20, 8);
  try {
    sparse_component_fit(x, std::nullopt, 2, 1.0, ReductionKind::sparse_pca);
    FAIL("expected SparsityTooStrongError");
  } catch (const SparsityTooStrongError& e) {
    CHECK(e.component() == 1);
  }
  CHECK_THROWS_AS(sparse_component_fit(x, std::nullopt, 1, 0.1, ReductionKind::pca),
                  ParameterError);
  CHECK_THROWS_AS(sparse_component_fit(x, std::nullopt, 1, -0.1, ReductionKind::sparse_pca),
                  ParameterError);
  CHECK_THROWS_AS(sparse_component_fit(x, std::nullopt, 1, 0.1, ReductionKind::sparse_pls),
                  ParameterError);
}

TEST_CASE("reduce and expand") {
  std::mt19937_64 rng(80);
  const Eigen::MatrixXd x = oracle::gaussian_matrix(rng, 30, 8);
  const ReducedBasis b = pca_fit(x, 3);
  CHECK((expand(b, Eigen::Vector3d(1, 0, 0)) - b.loadings.col(0)).norm() == 0.0);

  const ReducedBasis full = pca_fit(x, 8);
  for (int i = 0; i < 5; ++i) {
    const Eigen::VectorXd row = x.row(i).transpose();
    const Eigen::VectorXd back = expand(full, reduce(full, row));
    CHECK((back - (row - full.center)).cwiseAbs().maxCoeff() < 1e-8);
  }
  for (int inst = 0; inst < 5; ++inst) {
    const Eigen::VectorXd g = oracle::gaussian_matrix(rng, 3, 1);
    const Eigen::VectorXd row = expand(b, g) + b.center;
    CHECK((reduce(b, row) - g).cwiseAbs().maxCoeff() < 1e-10);
  }
  CHECK_THROWS_AS(reduce(b, Eigen::VectorXd::Zero(5)), DimensionError);
  CHECK_THROWS_AS(expand(b, Eigen::VectorXd::Zero(4)), DimensionError);
}
