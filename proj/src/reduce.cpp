#include "wavelogit/reduce.hpp"

#include <cmath>
#include <string>

#include "wavelogit/error.hpp"

namespace wavelogit {

std::string reduction_name(ReductionKind kind) {
  switch (kind) {
    case ReductionKind::pca: return "pca";
    case ReductionKind::pls: return "pls";
    case ReductionKind::sparse_pca: return "sparse_pca";
    case ReductionKind::sparse_pls: return "sparse_pls";
  }
  return "unknown";
}

ReductionKind parse_reduction(std::string_view name) {
  for (auto kind : {ReductionKind::pca, ReductionKind::pls,
                    ReductionKind::sparse_pca, ReductionKind::sparse_pls}) {
    if (reduction_name(kind) == name) return kind;
  }
  throw ParseError("unknown reduction kind '" + std::string(name) + "'");
}

namespace {

constexpr double kRankTolerance = 1e-12;
constexpr double kSparseChangeTol = 1e-8;
constexpr int kSparseMaxIter = 500;

void check_component_count(Eigen::Index n, Eigen::Index d, int q) {
  if (n < 2) throw ParameterError("reduction needs at least 2 rows");
  const Eigen::Index limit = std::min(n - 1, d);
  if (q < 1 || q > limit) {
    throw ParameterError("component count q = " + std::to_string(q) +
                         " outside [1, min(n-1, d)] = [1, " +
                         std::to_string(limit) + "]");
  }
}

Eigen::MatrixXd centered(const Eigen::MatrixXd& theta,
                         Eigen::VectorXd& center) {
  center = theta.colwise().mean().transpose();
  return theta.rowwise() - center.transpose();
}

// Largest-magnitude entry positive; first index wins ties.
void fix_sign(Eigen::Ref<Eigen::VectorXd> v) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i) {
    if (std::abs(v[i]) > std::abs(v[best])) best = i;
  }
  if (v[best] < 0.0) v = -v;
}

Eigen::VectorXd centered_labels(const Eigen::VectorXd& labels,
                                Eigen::Index n) {
  if (labels.size() != n) {
    throw DimensionError("labels have length " +
                         std::to_string(labels.size()) + ", expected " +
                         std::to_string(n));
  }
  int ones = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (labels[i] != 0.0 && labels[i] != 1.0) {
      throw DataError("label at row " + std::to_string(i) + " is not 0 or 1");
    }
    ones += labels[i] == 1.0;
  }
  if (ones == 0 || ones == n) {
    throw DataError("partial least squares needs both classes present");
  }
  return labels.array() - labels.mean();
}

// Top-q eigenpairs of the covariance of already-centered rows.
void leading_eigenpairs(const Eigen::MatrixXd& xc, int q,
                        Eigen::MatrixXd& vectors, Eigen::VectorXd& values) {
  const Eigen::Index n = xc.rows();
  const Eigen::Index d = xc.cols();
  const double denom = static_cast<double>(n - 1);
  vectors.resize(d, q);
  values.resize(q);
  if (n < d) {
    // Gram route: eigenvectors of Xc Xc' / (n-1) map to covariance
    // eigenvectors through Xc'.
    const Eigen::MatrixXd gram = (xc * xc.transpose()) / denom;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram);
    const Eigen::Index m = gram.rows();
    const double top = std::max(solver.eigenvalues()[m - 1], 0.0);
    for (int k = 0; k < q; ++k) {
      const double value = solver.eigenvalues()[m - 1 - k];
      if (value <= kRankTolerance * std::max(top, 1.0)) {
        throw RankError("centered data have rank " + std::to_string(k) +
                            " < q = " + std::to_string(q),
                        k);
      }
      values[k] = value;
      vectors.col(k) = xc.transpose() * solver.eigenvectors().col(m - 1 - k);
      vectors.col(k) /= vectors.col(k).norm();
    }
  } else {
    const Eigen::MatrixXd cov = (xc.transpose() * xc) / denom;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    const double top = std::max(solver.eigenvalues()[d - 1], 0.0);
    for (int k = 0; k < q; ++k) {
      const double value = solver.eigenvalues()[d - 1 - k];
      if (value <= kRankTolerance * std::max(top, 1.0)) {
        throw RankError("centered data have rank " + std::to_string(k) +
                            " < q = " + std::to_string(q),
                        k);
      }
      values[k] = value;
      vectors.col(k) = solver.eigenvectors().col(d - 1 - k);
    }
  }
  for (int k = 0; k < q; ++k) fix_sign(vectors.col(k));
}

Eigen::VectorXd soft_threshold_vector(const Eigen::VectorXd& z, double t) {
  Eigen::VectorXd out(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const double mag = std::abs(z[i]) - t;
    out[i] = mag > 0.0 ? std::copysign(mag, z[i]) : 0.0;
  }
  return out;
}

}  // namespace

ReducedBasis pca_fit(const Eigen::MatrixXd& theta, int q) {
  check_component_count(theta.rows(), theta.cols(), q);
  ReducedBasis basis;
  basis.kind = ReductionKind::pca;
  const Eigen::MatrixXd xc = centered(theta, basis.center);
  leading_eigenpairs(xc, q, basis.loadings, basis.scores_scale);
  return basis;
}

ReducedBasis pls_fit(const Eigen::MatrixXd& theta,
                     const Eigen::VectorXd& labels, int q) {
  const Eigen::VectorXd yc = centered_labels(labels, theta.rows());
  check_component_count(theta.rows(), theta.cols(), q);
  ReducedBasis basis;
  basis.kind = ReductionKind::pls;
  Eigen::MatrixXd x = centered(theta, basis.center);
  const double denom = static_cast<double>(theta.rows() - 1);
  basis.loadings.resize(theta.cols(), q);
  basis.scores_scale.resize(q);

  for (int k = 0; k < q; ++k) {
    Eigen::VectorXd w = x.transpose() * yc;
    const double norm = w.norm();
    if (norm < kRankTolerance) {
      throw RankError("PLS: residual cross-covariance vanished after " +
                          std::to_string(k) + " of " + std::to_string(q) +
                          " components",
                      k);
    }
    w /= norm;
    const Eigen::VectorXd t = x * w;
    const double tt = t.squaredNorm();
    const Eigen::VectorXd p = x.transpose() * t / tt;
    x -= t * p.transpose();
    basis.loadings.col(k) = w;
    basis.scores_scale[k] = norm / denom;
  }
  return basis;
}

ReducedBasis sparse_component_fit(const Eigen::MatrixXd& theta,
                                  const std::optional<Eigen::VectorXd>& labels,
                                  int q, double tau, ReductionKind kind) {
  if (kind != ReductionKind::sparse_pca && kind != ReductionKind::sparse_pls) {
    throw ParameterError("sparse_component_fit needs a sparse reduction kind");
  }
  if (!(tau >= 0.0)) throw ParameterError("sparsity threshold tau must be >= 0");
  const bool supervised = kind == ReductionKind::sparse_pls;
  Eigen::VectorXd yc;
  if (supervised) {
    if (!labels) throw ParameterError("sparse PLS needs labels");
    yc = centered_labels(*labels, theta.rows());
  }
  check_component_count(theta.rows(), theta.cols(), q);

  ReducedBasis basis;
  basis.kind = kind;
  Eigen::MatrixXd x = centered(theta, basis.center);
  const double denom = static_cast<double>(theta.rows() - 1);
  basis.loadings.resize(theta.cols(), q);
  basis.scores_scale.resize(q);

  for (int k = 0; k < q; ++k) {
    Eigen::VectorXd v;
    if (supervised) {
      v = x.transpose() * yc;
      if (v.norm() < kRankTolerance) {
        throw RankError("sparse PLS: residual cross-covariance vanished after " +
                            std::to_string(k) + " components",
                        k);
      }
      v /= v.norm();
    } else {
      Eigen::MatrixXd vectors;
      Eigen::VectorXd values;
      leading_eigenpairs(x, 1, vectors, values);
      v = vectors.col(0);
    }

    for (int iter = 0; iter < kSparseMaxIter; ++iter) {
      Eigen::VectorXd z =
          supervised ? Eigen::VectorXd(x.transpose() * yc)
                     : Eigen::VectorXd(x.transpose() * (x * v));
      const double znorm = z.norm();
      if (znorm == 0.0) {
        throw SparsityTooStrongError(
            "component " + std::to_string(k + 1) + " has zero update", k + 1);
      }
      Eigen::VectorXd next = soft_threshold_vector(z / znorm, tau);
      const double next_norm = next.norm();
      if (next_norm == 0.0) {
        throw SparsityTooStrongError(
            "soft threshold tau = " + std::to_string(tau) +
                " zeroes every loading entry of component " +
                std::to_string(k + 1),
            k + 1);
      }
      next /= next_norm;
      const double change = (next - v).norm();
      v = std::move(next);
      if (change <= kSparseChangeTol) break;
    }
    if (!supervised) fix_sign(v);

    const Eigen::VectorXd t = x * v;
    const double tt = t.squaredNorm();
    basis.loadings.col(k) = v;
    basis.scores_scale[k] = tt / denom;
    if (tt > 0.0) {
      if (supervised) {
        const Eigen::VectorXd p = x.transpose() * t / tt;
        x -= t * p.transpose();
      } else {
        x -= t * v.transpose();
      }
    }
  }
  return basis;
}

Eigen::VectorXd reduce(const ReducedBasis& basis,
                       const Eigen::Ref<const Eigen::VectorXd>& theta_row) {
  if (theta_row.size() != basis.d()) {
    throw DimensionError("reduce: row has length " +
                         std::to_string(theta_row.size()) + ", basis has d = " +
                         std::to_string(basis.d()));
  }
  return basis.loadings.transpose() * (theta_row - basis.center);
}

Eigen::VectorXd expand(const ReducedBasis& basis,
                       const Eigen::Ref<const Eigen::VectorXd>& gamma) {
  if (gamma.size() != basis.q()) {
    throw DimensionError("expand: gamma has length " +
                         std::to_string(gamma.size()) + ", basis has q = " +
                         std::to_string(basis.q()));
  }
  return basis.loadings * gamma;
}

}  // namespace wavelogit
