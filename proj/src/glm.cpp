#include "wavelogit/glm.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "wavelogit/error.hpp"

namespace wavelogit {

int LabeledCoefficients::scale_count() const {
  return std::min(1 << j0, d());
}

LabeledCoefficients LabeledCoefficients::subset(
    const std::vector<int>& rows) const {
  LabeledCoefficients out;
  out.j0 = j0;
  out.theta.resize(static_cast<Eigen::Index>(rows.size()), theta.cols());
  out.labels.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.theta.row(static_cast<Eigen::Index>(i)) = theta.row(rows[i]);
    out.labels[static_cast<Eigen::Index>(i)] = labels[rows[i]];
  }
  return out;
}

void validate(const LabeledCoefficients& data, bool require_both_classes) {
  if (data.theta.rows() != data.labels.size()) {
    throw DimensionError("coefficient matrix has " +
                         std::to_string(data.theta.rows()) + " rows but " +
                         std::to_string(data.labels.size()) + " labels");
  }
  if (data.n() < 2) throw DataError("need at least 2 observations");
  int ones = 0;
  for (Eigen::Index i = 0; i < data.labels.size(); ++i) {
    const double y = data.labels[i];
    if (y != 0.0 && y != 1.0) {
      throw DataError("label at row " + std::to_string(i) +
                      " is not 0 or 1");
    }
    ones += y == 1.0;
  }
  if (require_both_classes && (ones == 0 || ones == data.n())) {
    throw DataError("labels contain a single class");
  }
  if (!data.theta.allFinite()) throw DataError("non-finite coefficients");
}

double linear_predictor(const LinearModelState& state,
                        const Eigen::Ref<const Eigen::VectorXd>& theta_row) {
  if (theta_row.size() != state.omega.size()) {
    throw DimensionError("linear_predictor: row has length " +
                         std::to_string(theta_row.size()) +
                         ", coefficients have length " +
                         std::to_string(state.omega.size()));
  }
  return state.intercept + theta_row.dot(state.omega);
}

Eigen::VectorXd linear_predictors(const LinearModelState& state,
                                  const Eigen::MatrixXd& theta) {
  if (theta.cols() != state.omega.size()) {
    throw DimensionError("linear_predictors: matrix has " +
                         std::to_string(theta.cols()) +
                         " columns, coefficients have length " +
                         std::to_string(state.omega.size()));
  }
  Eigen::VectorXd eta = theta * state.omega;
  eta.array() += state.intercept;
  return eta;
}

double link_logistic(double eta) {
  // Capped at the largest double below 1, so saturation never reports
  // certainty.
  constexpr double kBelowOne = 1.0 - 0x1p-53;
  if (eta >= 0.0) return std::min(1.0 / (1.0 + std::exp(-eta)), kBelowOne);
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

namespace {

// log(1 + e^eta)
double softplus(double eta) {
  return eta > 0.0 ? eta + std::log1p(std::exp(-eta))
                   : std::log1p(std::exp(eta));
}

}  // namespace

double neg_log_likelihood_from_eta(const Eigen::VectorXd& eta,
                                   const Eigen::VectorXd& labels) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    total += softplus(eta[i]) - labels[i] * eta[i];
  }
  return total;
}

double neg_log_likelihood(const LinearModelState& state,
                          const LabeledCoefficients& data) {
  if (data.theta.rows() != data.labels.size()) {
    throw DimensionError("neg_log_likelihood: rows and labels disagree");
  }
  return neg_log_likelihood_from_eta(linear_predictors(state, data.theta),
                                     data.labels);
}

NllGradient nll_gradient(const LinearModelState& state,
                         const LabeledCoefficients& data) {
  if (data.theta.rows() != data.labels.size()) {
    throw DimensionError("nll_gradient: rows and labels disagree");
  }
  const Eigen::VectorXd eta = linear_predictors(state, data.theta);
  Eigen::VectorXd residual(eta.size());
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    residual[i] = link_logistic(eta[i]) - data.labels[i];
  }
  return {data.theta.transpose() * residual, residual.sum()};
}

LinearModelState irls_fit(const LabeledCoefficients& data,
                          const IrlsOptions& options) {
  validate(data, true);
  const int n = data.n();
  const int d = data.d();
  const int dim = d + 1;

  // Augmented design [1, theta]; parameter vector [intercept, omega].
  Eigen::MatrixXd design(n, dim);
  design.col(0).setOnes();
  design.rightCols(d) = data.theta;

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(dim);
  Eigen::VectorXd eta = Eigen::VectorXd::Zero(n);
  double nll = neg_log_likelihood_from_eta(eta, data.labels);
  double grad_norm = 0.0;

  for (int iter = 0; iter <= options.max_iter; ++iter) {
    Eigen::VectorXd p(n), w(n);
    for (int i = 0; i < n; ++i) {
      p[i] = link_logistic(eta[i]);
      w[i] = p[i] * (1.0 - p[i]);
    }
    const Eigen::VectorXd grad = design.transpose() * (p - data.labels);
    grad_norm = grad.lpNorm<Eigen::Infinity>();
    if (grad_norm <= options.tol) {
      return {beta.tail(d), beta[0]};
    }
    if (iter == options.max_iter) break;

    Eigen::MatrixXd hessian =
        design.transpose() * w.asDiagonal() * design;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(hessian);
    if (qr.rank() < dim) {
      const double jitter =
          1e-10 * std::max(1.0, hessian.diagonal().maxCoeff());
      hessian.diagonal().array() += jitter;
      qr.compute(hessian);
    }
    const Eigen::VectorXd step = qr.solve(grad);
    if (!step.allFinite()) {
      throw SingularityError("IRLS: singular weighted normal equations");
    }

    // Step halving keeps the likelihood monotone.
    double scale = 1.0;
    Eigen::VectorXd candidate;
    Eigen::VectorXd candidate_eta;
    double candidate_nll = nll;
    for (int halving = 0; halving < 40; ++halving) {
      candidate = beta - scale * step;
      candidate_eta = design * candidate;
      candidate_nll = neg_log_likelihood_from_eta(candidate_eta, data.labels);
      if (candidate_nll <= nll + 1e-12 * std::abs(nll)) break;
      scale *= 0.5;
    }
    if (candidate_nll > nll + 1e-12 * std::abs(nll)) {
      // No progress possible along the Newton direction.
      break;
    }
    beta = std::move(candidate);
    eta = std::move(candidate_eta);
    nll = candidate_nll;

    if (d > 0 && beta.tail(d).lpNorm<Eigen::Infinity>() > options.coef_bound) {
      throw SeparationError(
          "IRLS: coefficients exceed " + std::to_string(options.coef_bound) +
          " (data look separable)");
    }
  }
  throw ConvergenceError("IRLS did not converge: gradient sup-norm " +
                             std::to_string(grad_norm) + " > tol " +
                             std::to_string(options.tol),
                         beta.tail(d), beta[0], grad_norm);
}

}  // namespace wavelogit
