#pragma once

// Reference implementations used only by the tests. They are deliberately
// naive and share no code with the library.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

// P(score_pos > score_neg) + 0.5 P(equal), by counting all pairs.
inline double pairwise_auc(const Eigen::VectorXd& scores,
                           const Eigen::VectorXd& labels) {
  long double wins = 0.0L;
  long pairs = 0;
  for (Eigen::Index i = 0; i < scores.size(); ++i) {
    if (labels[i] != 1.0) continue;
    for (Eigen::Index j = 0; j < scores.size(); ++j) {
      if (labels[j] != 0.0) continue;
      ++pairs;
      if (scores[i] > scores[j]) wins += 1.0L;
      else if (scores[i] == scores[j]) wins += 0.5L;
    }
  }
  return static_cast<double>(wins / pairs);
}

// Bernoulli negative log-likelihood summed over rows, in long double, with
// the intercept as parameter 0 and omega as parameters 1..d.
inline long double nll(const Eigen::VectorXd& params, const Eigen::MatrixXd& theta,
                       const Eigen::VectorXd& labels) {
  long double total = 0.0L;
  for (Eigen::Index i = 0; i < theta.rows(); ++i) {
    long double eta = params[0];
    for (Eigen::Index k = 0; k < theta.cols(); ++k) {
      eta += static_cast<long double>(params[k + 1]) * theta(i, k);
    }
    const long double softplus =
        eta > 0 ? eta + std::log1p(std::exp(-eta)) : std::log1p(std::exp(eta));
    total += softplus - labels[i] * eta;
  }
  return total;
}

// Central differences of nll at params; entry 0 is the intercept.
inline Eigen::VectorXd numeric_gradient(const Eigen::VectorXd& params,
                                        const Eigen::MatrixXd& theta,
                                        const Eigen::VectorXd& labels) {
  Eigen::VectorXd g(params.size());
  for (Eigen::Index k = 0; k < params.size(); ++k) {
    const double h = 1e-5 * std::max(1.0, std::abs(params[k]));
    Eigen::VectorXd up = params, down = params;
    up[k] += h;
    down[k] -= h;
    g[k] = static_cast<double>((nll(up, theta, labels) - nll(down, theta, labels)) /
                               (static_cast<long double>(up[k]) - down[k]));
  }
  return g;
}

// Analytic gradient of nll in plain loops; entry 0 is the intercept.
inline Eigen::VectorXd gradient(const Eigen::VectorXd& params,
                                const Eigen::MatrixXd& theta,
                                const Eigen::VectorXd& labels) {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(params.size());
  for (Eigen::Index i = 0; i < theta.rows(); ++i) {
    double eta = params[0];
    for (Eigen::Index k = 0; k < theta.cols(); ++k) eta += params[k + 1] * theta(i, k);
    const double r = 1.0 / (1.0 + std::exp(-eta)) - labels[i];
    g[0] += r;
    for (Eigen::Index k = 0; k < theta.cols(); ++k) g[k + 1] += r * theta(i, k);
  }
  return g;
}

// Subgradient optimality violation for NLL + lambda * sum_{k >= scale}
// |omega_k|: the gradient must vanish on unpenalized coordinates, equal
// -lambda sign(omega_k) on active ones and stay within [-lambda, lambda] on
// zero ones.
inline double kkt_violation(const Eigen::VectorXd& params,
                            const Eigen::MatrixXd& theta,
                            const Eigen::VectorXd& labels, int scale_count,
                            double lambda) {
  const Eigen::VectorXd g = gradient(params, theta, labels);
  double worst = std::abs(g[0]);
  for (Eigen::Index k = 0; k < theta.cols(); ++k) {
    const double gk = g[k + 1];
    const double w = params[k + 1];
    double v;
    if (k < scale_count) v = std::abs(gk);
    else if (w > 0) v = std::abs(gk + lambda);
    else if (w < 0) v = std::abs(gk - lambda);
    else v = std::max(0.0, std::abs(gk) - lambda);
    worst = std::max(worst, v);
  }
  return worst;
}

// Newton-Raphson on the full design [1, theta] with a dense solve, no step
// control. Only for well-conditioned, non-separable data.
inline Eigen::VectorXd newton_logistic(const Eigen::MatrixXd& theta,
                                       const Eigen::VectorXd& labels,
                                       int iterations = 50) {
  const Eigen::Index n = theta.rows(), p = theta.cols() + 1;
  Eigen::MatrixXd x(n, p);
  x.col(0).setOnes();
  x.rightCols(p - 1) = theta;
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  for (int it = 0; it < iterations; ++it) {
    const Eigen::VectorXd eta = x * beta;
    Eigen::VectorXd mu(n), w(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      mu[i] = 1.0 / (1.0 + std::exp(-eta[i]));
      w[i] = mu[i] * (1.0 - mu[i]);
    }
    const Eigen::MatrixXd h = x.transpose() * w.asDiagonal() * x;
    const Eigen::VectorXd step = h.ldlt().solve(x.transpose() * (labels - mu));
    beta += step;
    if (step.lpNorm<Eigen::Infinity>() < 1e-13) break;
  }
  return beta;
}

inline Eigen::MatrixXd gaussian_matrix(std::mt19937_64& rng, int rows, int cols) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = normal(rng);
  return m;
}

// Labels drawn from a logistic model with the given linear predictor.
inline Eigen::VectorXd bernoulli_labels(std::mt19937_64& rng,
                                        const Eigen::VectorXd& eta) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Eigen::VectorXd y(eta.size());
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    y[i] = unif(rng) < 1.0 / (1.0 + std::exp(-eta[i])) ? 1.0 : 0.0;
  }
  return y;
}

}  // namespace oracle
