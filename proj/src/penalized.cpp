#include "wavelogit/penalized.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include "wavelogit/error.hpp"

namespace wavelogit {

std::string estimator_name(Estimator estimator) {
  switch (estimator) {
    case Estimator::wnet: return "wnet";
    case Estimator::wcr: return "wcr";
    case Estimator::wls: return "wls";
    case Estimator::wpcr: return "wpcr";
    case Estimator::wpls: return "wpls";
  }
  return "unknown";
}

Estimator parse_estimator(std::string_view name) {
  for (auto e : {Estimator::wnet, Estimator::wcr, Estimator::wls,
                 Estimator::wpcr, Estimator::wpls}) {
    if (estimator_name(e) == name) return e;
  }
  throw ParameterError("unknown method '" + std::string(name) +
                       "' (expected wnet, wcr, wls, wpcr or wpls)");
}

bool uses_reduction(Estimator estimator) {
  return estimator != Estimator::wnet;
}

bool uses_penalty(Estimator estimator) {
  return estimator == Estimator::wnet || estimator == Estimator::wpcr ||
         estimator == Estimator::wpls;
}

bool uses_tau(Estimator estimator) {
  return estimator == Estimator::wcr || estimator == Estimator::wls;
}

double soft_threshold(double z, double t) {
  const double mag = std::abs(z) - t;
  return mag > 0.0 ? std::copysign(mag, z) : 0.0;
}

namespace {

// [1, theta]
Eigen::MatrixXd augmented_design(const Eigen::MatrixXd& x) {
  Eigen::MatrixXd design(x.rows(), x.cols() + 1);
  design.col(0).setOnes();
  design.rightCols(x.cols()) = x;
  return design;
}

Eigen::VectorXd residuals(const Eigen::VectorXd& eta,
                          const Eigen::VectorXd& labels) {
  Eigen::VectorXd r(eta.size());
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    r[i] = link_logistic(eta[i]) - labels[i];
  }
  return r;
}

// KKT violation on the packed vector [intercept, omega]; packed indices
// >= first_penalized carry the l1 penalty.
double packed_kkt(const Eigen::VectorXd& x, const Eigen::VectorXd& grad,
                  Eigen::Index first_penalized, double lambda) {
  double worst = 0.0;
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    double v;
    if (k < first_penalized) {
      v = std::abs(grad[k]);
    } else if (x[k] == 0.0) {
      v = std::max(std::abs(grad[k]) - lambda, 0.0);
    } else {
      v = std::abs(grad[k] + std::copysign(lambda, x[k]));
    }
    worst = std::max(worst, v);
  }
  return worst;
}

double l1_tail(const Eigen::VectorXd& x, Eigen::Index first) {
  return x.tail(x.size() - first).lpNorm<1>();
}

int count_nonzero(const Eigen::VectorXd& x) {
  int count = 0;
  for (Eigen::Index i = 0; i < x.size(); ++i) count += x[i] != 0.0;
  return count;
}

void check_config(const FitConfig& config) {
  if (!(config.lambda >= 0.0) || !std::isfinite(config.lambda)) {
    throw ParameterError("lambda must be finite and >= 0");
  }
  if (uses_reduction(config.estimator) && config.q < 1) {
    throw ParameterError("q must be >= 1");
  }
  if (config.max_iter < 1) throw ParameterError("max_iter must be >= 1");
}

}  // namespace

double kkt_residual(const LinearModelState& state,
                    const LabeledCoefficients& data, double lambda) {
  const NllGradient g = nll_gradient(state, data);
  Eigen::VectorXd x(state.omega.size() + 1);
  Eigen::VectorXd grad(x.size());
  x << state.intercept, state.omega;
  grad << g.intercept, g.omega;
  return packed_kkt(x, grad, 1 + data.scale_count(), lambda);
}

namespace {

// Unpenalized fit on the scale block with every detail coefficient at zero,
// plus the sup-norm of the detail gradient there.
struct NullModel {
  LinearModelState state;
  double detail_gradient = 0.0;
};

NullModel null_model(const LabeledCoefficients& data) {
  const int s = data.scale_count();
  LabeledCoefficients scale_only;
  scale_only.theta = data.theta.leftCols(s);
  scale_only.labels = data.labels;
  scale_only.j0 = data.j0;
  const LinearModelState fit = irls_fit(scale_only, 200, 1e-10);
  NullModel out;
  out.state = {Eigen::VectorXd::Zero(data.d()), fit.intercept};
  out.state.omega.head(s) = fit.omega;
  const NllGradient g = nll_gradient(out.state, data);
  const int detail = data.d() - s;
  out.detail_gradient =
      detail > 0 ? g.omega.tail(detail).lpNorm<Eigen::Infinity>() : 0.0;
  return out;
}

}  // namespace

double lambda_max(const LabeledCoefficients& data) {
  validate(data, true);
  return null_model(data).detail_gradient;
}

namespace {

// Damped Newton on the coordinates that are unpenalized or nonzero in x,
// with the penalty linearized at their signs. Returns the result only if
// no sign flips and the full KKT test passes at tol.
std::optional<Eigen::VectorXd> wnet_newton_finish(
    const Eigen::MatrixXd& design, const Eigen::VectorXd& y,
    const Eigen::VectorXd& x, Eigen::Index first_pen, double lambda,
    double tol) {
  std::vector<Eigen::Index> free;
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    if (k < first_pen || x[k] != 0.0) free.push_back(k);
  }
  const Eigen::Index p = static_cast<Eigen::Index>(free.size());
  if (p >= design.rows()) return std::nullopt;
  Eigen::MatrixXd sub(design.rows(), p);
  Eigen::VectorXd linear = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd v(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    const Eigen::Index k = free[static_cast<std::size_t>(j)];
    sub.col(j) = design.col(k);
    v[j] = x[k];
    if (k >= first_pen) linear[j] = std::copysign(lambda, x[k]);
  }
  auto value = [&](const Eigen::VectorXd& w) {
    return neg_log_likelihood_from_eta(sub * w, y) + linear.dot(w);
  };
  double current = value(v);
  for (int it = 0; it < 50; ++it) {
    const Eigen::VectorXd eta = sub * v;
    Eigen::VectorXd r(eta.size()), w(eta.size());
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
      const double pr = link_logistic(eta[i]);
      r[i] = pr - y[i];
      w[i] = pr * (1.0 - pr);
    }
    const Eigen::VectorXd grad = sub.transpose() * r + linear;
    if (grad.lpNorm<Eigen::Infinity>() <= 1e-3 * tol) break;
    const Eigen::MatrixXd hess = sub.transpose() * w.asDiagonal() * sub;
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(hess);
    const Eigen::VectorXd step = ldlt.solve(grad);
    if (ldlt.info() != Eigen::Success || !step.allFinite()) return std::nullopt;
    double scale = 1.0;
    bool accepted = false;
    for (int h = 0; h < 40 && !accepted; ++h, scale *= 0.5) {
      const Eigen::VectorXd cand = v - scale * step;
      const double cv = value(cand);
      if (cv <= current + 1e-13 * std::abs(current)) {
        v = cand;
        current = cv;
        accepted = true;
      }
    }
    if (!accepted) break;
  }

  Eigen::VectorXd out = Eigen::VectorXd::Zero(x.size());
  for (Eigen::Index j = 0; j < p; ++j) {
    const Eigen::Index k = free[static_cast<std::size_t>(j)];
    if (k >= first_pen && v[j] * x[k] <= 0.0) return std::nullopt;
    out[k] = v[j];
  }
  const Eigen::VectorXd grad = design.transpose() * residuals(design * out, y);
  if (packed_kkt(out, grad, first_pen, lambda) > tol) return std::nullopt;
  return out;
}

}  // namespace

PenalizedSolution fit_wnet(const LabeledCoefficients& data,
                           const FitConfig& config,
                           const LinearModelState* warm_start) {
  validate(data, true);
  check_config(config);
  const int n = data.n();
  const int d = data.d();
  const Eigen::Index first_pen = 1 + data.scale_count();
  const double lambda = config.lambda;
  const Eigen::MatrixXd design = augmented_design(data.theta);
  const Eigen::VectorXd& y = data.labels;

  if (lambda > 0.0 && d > data.scale_count()) {
    // At or above lambda_max the null model is the exact solution.
    try {
      const NullModel null = null_model(data);
      const double kkt = kkt_residual(null.state, data, lambda);
      if (lambda >= null.detail_gradient && kkt <= config.kkt_tol) {
        PenalizedSolution sol;
        sol.omega = null.state.omega;
        sol.intercept = null.state.intercept;
        sol.objective_trace.push_back(neg_log_likelihood(null.state, data));
        sol.kkt_residual = kkt;
        sol.nonzero_detail_count = 0;
        sol.degrees_of_freedom = 1 + count_nonzero(sol.omega);
        sol.iterations = 0;
        return sol;
      }
    } catch (const NumericalError&) {
      // Scale block alone separates or is singular; let the solver decide.
    }
  }

  Eigen::VectorXd x = Eigen::VectorXd::Zero(d + 1);
  if (warm_start) {
    if (warm_start->omega.size() != d) {
      throw DimensionError("fit_wnet: warm start has wrong dimension");
    }
    x << warm_start->intercept, warm_start->omega;
  }

  auto smooth = [&](const Eigen::VectorXd& v, Eigen::VectorXd& eta) {
    eta = design * v;
    return neg_log_likelihood_from_eta(eta, y);
  };
  auto penalty = [&](const Eigen::VectorXd& v) {
    return lambda * l1_tail(v, first_pen);
  };
  auto prox = [&](const Eigen::VectorXd& v, double step) {
    Eigen::VectorXd out = v;
    for (Eigen::Index k = first_pen; k < out.size(); ++k) {
      out[k] = soft_threshold(out[k], lambda * step);
    }
    return out;
  };

  // Lipschitz estimate of the logistic Hessian, refined by backtracking.
  double lipschitz = std::max(design.squaredNorm() / (4.0 * n), 1e-12);

  Eigen::VectorXd eta_x;
  double f_x = smooth(x, eta_x);
  double obj_x = f_x + penalty(x);

  PenalizedSolution sol;
  sol.objective_trace.push_back(obj_x);

  Eigen::VectorXd y_pt = x;
  double t = 1.0;
  bool restarted = true;
  double kkt = std::numeric_limits<double>::infinity();
  std::vector<signed char> checked_signs;

  Eigen::VectorXd eta_y, eta_new;
  int iter = 0;
  for (; iter < config.max_iter; ++iter) {
    const double f_y = smooth(y_pt, eta_y);
    const Eigen::VectorXd grad_y = design.transpose() * residuals(eta_y, y);

    Eigen::VectorXd x_new;
    double f_new = 0.0;
    // Let the step grow again once the iterate reaches flatter regions.
    lipschitz = std::max(0.5 * lipschitz, 1e-12);
    for (int bt = 0; bt < 60; ++bt) {
      x_new = prox(y_pt - grad_y / lipschitz, 1.0 / lipschitz);
      const Eigen::VectorXd diff = x_new - y_pt;
      f_new = smooth(x_new, eta_new);
      const double model = f_y + grad_y.dot(diff) +
                           0.5 * lipschitz * diff.squaredNorm();
      if (f_new <= model + 1e-12 * std::abs(model)) break;
      lipschitz *= 2.0;
    }
    const double obj_new = f_new + penalty(x_new);

    if (obj_new > obj_x && !restarted) {
      // Function-value restart: drop momentum, retry from x.
      y_pt = x;
      t = 1.0;
      restarted = true;
      continue;
    }
    restarted = false;

    const double change = std::abs(obj_x - obj_new);
    const Eigen::VectorXd x_old = x;
    x = x_new;
    eta_x = eta_new;
    obj_x = obj_new;
    sol.objective_trace.push_back(obj_x);

    if (change <= config.tol * std::max(1.0, std::abs(obj_x)) ||
        iter % 10 == 0) {
      const Eigen::VectorXd grad_x = design.transpose() * residuals(eta_x, y);
      kkt = packed_kkt(x, grad_x, first_pen, lambda);
      if (kkt <= config.kkt_tol) {
        ++iter;
        break;
      }
      // The first-order tail can be slow; once the signs hold still between
      // checks, try solving on them exactly.
      std::vector<signed char> signs(static_cast<std::size_t>(x.size()));
      for (Eigen::Index k = 0; k < x.size(); ++k) {
        signs[static_cast<std::size_t>(k)] = (x[k] > 0.0) - (x[k] < 0.0);
      }
      if (signs == checked_signs) {
        const auto finished = wnet_newton_finish(design, y, x, first_pen,
                                                 lambda, config.kkt_tol);
        if (finished) {
          Eigen::VectorXd eta_f;
          const double obj_f = smooth(*finished, eta_f) + penalty(*finished);
          if (obj_f <= obj_x + 1e-9) {
            x = *finished;
            obj_x = std::min(obj_f, obj_x);
            sol.objective_trace.push_back(obj_x);
            const Eigen::VectorXd grad_f = design.transpose() * residuals(eta_f, y);
            kkt = packed_kkt(x, grad_f, first_pen, lambda);
            ++iter;
            break;
          }
        }
      }
      checked_signs = std::move(signs);
    }

    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    y_pt = x + ((t - 1.0) / t_next) * (x - x_old);
    t = t_next;
  }

  if (!(kkt <= config.kkt_tol)) {
    throw ConvergenceError(
        "WNET proximal gradient reached " + std::to_string(config.max_iter) +
            " iterations with KKT residual " + std::to_string(kkt),
        x.tail(d), x[0], kkt);
  }

  sol.intercept = x[0];
  sol.omega = x.tail(d);
  sol.kkt_residual = kkt;
  sol.nonzero_detail_count =
      count_nonzero(sol.omega.tail(d - data.scale_count()));
  sol.degrees_of_freedom = 1 + count_nonzero(sol.omega);
  sol.iterations = iter;
  return sol;
}

namespace {

void check_basis(const LabeledCoefficients& data, const ReducedBasis& basis) {
  if (basis.d() != data.d()) {
    throw DimensionError("reduction has d = " + std::to_string(basis.d()) +
                         ", data have d = " + std::to_string(data.d()));
  }
}

PenalizedSolution unpenalized_reduced(const LabeledCoefficients& data,
                                      const ReducedBasis& basis,
                                      double coef_bound) {
  LabeledCoefficients reduced;
  reduced.theta = data.theta * basis.loadings;
  reduced.labels = data.labels;
  reduced.j0 = 0;

  PenalizedSolution sol;
  sol.objective_trace.push_back(
      neg_log_likelihood_from_eta(Eigen::VectorXd::Zero(data.n()), data.labels));
  IrlsOptions options;
  options.max_iter = 200;
  options.tol = 1e-9;
  options.coef_bound = coef_bound;
  const LinearModelState fit = irls_fit(reduced, options);

  sol.gamma = fit.omega;
  sol.omega = expand(basis, fit.omega);
  sol.intercept = fit.intercept;
  const NllGradient g = nll_gradient(fit, reduced);
  sol.kkt_residual =
      std::max(g.omega.lpNorm<Eigen::Infinity>(), std::abs(g.intercept));
  sol.objective_trace.push_back(neg_log_likelihood(fit, reduced));
  sol.nonzero_detail_count =
      count_nonzero(sol.omega.tail(data.d() - data.scale_count()));
  sol.degrees_of_freedom = 1 + basis.q();
  sol.iterations = 0;
  return sol;
}

// Exact solve on a fixed pattern: rows `zero` of A gamma held at 0, the
// others at the signs of z. Accepted only if the result satisfies the full
// optimality conditions of NLL + lambda ||A gamma||_1 to within tol; then
// `multipliers` holds the dual vector (lambda sign on the nonzero rows).
struct Polished {
  Eigen::VectorXd params;
  Eigen::VectorXd multipliers;
  std::vector<Eigen::Index> zero_rows;
};

// A row to move in or out of the zero set: new_value 0 puts it in, +-1
// releases it with that sign.
struct PatternFix {
  Eigen::Index row;
  double new_value;
};

// On failure, `violators` lists the pattern changes suggested by the
// attempt; empty if the pattern itself looked right.
std::optional<Polished> polish_pattern(const Eigen::MatrixXd& design,
                                       const Eigen::VectorXd& y,
                                       const Eigen::MatrixXd& a, double lambda,
                                       const Eigen::VectorXd& z,
                                       const Eigen::VectorXd& dual_hint,
                                       const Eigen::VectorXd& start, double tol,
                                       std::vector<PatternFix>& violators) {
  const Eigen::Index m = a.rows(), q = a.cols();
  std::vector<Eigen::Index> zero, active;
  for (Eigen::Index k = 0; k < m; ++k) (z[k] == 0.0 ? zero : active).push_back(k);

  Eigen::MatrixXd a_zero(static_cast<Eigen::Index>(zero.size()), q);
  for (std::size_t r = 0; r < zero.size(); ++r) a_zero.row(r) = a.row(zero[r]);
  Eigen::VectorXd signs(static_cast<Eigen::Index>(active.size()));
  Eigen::MatrixXd a_active(signs.size(), q);
  for (std::size_t r = 0; r < active.size(); ++r) {
    a_active.row(r) = a.row(active[r]);
    signs[r] = z[active[r]] > 0 ? 1.0 : -1.0;
  }

  // Null space of the zero rows.
  Eigen::MatrixXd null_basis = Eigen::MatrixXd::Identity(q, q);
  if (!zero.empty()) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a_zero.transpose());
    qr.setThreshold(1e-10);
    const Eigen::Index rank = qr.rank();
    const Eigen::MatrixXd full_q = qr.householderQ() * Eigen::MatrixXd::Identity(q, q);
    null_basis = full_q.rightCols(q - rank);
  }
  const Eigen::Index r = null_basis.cols();
  Eigen::MatrixXd reduced(design.rows(), r + 1);
  reduced.col(0) = design.col(0);
  reduced.rightCols(r) = design.rightCols(q) * null_basis;
  Eigen::VectorXd linear = Eigen::VectorXd::Zero(r + 1);
  if (signs.size() > 0) {
    linear.tail(r) = lambda * null_basis.transpose() * (a_active.transpose() * signs);
  }

  Eigen::VectorXd v(r + 1);
  v[0] = start[0];
  v.tail(r) = null_basis.transpose() * start.tail(q);
  auto value = [&](const Eigen::VectorXd& p) {
    return neg_log_likelihood_from_eta(reduced * p, y) + linear.dot(p);
  };
  double current = value(v);
  for (int it = 0; it < 100; ++it) {
    const Eigen::VectorXd eta = reduced * v;
    Eigen::VectorXd w(eta.size());
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
      const double p = link_logistic(eta[i]);
      w[i] = p * (1.0 - p);
    }
    const Eigen::VectorXd grad = reduced.transpose() * residuals(eta, y) + linear;
    if (grad.lpNorm<Eigen::Infinity>() <= 1e-3 * tol) break;
    const Eigen::MatrixXd hess = reduced.transpose() * w.asDiagonal() * reduced;
    const Eigen::VectorXd step = hess.ldlt().solve(grad);
    if (!step.allFinite()) return std::nullopt;
    double scale = 1.0;
    bool accepted = false;
    for (int h = 0; h < 40 && !accepted; ++h, scale *= 0.5) {
      const Eigen::VectorXd cand = v - scale * step;
      const double cv = value(cand);
      if (cv <= current + 1e-13 * std::abs(current)) {
        v = cand;
        current = cv;
        accepted = true;
      }
    }
    if (!accepted) break;
  }

  Polished out;
  out.zero_rows = zero;
  out.params.resize(q + 1);
  out.params[0] = v[0];
  out.params.tail(q) = null_basis * v.tail(r);
  const Eigen::VectorXd gamma = out.params.tail(q);
  if (signs.size() > 0) {
    const Eigen::VectorXd signed_rows = (a_active * gamma).cwiseProduct(signs);
    for (Eigen::Index k = 0; k < signed_rows.size(); ++k) {
      if (signed_rows[k] <= 0.0) violators.push_back({active[static_cast<std::size_t>(k)], 0.0});
    }
    if (!violators.empty()) return std::nullopt;
  }

  const Eigen::VectorXd grad_full =
      design.transpose() * residuals(design * out.params, y);
  if (std::abs(grad_full[0]) > tol) return std::nullopt;
  Eigen::VectorXd g = grad_full.tail(q);
  if (signs.size() > 0) g += lambda * a_active.transpose() * signs;

  out.multipliers = Eigen::VectorXd::Zero(m);
  for (std::size_t k = 0; k < active.size(); ++k) {
    out.multipliers[active[k]] = lambda * signs[static_cast<Eigen::Index>(k)];
  }
  if (!zero.empty()) {
    // Multipliers on the zero rows: nearest to the ADMM duals that cancel g.
    Eigen::VectorXd hint(static_cast<Eigen::Index>(zero.size()));
    for (std::size_t k = 0; k < zero.size(); ++k) hint[k] = dual_hint[zero[k]];
    const Eigen::VectorXd rhs = -g - a_zero.transpose() * hint;
    const Eigen::VectorXd nu =
        hint + a_zero.transpose().completeOrthogonalDecomposition().solve(rhs);
    if (nu.lpNorm<Eigen::Infinity>() > lambda * (1.0 + 1e-9)) {
      // Rows whose multiplier leaves the box want to be nonzero.
      for (std::size_t k = 0; k < zero.size(); ++k) {
        if (std::abs(nu[k]) > lambda) violators.push_back({zero[k], std::copysign(1.0, nu[k])});
      }
      return std::nullopt;
    }
    g += a_zero.transpose() * nu;
    for (std::size_t k = 0; k < zero.size(); ++k) out.multipliers[zero[k]] = nu[k];
  }
  if (g.lpNorm<Eigen::Infinity>() > tol) return std::nullopt;
  return out;
}

// Rows whose sign flips on the exact solve join the zero set, zero rows
// whose multiplier leaves [-lambda, lambda] are released, and the solve is
// repeated a few times at most.
std::optional<Polished> polish_active_set(const Eigen::MatrixXd& design,
                                          const Eigen::VectorXd& y,
                                          const Eigen::MatrixXd& a,
                                          double lambda, Eigen::VectorXd z,
                                          const Eigen::VectorXd& dual_hint,
                                          const Eigen::VectorXd& start,
                                          double tol) {
  // ADMM sheds surplus zero rows slowly. At most q - 1 rows can be zero
  // without forcing gamma = 0; keep those with the most interior multipliers.
  std::vector<Eigen::Index> zero;
  for (Eigen::Index k = 0; k < z.size(); ++k) {
    if (z[k] == 0.0) zero.push_back(k);
  }
  const std::size_t keep = static_cast<std::size_t>(a.cols() - 1);
  if (zero.size() > keep) {
    // First see whether gamma = 0 is already optimal.
    std::vector<PatternFix> ignored;
    auto null_fit = polish_pattern(design, y, a, lambda,
                                   Eigen::VectorXd::Zero(z.size()), dual_hint,
                                   start, tol, ignored);
    if (null_fit) return null_fit;
    std::stable_sort(zero.begin(), zero.end(), [&](Eigen::Index i, Eigen::Index j) {
      return std::abs(dual_hint[i]) < std::abs(dual_hint[j]);
    });
    for (std::size_t r = keep; r < zero.size(); ++r) {
      z[zero[r]] = dual_hint[zero[r]] < 0.0 ? -1.0 : 1.0;
    }
  }
  for (int round = 0; round < 10; ++round) {
    std::vector<PatternFix> violators;
    auto out = polish_pattern(design, y, a, lambda, z, dual_hint, start, tol,
                              violators);
    if (out || violators.empty()) return out;
    for (const PatternFix& fix : violators) z[fix.row] = fix.new_value;
  }
  return std::nullopt;
}

}  // namespace

PenalizedSolution fit_reduced_unpenalized(const LabeledCoefficients& data,
                                          const ReducedBasis& basis,
                                          const FitConfig& config) {
  validate(data, true);
  check_basis(data, basis);
  check_config(config);
  if (basis.kind != ReductionKind::sparse_pca &&
      basis.kind != ReductionKind::sparse_pls) {
    throw ParameterError(
        "unpenalized reduced fit expects a sparse_pca or sparse_pls basis");
  }
  PenalizedSolution sol;
  try {
    sol = unpenalized_reduced(data, basis, 1e3);
  } catch (const SeparationError&) {
    throw SeparationError(
        "reduced design separates the classes (|gamma| > 1e3); try a "
        "smaller q or a larger tau");
  }
  // The gradient test can pass long before |gamma| reaches the bound, so
  // also reject a fit whose scores split the classes outright: no finite
  // maximizer exists then.
  const Eigen::VectorXd eta = linear_predictors(sol.state(), data.theta);
  double low_positive = std::numeric_limits<double>::infinity();
  double high_negative = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    if (data.labels[i] == 1.0) low_positive = std::min(low_positive, eta[i]);
    else high_negative = std::max(high_negative, eta[i]);
  }
  if (low_positive > high_negative) {
    throw SeparationError(
        "reduced design separates the classes; try a smaller q or a larger "
        "tau");
  }
  return sol;
}

PenalizedSolution fit_reduced_penalized(const LabeledCoefficients& data,
                                        const ReducedBasis& basis,
                                        const FitConfig& config) {
  validate(data, true);
  check_basis(data, basis);
  check_config(config);
  const int n = data.n();
  const int q = basis.q();
  const int s = data.scale_count();
  const int m = data.d() - s;
  const double lambda = config.lambda;

  if (lambda == 0.0) {
    PenalizedSolution sol = unpenalized_reduced(
        data, basis, std::numeric_limits<double>::infinity());
    sol.nonzero_detail_count =
        count_nonzero(sol.omega.tail(data.d() - data.scale_count()));
    return sol;
  }

  const Eigen::MatrixXd z_design = data.theta * basis.loadings;  // n x q
  const Eigen::MatrixXd design = augmented_design(z_design);     // n x (q+1)
  const Eigen::MatrixXd a = basis.loadings.bottomRows(m);        // m x q
  const Eigen::MatrixXd ata = a.transpose() * a;
  const Eigen::VectorXd& y = data.labels;
  constexpr double kRelax = 1.6;
  std::vector<bool> polish_pattern;
  double rho = std::max(lambda, 1.0);
  int rho_changes = 0;

  Eigen::VectorXd params = Eigen::VectorXd::Zero(q + 1);  // [b, gamma]
  Eigen::VectorXd z = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd u = Eigen::VectorXd::Zero(m);

  auto objective = [&](const Eigen::VectorXd& p) {
    const Eigen::VectorXd eta = design * p;
    return neg_log_likelihood_from_eta(eta, y) +
           lambda * (a * p.tail(q)).lpNorm<1>();
  };

  PenalizedSolution sol;
  double best = objective(params);
  sol.objective_trace.push_back(best);

  double primal = 0.0;
  double dual = 0.0;
  const double primal_tol = config.admm_tol * std::sqrt(static_cast<double>(m));
  const double dual_tol = config.admm_tol * std::sqrt(static_cast<double>(q));
  int iter = 0;
  bool converged = false;

  for (; iter < config.max_iter; ++iter) {
    // gamma/intercept update: Newton on NLL + rho/2 ||A gamma - z + u||^2.
    const Eigen::VectorXd target = z - u;
    double h_value = 0.0;
    {
      Eigen::VectorXd eta = design * params;
      Eigen::VectorXd dev = a * params.tail(q) - target;
      h_value = neg_log_likelihood_from_eta(eta, y) +
                0.5 * rho * dev.squaredNorm();
      for (int newton = 0; newton < 100; ++newton) {
        Eigen::VectorXd r(n), w(n);
        for (int i = 0; i < n; ++i) {
          const double p = link_logistic(eta[i]);
          r[i] = p - y[i];
          w[i] = p * (1.0 - p);
        }
        Eigen::VectorXd grad = design.transpose() * r;
        grad.tail(q) += rho * (a.transpose() * dev);
        if (grad.lpNorm<Eigen::Infinity>() <= 1e-10 * std::max(1.0, rho)) break;
        Eigen::MatrixXd hess = design.transpose() * w.asDiagonal() * design;
        hess.bottomRightCorner(q, q) += rho * ata;
        Eigen::LDLT<Eigen::MatrixXd> ldlt(hess);
        Eigen::VectorXd step = ldlt.solve(grad);
        if (ldlt.info() != Eigen::Success || !step.allFinite()) {
          hess.diagonal().array() +=
              1e-10 * std::max(1.0, hess.diagonal().maxCoeff());
          step = hess.colPivHouseholderQr().solve(grad);
          if (!step.allFinite()) {
            throw SingularityError("ADMM: singular Newton system");
          }
        }
        double scale = 1.0;
        bool accepted = false;
        for (int halving = 0; halving < 40; ++halving) {
          const Eigen::VectorXd cand = params - scale * step;
          const Eigen::VectorXd cand_eta = design * cand;
          const Eigen::VectorXd cand_dev = a * cand.tail(q) - target;
          const double cand_value = neg_log_likelihood_from_eta(cand_eta, y) +
                                    0.5 * rho * cand_dev.squaredNorm();
          if (cand_value <= h_value + 1e-13 * std::abs(h_value)) {
            params = cand;
            eta = cand_eta;
            dev = cand_dev;
            h_value = cand_value;
            accepted = true;
            break;
          }
          scale *= 0.5;
        }
        if (!accepted) break;
      }
    }

    const Eigen::VectorXd a_gamma = a * params.tail(q);
    const Eigen::VectorXd z_old = z;
    // Over-relaxed split update.
    const Eigen::VectorXd a_hat = kRelax * a_gamma + (1.0 - kRelax) * z_old;
    for (int k = 0; k < m; ++k) {
      z[k] = soft_threshold(a_hat[k] + u[k], lambda / rho);
    }
    u += a_hat - z;

    primal = (a_gamma - z).norm();
    dual = rho * (a.transpose() * (z - z_old)).norm();
    best = std::min(best, objective(params));
    sol.objective_trace.push_back(best);

    // Exact finish on the current zero pattern; true if it succeeded.
    auto try_polish = [&]() {
      const auto polished = polish_active_set(design, y, a, lambda, z, rho * u,
                                              params, config.kkt_tol);
      if (!polished) return false;
      params = polished->params;
      const Eigen::VectorXd a_polished = a * params.tail(q);
      z = a_polished;
      for (Eigen::Index k : polished->zero_rows) z[k] = 0.0;
      u = polished->multipliers / rho;
      primal = (a_polished - z).norm();
      dual = 0.0;
      best = std::min(best, objective(params));
      sol.objective_trace.back() = best;
      return true;
    };

    if (primal <= primal_tol && dual <= dual_tol) {
      // Residual convergence leaves A gamma feasible only to primal_tol.
      try_polish();
      converged = true;
      ++iter;
      break;
    }
    // Once the zero pattern settles, try to finish exactly on it.
    std::vector<bool> pattern(static_cast<std::size_t>(m));
    for (int k = 0; k < m; ++k) pattern[static_cast<std::size_t>(k)] = z[k] == 0.0;
    if (iter % 20 == 19 && pattern != polish_pattern) {
      polish_pattern = pattern;
      if (try_polish()) {
        converged = true;
        ++iter;
        break;
      }
    }
    // Residual balancing; u is the scaled dual, so it scales with 1/rho.
    // Bounded so that rho is eventually fixed.
    if (rho_changes < 50) {
      if (primal > 10.0 * dual) {
        rho *= 2.0;
        u *= 0.5;
        ++rho_changes;
      } else if (dual > 10.0 * primal) {
        rho *= 0.5;
        u *= 2.0;
        ++rho_changes;
      }
    }
  }

  const Eigen::VectorXd gamma = params.tail(q);
  if (!converged) {
    throw ConvergenceError(
        "ADMM reached " + std::to_string(config.max_iter) +
            " iterations (primal residual " + std::to_string(primal) +
            ", dual residual " + std::to_string(dual) + ")",
        expand(basis, gamma), params[0], std::max(primal, dual));
  }

  // Stationarity: grad NLL + A' (rho u) = 0 in gamma, grad = 0 in b.
  {
    const Eigen::VectorXd eta = design * params;
    Eigen::VectorXd grad = design.transpose() * residuals(eta, y);
    grad.tail(q) += a.transpose() * (rho * u);
    sol.kkt_residual = std::max(grad.lpNorm<Eigen::Infinity>(), primal);
  }
  sol.gamma = gamma;
  sol.omega = expand(basis, gamma);
  sol.intercept = params[0];
  sol.nonzero_detail_count = count_nonzero(z);
  // Generalized-lasso degrees of freedom: dimension of the null space of
  // the rows of A whose split coordinate is exactly zero.
  {
    std::vector<int> zero_rows;
    for (int k = 0; k < m; ++k) {
      if (z[k] == 0.0) zero_rows.push_back(k);
    }
    int rank = 0;
    if (!zero_rows.empty()) {
      Eigen::MatrixXd sub(static_cast<Eigen::Index>(zero_rows.size()), q);
      for (std::size_t r = 0; r < zero_rows.size(); ++r) {
        sub.row(static_cast<Eigen::Index>(r)) = a.row(zero_rows[r]);
      }
      Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(sub);
      qr.setThreshold(1e-10);
      rank = static_cast<int>(qr.rank());
    }
    sol.degrees_of_freedom = 1 + q - rank;
  }
  sol.iterations = iter;
  return sol;
}

Eigen::VectorXd beta_estimate(const PenalizedSolution& solution,
                              const WaveletBasis& basis) {
  return dwt_inverse(solution.omega, basis);
}

EstimatorFit fit_estimator(const LabeledCoefficients& data,
                           const FitConfig& config,
                           const LinearModelState* warm_start) {
  EstimatorFit fit;
  fit.config = config;
  switch (config.estimator) {
    case Estimator::wnet:
      fit.solution = fit_wnet(data, config, warm_start);
      break;
    case Estimator::wpcr:
      fit.reduction = pca_fit(data.theta, config.q);
      fit.solution = fit_reduced_penalized(data, *fit.reduction, config);
      break;
    case Estimator::wpls:
      fit.reduction = pls_fit(data.theta, data.labels, config.q);
      fit.solution = fit_reduced_penalized(data, *fit.reduction, config);
      break;
    case Estimator::wcr:
      fit.reduction = sparse_component_fit(data.theta, std::nullopt, config.q,
                                           config.tau,
                                           ReductionKind::sparse_pca);
      fit.solution = fit_reduced_unpenalized(data, *fit.reduction, config);
      break;
    case Estimator::wls:
      fit.reduction = sparse_component_fit(data.theta, data.labels, config.q,
                                           config.tau,
                                           ReductionKind::sparse_pls);
      fit.solution = fit_reduced_unpenalized(data, *fit.reduction, config);
      break;
  }
  return fit;
}

}  // namespace wavelogit
