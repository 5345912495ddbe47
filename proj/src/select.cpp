#include "wavelogit/select.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <limits>
#include <random>
#include <thread>

#include "wavelogit/error.hpp"
#include "wavelogit/eval.hpp"

namespace wavelogit {

std::vector<int> FoldPlan::train_indices(int fold) const {
  std::vector<int> out;
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    if (assignments[i] != fold) out.push_back(static_cast<int>(i));
  }
  return out;
}

std::vector<int> FoldPlan::test_indices(int fold) const {
  std::vector<int> out;
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    if (assignments[i] == fold) out.push_back(static_cast<int>(i));
  }
  return out;
}

FoldPlan make_folds(const Eigen::VectorXd& labels, int k, std::uint64_t seed) {
  if (k < 2) throw ParameterError("fold count must be >= 2");
  std::vector<int> by_class[2];
  for (Eigen::Index i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0.0 && labels[i] != 1.0) {
      throw DataError("labels must be 0 or 1");
    }
    by_class[labels[i] == 1.0].push_back(static_cast<int>(i));
  }
  for (int c = 0; c < 2; ++c) {
    if (static_cast<int>(by_class[c].size()) < k) {
      throw StratificationError(
          "class " + std::to_string(c) + " has " +
          std::to_string(by_class[c].size()) + " members, fewer than " +
          std::to_string(k) + " folds");
    }
  }

  // Fisher-Yates on a fixed engine keeps assignments identical across
  // standard libraries.
  std::mt19937_64 rng(seed);
  for (auto& members : by_class) {
    for (std::size_t i = members.size(); i > 1; --i) {
      const std::size_t j = rng() % i;
      std::swap(members[i - 1], members[j]);
    }
  }

  FoldPlan plan;
  plan.k = k;
  plan.seed = seed;
  plan.assignments.assign(static_cast<std::size_t>(labels.size()), -1);
  int next = 0;
  for (const auto& members : by_class) {
    for (int idx : members) {
      plan.assignments[static_cast<std::size_t>(idx)] = next;
      next = (next + 1) % k;
    }
  }
  return plan;
}

std::string criterion_name(CriterionKind kind) {
  switch (kind) {
    case CriterionKind::cv_auc: return "cv_auc";
    case CriterionKind::cv_deviance: return "cv_deviance";
    case CriterionKind::aicc: return "aicc";
  }
  return "unknown";
}

CriterionKind parse_criterion(std::string_view name) {
  if (name == "cv_auc" || name == "auc") return CriterionKind::cv_auc;
  if (name == "cv_deviance" || name == "deviance") {
    return CriterionKind::cv_deviance;
  }
  if (name == "aicc") return CriterionKind::aicc;
  throw ParameterError("unknown criterion '" + std::string(name) + "'");
}

namespace {

std::uint64_t checksum(const PenalizedSolution& sol) {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&](double v) {
    unsigned char bytes[sizeof(double)];
    std::memcpy(bytes, &v, sizeof(double));
    for (unsigned char b : bytes) {
      h ^= b;
      h *= 1099511628211ULL;
    }
  };
  for (Eigen::Index i = 0; i < sol.omega.size(); ++i) mix(sol.omega[i]);
  mix(sol.intercept);
  return h;
}

bool maximize(CriterionKind kind) { return kind == CriterionKind::cv_auc; }

// Strictly better: criterion first, then larger lambda, smaller q, larger
// tau.
bool better(const GridEntry& a, const GridEntry& b, CriterionKind kind) {
  constexpr double tie = 1e-12;
  const double diff = a.criterion - b.criterion;
  if (std::abs(diff) > tie) return maximize(kind) ? diff > 0 : diff < 0;
  if (a.config.lambda != b.config.lambda) {
    return a.config.lambda > b.config.lambda;
  }
  if (a.config.q != b.config.q) return a.config.q < b.config.q;
  return a.config.tau > b.config.tau;
}

SelectionResult pick_best(std::vector<GridEntry> table, CriterionKind kind) {
  std::size_t best = table.size();
  for (std::size_t i = 0; i < table.size(); ++i) {
    if (table[i].failed) continue;
    if (best == table.size() || better(table[i], table[best], kind)) best = i;
  }
  if (best == table.size()) {
    std::string reason = table.empty() ? "empty grid" : table.front().failure;
    throw SelectionError("every grid point failed (first failure: " + reason +
                         ")");
  }
  SelectionResult result;
  result.best_index = best;
  result.best_config = table[best].config;
  result.best_lambda = table[best].config.lambda;
  result.best_q = table[best].config.q;
  result.best_tau = table[best].config.tau;
  result.criterion_kind = kind;
  result.criterion_table = std::move(table);
  return result;
}

bool chains_from(const FitConfig& prev, const FitConfig& next) {
  return prev.estimator == Estimator::wnet &&
         next.estimator == Estimator::wnet;
}

}  // namespace

FoldOutcome evaluate_fold(const LabeledCoefficients& data,
                          const FitConfig& config, const FoldPlan& folds,
                          int fold, CriterionKind criterion,
                          const LinearModelState* warm_start) {
  if (static_cast<Eigen::Index>(folds.assignments.size()) != data.n()) {
    throw DimensionError("fold plan does not match the data size");
  }
  const LabeledCoefficients train = data.subset(folds.train_indices(fold));
  const LabeledCoefficients test = data.subset(folds.test_indices(fold));
  FoldOutcome out;
  out.fit = fit_estimator(train, config, warm_start);
  out.checksum = checksum(out.fit.solution);
  const Eigen::VectorXd eta =
      linear_predictors(out.fit.solution.state(), test.theta);
  if (criterion == CriterionKind::cv_deviance) {
    out.score = 2.0 * neg_log_likelihood_from_eta(eta, test.labels) /
                static_cast<double>(test.n());
  } else {
    out.score = auc(eta, test.labels);
  }
  return out;
}

SelectionResult cross_validate(const LabeledCoefficients& data,
                               const std::vector<FitConfig>& grid,
                               const FoldPlan& folds,
                               const CvOptions& options) {
  if (grid.empty()) throw ParameterError("cross_validate: empty grid");
  if (options.criterion == CriterionKind::aicc) {
    throw ParameterError("cross_validate: use select_by_aicc for AICc");
  }
  validate(data, true);
  const std::size_t g = grid.size();
  const int k = folds.k;

  std::vector<std::vector<double>> scores(g, std::vector<double>(k, 0.0));
  std::vector<std::vector<std::uint64_t>> sums(g,
                                               std::vector<std::uint64_t>(k));
  std::vector<std::vector<std::string>> errors(g,
                                               std::vector<std::string>(k));

  auto run_fold = [&](int fold) {
    std::optional<LinearModelState> warm;
    for (std::size_t i = 0; i < g; ++i) {
      const bool chain = i > 0 && warm && chains_from(grid[i - 1], grid[i]);
      try {
        FoldOutcome out = evaluate_fold(data, grid[i], folds, fold,
                                        options.criterion,
                                        chain ? &*warm : nullptr);
        scores[i][static_cast<std::size_t>(fold)] = out.score;
        sums[i][static_cast<std::size_t>(fold)] = out.checksum;
        warm = out.fit.solution.state();
      } catch (const Error& e) {
        errors[i][static_cast<std::size_t>(fold)] = e.what();
        warm.reset();
      }
    }
  };

  int threads = options.threads;
  if (threads <= 0) {
    threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  }
  threads = std::min(threads, k);
  if (threads <= 1) {
    for (int fold = 0; fold < k; ++fold) run_fold(fold);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> workers;
    for (int t = 0; t < threads; ++t) {
      workers.emplace_back([&] {
        for (int fold = next++; fold < k; fold = next++) run_fold(fold);
      });
    }
    for (auto& w : workers) w.join();
  }

  std::vector<GridEntry> table(g);
  for (std::size_t i = 0; i < g; ++i) {
    GridEntry& entry = table[i];
    entry.config = grid[i];
    entry.fold_scores = scores[i];
    entry.fold_checksums = sums[i];
    for (int fold = 0; fold < k; ++fold) {
      const auto& err = errors[i][static_cast<std::size_t>(fold)];
      if (!err.empty()) {
        entry.failed = true;
        entry.failure = "fold " + std::to_string(fold) + ": " + err;
        break;
      }
    }
    double total = 0.0;
    for (double s : scores[i]) total += s;
    entry.criterion = entry.failed ? std::numeric_limits<double>::quiet_NaN()
                                   : total / k;
  }
  return pick_best(std::move(table), options.criterion);
}

double aicc_value(double nll, int k_eff, int n) {
  if (n <= k_eff + 1) {
    throw ParameterError("AICc undefined: n = " + std::to_string(n) +
                         " <= k_eff + 1 = " + std::to_string(k_eff + 1));
  }
  const double k = k_eff;
  return 2.0 * nll + 2.0 * k + 2.0 * k * (k + 1.0) / (n - k - 1.0);
}

double aicc(const PenalizedSolution& solution,
            const LabeledCoefficients& data) {
  return aicc_value(neg_log_likelihood(solution.state(), data),
                    solution.degrees_of_freedom, data.n());
}

SelectionResult select_by_aicc(const LabeledCoefficients& data,
                               const std::vector<FitConfig>& grid) {
  if (grid.empty()) throw ParameterError("select_by_aicc: empty grid");
  validate(data, true);
  std::vector<GridEntry> table(grid.size());
  std::optional<LinearModelState> warm;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    GridEntry& entry = table[i];
    entry.config = grid[i];
    const bool chain = i > 0 && warm && chains_from(grid[i - 1], grid[i]);
    try {
      const EstimatorFit fit =
          fit_estimator(data, grid[i], chain ? &*warm : nullptr);
      warm = fit.solution.state();
      entry.fold_checksums = {checksum(fit.solution)};
      try {
        entry.criterion = aicc(fit.solution, data);
      } catch (const ParameterError&) {
        entry.criterion = std::numeric_limits<double>::infinity();
      }
    } catch (const Error& e) {
      entry.failed = true;
      entry.failure = e.what();
      entry.criterion = std::numeric_limits<double>::quiet_NaN();
      warm.reset();
    }
  }
  return pick_best(std::move(table), CriterionKind::aicc);
}

std::vector<double> default_lambda_grid(const LabeledCoefficients& data,
                                        int points, double min_ratio) {
  if (points < 1) throw ParameterError("lambda grid needs >= 1 point");
  if (!(min_ratio > 0.0 && min_ratio <= 1.0)) {
    throw ParameterError("lambda min ratio must lie in (0, 1]");
  }
  const double top = lambda_max(data);
  std::vector<double> grid;
  for (int i = 0; i < points; ++i) {
    const double frac = points == 1 ? 0.0 : static_cast<double>(i) / (points - 1);
    grid.push_back(top * std::pow(min_ratio, frac));
  }
  return grid;
}

std::vector<int> default_q_grid(int n, int d) {
  std::vector<int> out;
  const int limit = std::min(n - 1, d);
  for (int q : {1, 2, 4, 8, 16}) {
    if (q <= limit) out.push_back(q);
  }
  return out;
}

std::vector<double> default_tau_grid(const LabeledCoefficients& data,
                                     Estimator estimator, int q) {
  const ReducedBasis dense = estimator == Estimator::wls
                                 ? pls_fit(data.theta, data.labels, q)
                                 : pca_fit(data.theta, q);
  std::vector<double> entries(dense.loadings.data(),
                              dense.loadings.data() + dense.loadings.size());
  for (double& e : entries) e = std::abs(e);
  std::sort(entries.begin(), entries.end());
  const std::size_t m = entries.size();
  const double median = m % 2 == 1
                            ? entries[m / 2]
                            : 0.5 * (entries[m / 2 - 1] + entries[m / 2]);
  return {0.0, median, 2.0 * median};
}

std::vector<FitConfig> build_grid(Estimator estimator,
                                  const std::vector<double>& lambdas,
                                  const std::vector<int>& qs,
                                  const std::vector<double>& taus,
                                  const FitConfig& base) {
  const std::vector<double> lambda_axis =
      uses_penalty(estimator) ? lambdas : std::vector<double>{0.0};
  const std::vector<int> q_axis =
      uses_reduction(estimator) ? qs : std::vector<int>{base.q};
  const std::vector<double> tau_axis =
      uses_tau(estimator) ? taus : std::vector<double>{0.0};
  std::vector<FitConfig> grid;
  for (int q : q_axis) {
    for (double tau : tau_axis) {
      for (double lambda : lambda_axis) {
        FitConfig c = base;
        c.estimator = estimator;
        c.lambda = lambda;
        c.q = q;
        c.tau = tau;
        grid.push_back(c);
      }
    }
  }
  return grid;
}

}  // namespace wavelogit
