#include "wavelogit/cli.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "wavelogit/error.hpp"
#include "wavelogit/eval.hpp"
#include "wavelogit/io.hpp"
#include "wavelogit/penalized.hpp"
#include "wavelogit/select.hpp"
#include "wavelogit/synth.hpp"

namespace wavelogit {

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct WaveletFlags {
  std::string family = family_name(default_family);
  int j0 = default_j0;
};

void add_wavelet_flags(CLI::App* cmd, WaveletFlags& flags) {
  cmd->add_option("--wavelet", flags.family,
                  "Wavelet family: haar, db1 ... db10")
      ->capture_default_str();
  cmd->add_option("--j0", flags.j0, "Coarsest scale kept unpenalized")
      ->capture_default_str();
}

WaveletBasis make_basis(const WaveletFlags& flags, int d) {
  WaveletFamily family;
  try {
    family = parse_family(flags.family);
  } catch (const ParameterError& e) {
    throw UsageError(std::string("--wavelet: ") + e.what());
  }
  try {
    return WaveletBasis(family, flags.j0, d);
  } catch (const ParameterError& e) {
    throw UsageError(std::string("--j0/--wavelet: ") + e.what());
  }
}

Estimator method_flag(const std::string& name) {
  try {
    return parse_estimator(name);
  } catch (const ParameterError& e) {
    throw UsageError(std::string("--method: ") + e.what());
  }
}

CurveDataset load_data_flag(const std::string& path) {
  try {
    return load_dataset(path);
  } catch (const DataError& e) {
    throw DataError(std::string("--data: ") + e.what());
  }
}

std::string fixed(double value, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, value);
  return buf;
}

// ---- simulate ------------------------------------------------------------

struct SimulateFlags {
  std::string out;
  std::string beta_out;
  int n_per_class = 100;
  int d = 256;
  WaveletFlags wavelet;
  std::vector<int> support;
  std::vector<double> effects;
  double noise_sd = default_synth_spec().noise_sd;
  double background_decay = default_synth_spec().background_decay;
  double background_sd = default_synth_spec().background_sd;
  std::uint64_t seed = 0;
};

int do_simulate(const SimulateFlags& f, std::ostream& out) {
  SynthSpec spec = default_synth_spec(f.seed);
  spec.basis = make_basis(f.wavelet, f.d);
  spec.n_per_class = f.n_per_class;
  spec.noise_sd = f.noise_sd;
  spec.background_decay = f.background_decay;
  spec.background_sd = f.background_sd;
  if (!f.support.empty()) {
    spec.true_support = f.support;
    spec.effect_sizes.assign(f.support.size(), std::abs(spec.effect_sizes.front()));
  } else if (f.d != 256) {
    throw UsageError("--support is required when --d differs from 256");
  }
  if (!f.effects.empty()) {
    if (f.effects.size() == 1) {
      spec.effect_sizes.assign(spec.true_support.size(), f.effects.front());
    } else if (f.effects.size() == spec.true_support.size()) {
      spec.effect_sizes = f.effects;
    } else {
      throw UsageError("--effect needs one value or one per --support index");
    }
  }
  for (int idx : spec.true_support) {
    if (idx < spec.basis.scale_count() || idx >= f.d) {
      throw UsageError("--support: index " + std::to_string(idx) +
                       " outside the detail range [" +
                       std::to_string(spec.basis.scale_count()) + ", " +
                       std::to_string(f.d) + ")");
    }
  }
  if (!(f.noise_sd >= 0.0)) throw UsageError("--noise-sd: must be >= 0");
  if (!(f.background_decay > 0.0 && f.background_decay < 1.0)) {
    throw UsageError("--background-decay: must lie in (0, 1)");
  }
  if (!(f.background_sd >= 0.0)) throw UsageError("--background-sd: must be >= 0");
  try {
    validate(spec);
  } catch (const ParameterError& e) {
    throw UsageError(std::string("simulate: ") + e.what());
  }
  const CurveDataset data = generate_dataset(spec);
  save_dataset(data, f.out);
  out << "wrote " << data.n() << " curves (d = " << data.d() << ") to "
      << f.out << "\n";
  if (!f.beta_out.empty()) {
    const Eigen::VectorXd beta = generate_beta(spec);
    std::string text = "t,beta\n";
    for (int j = 0; j < f.d; ++j) {
      text += format_double((j + 0.5) / f.d) + "," + format_double(beta[j]) + "\n";
    }
    atomic_write(f.beta_out, text);
    out << "wrote planted beta to " << f.beta_out << "\n";
  }
  return kExitOk;
}

// ---- fit -----------------------------------------------------------------

struct FitFlags {
  std::string data;
  std::string method = "wnet";
  std::string lambda;
  int q = 1;
  double tau = 0.0;
  WaveletFlags wavelet;
  std::string out;
  int max_iter = 5000;
  std::uint64_t seed = 0;
};

void report_fit(const FittedModel& model, const LabeledCoefficients& data,
                std::ostream& out) {
  out << "method " << estimator_name(model.estimator) << "\n";
  out << "lambda " << format_double(model.lambda) << "\n";
  if (uses_reduction(model.estimator)) out << "q " << model.q << "\n";
  if (uses_tau(model.estimator)) out << "tau " << format_double(model.tau) << "\n";
  out << "nonzero_detail " << model.nonzero_detail_count << "\n";
  out << "kkt_residual " << format_double(model.kkt_residual) << "\n";
  const Eigen::VectorXd eta = linear_predictors(model.state(), data.theta);
  out << "train_auc " << fixed(auc(eta, data.labels), 4) << "\n";
}

int do_fit(const FitFlags& f, std::ostream& out) {
  const Estimator estimator = method_flag(f.method);
  const CurveDataset curves = load_data_flag(f.data);
  const WaveletBasis basis = make_basis(f.wavelet, curves.d());
  const LabeledCoefficients data = to_coefficients(curves, basis);
  validate(data, true);

  FitConfig config;
  config.estimator = estimator;
  config.q = f.q;
  config.tau = f.tau;
  config.max_iter = f.max_iter;
  config.seed = f.seed;
  if (uses_penalty(estimator)) {
    if (f.lambda.empty()) {
      throw UsageError("--lambda is required for method " + f.method +
                       " (a number, or 'max' for lambda_max)");
    }
    if (f.lambda == "max") {
      config.lambda = lambda_max(data);
    } else {
      try {
        std::size_t used = 0;
        config.lambda = std::stod(f.lambda, &used);
        if (used != f.lambda.size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw UsageError("--lambda: '" + f.lambda + "' is not a number");
      }
      if (!(config.lambda >= 0.0)) throw UsageError("--lambda must be >= 0");
    }
  }
  const EstimatorFit fit = fit_estimator(data, config);
  const FittedModel model = make_fitted_model(fit, basis);
  save_model(model, f.out);
  report_fit(model, data, out);
  out << "wrote model to " << f.out << "\n";
  return kExitOk;
}

// ---- cv ------------------------------------------------------------------

struct CvFlags {
  std::string data;
  std::string method = "wnet";
  int folds = 5;
  std::string select = "cv";
  std::string criterion = "auc";
  int n_lambda = 20;
  double lambda_min_ratio = 1e-4;
  std::vector<double> lambdas;
  std::vector<int> qs;
  std::vector<double> taus;
  WaveletFlags wavelet;
  std::string out;
  std::string table;
  int threads = 0;
  int max_iter = 5000;
  std::uint64_t seed = 0;
};

int do_cv(const CvFlags& f, std::ostream& out) {
  const Estimator estimator = method_flag(f.method);
  if (f.select != "cv" && f.select != "aicc") {
    throw UsageError("--select must be 'cv' or 'aicc'");
  }
  const bool by_aicc = f.select == "aicc";
  CriterionKind criterion = CriterionKind::cv_auc;
  if (by_aicc) {
    criterion = CriterionKind::aicc;
  } else if (f.criterion == "deviance") {
    criterion = CriterionKind::cv_deviance;
  } else if (f.criterion != "auc") {
    throw UsageError("--criterion must be 'auc' or 'deviance'");
  }
  if (f.folds < 2) throw UsageError("--folds must be >= 2");

  const CurveDataset curves = load_data_flag(f.data);
  const WaveletBasis basis = make_basis(f.wavelet, curves.d());
  const LabeledCoefficients data = to_coefficients(curves, basis);
  validate(data, true);

  std::optional<FoldPlan> plan;
  int fit_n = data.n();
  if (!by_aicc) {
    plan = make_folds(data.labels, f.folds, f.seed);
    for (int k = 0; k < f.folds; ++k) {
      fit_n = std::min(fit_n, static_cast<int>(plan->train_indices(k).size()));
    }
  }

  std::vector<double> lambdas = f.lambdas;
  if (uses_penalty(estimator) && lambdas.empty()) {
    lambdas = default_lambda_grid(data, f.n_lambda, f.lambda_min_ratio);
  }
  std::sort(lambdas.begin(), lambdas.end(), std::greater<>());
  std::vector<int> qs = f.qs.empty() ? default_q_grid(fit_n, data.d()) : f.qs;
  std::vector<double> taus = f.taus;
  if (uses_tau(estimator) && taus.empty()) {
    taus = default_tau_grid(data, estimator, 1);
  }

  FitConfig base;
  base.max_iter = f.max_iter;
  base.seed = f.seed;
  const auto grid = build_grid(estimator, lambdas, qs, taus, base);

  const SelectionResult result =
      by_aicc ? select_by_aicc(data, grid)
              : cross_validate(data, grid, *plan, {criterion, f.threads});

  int failed = 0;
  for (const auto& e : result.criterion_table) failed += e.failed;
  out << "method " << estimator_name(estimator) << "\n";
  out << "selection " << criterion_name(result.criterion_kind) << "\n";
  if (!by_aicc) out << "folds " << f.folds << " (stratified)\n";
  out << "grid_points " << grid.size() << " failed " << failed << "\n";
  if (uses_penalty(estimator)) {
    out << "lambda_max " << format_double(lambda_max(data)) << "\n";
    out << "best_lambda " << format_double(result.best_lambda) << "\n";
  }
  if (uses_reduction(estimator)) out << "best_q " << result.best_q << "\n";
  if (uses_tau(estimator)) out << "best_tau " << format_double(result.best_tau) << "\n";
  out << "best_criterion "
      << format_double(result.criterion_table[result.best_index].criterion)
      << "\n";

  if (!f.table.empty()) {
    std::string text = "lambda,q,tau,criterion,status\n";
    for (const auto& e : result.criterion_table) {
      text += format_double(e.config.lambda) + "," + std::to_string(e.config.q) +
              "," + format_double(e.config.tau) + "," +
              (e.failed ? std::string("nan") : format_double(e.criterion)) + "," +
              (e.failed ? "failed" : "ok") + "\n";
    }
    atomic_write(f.table, text);
    out << "wrote criterion table to " << f.table << "\n";
  }
  if (!f.out.empty()) {
    const EstimatorFit fit = fit_estimator(data, result.best_config);
    const FittedModel model = make_fitted_model(fit, basis);
    save_model(model, f.out);
    report_fit(model, data, out);
    out << "wrote model to " << f.out << "\n";
  }
  return kExitOk;
}

// ---- predict / evaluate / export-beta --------------------------------------

struct ModelDataFlags {
  std::string model;
  std::string data;
  std::string out;
};

FittedModel load_model_flag(const std::string& path) {
  try {
    return load_model(path);
  } catch (const DataError& e) {
    throw DataError(std::string("--model: ") + e.what());
  }
}

int do_predict(const ModelDataFlags& f, std::ostream& out) {
  const FittedModel model = load_model_flag(f.model);
  const CurveDataset curves = load_data_flag(f.data);
  const Eigen::VectorXd p = predict_probabilities(model, curves.curves);
  std::string text = "probability\n";
  for (Eigen::Index i = 0; i < p.size(); ++i) text += format_double(p[i]) + "\n";
  if (f.out.empty()) {
    out << text;
  } else {
    atomic_write(f.out, text);
    out << "wrote " << p.size() << " probabilities to " << f.out << "\n";
  }
  return kExitOk;
}

int do_evaluate(const ModelDataFlags& f, std::ostream& out) {
  const FittedModel model = load_model_flag(f.model);
  const CurveDataset curves = load_data_flag(f.data);
  const Eigen::VectorXd scores = predict_linear(model, curves.curves);
  double value = 0.0;
  try {
    value = auc(scores, curves.labels);
  } catch (const DataError& e) {
    throw DataError(std::string("--data: ") + e.what());
  }
  out << "AUC " << fixed(value, 3) << "\n";
  out << "auc_exact " << format_double(value) << "\n";
  out << "verdict " << verdict_name(discrimination_verdict(value)) << "\n";
  return kExitOk;
}

int do_export_beta(const ModelDataFlags& f, std::ostream& out) {
  const FittedModel model = load_model_flag(f.model);
  export_beta(model, f.out);
  out << "wrote beta (" << model.basis.size() << " points) to " << f.out << "\n";
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"Wavelet-domain penalized logistic functional regression"};
  app.name("wavelogit");
  app.require_subcommand(1);

  SimulateFlags sim;
  auto* simulate = app.add_subcommand("simulate", "Generate a synthetic curve dataset");
  simulate->add_option("--out", sim.out, "Output CSV")->required();
  simulate->add_option("--beta-out", sim.beta_out, "Also write the planted beta as CSV");
  simulate->add_option("--n-per-class", sim.n_per_class, "Curves per class")
      ->capture_default_str();
  simulate->add_option("--d", sim.d, "Curve length (power of two)")->capture_default_str();
  add_wavelet_flags(simulate, sim.wavelet);
  simulate->add_option("--support", sim.support,
                       "0-based detail coefficient indices carrying the signal");
  simulate->add_option("--effect", sim.effects,
                       "Class-1 mean shift per support index (or one value for all)");
  simulate->add_option("--noise-sd", sim.noise_sd, "Time-domain white noise sd")
      ->capture_default_str();
  simulate->add_option("--background-decay", sim.background_decay,
                       "Per-level variance decay of nuisance coefficients")
      ->capture_default_str();
  simulate->add_option("--background-sd", sim.background_sd,
                       "Nuisance coefficient sd at the scale block")
      ->capture_default_str();
  simulate->add_option("--seed", sim.seed, "Random seed")->capture_default_str();

  FitFlags fit;
  auto* fitcmd = app.add_subcommand("fit", "Fit one estimator with fixed tuning");
  fitcmd->add_option("--data", fit.data, "Training CSV")->required();
  fitcmd->add_option("--method", fit.method, "wnet, wcr, wls, wpcr or wpls")
      ->capture_default_str();
  fitcmd->add_option("--lambda", fit.lambda, "Penalty level, or 'max'");
  fitcmd->add_option("--q", fit.q, "Component count")->capture_default_str();
  fitcmd->add_option("--tau", fit.tau, "Sparse-loading threshold")->capture_default_str();
  add_wavelet_flags(fitcmd, fit.wavelet);
  fitcmd->add_option("--out", fit.out, "Model file to write")->required();
  fitcmd->add_option("--max-iter", fit.max_iter, "Solver iteration cap")
      ->capture_default_str();
  fitcmd->add_option("--seed", fit.seed, "Random seed")->capture_default_str();

  CvFlags cv;
  auto* cvcmd = app.add_subcommand("cv", "Select tuning parameters and refit");
  cvcmd->add_option("--data", cv.data, "Training CSV")->required();
  cvcmd->add_option("--method", cv.method, "wnet, wcr, wls, wpcr or wpls")
      ->capture_default_str();
  cvcmd->add_option("--folds", cv.folds, "Cross-validation folds")->capture_default_str();
  cvcmd->add_option("--select", cv.select, "cv or aicc")->capture_default_str();
  cvcmd->add_option("--criterion", cv.criterion, "auc or deviance (cv only)")
      ->capture_default_str();
  cvcmd->add_option("--n-lambda", cv.n_lambda, "Default lambda grid size")
      ->capture_default_str();
  cvcmd->add_option("--lambda-min-ratio", cv.lambda_min_ratio,
                    "Smallest lambda as a fraction of lambda_max")
      ->capture_default_str();
  cvcmd->add_option("--lambda", cv.lambdas, "Explicit lambda grid");
  cvcmd->add_option("--q", cv.qs, "Explicit q grid");
  cvcmd->add_option("--tau", cv.taus, "Explicit tau grid");
  add_wavelet_flags(cvcmd, cv.wavelet);
  cvcmd->add_option("--out", cv.out, "Refit on all data and write the model");
  cvcmd->add_option("--table", cv.table, "Write the criterion table as CSV");
  cvcmd->add_option("--threads", cv.threads, "Worker threads (0 = auto)")
      ->capture_default_str();
  cvcmd->add_option("--max-iter", cv.max_iter, "Solver iteration cap")
      ->capture_default_str();
  cvcmd->add_option("--seed", cv.seed, "Fold assignment seed")->capture_default_str();

  ModelDataFlags pred;
  auto* predcmd = app.add_subcommand("predict", "Class-1 probabilities for curves");
  predcmd->add_option("--model", pred.model, "Model file")->required();
  predcmd->add_option("--data", pred.data, "Curve CSV")->required();
  predcmd->add_option("--out", pred.out, "Output CSV (default stdout)");

  ModelDataFlags ev;
  auto* evcmd = app.add_subcommand("evaluate", "AUC and discrimination verdict");
  evcmd->add_option("--model", ev.model, "Model file")->required();
  evcmd->add_option("--data", ev.data, "Labelled curve CSV")->required();

  ModelDataFlags beta;
  auto* betacmd = app.add_subcommand("export-beta", "Write the sampled beta(t)");
  betacmd->add_option("--model", beta.model, "Model file")->required();
  betacmd->add_option("--out", beta.out, "Output CSV")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*simulate) return do_simulate(sim, out);
    if (*fitcmd) return do_fit(fit, out);
    if (*cvcmd) return do_cv(cv, out);
    if (*predcmd) return do_predict(pred, out);
    if (*evcmd) return do_evaluate(ev, out);
    if (*betacmd) return do_export_beta(beta, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ParameterError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}

int run_cli(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace wavelogit
