#pragma once

#include <optional>
#include <string>

#include <Eigen/Dense>

#include "wavelogit/glm.hpp"
#include "wavelogit/penalized.hpp"
#include "wavelogit/reduce.hpp"
#include "wavelogit/synth.hpp"
#include "wavelogit/wavelet.hpp"

namespace wavelogit {

inline constexpr int kModelFormatVersion = 1;

/// Everything needed to score new curves.
struct FittedModel {
  Estimator estimator = Estimator::wnet;
  WaveletBasis basis{default_family, default_j0, 256};
  double lambda = 0.0;
  int q = 0;
  double tau = 0.0;
  double intercept = 0.0;
  Eigen::VectorXd omega;
  std::optional<ReducedBasis> reduction;
  double kkt_residual = 0.0;
  int iterations = 0;
  int nonzero_detail_count = 0;

  LinearModelState state() const { return {omega, intercept}; }
};

FittedModel make_fitted_model(const EstimatorFit& fit,
                              const WaveletBasis& basis);

/// Wavelet coefficients of every curve, paired with the labels.
LabeledCoefficients to_coefficients(const CurveDataset& data,
                                    const WaveletBasis& basis);

Eigen::VectorXd predict_probabilities(const FittedModel& model,
                                      const Eigen::MatrixXd& curves);
Eigen::VectorXd predict_linear(const FittedModel& model,
                               const Eigen::MatrixXd& curves);

/// CSV with header `label,t1,...,td`. Accepts LF or CRLF; rejects ragged
/// rows, non-numeric or non-finite cells, labels outside {0,1} and
/// non-power-of-two d. Errors name the file and line.
CurveDataset load_dataset(const std::string& path);
void save_dataset(const CurveDataset& data, const std::string& path);

/// JSON model document; see README for the field list.
void save_model(const FittedModel& model, const std::string& path);
FittedModel load_model(const std::string& path);
std::string model_to_json(const FittedModel& model);
FittedModel model_from_json(const std::string& text);

/// CSV `t,beta` with t_j = (j - 1/2) / d.
void export_beta(const FittedModel& model, const std::string& path);

/// 17 significant digits in %g style; always round-trips.
std::string format_double(double value);

/// Writes path.tmp, then renames over path.
void atomic_write(const std::string& path, const std::string& content);

}  // namespace wavelogit
