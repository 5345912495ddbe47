#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "wavelogit/wavelet.hpp"

namespace wavelogit {

/// Sampled curves (one per row) with 0/1 labels.
struct CurveDataset {
  Eigen::MatrixXd curves;
  Eigen::VectorXd labels;

  int n() const { return static_cast<int>(curves.rows()); }
  int d() const { return static_cast<int>(curves.cols()); }
};

/// Generator parameters. Support indices are 0-based wavelet coefficient
/// positions and must fall in the detail range [2^j0, d).
struct SynthSpec {
  int n_per_class = 100;
  WaveletBasis basis{default_family, default_j0, 256};
  std::vector<int> true_support;
  std::vector<double> effect_sizes;
  double noise_sd = 1.0;
  /// Nuisance coefficient variance is background_sd^2 * decay^level with
  /// level 0 for the scale block and 1, 2, ... for details coarse to fine.
  double background_decay = 0.5;
  double background_sd = 1.0;
  std::uint64_t seed = 0;
};

/// A 256-point spec with five planted detail coefficients spread over the
/// middle scales, sized for 75 training and 25 test curves per class.
SynthSpec default_synth_spec(std::uint64_t seed = 0);

/// Labels 0 for the first n_per_class rows, 1 for the rest. Class 1 gets the
/// planted mean shift; white noise is added after the inverse transform.
CurveDataset generate_dataset(const SynthSpec& spec);

/// W' applied to the planted coefficient vector.
Eigen::VectorXd generate_beta(const SynthSpec& spec);

/// Time indices where any planted atom is nonzero (|value| > 1e-12 times
/// its peak).
std::vector<int> planted_time_support(const SynthSpec& spec);

/// Throws ParameterError on inconsistent spec.
void validate(const SynthSpec& spec);

}  // namespace wavelogit
