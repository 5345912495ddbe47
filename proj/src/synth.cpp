#include "wavelogit/synth.hpp"

#include <cmath>
#include <random>
#include <string>

#include "wavelogit/error.hpp"

namespace wavelogit {

SynthSpec default_synth_spec(std::uint64_t seed) {
  SynthSpec spec;
  spec.n_per_class = 100;
  spec.basis = WaveletBasis(default_family, default_j0, 256);
  // Two coefficients at level 4, two at level 5, one at level 6, spread in
  // time.
  spec.true_support = {19, 27, 38, 52, 85};
  spec.effect_sizes = {0.6, -0.6, 0.6, 0.6, -0.6};
  spec.noise_sd = 0.5;
  spec.background_decay = 0.5;
  spec.background_sd = 1.0;
  spec.seed = seed;
  return spec;
}

void validate(const SynthSpec& spec) {
  if (spec.n_per_class < 1) throw ParameterError("n_per_class must be >= 1");
  if (spec.true_support.size() != spec.effect_sizes.size()) {
    throw ParameterError("support and effect sizes differ in length");
  }
  const int d = spec.basis.size();
  for (std::size_t k = 0; k < spec.true_support.size(); ++k) {
    const int idx = spec.true_support[k];
    if (idx < spec.basis.scale_count() || idx >= d) {
      throw ParameterError("support index " + std::to_string(idx) +
                           " outside the detail range [" +
                           std::to_string(spec.basis.scale_count()) + ", " +
                           std::to_string(d) + ")");
    }
    if (!std::isfinite(spec.effect_sizes[k])) {
      throw ParameterError("effect sizes must be finite");
    }
  }
  if (!(spec.noise_sd >= 0.0)) throw ParameterError("noise_sd must be >= 0");
  if (!(spec.background_decay > 0.0 && spec.background_decay < 1.0)) {
    throw ParameterError("background_decay must lie in (0, 1)");
  }
  if (!(spec.background_sd >= 0.0)) {
    throw ParameterError("background_sd must be >= 0");
  }
}

namespace {

Eigen::VectorXd planted_coefficients(const SynthSpec& spec) {
  Eigen::VectorXd shift = Eigen::VectorXd::Zero(spec.basis.size());
  for (std::size_t k = 0; k < spec.true_support.size(); ++k) {
    shift[spec.true_support[k]] += spec.effect_sizes[k];
  }
  return shift;
}

}  // namespace

CurveDataset generate_dataset(const SynthSpec& spec) {
  validate(spec);
  const int d = spec.basis.size();
  const int n = 2 * spec.n_per_class;

  Eigen::VectorXd sd(d);
  for (int k = 0; k < d; ++k) {
    const int level = spec.basis.level_of(k) < 0
                          ? 0
                          : spec.basis.level_of(k) - spec.basis.j0() + 1;
    sd[k] = spec.background_sd * std::pow(spec.background_decay, 0.5 * level);
  }
  const Eigen::VectorXd shift = planted_coefficients(spec);

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  CurveDataset out;
  out.curves.resize(n, d);
  out.labels.resize(n);
  Eigen::VectorXd theta(d);
  for (int i = 0; i < n; ++i) {
    const bool positive = i >= spec.n_per_class;
    for (int k = 0; k < d; ++k) theta[k] = sd[k] * normal(rng);
    if (positive) theta += shift;
    Eigen::VectorXd x = dwt_inverse(theta, spec.basis);
    for (int t = 0; t < d; ++t) x[t] += spec.noise_sd * normal(rng);
    out.curves.row(i) = x.transpose();
    out.labels[i] = positive ? 1.0 : 0.0;
  }
  return out;
}

Eigen::VectorXd generate_beta(const SynthSpec& spec) {
  validate(spec);
  return dwt_inverse(planted_coefficients(spec), spec.basis);
}

std::vector<int> planted_time_support(const SynthSpec& spec) {
  validate(spec);
  const int d = spec.basis.size();
  std::vector<bool> mask(static_cast<std::size_t>(d), false);
  for (int idx : spec.true_support) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(d);
    e[idx] = 1.0;
    const Eigen::VectorXd atom = dwt_inverse(e, spec.basis);
    const double peak = atom.cwiseAbs().maxCoeff();
    for (int t = 0; t < d; ++t) {
      if (std::abs(atom[t]) > 1e-12 * peak) mask[static_cast<std::size_t>(t)] = true;
    }
  }
  std::vector<int> out;
  for (int t = 0; t < d; ++t) {
    if (mask[static_cast<std::size_t>(t)]) out.push_back(t);
  }
  return out;
}

}  // namespace wavelogit
