#include <algorithm>
#include <cmath>
#include <set>

#include "doctest.h"
#include "wavelogit/error.hpp"
#include "wavelogit/eval.hpp"
#include "wavelogit/io.hpp"
#include "wavelogit/penalized.hpp"
#include "wavelogit/synth.hpp"

using namespace wavelogit;

TEST_CASE("default spec shape") {
  const SynthSpec spec = default_synth_spec(4);
  CHECK(spec.basis.size() == 256);
  CHECK(spec.true_support.size() == 5);
  CHECK(spec.effect_sizes.size() == 5);
  CHECK(spec.seed == 4);
  for (int k : spec.true_support) CHECK(k >= spec.basis.scale_count());
  const CurveDataset data = generate_dataset(spec);
  CHECK(data.n() == 2 * spec.n_per_class);
  CHECK(data.d() == 256);
  CHECK(data.labels.sum() == spec.n_per_class);
  CHECK(data.labels[0] == 0.0);
  CHECK(data.labels[data.n() - 1] == 1.0);
}

TEST_CASE("generation is deterministic per seed") {
  const SynthSpec spec = default_synth_spec(11);
  const CurveDataset a = generate_dataset(spec), b = generate_dataset(spec);
  CHECK((a.curves.array() == b.curves.array()).all());
  const CurveDataset c = generate_dataset(default_synth_spec(12));
  CHECK((a.curves.array() != c.curves.array()).any());
}

TEST_CASE("zero effects give chance-level discrimination") {
  SynthSpec train = default_synth_spec(20);
  for (double& e : train.effect_sizes) e = 0.0;
  train.n_per_class = 200;
  SynthSpec test = train;
  test.seed = 21;
  const LabeledCoefficients tr = to_coefficients(generate_dataset(train), train.basis);
  const LabeledCoefficients te = to_coefficients(generate_dataset(test), test.basis);
  FitConfig c;
  c.lambda = 0.1 * lambda_max(tr);
  const PenalizedSolution s = fit_wnet(tr, c);
  const double a = auc(linear_predictors(s.state(), te.theta), te.labels);
  CHECK(std::abs(a - 0.5) <= 0.05);
}

TEST_CASE("a single noiseless large effect separates the classes") {
  SynthSpec spec = default_synth_spec(30);
  spec.true_support = {40};
  spec.effect_sizes = {25.0};
  spec.noise_sd = 0.0;
  spec.n_per_class = 100;
  const LabeledCoefficients tr = to_coefficients(generate_dataset(spec), spec.basis);
  spec.seed = 31;
  const LabeledCoefficients te = to_coefficients(generate_dataset(spec), spec.basis);
  FitConfig c;
  c.lambda = 0.2 * lambda_max(tr);
  const PenalizedSolution s = fit_wnet(tr, c);
  CHECK(auc(linear_predictors(s.state(), te.theta), te.labels) >= 0.99);
  CHECK(s.omega[40] != 0.0);
}

TEST_CASE("planted mean shift is recovered in the wavelet domain") {
  SynthSpec spec = default_synth_spec(40);
  spec.n_per_class = 3000;
  const LabeledCoefficients data = to_coefficients(generate_dataset(spec), spec.basis);
  const int n = spec.n_per_class;
  const Eigen::MatrixXd neg = data.theta.topRows(n), pos = data.theta.bottomRows(n);
  const Eigen::VectorXd mean_neg = neg.colwise().mean(), mean_pos = pos.colwise().mean();
  const Eigen::VectorXd diff = mean_pos - mean_neg;
  const std::set<int> support(spec.true_support.begin(), spec.true_support.end());
  int off_outliers = 0;
  for (int k = 0; k < data.d(); ++k) {
    const double var_neg = (neg.col(k).array() - mean_neg[k]).square().sum() / (n - 1);
    const double var_pos = (pos.col(k).array() - mean_pos[k]).square().sum() / (n - 1);
    const double se = std::sqrt(var_neg / n + var_pos / n);
    double expect = 0.0;
    for (std::size_t j = 0; j < spec.true_support.size(); ++j) {
      if (spec.true_support[j] == k) expect = spec.effect_sizes[j];
    }
    if (support.count(k)) {
      CHECK(std::abs(diff[k] - expect) <= 3.0 * se);
    } else {
      off_outliers += std::abs(diff[k]) > 4.0 * se;
    }
  }
  CHECK(off_outliers == 0);
}

TEST_CASE("generate_beta") {
  SynthSpec spec = default_synth_spec(0);
  const Eigen::VectorXd beta = generate_beta(spec);
  const Eigen::VectorXd back = dwt_forward(beta, spec.basis);
  Eigen::VectorXd planted = Eigen::VectorXd::Zero(256);
  for (std::size_t j = 0; j < spec.true_support.size(); ++j) {
    planted[spec.true_support[j]] = spec.effect_sizes[j];
  }
  CHECK((back - planted).cwiseAbs().maxCoeff() < 1e-10);

  spec.true_support = {};
  spec.effect_sizes = {};
  CHECK(generate_beta(spec).cwiseAbs().maxCoeff() == 0.0);
  CHECK(planted_time_support(spec).empty());

  spec.true_support = {100};
  spec.effect_sizes = {2.0};
  const Eigen::MatrixXd w = transform_matrix(spec.basis);
  CHECK((generate_beta(spec) - 2.0 * w.row(100).transpose()).cwiseAbs().maxCoeff() < 1e-12);
  // The atom's footprint is exactly the planted time support.
  const std::vector<int> times = planted_time_support(spec);
  for (int t = 0; t < 256; ++t) {
    const bool in = std::find(times.begin(), times.end(), t) != times.end();
    CHECK(in == (std::abs(w(100, t)) > 1e-12 * w.row(100).cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("invalid specs") {
  SynthSpec spec = default_synth_spec(0);
  spec.true_support[0] = 3;  // scale block
  CHECK_THROWS_AS(generate_dataset(spec), ParameterError);
  spec = default_synth_spec(0);
  spec.true_support[0] = 256;
  CHECK_THROWS_AS(generate_beta(spec), ParameterError);
  spec = default_synth_spec(0);
  spec.effect_sizes.pop_back();
  CHECK_THROWS_AS(validate(spec), ParameterError);
  spec = default_synth_spec(0);
  spec.effect_sizes[1] = INFINITY;
  CHECK_THROWS_AS(validate(spec), ParameterError);
  spec = default_synth_spec(0);
  spec.background_decay = 1.0;
  CHECK_THROWS_AS(validate(spec), ParameterError);
  spec = default_synth_spec(0);
  spec.noise_sd = -1.0;
  CHECK_THROWS_AS(validate(spec), ParameterError);
}
