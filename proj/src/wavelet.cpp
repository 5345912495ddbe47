#include "wavelogit/wavelet.hpp"

#include <algorithm>
#include <string>

#include "wavelogit/error.hpp"

namespace wavelogit {

std::string family_name(WaveletFamily family) {
  const int n = static_cast<int>(family);
  return n == 1 ? std::string("haar") : "db" + std::to_string(n);
}

WaveletFamily parse_family(std::string_view name) {
  if (name == "haar" || name == "db1") return WaveletFamily::haar;
  for (WaveletFamily f : all_families()) {
    if (family_name(f) == name) return f;
  }
  throw ParameterError("unknown wavelet family '" + std::string(name) +
                       "' (expected haar, db1 ... db10)");
}

std::vector<WaveletFamily> all_families() {
  std::vector<WaveletFamily> out;
  for (int n = 1; n <= 10; ++n) out.push_back(static_cast<WaveletFamily>(n));
  return out;
}

bool is_power_of_two(long n) { return n > 0 && (n & (n - 1)) == 0; }

WaveletBasis::WaveletBasis(WaveletFamily family, int j0, int d)
    : family_(family), lowpass_(&lowpass_filter(family)), j0_(j0), d_(d) {
  if (!is_power_of_two(d) || d < 2) {
    throw ParameterError("signal length " + std::to_string(d) +
                         " is not a power of two >= 2");
  }
  levels_ = 0;
  while ((1 << levels_) < d) ++levels_;
  if (j0 < 0 || j0 >= levels_) {
    throw ParameterError("j0 = " + std::to_string(j0) +
                         " must satisfy 0 <= j0 < log2(d) = " +
                         std::to_string(levels_));
  }
}

int WaveletBasis::level_of(int k) const {
  if (k < scale_count()) return -1;
  int level = 0;
  while ((2 << level) <= k) ++level;
  return level;
}

namespace {

// g[n] = (-1)^n h[L-1-n]
std::vector<double> highpass(const std::vector<double>& h) {
  const int taps = static_cast<int>(h.size());
  std::vector<double> g(h.size());
  for (int n = 0; n < taps; ++n) {
    g[n] = (n % 2 == 0 ? 1.0 : -1.0) * h[taps - 1 - n];
  }
  return g;
}

// One analysis step on the first m entries of buf; work has room for m.
void analysis_step(double* buf, double* work, int m,
                   const std::vector<double>& h, const std::vector<double>& g) {
  const int taps = static_cast<int>(h.size());
  const int half = m / 2;
  for (int k = 0; k < half; ++k) {
    double approx = 0.0;
    double detail = 0.0;
    if (2 * k + taps <= m) {
      const double* x = buf + 2 * k;
      for (int n = 0; n < taps; ++n) {
        approx += h[n] * x[n];
        detail += g[n] * x[n];
      }
    } else {
      for (int n = 0; n < taps; ++n) {
        const double x = buf[(2 * k + n) % m];
        approx += h[n] * x;
        detail += g[n] * x;
      }
    }
    work[k] = approx;
    work[half + k] = detail;
  }
  std::copy(work, work + m, buf);
}

void synthesis_step(double* buf, double* work, int m,
                    const std::vector<double>& h, const std::vector<double>& g) {
  const int taps = static_cast<int>(h.size());
  const int half = m / 2;
  std::fill(work, work + m, 0.0);
  for (int k = 0; k < half; ++k) {
    const double approx = buf[k];
    const double detail = buf[half + k];
    if (2 * k + taps <= m) {
      double* out = work + 2 * k;
      for (int n = 0; n < taps; ++n) out[n] += h[n] * approx + g[n] * detail;
    } else {
      for (int n = 0; n < taps; ++n) {
        work[(2 * k + n) % m] += h[n] * approx + g[n] * detail;
      }
    }
  }
  std::copy(work, work + m, buf);
}

}  // namespace

Eigen::VectorXd dwt_forward(const Eigen::Ref<const Eigen::VectorXd>& x,
                            const WaveletBasis& basis) {
  if (x.size() != basis.size()) {
    throw DimensionError("dwt_forward: signal has length " +
                         std::to_string(x.size()) + ", basis expects " +
                         std::to_string(basis.size()));
  }
  Eigen::VectorXd out = x;
  std::vector<double> work(basis.size());
  const std::vector<double> g = highpass(basis.lowpass());
  for (int m = basis.size(); m > basis.scale_count(); m /= 2) {
    analysis_step(out.data(), work.data(), m, basis.lowpass(), g);
  }
  return out;
}

Eigen::VectorXd dwt_inverse(const Eigen::Ref<const Eigen::VectorXd>& theta,
                            const WaveletBasis& basis) {
  if (theta.size() != basis.size()) {
    throw DimensionError("dwt_inverse: coefficient vector has length " +
                         std::to_string(theta.size()) + ", basis expects " +
                         std::to_string(basis.size()));
  }
  Eigen::VectorXd out = theta;
  std::vector<double> work(basis.size());
  const std::vector<double> g = highpass(basis.lowpass());
  for (int m = 2 * basis.scale_count(); m <= basis.size(); m *= 2) {
    synthesis_step(out.data(), work.data(), m, basis.lowpass(), g);
  }
  return out;
}

// Rows are transformed as contiguous columns of the transpose.
Eigen::MatrixXd dwt_forward_rows(const Eigen::MatrixXd& curves,
                                 const WaveletBasis& basis) {
  if (curves.cols() != basis.size()) {
    throw DimensionError("dwt_forward_rows: curves have length " +
                         std::to_string(curves.cols()) + ", basis expects " +
                         std::to_string(basis.size()));
  }
  Eigen::MatrixXd cols = curves.transpose();
  std::vector<double> work(basis.size());
  const std::vector<double> g = highpass(basis.lowpass());
  for (Eigen::Index i = 0; i < cols.cols(); ++i) {
    for (int m = basis.size(); m > basis.scale_count(); m /= 2) {
      analysis_step(cols.col(i).data(), work.data(), m, basis.lowpass(), g);
    }
  }
  return cols.transpose();
}

Eigen::MatrixXd dwt_inverse_rows(const Eigen::MatrixXd& coefficients,
                                 const WaveletBasis& basis) {
  if (coefficients.cols() != basis.size()) {
    throw DimensionError("dwt_inverse_rows: coefficient rows have length " +
                         std::to_string(coefficients.cols()) +
                         ", basis expects " + std::to_string(basis.size()));
  }
  Eigen::MatrixXd cols = coefficients.transpose();
  std::vector<double> work(basis.size());
  const std::vector<double> g = highpass(basis.lowpass());
  for (Eigen::Index i = 0; i < cols.cols(); ++i) {
    for (int m = 2 * basis.scale_count(); m <= basis.size(); m *= 2) {
      synthesis_step(cols.col(i).data(), work.data(), m, basis.lowpass(), g);
    }
  }
  return cols.transpose();
}

Eigen::MatrixXd transform_matrix(const WaveletBasis& basis) {
  const int d = basis.size();
  Eigen::MatrixXd w(d, d);
  Eigen::VectorXd e = Eigen::VectorXd::Zero(d);
  for (int j = 0; j < d; ++j) {
    e[j] = 1.0;
    w.col(j) = dwt_forward(e, basis);
    e[j] = 0.0;
  }
  return w;
}

}  // namespace wavelogit
