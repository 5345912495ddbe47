#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace wavelogit {

// Daubechies filters indexed by vanishing moments; Haar is Daubechies-1.
enum class WaveletFamily {
  haar = 1,
  db2,
  db3,
  db4,
  db5,
  db6,
  db7,
  db8,
  db9,
  db10,
};

inline constexpr WaveletFamily default_family = WaveletFamily::db2;
inline constexpr int default_j0 = 3;

std::string family_name(WaveletFamily family);
WaveletFamily parse_family(std::string_view name);
std::vector<WaveletFamily> all_families();

/// Low-pass taps for a family, normalized so that sum(h) = sqrt(2).
const std::vector<double>& lowpass_filter(WaveletFamily family);

/// Orthonormal periodic discrete wavelet transform on length-d signals.
///
/// Coefficient layout: the first 2^j0 entries are scale (father-wavelet)
/// coefficients, followed by detail blocks ordered coarse to fine; the block
/// for level j (j0 <= j < log2 d) holds 2^j entries.
class WaveletBasis {
 public:
  WaveletBasis(WaveletFamily family, int j0, int d);

  WaveletFamily family() const { return family_; }
  const std::vector<double>& lowpass() const { return *lowpass_; }
  int j0() const { return j0_; }
  int size() const { return d_; }
  int levels() const { return levels_; }
  /// Number of leading unpenalized scale coefficients, 2^j0.
  int scale_count() const { return 1 << j0_; }
  /// Detail level of coefficient index k, or -1 for scale coefficients.
  int level_of(int k) const;

  bool operator==(const WaveletBasis& other) const {
    return family_ == other.family_ && j0_ == other.j0_ && d_ == other.d_;
  }

 private:
  WaveletFamily family_;
  const std::vector<double>* lowpass_;
  int j0_;
  int d_;
  int levels_;
};

bool is_power_of_two(long n);

Eigen::VectorXd dwt_forward(const Eigen::Ref<const Eigen::VectorXd>& x,
                            const WaveletBasis& basis);
Eigen::VectorXd dwt_inverse(const Eigen::Ref<const Eigen::VectorXd>& theta,
                            const WaveletBasis& basis);

/// Row-wise transforms of an n x d matrix of curves.
Eigen::MatrixXd dwt_forward_rows(const Eigen::MatrixXd& curves,
                                 const WaveletBasis& basis);
Eigen::MatrixXd dwt_inverse_rows(const Eigen::MatrixXd& coefficients,
                                 const WaveletBasis& basis);

/// Explicit d x d matrix W with W x = dwt_forward(x). Row k is the k-th
/// basis function sampled on the grid.
Eigen::MatrixXd transform_matrix(const WaveletBasis& basis);

}  // namespace wavelogit
