#pragma once

// Covariance of one-step residuals: sample and shrinkage estimators, and the
// split of the full residual covariance W1 into the blocks used by the update.

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "hierrec/types.hpp"

namespace hierrec {

/// N x m in-sample one-step residuals, convention actual - forecast, columns in
/// hierarchy order.
class ResidualMatrix {
 public:
  ResidualMatrix(Matrix values, std::vector<std::string> names);

  const Matrix& values() const noexcept { return values_; }
  const std::vector<std::string>& names() const noexcept { return names_; }
  std::size_t N() const noexcept { return static_cast<std::size_t>(values_.rows()); }
  std::size_t m() const noexcept { return static_cast<std::size_t>(values_.cols()); }

 private:
  Matrix values_;
  std::vector<std::string> names_;
};

/// How h-step covariances relate to one-step ones: W_h = k_h W_1.
enum class KhMode { kOne, kH };

double kh_factor(KhMode mode, int h);
std::string to_string(KhMode mode);
KhMode parse_kh_mode(const std::string& text);

/// Column-centered covariance with divisor N - 1.
Matrix sample_covariance(const Matrix& residuals);
inline Matrix sample_covariance(const ResidualMatrix& r) { return sample_covariance(r.values()); }

/// Schafer-Strimmer intensity for a diagonal target, computed on the
/// correlation scale and clamped to [0, 1]. Pairs involving a zero-variance
/// column are ignored; with no usable pair the result is 1.
double shrinkage_intensity(const Matrix& residuals);

/// lambda * diag(S) + (1 - lambda) * S, with the diagonal copied verbatim.
Matrix shrink_towards_diagonal(const Matrix& sample, double lambda);

struct ShrinkageResult {
  Matrix covariance;
  double lambda = 0.0;
  bool jittered = false;
};

inline constexpr double kDefaultJitter = 1e-8;

/// Shrinkage estimate of the full residual covariance. If the result is not
/// Cholesky-factorizable, jitter * mean(diag) is added to the diagonal and the
/// factorization retried once; a second failure throws NumericalError.
ShrinkageResult shrinkage_covariance(const ResidualMatrix& r, double jitter = kDefaultJitter);

/// Blocks of W1 under the ordering aggregates-then-bottoms. The upper noise is
/// eps_u = u_hat - A b, so M1 = Cov(B, eps_u) = -Cov(e_b, e_u).
struct CovarianceModel {
  Matrix W1;
  Matrix Sigma_b1;  // n x n
  Matrix Sigma_u1;  // (m-n) x (m-n)
  Matrix M1;        // n x (m-n)
  KhMode kh_mode = KhMode::kOne;
  double shrink_lambda = 0.0;

  std::size_t m() const noexcept { return static_cast<std::size_t>(W1.rows()); }
  std::size_t n() const noexcept { return static_cast<std::size_t>(Sigma_b1.rows()); }
};

CovarianceModel partition_w1(const Matrix& W1, std::size_t m, std::size_t n);

/// Inverse of partition_w1: [[Sigma_u1, -M1^T], [-M1, Sigma_b1]].
Matrix assemble_w1(const CovarianceModel& cov);

/// Shrinkage estimate followed by partition.
CovarianceModel estimate_covariance(const ResidualMatrix& r, std::size_t n, KhMode mode,
                                    double jitter = kDefaultJitter);

Matrix scale_kh(const Matrix& block, KhMode mode, int h);

/// Residual CSV: '#' comment documenting the sign convention, header of names.
ResidualMatrix read_residuals(std::istream& in, const std::string& source, const std::vector<std::string>& order);
ResidualMatrix read_residuals_csv(const std::string& path, const std::vector<std::string>& order);
void write_residuals_csv(std::ostream& out, const ResidualMatrix& r);

}  // namespace hierrec
