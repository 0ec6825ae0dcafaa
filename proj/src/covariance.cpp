#include "hierrec/covariance.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>

#include "hierrec/csv.hpp"
#include "hierrec/errors.hpp"

namespace hierrec {

ResidualMatrix::ResidualMatrix(Matrix values, std::vector<std::string> names)
    : values_(std::move(values)), names_(std::move(names)) {
  if (values_.rows() < 2) {
    throw ValidationError("residuals: need at least 2 rows, got " + std::to_string(values_.rows()));
  }
  if (static_cast<std::size_t>(values_.cols()) != names_.size()) {
    throw ValidationError("residuals: column count does not match names");
  }
  if (!values_.allFinite()) throw ValidationError("residuals: non-finite entry");
}

double kh_factor(KhMode mode, int h) {
  if (h < 1) throw ValidationError("horizon must be >= 1, got " + std::to_string(h));
  return mode == KhMode::kOne ? 1.0 : static_cast<double>(h);
}

std::string to_string(KhMode mode) { return mode == KhMode::kOne ? "one" : "h"; }

KhMode parse_kh_mode(const std::string& text) {
  if (text == "one" || text == "1") return KhMode::kOne;
  if (text == "h") return KhMode::kH;
  throw ValidationError("unknown k_h mode '" + text + "' (expected 'one' or 'h')");
}

Matrix sample_covariance(const Matrix& residuals) {
  if (residuals.rows() < 2) throw ValidationError("sample_covariance: need at least 2 rows");
  if (!residuals.allFinite()) throw ValidationError("sample_covariance: non-finite entry");
  const Matrix centered = residuals.rowwise() - residuals.colwise().mean();
  Matrix cov = (centered.transpose() * centered) / static_cast<double>(residuals.rows() - 1);
  return (cov + cov.transpose()) / 2.0;
}

double shrinkage_intensity(const Matrix& residuals) {
  const auto N = residuals.rows();
  const auto m = residuals.cols();
  if (N < 2) throw ValidationError("shrinkage_intensity: need at least 2 rows");
  const Matrix centered = residuals.rowwise() - residuals.colwise().mean();
  const Vector sd = (centered.colwise().squaredNorm() / static_cast<double>(N - 1)).cwiseSqrt().transpose();

  Matrix standardized = centered;
  for (Eigen::Index j = 0; j < m; ++j) {
    if (sd(j) > 0.0) standardized.col(j) /= sd(j);
  }
  const double Nd = static_cast<double>(N);
  const double var_scale = Nd / std::pow(Nd - 1.0, 3);

  double sum_var = 0.0;
  double sum_sq = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) {
    if (sd(i) <= 0.0) continue;
    for (Eigen::Index j = i + 1; j < m; ++j) {
      if (sd(j) <= 0.0) continue;
      const Vector w = standardized.col(i).cwiseProduct(standardized.col(j));
      const double r = w.sum() / (Nd - 1.0);
      const double var_r = var_scale * (w.array() - w.mean()).square().sum();
      // each unordered pair appears twice in the sums over i != j
      sum_var += 2.0 * var_r;
      sum_sq += 2.0 * r * r;
    }
  }
  if (!(sum_sq > 0.0)) return 1.0;
  return std::clamp(sum_var / sum_sq, 0.0, 1.0);
}

Matrix shrink_towards_diagonal(const Matrix& sample, double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ValidationError("shrinkage intensity must lie in [0, 1]");
  Matrix out = (1.0 - lambda) * sample;
  out.diagonal() = sample.diagonal();
  return out;
}

ShrinkageResult shrinkage_covariance(const ResidualMatrix& r, double jitter) {
  if (!(jitter >= 0.0)) throw ValidationError("shrinkage_covariance: jitter must be nonnegative");
  const Matrix sample = sample_covariance(r.values());
  ShrinkageResult result;
  result.lambda = shrinkage_intensity(r.values());
  result.covariance = shrink_towards_diagonal(sample, result.lambda);

  Eigen::LLT<Matrix> llt(result.covariance);
  if (llt.info() == Eigen::Success) return result;

  const double bump = jitter * sample.diagonal().mean();
  if (!(bump > 0.0)) {
    throw NumericalError("shrinkage_covariance: covariance is singular and jitter cannot repair it",
                         std::numeric_limits<double>::infinity());
  }
  result.covariance.diagonal().array() += bump;
  result.jittered = true;
  llt.compute(result.covariance);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("shrinkage_covariance: covariance not positive definite after jitter",
                         std::numeric_limits<double>::infinity());
  }
  return result;
}

CovarianceModel partition_w1(const Matrix& W1, std::size_t m, std::size_t n) {
  const auto mi = static_cast<Eigen::Index>(m);
  const auto ni = static_cast<Eigen::Index>(n);
  if (W1.rows() != mi || W1.cols() != mi || n == 0 || n > m) {
    throw ValidationError("partition_w1: W1 must be m x m with 0 < n <= m");
  }
  const double scale = std::max(W1.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
  if ((W1 - W1.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw ValidationError("partition_w1: W1 is not symmetric");
  }
  const auto upper = mi - ni;
  CovarianceModel cov;
  cov.W1 = W1;
  cov.Sigma_u1 = W1.topLeftCorner(upper, upper);
  cov.Sigma_b1 = W1.bottomRightCorner(ni, ni);
  cov.M1 = -W1.bottomLeftCorner(ni, upper);
  if (Eigen::LLT<Matrix>(cov.Sigma_b1).info() != Eigen::Success) {
    throw NumericalError("partition_w1: bottom block is not positive definite", std::numeric_limits<double>::infinity());
  }
  if (upper > 0 && Eigen::LLT<Matrix>(cov.Sigma_u1).info() != Eigen::Success) {
    throw NumericalError("partition_w1: upper block is not positive definite", std::numeric_limits<double>::infinity());
  }
  return cov;
}

Matrix assemble_w1(const CovarianceModel& cov) {
  const auto n = cov.Sigma_b1.rows();
  const auto upper = cov.Sigma_u1.rows();
  Matrix W(n + upper, n + upper);
  W.topLeftCorner(upper, upper) = cov.Sigma_u1;
  W.topRightCorner(upper, n) = -cov.M1.transpose();
  W.bottomLeftCorner(n, upper) = -cov.M1;
  W.bottomRightCorner(n, n) = cov.Sigma_b1;
  return W;
}

CovarianceModel estimate_covariance(const ResidualMatrix& r, std::size_t n, KhMode mode, double jitter) {
  const auto shrunk = shrinkage_covariance(r, jitter);
  auto cov = partition_w1(shrunk.covariance, r.m(), n);
  cov.kh_mode = mode;
  cov.shrink_lambda = shrunk.lambda;
  return cov;
}

Matrix scale_kh(const Matrix& block, KhMode mode, int h) { return kh_factor(mode, h) * block; }

ResidualMatrix read_residuals(std::istream& in, const std::string& source, const std::vector<std::string>& order) {
  const auto table = csv::read(in, source);
  std::vector<std::size_t> position(order.size());
  if (table.header.size() != order.size()) {
    throw ValidationError(source + ": expected " + std::to_string(order.size()) + " residual columns, got " +
                          std::to_string(table.header.size()));
  }
  for (std::size_t k = 0; k < order.size(); ++k) {
    const auto it = std::find(table.header.begin(), table.header.end(), order[k]);
    if (it == table.header.end()) throw ValidationError(source + ": missing series '" + order[k] + "'");
    position[k] = static_cast<std::size_t>(it - table.header.begin());
  }
  if (table.rows.size() < 2) {
    throw ValidationError(source + ": need at least 2 residual rows, got " + std::to_string(table.rows.size()));
  }
  Matrix values(static_cast<Eigen::Index>(table.rows.size()), static_cast<Eigen::Index>(order.size()));
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    for (std::size_t k = 0; k < order.size(); ++k) {
      values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) =
          csv::parse_number(table.rows[r][position[k]], source + " row " + std::to_string(r + 1) + " '" + order[k] + "'");
    }
  }
  return {std::move(values), order};
}

ResidualMatrix read_residuals_csv(const std::string& path, const std::vector<std::string>& order) {
  std::ifstream in(path);
  if (!in) throw ValidationError(path + ": cannot open file");
  return read_residuals(in, path, order);
}

void write_residuals_csv(std::ostream& out, const ResidualMatrix& r) {
  out << "# one-step in-sample residuals, actual - forecast\n";
  for (std::size_t k = 0; k < r.names().size(); ++k) out << (k ? "," : "") << r.names()[k];
  out << '\n';
  for (Eigen::Index i = 0; i < r.values().rows(); ++i) {
    for (Eigen::Index j = 0; j < r.values().cols(); ++j) out << (j ? "," : "") << csv::format_number(r.values()(i, j));
    out << '\n';
  }
}

}  // namespace hierrec
