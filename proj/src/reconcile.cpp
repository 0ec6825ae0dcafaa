#include "hierrec/reconcile.hpp"

#include <cctype>
#include <cmath>
#include <limits>

#include "hierrec/errors.hpp"

namespace hierrec {

namespace {

// Below this reciprocal condition number a symmetric system is treated as singular.
constexpr double kMinRcond = 1e-14;

void require_shapes(const CovarianceModel& cov, const Matrix& A) {
  const auto n = cov.Sigma_b1.rows();
  const auto upper = cov.Sigma_u1.rows();
  if (A.rows() != upper || A.cols() != n || cov.M1.rows() != n || cov.M1.cols() != upper) {
    throw ValidationError("reconcile: covariance blocks do not match the summing matrix");
  }
}

// A Sigma_b1 + M1' (or without M1 for LG); the transpose of the gain numerator.
Matrix cross_term(const CovarianceModel& cov, const Matrix& A, GainVariant variant) {
  Matrix cross = A * cov.Sigma_b1;
  if (variant == GainVariant::kPMinT) cross += cov.M1.transpose();
  return cross;
}

ReconciledDistribution finish(Method method, int h, KhMode kh_mode, Vector bottom_mean, const Matrix& unit_cov,
                              const SummingMatrix& S, double lambda) {
  ReconciledDistribution dist;
  dist.method = method;
  dist.h = h;
  dist.kh_mode = kh_mode;
  dist.bottom_mean = std::move(bottom_mean);
  dist.bottom_cov = kh_factor(kh_mode, h) * repair_psd(unit_cov);
  dist.full_mean = S.S() * dist.bottom_mean;
  const Matrix full = S.S() * dist.bottom_cov * S.S().transpose();
  dist.full_cov = (full + full.transpose()) / 2.0;
  dist.shrink_lambda = lambda;
  return dist;
}

GainVariant variant_of(Method method) {
  return method == Method::kLinearGaussian ? GainVariant::kLinearGaussian : GainVariant::kPMinT;
}

}  // namespace

std::string to_string(Method method) {
  switch (method) {
    case Method::kBottomUp:
      return "bu";
    case Method::kLinearGaussian:
      return "lg";
    case Method::kPMinT:
      return "pmint";
  }
  return "?";
}

Method parse_method(const std::string& text) {
  std::string lower;
  for (char c : text) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (lower == "bu") return Method::kBottomUp;
  if (lower == "lg") return Method::kLinearGaussian;
  if (lower == "pmint") return Method::kPMinT;
  throw ValidationError("unknown method '" + text + "' (expected bu, lg or pmint)");
}

GainMatrix gain_matrix(const CovarianceModel& cov, const Matrix& A, GainVariant variant) {
  require_shapes(cov, A);
  const auto n = cov.Sigma_b1.rows();
  const auto upper = cov.Sigma_u1.rows();
  if (upper == 0) return {Matrix::Zero(n, 0)};

  const Matrix cross = cross_term(cov, A, variant);
  Matrix inner = A * cov.Sigma_b1 * A.transpose() + cov.Sigma_u1;
  if (variant == GainVariant::kPMinT) inner += A * cov.M1 + cov.M1.transpose() * A.transpose();
  inner = (inner + inner.transpose()) / 2.0;

  const Eigen::LDLT<Matrix> ldlt(inner);
  const double rcond = ldlt.info() == Eigen::Success ? ldlt.rcond() : 0.0;
  if (!(rcond > kMinRcond)) {
    throw NumericalError("gain_matrix: inner covariance of the upper forecasts is singular",
                         rcond > 0.0 ? 1.0 / rcond : std::numeric_limits<double>::infinity());
  }
  // inner is symmetric, so G' = inner^-1 (A Sigma_b1 + M1')
  return {ldlt.solve(cross).transpose()};
}

Matrix repair_psd(const Matrix& cov, double rel_tol) {
  const Matrix sym = (cov + cov.transpose()) / 2.0;
  if (sym.rows() == 0) return sym;
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
  const Vector& values = eig.eigenvalues();
  const double floor = -rel_tol * std::abs(sym.trace());
  if (values.minCoeff() >= 0.0) return sym;
  if (values.minCoeff() < floor) {
    throw NumericalError("posterior covariance is not positive semidefinite (eigenvalue " +
                             std::to_string(values.minCoeff()) + ")",
                         std::numeric_limits<double>::infinity());
  }
  const Vector clipped = values.cwiseMax(0.0);
  Matrix repaired = eig.eigenvectors() * clipped.asDiagonal() * eig.eigenvectors().transpose();
  return (repaired + repaired.transpose()) / 2.0;
}

ReconciledDistribution reconcile_pmint(const Vector& y_hat, const CovarianceModel& cov, const SummingMatrix& S, int h,
                                       KhMode kh_mode, GainVariant variant) {
  const auto upper = static_cast<Eigen::Index>(S.upper_count());
  const auto n = static_cast<Eigen::Index>(S.n());
  if (y_hat.size() != static_cast<Eigen::Index>(S.m())) {
    throw ValidationError("reconcile: base forecast has " + std::to_string(y_hat.size()) + " entries, expected " +
                          std::to_string(S.m()));
  }
  const GainMatrix gain = gain_matrix(cov, S.A(), variant);
  const Vector u_hat = y_hat.head(upper);
  const Vector b_hat = y_hat.tail(n);
  const Vector incoherence = u_hat - S.A() * b_hat;
  Vector b_tilde = b_hat + gain.G * incoherence;
  const Matrix unit_cov = cov.Sigma_b1 - gain.G * cross_term(cov, S.A(), variant);
  const Method method = variant == GainVariant::kPMinT ? Method::kPMinT : Method::kLinearGaussian;
  return finish(method, h, kh_mode, std::move(b_tilde), unit_cov, S, cov.shrink_lambda);
}

ReconciledDistribution reconcile_pmint(const BaseForecasts& base, const CovarianceModel& cov, const SummingMatrix& S,
                                       int h, KhMode kh_mode, GainVariant variant) {
  return reconcile_pmint(base.at(h), cov, S, h, kh_mode, variant);
}

ReconciledDistribution reconcile_bottom_up(const Vector& b_hat, const Matrix& Sigma_b1, const SummingMatrix& S, int h,
                                           KhMode kh_mode) {
  const auto n = static_cast<Eigen::Index>(S.n());
  if (b_hat.size() != n || Sigma_b1.rows() != n || Sigma_b1.cols() != n) {
    throw ValidationError("reconcile_bottom_up: dimensions do not match the hierarchy");
  }
  return finish(Method::kBottomUp, h, kh_mode, b_hat, Sigma_b1, S, 0.0);
}

ReconciledDistribution reconcile(Method method, const Vector& y_hat, const CovarianceModel& cov, const SummingMatrix& S,
                                 int h, KhMode kh_mode) {
  if (method == Method::kBottomUp) {
    if (y_hat.size() != static_cast<Eigen::Index>(S.m())) {
      throw ValidationError("reconcile: base forecast has the wrong length");
    }
    auto dist = reconcile_bottom_up(y_hat.tail(static_cast<Eigen::Index>(S.n())), cov.Sigma_b1, S, h, kh_mode);
    dist.shrink_lambda = cov.shrink_lambda;
    return dist;
  }
  return reconcile_pmint(y_hat, cov, S, h, kh_mode, variant_of(method));
}

Matrix mint_p_matrix(const Matrix& W, const SummingMatrix& S) {
  const auto m = static_cast<Eigen::Index>(S.m());
  if (W.rows() != m || W.cols() != m) throw ValidationError("mint_p_matrix: W must be m x m");
  const Eigen::LLT<Matrix> w_llt(W);
  if (w_llt.info() != Eigen::Success) {
    throw NumericalError("mint_p_matrix: W is not positive definite", std::numeric_limits<double>::infinity());
  }
  const Matrix w_inv_s = w_llt.solve(S.S());
  const Matrix normal = S.S().transpose() * w_inv_s;
  const Eigen::LLT<Matrix> n_llt((normal + normal.transpose()) / 2.0);
  if (n_llt.info() != Eigen::Success || !(n_llt.rcond() > kMinRcond)) {
    const double rcond = n_llt.info() == Eigen::Success ? n_llt.rcond() : 0.0;
    throw NumericalError("mint_p_matrix: S' W^-1 S is singular",
                         rcond > 0.0 ? 1.0 / rcond : std::numeric_limits<double>::infinity());
  }
  return n_llt.solve(w_inv_s.transpose());
}

Matrix pmint_p_matrix(const GainMatrix& gain, const Matrix& A) {
  const auto n = A.cols();
  const auto upper = A.rows();
  if (gain.G.rows() != n || gain.G.cols() != upper) throw ValidationError("pmint_p_matrix: gain shape mismatch");
  Matrix P(n, upper + n);
  P.leftCols(upper) = gain.G;
  P.rightCols(n) = Matrix::Identity(n, n) - gain.G * A;
  return P;
}

TwoBottomGains two_bottom_gains(double var1, double var2, double cov12, double var_u, double sigma_u1,
                                double sigma_u2) {
  const double denom = var_u + var1 + var2 + 2.0 * cov12;
  const double denom_star = denom - 2.0 * sigma_u1 - 2.0 * sigma_u2;
  if (denom == 0.0 || denom_star == 0.0) {
    throw NumericalError("two_bottom_gains: zero denominator", std::numeric_limits<double>::infinity());
  }
  TwoBottomGains g;
  g.g1 = (var1 + cov12) / denom;
  g.g2 = (var2 + cov12) / denom;
  g.g1_star = (var1 + cov12 - sigma_u1) / denom_star;
  g.g2_star = (var2 + cov12 - sigma_u2) / denom_star;
  return g;
}

}  // namespace hierrec
