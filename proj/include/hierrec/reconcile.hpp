#pragma once

// Probabilistic reconciliation by Gaussian conditioning of the bottom series on
// the upper base forecasts, plus probabilistic bottom-up and the MinT
// projection used as a cross-check.
//
// Prior:        B ~ N(b_hat, k_h Sigma_b1)
// Observation:  U_hat = A B + eps_u,  Cov(eps_u) = k_h Sigma_u1,  Cov(B, eps_u) = k_h M1
// Gain:         G = (Sigma_b1 A' + M1) (A Sigma_b1 A' + Sigma_u1 + A M1 + M1' A')^-1
// Posterior:    b~ = b_hat + G (u_hat - A b_hat)
//               Var = k_h (Sigma_b1 - G (A Sigma_b1 + M1'))
// The linear-Gaussian variant (LG) sets M1 = 0 in both expressions.

#include <string>

#include "hierrec/basefc.hpp"
#include "hierrec/covariance.hpp"
#include "hierrec/hierarchy.hpp"
#include "hierrec/types.hpp"

namespace hierrec {

enum class Method { kBottomUp, kLinearGaussian, kPMinT };
enum class GainVariant { kLinearGaussian, kPMinT };

std::string to_string(Method method);
Method parse_method(const std::string& text);

/// n x (m - n). Independent of k_h.
struct GainMatrix {
  Matrix G;
};

GainMatrix gain_matrix(const CovarianceModel& cov, const Matrix& A, GainVariant variant);

/// Coherent joint Gaussian over the full hierarchy.
struct ReconciledDistribution {
  Method method = Method::kPMinT;
  int h = 1;
  KhMode kh_mode = KhMode::kOne;
  Vector bottom_mean;
  Matrix bottom_cov;
  Vector full_mean;  // S * bottom_mean
  Matrix full_cov;   // S * bottom_cov * S'
  double shrink_lambda = 0.0;
};

/// Symmetrizes and clips eigenvalues in [-tol * trace, 0) to zero. More
/// negative eigenvalues throw NumericalError.
Matrix repair_psd(const Matrix& cov, double rel_tol = 1e-10);

/// Bayes update for horizon h. `y_hat` is the full base forecast [u_hat; b_hat].
ReconciledDistribution reconcile_pmint(const Vector& y_hat, const CovarianceModel& cov, const SummingMatrix& S, int h,
                                       KhMode kh_mode, GainVariant variant);
ReconciledDistribution reconcile_pmint(const BaseForecasts& base, const CovarianceModel& cov, const SummingMatrix& S,
                                       int h, KhMode kh_mode, GainVariant variant);

/// N(S b_hat, k_h S Sigma_b1 S').
ReconciledDistribution reconcile_bottom_up(const Vector& b_hat, const Matrix& Sigma_b1, const SummingMatrix& S, int h,
                                           KhMode kh_mode);

/// Dispatches on the method; the full base forecast vector is always given.
ReconciledDistribution reconcile(Method method, const Vector& y_hat, const CovarianceModel& cov, const SummingMatrix& S,
                                 int h, KhMode kh_mode);

/// P = (S' W^-1 S)^-1 S' W^-1 via Cholesky solves; P S = I.
Matrix mint_p_matrix(const Matrix& W, const SummingMatrix& S);

/// [G | I - G A], upper columns first to match y_hat = [u_hat; b_hat].
Matrix pmint_p_matrix(const GainMatrix& gain, const Matrix& A);

/// Closed-form gains for the one-upper, two-bottom hierarchy U = B1 + B2.
/// sigma_u1, sigma_u2 are Cov(B_i, upper residual) = -M1(i).
struct TwoBottomGains {
  double g1 = 0.0;
  double g2 = 0.0;
  double g1_star = 0.0;
  double g2_star = 0.0;
};

TwoBottomGains two_bottom_gains(double var1, double var2, double cov12, double var_u, double sigma_u1, double sigma_u2);

}  // namespace hierrec
