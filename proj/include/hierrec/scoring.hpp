#pragma once

// Seeded Gaussian sampling and the sample-based energy score
//   ES = 1/k sum_i |x_i - y| - 1/(2 k^2) sum_i sum_j |x_i - x_j|.

#include <cstdint>
#include <initializer_list>
#include <string>

#include "hierrec/reconcile.hpp"
#include "hierrec/types.hpp"

namespace hierrec {

inline constexpr int kDefaultSamples = 2000;

/// Deterministic sub-seed from a master seed and a path of indices
/// (splitmix64 chaining).
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path);

/// F with F F' = cov, from Cholesky with complete pivoting that stops at
/// negligible pivots; columns beyond the numerical rank are dropped. Throws
/// NumericalError if cov is not PSD within tolerance.
Matrix psd_factor(const Matrix& cov);

/// k x m matrix of draws mean + F z with z ~ N(0, I) from a seeded generator.
Matrix sample_gaussian(const Vector& mean, const Matrix& cov, int k, std::uint64_t seed);

/// Samples are the rows of `samples`.
double energy_score(const Matrix& samples, const Vector& y);

struct ScoreReport {
  Method method = Method::kPMinT;
  int h = 1;
  double energy_score = 0.0;
  int k = 0;
  std::uint64_t seed = 0;
};

/// Draws k samples from N(full_mean, full_cov) and scores them against y.
ScoreReport energy_score_gaussian(const ReconciledDistribution& dist, const Vector& y, int k, std::uint64_t seed);

}  // namespace hierrec
