#include "hierrec/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "hierrec/errors.hpp"

namespace hierrec {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Euclidean distance between two rows of a row-major buffer; the summation
// order over coordinates is fixed.
inline double distance(const double* a, const double* b, std::size_t m) {
  double s = 0.0;
  for (std::size_t d = 0; d < m; ++d) {
    const double diff = a[d] - b[d];
    s += diff * diff;
  }
  return std::sqrt(s);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
  std::uint64_t state = splitmix64(master);
  for (auto step : path) state = splitmix64(state ^ splitmix64(step + 0x632be59bd9b4e019ULL));
  return state;
}

Matrix psd_factor(const Matrix& cov) {
  const auto m = cov.rows();
  if (cov.cols() != m) throw ValidationError("psd_factor: matrix must be square");
  if (!cov.allFinite()) throw ValidationError("psd_factor: non-finite entry");
  Matrix schur = (cov + cov.transpose()) / 2.0;
  const double scale = m > 0 ? schur.diagonal().cwiseAbs().maxCoeff() : 0.0;
  Matrix factor = Matrix::Zero(m, m);
  if (scale == 0.0) return Matrix::Zero(m, 0);

  const double pivot_tol = static_cast<double>(m) * std::numeric_limits<double>::epsilon() * scale;
  std::vector<bool> used(static_cast<std::size_t>(m), false);
  Eigen::Index rank = 0;
  for (; rank < m; ++rank) {
    Eigen::Index pivot = -1;
    double best = pivot_tol;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (!used[static_cast<std::size_t>(i)] && schur(i, i) > best) {
        best = schur(i, i);
        pivot = i;
      }
    }
    if (pivot < 0) break;
    used[static_cast<std::size_t>(pivot)] = true;
    Vector column = schur.col(pivot) / std::sqrt(best);
    for (Eigen::Index i = 0; i < m; ++i) {
      if (used[static_cast<std::size_t>(i)] && i != pivot) column(i) = 0.0;
    }
    factor.col(rank) = column;
    schur.noalias() -= column * column.transpose();
    // the pivot row/column is now exactly eliminated
    schur.row(pivot).setZero();
    schur.col(pivot).setZero();
  }
  const double leftover = schur.cwiseAbs().maxCoeff();
  if (leftover > 1e-8 * scale) {
    throw NumericalError("psd_factor: covariance is not positive semidefinite", std::numeric_limits<double>::infinity());
  }
  return factor.leftCols(rank);
}

Matrix sample_gaussian(const Vector& mean, const Matrix& cov, int k, std::uint64_t seed) {
  if (k < 1) throw ValidationError("sample_gaussian: sample count must be >= 1");
  if (cov.rows() != mean.size() || cov.cols() != mean.size()) {
    throw ValidationError("sample_gaussian: covariance shape does not match mean");
  }
  const Matrix factor = psd_factor(cov);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix z(factor.cols(), k);
  for (int i = 0; i < k; ++i) {
    for (Eigen::Index r = 0; r < factor.cols(); ++r) z(r, i) = normal(rng);
  }
  Matrix samples = (factor * z).transpose();
  samples.rowwise() += mean.transpose();
  return samples;
}

double energy_score(const Matrix& samples, const Vector& y) {
  const auto k = static_cast<std::size_t>(samples.rows());
  const auto m = static_cast<std::size_t>(samples.cols());
  if (k == 0) throw ValidationError("energy_score: need at least one sample");
  if (y.size() != samples.cols()) throw ValidationError("energy_score: observation dimension mismatch");

  // row-major copy so each draw is contiguous
  std::vector<double> x(k * m);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t d = 0; d < m; ++d) x[i * m + d] = samples(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d));
  }
  const std::vector<double> obs(y.data(), y.data() + m);

  double to_obs = 0.0;
  for (std::size_t i = 0; i < k; ++i) to_obs += distance(&x[i * m], obs.data(), m);

  // |x_i - x_j| == |x_j - x_i| bitwise, so each pair is evaluated once and the
  // full double sum is accumulated in (i, j) order from a cached lower triangle.
  std::vector<double> lower(k * (k - 1) / 2);
  for (std::size_t i = 1; i < k; ++i) {
    double* row = &lower[i * (i - 1) / 2];
    for (std::size_t j = 0; j < i; ++j) row[j] = distance(&x[i * m], &x[j * m], m);
  }
  double pairwise = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < i; ++j) pairwise += lower[i * (i - 1) / 2 + j];
    // the j == i term is exactly zero
    for (std::size_t j = i + 1; j < k; ++j) pairwise += lower[j * (j - 1) / 2 + i];
  }
  const double kd = static_cast<double>(k);
  return to_obs / kd - pairwise / (2.0 * kd * kd);
}

ScoreReport energy_score_gaussian(const ReconciledDistribution& dist, const Vector& y, int k, std::uint64_t seed) {
  ScoreReport report;
  report.method = dist.method;
  report.h = dist.h;
  report.k = k;
  report.seed = seed;
  report.energy_score = energy_score(sample_gaussian(dist.full_mean, dist.full_cov, k, seed), y);
  return report;
}

}  // namespace hierrec
