#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "hierrec/errors.hpp"
#include "hierrec/reconcile.hpp"
#include "hierrec/scoring.hpp"
#include "test_support.hpp"

using namespace hierrec;
using namespace hierrec::testing;

namespace {

double naive_energy_score(const Matrix& x, const Vector& y) {
  const auto k = x.rows();
  const auto m = x.cols();
  auto norm = [m](auto&& a, auto&& b) {
    double s = 0.0;
    for (Eigen::Index d = 0; d < m; ++d) s += (a(d) - b(d)) * (a(d) - b(d));
    return std::sqrt(s);
  };
  double first = 0.0;
  for (Eigen::Index i = 0; i < k; ++i) first += norm(x.row(i), y);
  double second = 0.0;
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) second += norm(x.row(i), x.row(j));
  }
  const double kd = static_cast<double>(k);
  return first / kd - second / (2.0 * kd * kd);
}

ReconciledDistribution gaussian(const Vector& mean, const Matrix& cov) {
  ReconciledDistribution d;
  d.full_mean = mean;
  d.full_cov = cov;
  return d;
}

}  // namespace

TEST_CASE("energy score hand cases") {
  const Matrix same = Matrix::Constant(5, 3, 2.5);
  CHECK(energy_score(same, Vector::Constant(3, 2.5)) == 0.0);

  Matrix one_d(2, 1);
  one_d << 0, 2;
  CHECK(energy_score(one_d, Vector::Constant(1, 1.0)) == 0.5);

  Matrix two_d(2, 2);
  two_d << 0, 0, 2, 0;
  Vector y(2);
  y << 1, 0;
  CHECK(energy_score(two_d, y) == 0.5);

  CHECK_THROWS_AS(energy_score(Matrix(0, 2), y), ValidationError);
  CHECK_THROWS_AS(energy_score(two_d, Vector::Zero(3)), ValidationError);
}

TEST_CASE("energy score equals the naive double loop bit for bit") {
  std::mt19937_64 rng(31);
  for (int k : {1, 2, 3, 17, 100, 257, 500}) {
    for (int m : {1, 3, 7}) {
      const Matrix x = 3.0 * random_matrix(rng, k, m);
      const Vector y = random_matrix(rng, m, 1).col(0);
      REQUIRE(energy_score(x, y) == naive_energy_score(x, y));
    }
  }
}

TEST_CASE("energy score invariances") {
  std::mt19937_64 rng(32);
  SUBCASE("nonnegative, zero only at a point mass on y") {
    for (int trial = 0; trial < 50; ++trial) {
      const Matrix x = random_matrix(rng, 40, 4);
      REQUIRE(energy_score(x, random_matrix(rng, 4, 1).col(0)) >= 0.0);
    }
    CHECK(energy_score(Matrix::Ones(3, 2), Vector::Zero(2)) > 0.0);
  }
  SUBCASE("translation by an exactly representable shift") {
    // values on a coarse dyadic grid so every difference is exact
    std::uniform_int_distribution<int> grid(-64, 64);
    for (int trial = 0; trial < 50; ++trial) {
      Matrix x(30, 3);
      Vector y(3), c(3);
      for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = grid(rng) / 8.0;
      for (int d = 0; d < 3; ++d) {
        y(d) = grid(rng) / 8.0;
        c(d) = grid(rng) * 4.0;
      }
      const Matrix shifted = x.rowwise() + c.transpose();
      REQUIRE(energy_score(shifted, y + c) == energy_score(x, y));
    }
  }
  SUBCASE("translation by an arbitrary shift") {
    for (int trial = 0; trial < 50; ++trial) {
      const Matrix x = random_matrix(rng, 30, 3);
      const Vector y = random_matrix(rng, 3, 1).col(0);
      const Vector c = 10.0 * random_matrix(rng, 3, 1).col(0);
      const Matrix shifted = x.rowwise() + c.transpose();
      REQUIRE(energy_score(shifted, y + c) == doctest::Approx(energy_score(x, y)).epsilon(1e-12));
    }
  }
  SUBCASE("rotation") {
    for (int trial = 0; trial < 50; ++trial) {
      const Matrix q = Eigen::HouseholderQR<Matrix>(random_matrix(rng, 5, 5)).householderQ();
      const Matrix x = random_matrix(rng, 60, 5);
      const Vector y = random_matrix(rng, 5, 1).col(0);
      const double rotated = energy_score(x * q.transpose(), q * y);
      REQUIRE(std::abs(rotated - energy_score(x, y)) <= 1e-10);
    }
  }
}

TEST_CASE("Gaussian sampling") {
  SUBCASE("zero covariance gives the mean") {
    Vector mean(3);
    mean << 1, -2, 3;
    const Matrix s = sample_gaussian(mean, Matrix::Zero(3, 3), 10, 5);
    for (int i = 0; i < 10; ++i) CHECK(s.row(i) == mean.transpose());
    CHECK(energy_score_gaussian(gaussian(mean, Matrix::Zero(3, 3)), mean, 50, 5).energy_score == 0.0);
  }
  SUBCASE("univariate moments") {
    const Matrix s = sample_gaussian(Vector::Zero(1), Matrix::Identity(1, 1), 100000, 2024);
    const double mean = s.mean();
    const double var = (s.array() - mean).square().sum() / (s.size() - 1.0);
    CHECK(std::abs(mean) <= 0.02);
    CHECK(std::abs(var - 1.0) <= 0.03);
  }
  SUBCASE("multivariate covariance is reproduced") {
    std::mt19937_64 rng(3);
    const Matrix cov = random_spd(rng, 4);
    const Matrix s = sample_gaussian(Vector::Zero(4), cov, 50000, 8);
    const Matrix centered = s.rowwise() - s.colwise().mean();
    const Matrix est = centered.transpose() * centered / (s.rows() - 1.0);
    CHECK((est - cov).cwiseAbs().maxCoeff() <= 0.05 * cov.cwiseAbs().maxCoeff());
  }
  SUBCASE("samples of a reconciled distribution are coherent") {
    std::mt19937_64 rng(4);
    const SummingMatrix S(parse_hierarchy(kRegionSpec));
    const Matrix sigma = random_spd(rng, 4);
    const auto dist = reconcile_bottom_up(Vector::Constant(4, 10.0), sigma, S, 1, KhMode::kOne);
    const Matrix s = sample_gaussian(dist.full_mean, dist.full_cov, 2000, 9);
    for (Eigen::Index i = 0; i < s.rows(); ++i) {
      const Vector row = s.row(i).transpose();
      REQUIRE(check_coherence(row, S, 1e-8).coherent);
    }
  }
  SUBCASE("same seed, same draws; different seed, different draws") {
    std::mt19937_64 rng(5);
    const Matrix cov = random_spd(rng, 3);
    CHECK(sample_gaussian(Vector::Zero(3), cov, 20, 77) == sample_gaussian(Vector::Zero(3), cov, 20, 77));
    CHECK(sample_gaussian(Vector::Zero(3), cov, 20, 77) != sample_gaussian(Vector::Zero(3), cov, 20, 78));
  }
  CHECK_THROWS_AS(sample_gaussian(Vector::Zero(2), Matrix::Identity(2, 2), 0, 1), ValidationError);
  CHECK_THROWS_AS(sample_gaussian(Vector::Zero(3), Matrix::Identity(2, 2), 5, 1), ValidationError);
}

TEST_CASE("PSD factor") {
  std::mt19937_64 rng(6);
  SUBCASE("reconstructs rank-deficient matrices") {
    for (int trial = 0; trial < 50; ++trial) {
      const auto rank = 1 + trial % 4;
      const Matrix b = random_matrix(rng, 7, rank);
      const Matrix cov = b * b.transpose();
      const Matrix f = psd_factor(cov);
      REQUIRE(f.cols() == rank);
      REQUIRE((f * f.transpose() - cov).cwiseAbs().maxCoeff() <= 1e-12 * cov.cwiseAbs().maxCoeff());
    }
  }
  CHECK(psd_factor(Matrix::Zero(3, 3)).cols() == 0);
  Matrix indefinite = Matrix::Identity(2, 2);
  indefinite(1, 1) = -1.0;
  CHECK_THROWS_AS(psd_factor(indefinite), NumericalError);
}

TEST_CASE("scoring a Gaussian forecast") {
  std::mt19937_64 rng(7);
  const Matrix cov = random_spd(rng, 3);
  const Vector mean = Vector::Constant(3, 1.5);
  const auto sharp = energy_score_gaussian(gaussian(mean, cov), mean, 2000, 11);
  const auto wide = energy_score_gaussian(gaussian(mean, 100.0 * cov), mean, 2000, 11);
  CHECK(wide.energy_score > sharp.energy_score);
  CHECK(sharp.k == 2000);
  CHECK(sharp.seed == 11);

  const auto again = energy_score_gaussian(gaussian(mean, cov), mean, 2000, 11);
  CHECK(again.energy_score == sharp.energy_score);
}

TEST_CASE("derived seeds") {
  CHECK(derive_seed(1, {2, 3}) == derive_seed(1, {2, 3}));
  std::set<std::uint64_t> seen;
  for (std::uint64_t r = 0; r < 50; ++r) {
    for (std::uint64_t h = 1; h <= 4; ++h) {
      for (std::uint64_t method = 0; method < 3; ++method) seen.insert(derive_seed(20190916, {2, r, h, method}));
    }
  }
  CHECK(seen.size() == 600);
  CHECK(derive_seed(1, {2, 3}) != derive_seed(1, {3, 2}));
  CHECK(derive_seed(1, {}) != derive_seed(2, {}));
}
