#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "hierrec/covariance.hpp"
#include "hierrec/errors.hpp"
#include "test_support.hpp"

using namespace hierrec;
using namespace hierrec::testing;

namespace {

// Straight-from-the-definition covariance: sum_t (x_t - mean)(x_t - mean)' / (N - 1).
Matrix brute_covariance(const Matrix& x) {
  const auto N = x.rows();
  const auto m = x.cols();
  std::vector<double> mean(static_cast<std::size_t>(m), 0.0);
  for (Eigen::Index j = 0; j < m; ++j) {
    for (Eigen::Index t = 0; t < N; ++t) mean[j] += x(t, j);
    mean[j] /= static_cast<double>(N);
  }
  Matrix c = Matrix::Zero(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      double s = 0.0;
      for (Eigen::Index t = 0; t < N; ++t) s += (x(t, i) - mean[i]) * (x(t, j) - mean[j]);
      c(i, j) = s / static_cast<double>(N - 1);
    }
  }
  return c;
}

// Reference Schafer-Strimmer intensity for the diagonal target: standardize,
// form w_kij = x_ki x_kj, r_ij = sum_k w_kij / (N - 1),
// Var(r_ij) = N / (N - 1)^3 * sum_k (w_kij - mean_k w_kij)^2.
double reference_lambda(const Matrix& x) {
  const auto N = x.rows();
  const auto m = x.cols();
  const double n = static_cast<double>(N);
  const Matrix c = brute_covariance(x);
  Matrix z(N, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    double mean = 0.0;
    for (Eigen::Index t = 0; t < N; ++t) mean += x(t, j);
    mean /= n;
    for (Eigen::Index t = 0; t < N; ++t) z(t, j) = (x(t, j) - mean) / std::sqrt(c(j, j));
  }
  double num = 0.0, den = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      if (i == j) continue;
      double wbar = 0.0;
      for (Eigen::Index t = 0; t < N; ++t) wbar += z(t, i) * z(t, j);
      const double r = wbar / (n - 1.0);
      wbar /= n;
      double ss = 0.0;
      for (Eigen::Index t = 0; t < N; ++t) ss += (z(t, i) * z(t, j) - wbar) * (z(t, i) * z(t, j) - wbar);
      num += n / std::pow(n - 1.0, 3) * ss;
      den += r * r;
    }
  }
  return std::clamp(num / den, 0.0, 1.0);
}

double rel_diff(const Matrix& a, const Matrix& b) {
  return (a - b).cwiseAbs().maxCoeff() / std::max(1e-300, b.cwiseAbs().maxCoeff());
}

}  // namespace

TEST_CASE("sample covariance hand cases") {
  Matrix r(2, 2);
  r << 1, 2, 3, 4;
  CHECK(sample_covariance(r) == (Matrix(2, 2) << 2, 2, 2, 2).finished());

  CHECK(sample_covariance(Matrix::Constant(5, 3, 1.7)).isZero(0.0));

  Matrix cross(4, 2);
  cross << 1, 0, -1, 0, 0, 1, 0, -1;
  const Matrix c = sample_covariance(cross);
  CHECK(c(0, 0) == doctest::Approx(2.0 / 3.0));
  CHECK(c(1, 1) == doctest::Approx(2.0 / 3.0));
  CHECK(c(0, 1) == 0.0);

  CHECK_THROWS_AS(sample_covariance(Matrix::Zero(1, 3)), ValidationError);
  Matrix nan = Matrix::Zero(3, 2);
  nan(1, 1) = std::nan("");
  CHECK_THROWS_AS(sample_covariance(nan), ValidationError);
  CHECK_THROWS_AS(ResidualMatrix(Matrix::Zero(1, 2), {"a", "b"}), ValidationError);
}

TEST_CASE("sample covariance matches the double-loop definition") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix x = 5.0 * random_matrix(rng, 30 + trial, 1 + trial % 7) + Matrix::Constant(30 + trial, 1 + trial % 7, 3.0);
    REQUIRE(rel_diff(sample_covariance(x), brute_covariance(x)) <= 1e-12);
  }
}

TEST_CASE("shrinkage intensity agrees with the reference formula") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 30; ++trial) {
    Matrix x = random_matrix(rng, 40 + 10 * trial, 2 + trial % 6);
    x.col(0) += 0.8 * x.col(1);  // some real correlation
    const double lambda = shrinkage_intensity(x);
    REQUIRE(lambda >= 0.0);
    REQUIRE(lambda <= 1.0);
    REQUIRE(lambda == doctest::Approx(reference_lambda(x)).epsilon(1e-10));
  }
}

TEST_CASE("shrinkage on independent and on perfectly correlated columns") {
  std::mt19937_64 rng(2024);
  SUBCASE("independent unit noise is shrunk almost to the diagonal") {
    const Matrix x = random_matrix(rng, 500, 5);
    const auto res = shrinkage_covariance(ResidualMatrix(x, {"a", "b", "c", "d", "e"}));
    const Matrix s = sample_covariance(x);
    CHECK(res.lambda == doctest::Approx(reference_lambda(x)).epsilon(1e-10));
    CHECK(res.lambda > 0.8);
    for (int i = 0; i < 5; ++i) {
      CHECK(res.covariance(i, i) == s(i, i));
      for (int j = 0; j < 5; ++j) {
        if (i != j) CHECK(std::abs(res.covariance(i, j)) <= std::abs(s(i, j)));
      }
    }
  }
  SUBCASE("perfectly correlated columns are barely shrunk") {
    Matrix x(100, 2);
    x.col(0) = random_matrix(rng, 100, 1);
    x.col(1) = 2.0 * x.col(0);
    const auto res = shrinkage_covariance(ResidualMatrix(x, {"a", "b"}));
    const Matrix s = sample_covariance(x);
    CHECK(res.lambda == doctest::Approx(reference_lambda(x)).epsilon(1e-10));
    CHECK(res.lambda < 0.1);
    CHECK(res.covariance(0, 1) == doctest::Approx(s(0, 1)).epsilon(0.1));
  }
  SUBCASE("a single series is its sample variance") {
    const Matrix x = random_matrix(rng, 20, 1);
    const auto res = shrinkage_covariance(ResidualMatrix(x, {"a"}));
    CHECK(res.covariance(0, 0) == sample_covariance(x)(0, 0));
    CHECK(res.lambda == 1.0);
  }
}

TEST_CASE("shrinkage endpoints are exact") {
  std::mt19937_64 rng(5);
  const Matrix s = sample_covariance(random_matrix(rng, 30, 4));
  const Matrix diag_only = shrink_towards_diagonal(s, 1.0);
  CHECK(diag_only == Matrix(s.diagonal().asDiagonal()));
  CHECK(shrink_towards_diagonal(s, 0.0) == s);
  const Matrix mid = shrink_towards_diagonal(s, 0.37);
  CHECK(mid.diagonal() == s.diagonal());
  CHECK_THROWS_AS(shrink_towards_diagonal(s, 1.5), ValidationError);
}

TEST_CASE("degenerate residual columns and jitter") {
  Matrix x(6, 2);
  x << 1, 0, 2, 0, 3, 0, 4, 0, 5, 0, 6, 0;
  const ResidualMatrix r(x, {"a", "b"});
  CHECK_THROWS_AS(shrinkage_covariance(r, 0.0), NumericalError);
  const auto repaired = shrinkage_covariance(r);
  CHECK(repaired.jittered);
  CHECK(Eigen::LLT<Matrix>(repaired.covariance).info() == Eigen::Success);
  CHECK(repaired.covariance(1, 1) == doctest::Approx(kDefaultJitter * 3.5 / 2.0));

  // nothing to scale the jitter by
  CHECK_THROWS_AS(shrinkage_covariance(ResidualMatrix(Matrix::Ones(4, 2), {"a", "b"})), NumericalError);
}

TEST_CASE("shrinkage output is symmetric and factorizable for random inputs") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    const auto m = 1 + trial % 9;
    // fewer rows than columns makes the sample covariance singular
    const auto N = 2 + trial % 15;
    const Matrix x = random_matrix(rng, N, m);
    std::vector<std::string> names(static_cast<std::size_t>(m), "s");
    const auto res = shrinkage_covariance(ResidualMatrix(x, names));
    REQUIRE(res.covariance == res.covariance.transpose());
    REQUIRE(Eigen::LLT<Matrix>(res.covariance).info() == Eigen::Success);
    REQUIRE(res.lambda >= 0.0);
    REQUIRE(res.lambda <= 1.0);
  }
}

TEST_CASE("partition_w1 reads off blocks with the M1 sign flip") {
  const auto identity = partition_w1(Matrix::Identity(3, 3), 3, 2);
  CHECK(identity.Sigma_u1 == Matrix::Identity(1, 1));
  CHECK(identity.Sigma_b1 == Matrix::Identity(2, 2));
  CHECK(identity.M1.isZero(0.0));

  Matrix w(3, 3);
  w << 4, 1, 2, 1, 3, 0, 2, 0, 5;
  const auto cov = partition_w1(w, 3, 2);
  CHECK(cov.Sigma_u1(0, 0) == 4.0);
  CHECK(cov.Sigma_b1 == (Matrix(2, 2) << 3, 0, 0, 5).finished());
  CHECK(cov.M1 == (Matrix(2, 1) << -1, -2).finished());

  Matrix asym = w;
  asym(0, 1) += 0.5;
  CHECK_THROWS_AS(partition_w1(asym, 3, 2), ValidationError);
  Matrix indefinite = w;
  indefinite(1, 1) = -1.0;
  CHECK_THROWS_AS(partition_w1(indefinite, 3, 2), NumericalError);
}

TEST_CASE("partition then reassembly is bit-exact") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    const auto m = 2 + trial % 8;
    const auto n = 1 + trial % (m - 1);
    const Matrix w = random_spd(rng, m);
    REQUIRE(assemble_w1(partition_w1(w, m, n)) == w);
  }
}

TEST_CASE("upper noise samples reproduce Sigma_u1 and M1") {
  // coherent actuals y = S b; arbitrary base forecasts; residual = actual - forecast
  std::mt19937_64 rng(21);
  const SummingMatrix S(parse_hierarchy(kRegionSpec));
  const auto N = 300;
  const Matrix actual = aggregate_bottom(3.0 * random_matrix(rng, N, 4), S).values;
  const Matrix forecast = actual + random_matrix(rng, N, 7) * random_spd(rng, 7);
  const Matrix residuals = actual - forecast;

  const Matrix u_hat = forecast.leftCols(3);
  const Matrix b = actual.rightCols(4);
  const Matrix eps = u_hat - b * S.A().transpose();  // eps_u = u_hat - A b
  CHECK((eps + residuals.leftCols(3)).cwiseAbs().maxCoeff() <= 1e-12);

  const auto cov = partition_w1(sample_covariance(residuals), 7, 4);
  CHECK(rel_diff(sample_covariance(eps), cov.Sigma_u1) <= 1e-12);

  // cross-covariance of the bottom errors with eps_u is M1
  Matrix joint(N, 7);
  joint << residuals.rightCols(4), eps;
  const Matrix cross = sample_covariance(joint).topRightCorner(4, 3);
  CHECK(rel_diff(cross, cov.M1) <= 1e-12);
}

TEST_CASE("k_h scaling") {
  CHECK(scale_kh(Matrix::Identity(2, 2), KhMode::kOne, 4) == Matrix::Identity(2, 2));
  CHECK(scale_kh(Matrix::Identity(2, 2), KhMode::kH, 4) == 4.0 * Matrix::Identity(2, 2));
  CHECK(scale_kh(Matrix::Zero(3, 3), KhMode::kH, 7).isZero(0.0));
  CHECK_THROWS_AS(scale_kh(Matrix::Identity(2, 2), KhMode::kH, 0), ValidationError);
  CHECK(parse_kh_mode("h") == KhMode::kH);
  CHECK(parse_kh_mode("one") == KhMode::kOne);
  CHECK_THROWS_AS(parse_kh_mode("two"), ValidationError);
}

TEST_CASE("residual CSV ingestion") {
  const std::vector<std::string> order{"U", "B1", "B2"};
  std::istringstream good("# actual - forecast\nB2,U,B1\n1,2,3\n4,5,6\n");
  const auto r = read_residuals(good, "mem", order);
  CHECK(r.values().row(0) == (Eigen::RowVector3d() << 2, 3, 1).finished());

  std::istringstream one_row("U,B1,B2\n1,2,3\n");
  CHECK_THROWS_AS(read_residuals(one_row, "mem", order), ValidationError);
  std::istringstream missing("U,B1,B3\n1,2,3\n4,5,6\n");
  CHECK_THROWS_WITH_AS(read_residuals(missing, "mem", order), doctest::Contains("B2"), ValidationError);

  std::stringstream buf;
  write_residuals_csv(buf, r);
  CHECK(buf.str().rfind("#", 0) == 0);
  CHECK(read_residuals(buf, "mem", order).values() == r.values());
}
