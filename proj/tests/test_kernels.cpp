#include "oracle.hpp"

#include "sda/kernels.hpp"
#include "sda/shrinkage.hpp"

#include <doctest.h>

using namespace sda;
using kernels::Backend;

TEST_CASE("class means and residuals agree across backends") {
  std::mt19937_64 rng(7);
  auto d = oracle::random_data(rng, 3, 9, 40);
  const Matrix a = kernels::class_means(d.x, d.y, 3, Backend::Serial);
  const Matrix b = kernels::class_means(d.x, d.y, 3, Backend::OpenMP);
  CHECK(a == b);
  const auto mu = oracle::class_means(d.x, d.y, 3);
  for (int c = 0; c < 3; ++c)
    for (Eigen::Index j = 0; j < 40; ++j) CHECK(a(c, j) == doctest::Approx(mu[c][j]).epsilon(1e-14));
  CHECK(kernels::pooled_residuals(d.x, d.y, a, Backend::Serial) == kernels::pooled_residuals(d.x, d.y, a, Backend::OpenMP));
}

TEST_CASE("squared moments agree across backends") {
  std::mt19937_64 rng(8);
  auto d = oracle::random_data(rng, 2, 15, 60);
  const auto r = kernels::pooled_residuals(d.x, d.y, kernels::class_means(d.x, d.y, 2, Backend::Serial), Backend::Serial);
  const auto a = kernels::squared_moments(r, Backend::Serial);
  const auto b = kernels::squared_moments(r, Backend::OpenMP);
  CHECK(a.sum_sq == b.sum_sq);
  CHECK(a.sq_dev == b.sq_dev);
}

TEST_CASE("Gram-identity correlation sums match the direct pair loop") {
  std::mt19937_64 rng(9);
  for (Eigen::Index p : {2, 3, 17, 120}) {
    auto d = oracle::random_data(rng, 2, 12, p);
    const auto pooled = pooled_residuals(d.x, d.y, Backend::Serial);
    const Matrix z = standardize_residuals(pooled.residuals);
    const auto direct = kernels::correlation_sums(z, Backend::Serial);
    const auto gram = kernels::correlation_sums(z, Backend::OpenMP);
    CHECK(gram.sum_r2 == doctest::Approx(direct.sum_r2).epsilon(1e-10));
    CHECK(gram.sum_var == doctest::Approx(direct.sum_var).epsilon(1e-10));
  }
}

TEST_CASE("single-column correlation sums are zero") {
  Matrix z = Matrix::Random(6, 1);
  const auto s = kernels::correlation_sums(z, Backend::OpenMP);
  CHECK(s.sum_r2 == 0.0);
  CHECK(s.sum_var == 0.0);
}

TEST_CASE("low-rank apply agrees across backends") {
  std::mt19937_64 rng(10);
  std::normal_distribution<double> N;
  Matrix basis = Matrix::NullaryExpr(50, 5, [&] { return N(rng); });
  basis = Eigen::HouseholderQR<Matrix>(basis).householderQ() * Matrix::Identity(50, 5);
  Vector coef = Vector::NullaryExpr(5, [&] { return N(rng); });
  Matrix rows = Matrix::NullaryExpr(7, 50, [&] { return N(rng); });
  const Matrix a = kernels::apply_low_rank(rows, basis, coef, 0.3, Backend::Serial);
  const Matrix b = kernels::apply_low_rank(rows, basis, coef, 0.3, Backend::OpenMP);
  CHECK(a == b);
  const Matrix dense = 0.3 * Matrix::Identity(50, 50) + basis * coef.asDiagonal() * basis.transpose();
  CHECK((a - rows * dense).norm() < 1e-12 * a.norm());
}

TEST_CASE("OpenMP kernels are bitwise identical for any thread count") {
  std::mt19937_64 rng(11);
  auto d = oracle::random_data(rng, 2, 20, 300);
  const auto pooled = pooled_residuals(d.x, d.y, Backend::OpenMP);
  const Matrix z = standardize_residuals(pooled.residuals);
  const int saved = kernels::max_threads();
  kernels::set_threads(1);
  const auto one = kernels::correlation_sums(z, Backend::OpenMP);
  const auto m1 = kernels::squared_moments(pooled.residuals, Backend::OpenMP);
  kernels::set_threads(4);
  const auto four = kernels::correlation_sums(z, Backend::OpenMP);
  const auto m4 = kernels::squared_moments(pooled.residuals, Backend::OpenMP);
  kernels::set_threads(saved);
  CHECK(one.sum_r2 == four.sum_r2);
  CHECK(one.sum_var == four.sum_var);
  CHECK(m1.sq_dev == m4.sq_dev);
}
