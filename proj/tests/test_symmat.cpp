#include <doctest.h>

#include <cmath>
#include <numbers>

#include "matvar/distributions.hpp"
#include "matvar/symmat.hpp"

using namespace matvar;

namespace {

Matrix mat2(double a, double b, double c, double d) {
  Matrix m(2, 2);
  m << a, b, c, d;
  return m;
}

double rel_frob(const Matrix& x, const Matrix& y) { return (x - y).norm() / std::max(y.norm(), 1e-300); }

}  // namespace

TEST_CASE("sym_sqrt of identity and diagonal matrices") {
  CHECK(sym_sqrt(SpdMat::identity(2)).matrix().isApprox(Matrix::Identity(2, 2)));
  const SpdMat root = sym_sqrt(assert_pd(SymMat(mat2(4, 0, 0, 9))));
  CHECK(root.matrix()(0, 0) == doctest::Approx(2.0));
  CHECK(root.matrix()(1, 1) == doctest::Approx(3.0));
  CHECK(std::abs(root.matrix()(0, 1)) < 1e-14);
}

TEST_CASE("sym_sqrt of [[2,1],[1,2]] matches the eigenpair construction") {
  // Oracle: eigenpairs (3, (1,1)/sqrt2) and (1, (1,-1)/sqrt2).
  Eigen::Vector2d u(1.0, 1.0);
  Eigen::Vector2d v(1.0, -1.0);
  u /= std::sqrt(2.0);
  v /= std::sqrt(2.0);
  const Matrix oracle = std::sqrt(3.0) * u * u.transpose() + 1.0 * v * v.transpose();
  const double s3 = std::sqrt(3.0);
  CHECK(oracle(0, 0) == doctest::Approx((s3 + 1) / 2).epsilon(1e-15));
  CHECK(oracle(0, 1) == doctest::Approx((s3 - 1) / 2).epsilon(1e-15));

  const SpdMat root = sym_sqrt(assert_pd(SymMat(mat2(2, 1, 1, 2))));
  CHECK(rel_frob(root.matrix(), oracle) < 1e-14);
  CHECK(root.is_pd());
}

TEST_CASE("sym_sqrt reconstructs random SPD matrices up to d = 5") {
  RngStream rng(11, 0);
  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::Index d = 1 + trial % 5;
    const SpdMat p = random_spd(d, rng, 1e-3, 10.0);
    const Matrix s = sym_sqrt(p).matrix();
    CHECK(rel_frob(s * s, p.matrix()) < tolerances().rec);
    CHECK((s - s.transpose()).norm() == 0.0);
  }
}

TEST_CASE("conjugate: identity, scalar and P cases") {
  const SymMat r(mat2(1, 2, 2, -3));
  CHECK(rel_frob(conjugate(r, SpdMat::identity(2)).matrix(), r.matrix()) < 1e-15);
  CHECK(conjugate(SymMat::scalar(3.0), assert_pd(SymMat::scalar(4.0)))(0, 0) == doctest::Approx(12.0));
  const SpdMat p = assert_pd(SymMat(mat2(2, 1, 1, 2)));
  CHECK(rel_frob(conjugate(SymMat::identity(2), p).matrix(), p.matrix()) < 1e-14);
  CHECK_THROWS_AS(conjugate(SymMat::identity(3), p), Error);
}

TEST_CASE("conjugate properties: inverse round trip and linearity") {
  RngStream rng(12, 0);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Index d = 1 + trial % 4;
    const SpdMat p = random_spd(d, rng, 0.2, 5.0);
    Matrix g1 = Matrix::Random(d, d);
    Matrix g2 = Matrix::Random(d, d);
    const SymMat r1 = symmetrize(g1);
    const SymMat r2 = symmetrize(g2);
    const SymMat back = conjugate(conjugate(r1, p), p.inverse());
    CHECK((back.matrix() - r1.matrix()).norm() <= tolerances().rec * std::max(1.0, r1.matrix().norm()));

    const double a = 1.7;
    const double b = -0.4;
    const Matrix lhs = conjugate(a * r1 + b * r2, p).matrix();
    const Matrix rhs = a * conjugate(r1, p).matrix() + b * conjugate(r2, p).matrix();
    CHECK((lhs - rhs).norm() <= 1e-12 * std::max(1.0, rhs.norm()));
  }
}

TEST_CASE("assert_pd classification and clipping") {
  CHECK(assert_pd(SymMat::identity(2)).kind() == Definiteness::PD);
  CHECK_THROWS_AS(assert_pd(SymMat(mat2(1, 2, 2, 1))), Error);
  try {
    assert_pd(SymMat(mat2(1, 2, 2, 1)));
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NotPsd);
  }

  const SpdMat clipped = assert_pd(SymMat(mat2(1, 0, 0, -1e-14)));
  CHECK(clipped.kind() == Definiteness::PSD);
  CHECK(clipped.eigenvalues().minCoeff() == 0.0);
  CHECK(clipped.matrix()(1, 1) == 0.0);

  // Just outside the band.
  CHECK_THROWS_AS(assert_pd(SymMat(mat2(1, 0, 0, -1e-9))), Error);
  CHECK(assert_pd(SymMat::zero(3)).kind() == Definiteness::PSD);
  CHECK_THROWS_AS(assert_strict_pd(SymMat::zero(3)), Error);
}

TEST_CASE("SymMat reads only the upper triangle") {
  const SymMat m(mat2(1, 5, -100, 2));
  CHECK(m(1, 0) == 5.0);
  CHECK(m.matrix() == m.matrix().transpose());
  CHECK_THROWS_AS(SymMat(Matrix(2, 3)), Error);
  CHECK_THROWS_AS(SymMat(mat2(1, NAN, 0, 1)), Error);
}

TEST_CASE("multivariate gamma product formula values") {
  CHECK(multivariate_gamma(MultiGammaArg(1.0, 1)) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(multivariate_gamma(MultiGammaArg(1.5, 2)) == doctest::Approx(std::numbers::pi / 2).epsilon(1e-13));
  CHECK(multivariate_gamma(MultiGammaArg(2.5, 2)) == doctest::Approx(3 * std::numbers::pi / 4).epsilon(1e-13));
  CHECK_THROWS_AS(MultiGammaArg(0.5, 2), Error);
  CHECK_THROWS_AS(MultiGammaArg(1.0, 3), Error);
  CHECK(std::isfinite(log_multivariate_gamma(MultiGammaArg(500.0, 4))));
}

TEST_CASE("multivariate gamma with d = 1 is the scalar gamma") {
  for (double beta : {0.6, 1.0, 2.5, 10.0}) {
    const double v = multivariate_gamma(MultiGammaArg(beta, 1));
    CHECK(std::abs(v - std::tgamma(beta)) / std::tgamma(beta) < 1e-12);
  }
}

TEST_CASE("multivariate gamma agrees with Monte Carlo integration over 2x2 PD matrices") {
  // Gamma_2(beta) = int etr(-X) |X|^{beta-3/2} dX over x11, x22 > 0,
  // x12^2 < x11 x22. Draw x11, x22 ~ Exp(1) and x12 uniform on its range;
  // the importance weight is the width 2 sqrt(x11 x22).
  RngStream rng(13, 0);
  std::exponential_distribution<double> expo(1.0);
  for (double beta : {1.5, 2.5}) {
    const int n = 1000000;
    double sum = 0.0;
    double sum2 = 0.0;
    for (int s = 0; s < n; ++s) {
      const double x11 = expo(rng.engine());
      const double x22 = expo(rng.engine());
      const double half = std::sqrt(x11 * x22);
      const double x12 = (2.0 * rng.uniform() - 1.0) * half;
      const double w = 2.0 * half * std::pow(x11 * x22 - x12 * x12, beta - 1.5);
      sum += w;
      sum2 += w * w;
    }
    const double est = sum / n;
    const double se = std::sqrt((sum2 / n - est * est) / n);
    const double exact = multivariate_gamma(MultiGammaArg(beta, 2));
    CHECK(std::abs(est - exact) < 4.0 * se);
  }
}

TEST_CASE("trace cyclicity holds numerically") {
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix a = Matrix::Random(4, 4);
    const Matrix b = Matrix::Random(4, 4);
    const Matrix c = Matrix::Random(4, 4);
    const double t1 = (a * b * c).trace();
    const double t2 = (b * c * a).trace();
    CHECK(std::abs(t1 - t2) <= 1e-10 * std::max(1.0, std::abs(t1)));
  }
}

TEST_CASE("etr is exp of the trace") {
  CHECK(etr(Matrix::Zero(3, 3)) == 1.0);
  CHECK(etr(mat2(1, 9, 9, 2)) == doctest::Approx(std::exp(3.0)));
}
