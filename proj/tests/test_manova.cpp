#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

#include "matvar/distributions.hpp"
#include "matvar/manova.hpp"
#include "matvar/stats.hpp"

using namespace matvar;

namespace {

// Straight-line sums of products, written from the textbook definitions.
struct BruteSop {
  Matrix a, b, ab, e, total;
};

BruteSop brute_sop(const DesignTable& t) {
  const int a = t.levels_a(), b = t.levels_b(), n = t.reps(), d = t.dim();
  auto y = [&](int i, int j, int k) { return Eigen::VectorXd(t.response(i, j, k).transpose()); };
  Eigen::VectorXd grand = Eigen::VectorXd::Zero(d);
  std::vector<Eigen::VectorXd> yi(a, Eigen::VectorXd::Zero(d)), yj(b, Eigen::VectorXd::Zero(d));
  std::vector<std::vector<Eigen::VectorXd>> yij(a, std::vector<Eigen::VectorXd>(b, Eigen::VectorXd::Zero(d)));
  for (int i = 0; i < a; ++i)
    for (int j = 0; j < b; ++j)
      for (int k = 0; k < n; ++k) {
        grand += y(i, j, k) / (a * b * n);
        yi[i] += y(i, j, k) / (b * n);
        yj[j] += y(i, j, k) / (a * n);
        yij[i][j] += y(i, j, k) / n;
      }
  BruteSop s{Matrix::Zero(d, d), Matrix::Zero(d, d), Matrix::Zero(d, d), Matrix::Zero(d, d), Matrix::Zero(d, d)};
  for (int i = 0; i < a; ++i) s.a += b * n * (yi[i] - grand) * (yi[i] - grand).transpose();
  for (int j = 0; j < b; ++j) s.b += a * n * (yj[j] - grand) * (yj[j] - grand).transpose();
  for (int i = 0; i < a; ++i)
    for (int j = 0; j < b; ++j) {
      const Eigen::VectorXd g = yij[i][j] - yi[i] - yj[j] + grand;
      s.ab += n * g * g.transpose();
      for (int k = 0; k < n; ++k) {
        s.e += (y(i, j, k) - yij[i][j]) * (y(i, j, k) - yij[i][j]).transpose();
        s.total += (y(i, j, k) - grand) * (y(i, j, k) - grand).transpose();
      }
    }
  return s;
}

DesignTable random_table(int a, int b, int n, int d, RngStream& rng) {
  Matrix y(static_cast<Eigen::Index>(a) * b * n, d);
  for (Eigen::Index r = 0; r < y.rows(); ++r)
    for (int c = 0; c < d; ++c) y(r, c) = 3.0 * rng.normal() + (r % 5);
  return DesignTable(a, b, n, std::move(y));
}

double rel(const Matrix& x, const Matrix& y) { return (x - y).norm() / std::max(1.0, y.norm()); }

DesignTable one_to_eight() {
  Matrix y(8, 1);
  for (int r = 0; r < 8; ++r) y(r, 0) = r + 1;
  return DesignTable(2, 2, 2, y);
}

}  // namespace

TEST_CASE("SOP of the 1..8 table") {
  const SopDecomposition s = compute_sop(one_to_eight());
  CHECK(s.sop_a(0, 0) == doctest::Approx(32.0).epsilon(1e-14));
  CHECK(s.sop_b(0, 0) == doctest::Approx(8.0).epsilon(1e-14));
  CHECK(std::abs(s.sop_ab(0, 0)) < 1e-13);
  CHECK(s.sop_e(0, 0) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(s.sop_total(0, 0) == doctest::Approx(42.0).epsilon(1e-14));
}

TEST_CASE("SOP matches the straight-line definitions and is additive") {
  RngStream rng(41, 0);
  for (int trial = 0; trial < 200; ++trial) {
    const int a = 2 + trial % 3, b = 2 + (trial / 3) % 3, n = 2 + trial % 4, d = 1 + trial % 3;
    const DesignTable t = random_table(a, b, n, d, rng);
    const SopDecomposition s = compute_sop(t);
    const BruteSop o = brute_sop(t);
    CHECK(rel(s.sop_a.matrix(), o.a) < 1e-10);
    CHECK(rel(s.sop_b.matrix(), o.b) < 1e-10);
    CHECK(rel(s.sop_ab.matrix(), o.ab) < 1e-10);
    CHECK(rel(s.sop_e.matrix(), o.e) < 1e-10);
    CHECK(rel(s.sop_total.matrix(), o.total) < 1e-10);
    const Matrix sum = s.sop_a.matrix() + s.sop_b.matrix() + s.sop_ab.matrix() + s.sop_e.matrix();
    CHECK(rel(sum, s.sop_total.matrix()) < 1e-10);

    CHECK(numerical_rank(s.sop_a) <= std::min(a - 1, d));
    CHECK(numerical_rank(s.sop_b) <= std::min(b - 1, d));
    CHECK(numerical_rank(s.sop_ab) <= std::min((a - 1) * (b - 1), d));
    CHECK(numerical_rank(s.sop_e) <= std::min(a * b * (n - 1), d));
    CHECK(numerical_rank(s.sop_a) == std::min(a - 1, d));
  }
}

TEST_CASE("constant data gives zero SOPs, zero statistics and p = 1") {
  for (double c : {0.0, 1.0, -7.25, 1e6 + 0.1}) {
    const DesignTable t(3, 2, 4, Matrix::Constant(24, 2, c));
    const SopDecomposition s = compute_sop(t);
    for (const SymMat* m : {&s.sop_a, &s.sop_b, &s.sop_ab, &s.sop_e, &s.sop_total}) CHECK(m->matrix().isZero(0.0));
    for (Factor f : kFactors) {
      const auto eigs = test_statistic_eigs(numerator(s, f), s.sop_e, SpdMat::identity(2));
      CHECK(scalar_statistic(eigs, StatisticFunctional::HotellingLawley) == 0.0);
      CHECK(scalar_statistic(eigs, StatisticFunctional::Wilks) == 1.0);
      const FTestResult r = univariate_f_test(t.column(0), f);
      CHECK(r.f == 0.0);
      CHECK(r.p == 1.0);
    }
  }
}

TEST_CASE("SOP is invariant to replicate order and level relabelling") {
  RngStream rng(42, 0);
  const DesignTable t = random_table(3, 4, 5, 2, rng);
  const SopDecomposition s = compute_sop(t);

  Matrix within = t.responses();
  for (int cell = 0; cell < 12; ++cell) within.middleRows(cell * 5, 5).colwise().reverseInPlace();
  const SopDecomposition s2 = compute_sop(DesignTable(3, 4, 5, within));

  // Swap A levels 0 and 2, and B levels 1 and 3.
  Matrix relabelled = t.responses();
  const int pa[3] = {2, 1, 0};
  const int pb[4] = {0, 3, 2, 1};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 4; ++j)
      for (int k = 0; k < 5; ++k) relabelled.row(t.row(i, j, k)) = t.responses().row(t.row(pa[i], pb[j], k));
  const SopDecomposition s3 = compute_sop(DesignTable(3, 4, 5, relabelled));

  for (const SopDecomposition* o : {&s2, &s3}) {
    CHECK(rel(o->sop_a.matrix(), s.sop_a.matrix()) < 1e-12);
    CHECK(rel(o->sop_b.matrix(), s.sop_b.matrix()) < 1e-12);
    CHECK(rel(o->sop_ab.matrix(), s.sop_ab.matrix()) < 1e-12);
    CHECK(rel(o->sop_e.matrix(), s.sop_e.matrix()) < 1e-12);
  }
}

TEST_CASE("statistic eigenvalues match generalized eigenvalues and ignore Sigma") {
  RngStream rng(43, 0);
  for (int trial = 0; trial < 50; ++trial) {
    const int d = 1 + trial % 4;
    const DesignTable t = random_table(4, 3, 3, d, rng);
    const SopDecomposition s = compute_sop(t);
    for (Factor f : kFactors) {
      // Oracle: S x = lambda V x.
      Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> ges(numerator(s, f).matrix(), s.sop_e.matrix());
      std::vector<double> oracle(ges.eigenvalues().data(), ges.eigenvalues().data() + d);
      std::sort(oracle.rbegin(), oracle.rend());
      const auto base = test_statistic_eigs(numerator(s, f), s.sop_e, SpdMat::identity(d));
      const auto other = test_statistic_eigs(numerator(s, f), s.sop_e, random_spd(d, rng, 0.1, 10.0));
      for (int k = 0; k < d; ++k) {
        CHECK(std::abs(base[k] - std::max(0.0, oracle[k])) <= 1e-8 * std::max(1.0, oracle[0]));
        CHECK(std::abs(other[k] - base[k]) <= 1e-8 * std::max(1.0, base[0]));
      }
      CHECK(std::is_sorted(base.rbegin(), base.rend()));
    }
  }
}

TEST_CASE("singular error matrix is reported") {
  RngStream rng(44, 0);
  const DesignTable t = random_table(2, 2, 2, 5, rng);
  const SopDecomposition s = compute_sop(t);
  try {
    test_statistic_eigs(s.sop_a, s.sop_e, SpdMat::identity(5));
    FAIL("expected SingularErrorMatrix");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SingularErrorMatrix);
  }
}

TEST_CASE("scalar functionals") {
  const std::vector<double> eigs{3.0, 1.0};
  CHECK(scalar_statistic(eigs, StatisticFunctional::Wilks) == doctest::Approx(0.125));
  CHECK(scalar_statistic(eigs, StatisticFunctional::Pillai) == doctest::Approx(1.25));
  CHECK(scalar_statistic(eigs, StatisticFunctional::HotellingLawley) == doctest::Approx(4.0));
  CHECK(scalar_statistic(eigs, StatisticFunctional::Roy) == doctest::Approx(3.0));
  CHECK(rejects_lower_tail(StatisticFunctional::Wilks));
  CHECK_FALSE(rejects_lower_tail(StatisticFunctional::Roy));
  for (StatisticFunctional f : kFunctionals) CHECK(parse_functional(to_string(f)) == f);
  CHECK_THROWS_AS(parse_functional("lawley"), Error);
}

TEST_CASE("degrees of freedom") {
  const DegreesOfFreedom x = dof_map(5, 6, 5);
  CHECK((x.a == 4 && x.b == 5 && x.ab == 20 && x.error == 120));
  const DegreesOfFreedom y = dof_map(5, 7, 3);
  CHECK((y.a == 4 && y.b == 6 && y.ab == 24 && y.error == 70));
  const DegreesOfFreedom z = dof_map(2, 2, 2);
  CHECK((z.a == 1 && z.b == 1 && z.ab == 1 && z.error == 4));
  CHECK(z.of(Factor::AB) == 1);
  CHECK_THROWS_AS(dof_map(1, 3, 3), Error);
  CHECK_THROWS_AS(dof_map(3, 3, 1), Error);
  CHECK_THROWS_AS(compute_sop(DesignTable(2, 2, 1, Matrix::Ones(4, 1))), Error);
}

TEST_CASE("univariate F test on the 1..8 table") {
  const FTestResult r = univariate_f_test(one_to_eight(), Factor::A);
  CHECK(r.f == doctest::Approx(64.0).epsilon(1e-13));
  // Reference value of the F(1, 4) upper tail at 64.
  CHECK(r.p == doctest::Approx(0.001323896909217168).epsilon(1e-10));
  const FTestResult rab = univariate_f_test(one_to_eight(), Factor::AB);
  CHECK(rab.p == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(f_upper_tail(0.0, 3, 7) == 1.0);
  CHECK(f_upper_tail(-1.0, 3, 7) == 1.0);
  CHECK_THROWS_AS(univariate_f_test(DesignTable(2, 2, 2, Matrix::Ones(8, 2)), Factor::A), Error);
}

TEST_CASE("for d = 1 the Hotelling-Lawley eigenvalue is a rescaled F") {
  RngStream rng(45, 0);
  for (int trial = 0; trial < 50; ++trial) {
    const DesignTable t = random_table(3, 4, 3, 1, rng);
    const SopDecomposition s = compute_sop(t);
    const DegreesOfFreedom dof = dof_map(3, 4, 3);
    for (Factor f : kFactors) {
      const double lambda = test_statistic_eigs(numerator(s, f), s.sop_e, SpdMat::identity(1))[0];
      const double f_stat = univariate_f_test(t, f).f;
      CHECK(std::abs(lambda - static_cast<double>(dof.of(f)) / dof.error * f_stat) <= 1e-10 * std::max(1.0, lambda));
    }
  }
}

TEST_CASE("design table validation") {
  CHECK_THROWS_AS(DesignTable(2, 3, 2, Matrix::Zero(11, 1)), Error);
  try {
    DesignTable(2, 3, 2, Matrix::Zero(11, 1));
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnbalancedDesign);
  }
  const DesignTable t(2, 3, 2, Matrix::Zero(12, 3));
  CHECK(t.row(1, 2, 1) == 11);
  CHECK(t.column(2).dim() == 1);
}

TEST_CASE("simulation spec validation") {
  SimulationSpec spec = SimulationSpec::null_model(3, 2, 2, 2);
  CHECK_NOTHROW(spec.validate());
  Matrix bad(3, 2);
  bad << 1, 0, 0, 1, 0, 0;
  spec.effect_a = EffectSpec::fixed_effects(bad);
  CHECK_THROWS_AS(spec.validate(), Error);
  spec.effect_a = EffectSpec::fixed_effects(Matrix::Zero(2, 2));
  CHECK_THROWS_AS(spec.validate(), Error);
  spec.effect_a = EffectSpec::random(SymMat::identity(3));
  CHECK_THROWS_AS(spec.validate(), Error);

  SimulationSpec inter = SimulationSpec::null_model(2, 2, 2, 1);
  Matrix g(4, 1);
  g << 1, -1, -1, 1;
  inter.effect_ab = EffectSpec::fixed_effects(g);
  CHECK_NOTHROW(inter.validate());
  g << 1, -1, 1, -1;
  inter.effect_ab = EffectSpec::fixed_effects(g);
  CHECK_THROWS_AS(inter.validate(), Error);
}

TEST_CASE("null SOPs follow scaled chi-square laws for d = 1") {
  SimulationSpec spec = SimulationSpec::null_model(3, 4, 2, 1);
  spec.error_scale = assert_pd(SymMat::scalar(2.5));
  RngStream rng(46, 0);
  const int reps = 20000;
  std::vector<double> sa(reps), se(reps);
  for (int r = 0; r < reps; ++r) {
    const SopDecomposition s = compute_sop(simulate_design(spec, rng));
    sa[r] = s.sop_a(0, 0) / 2.5;
    se[r] = s.sop_e(0, 0) / 2.5;
  }
  const boost::math::chi_squared_distribution<double> chi_a(2), chi_e(12);
  CHECK(ks_one_sample(sa, [&](double x) { return x <= 0 ? 0.0 : boost::math::cdf(chi_a, x); }) < 0.015);
  CHECK(ks_one_sample(se, [&](double x) { return x <= 0 ? 0.0 : boost::math::cdf(chi_e, x); }) < 0.015);
}

TEST_CASE("pure-noise responses have zero grand mean") {
  RngStream rng(48, 0);
  const SimulationSpec spec = SimulationSpec::null_model(4, 5, 6, 3);
  Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(3);
  double sq = 0.0;
  const int reps = 2000;
  for (int r = 0; r < reps; ++r) {
    const Matrix y = simulate_design(spec, rng).responses();
    sum += y.colwise().sum();
    sq += y.squaredNorm();
  }
  const double count = reps * 120.0;
  CHECK((sum / count).cwiseAbs().maxCoeff() < 4.0 / std::sqrt(count));
  CHECK(std::abs(sq / (count * 3) - 1.0) < 0.01);
}

TEST_CASE("random A effects: SOP_A has mean (a-1)(Sigma + bn Sigma_alpha)") {
  RngStream rng(47, 0);
  const int a = 3, b = 2, n = 3;
  const SpdMat sigma = random_spd(2, rng, 0.5, 2.0);
  const SpdMat sigma_alpha = random_spd(2, rng, 0.2, 1.0);
  const SimulationSpec spec{a, b, n, sigma, EffectSpec::random(sigma_alpha.sym()), EffectSpec::none(),
                            EffectSpec::none()};
  const int reps = 100000;
  Matrix mean_a = Matrix::Zero(2, 2), mean_e = Matrix::Zero(2, 2);
  for (int r = 0; r < reps; ++r) {
    const SopDecomposition s = compute_sop(simulate_design(spec, rng));
    mean_a += s.sop_a.matrix() / reps;
    mean_e += s.sop_e.matrix() / reps;
  }
  const Matrix exp_a = (a - 1) * (sigma.matrix() + b * n * sigma_alpha.matrix());
  const Matrix exp_e = a * b * (n - 1) * sigma.matrix();
  CHECK((mean_a - exp_a).norm() / exp_a.norm() < 0.01);
  CHECK((mean_e - exp_e).norm() / exp_e.norm() < 0.01);
}

TEST_CASE("fixed B effects: SOP_B has the noncentral Wishart mean") {
  RngStream rng(49, 0);
  const int a = 3, b = 2, n = 3;
  const SpdMat sigma = random_spd(2, rng, 0.5, 2.0);
  Matrix fixed_b(2, 2);
  fixed_b << 0.5, -0.3, -0.5, 0.3;
  const SimulationSpec spec{a, b, n, sigma, EffectSpec::none(), EffectSpec::fixed_effects(fixed_b),
                            EffectSpec::none()};
  const int reps = 40000;
  Matrix mean_b = Matrix::Zero(2, 2);
  for (int r = 0; r < reps; ++r) mean_b += compute_sop(simulate_design(spec, rng)).sop_b.matrix() / reps;
  // Mean of W_d(b-1, Sigma, Sigma^{-1} F) with F = an sum_j beta_j beta_j^T.
  const Matrix f = a * n * fixed_b.transpose() * fixed_b;
  const Matrix expected = (b - 1) * sigma.matrix() + f;
  CHECK((mean_b - expected).norm() / expected.norm() < 0.03);
}

TEST_CASE("null Hotelling-Lawley statistic matches direct Beta II draws in mean") {
  const int a = 4, b = 3, n = 3, d = 2;
  const SimulationSpec spec = SimulationSpec::null_model(a, b, n, d);
  const DegreesOfFreedom dof = dof_map(a, b, n);
  RngStream rng(50, 0);
  const int reps = 100000;
  double from_tables = 0.0;
  double from_beta = 0.0;
  const BetaIIParams law(dof.a, dof.error, d);
  for (int r = 0; r < reps; ++r) {
    const SopDecomposition s = compute_sop(simulate_design(spec, rng));
    from_tables += scalar_statistic(test_statistic_eigs(s.sop_a, s.sop_e, SpdMat::identity(d)),
                                    StatisticFunctional::HotellingLawley);
    from_beta += sample_beta2(law, rng).matrix().trace();
  }
  CHECK(std::abs(from_tables - from_beta) / from_beta < 0.02);
}
