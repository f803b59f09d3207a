#include "matvar/manova.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include <boost/math/distributions/fisher_f.hpp>

namespace matvar {

namespace {

Matrix standard_normal(Eigen::Index rows, Eigen::Index cols, RngStream& rng) {
  Matrix z(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) z(i, j) = rng.normal();
  return z;
}

SymMat outer_sum(const Matrix& deviations, double weight) {
  return SymMat(Matrix(weight * deviations.transpose() * deviations));
}

void check_zero_average(const Matrix& values, const std::string& what) {
  const double scale = std::max(1.0, values.cwiseAbs().maxCoeff());
  if (values.colwise().mean().cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw Error(ErrorCode::InvalidSpec, what + " must average to the zero vector");
  }
}

void check_effect(const EffectSpec& e, Eigen::Index rows, int d, const std::string& what) {
  switch (e.mode) {
    case EffectMode::None:
      return;
    case EffectMode::Random:
      if (!e.covariance || e.covariance->dim() != d) {
        throw Error(ErrorCode::InvalidSpec, what + " random effect needs a " + std::to_string(d) + "x" +
                                                std::to_string(d) + " covariance");
      }
      assert_pd(*e.covariance);
      return;
    case EffectMode::Fixed:
      if (e.fixed.rows() != rows || e.fixed.cols() != d) {
        throw Error(ErrorCode::InvalidSpec, what + " fixed effects need " + std::to_string(rows) + " rows of dimension " +
                                                std::to_string(d));
      }
      if (!e.fixed.allFinite()) throw Error(ErrorCode::InvalidSpec, what + " fixed effects must be finite");
      return;
  }
}

Matrix draw_random(const SymMat& cov, Eigen::Index rows, RngStream& rng) {
  const Matrix root = sym_sqrt(assert_pd(cov)).matrix();
  return standard_normal(rows, cov.dim(), rng) * root;
}

Matrix centred(Matrix m) {
  m.rowwise() -= m.colwise().mean();
  return m;
}

/// Removes row-level and column-level averages from an (a*b) x d interaction
/// block indexed i*b + j.
Matrix double_centred(const Matrix& m, int a, int b) {
  const Eigen::Index d = m.cols();
  Matrix row_mean = Matrix::Zero(a, d);
  Matrix col_mean = Matrix::Zero(b, d);
  for (int i = 0; i < a; ++i)
    for (int j = 0; j < b; ++j) {
      row_mean.row(i) += m.row(i * b + j) / b;
      col_mean.row(j) += m.row(i * b + j) / a;
    }
  const Eigen::RowVectorXd grand = m.colwise().mean();
  Matrix out = m;
  for (int i = 0; i < a; ++i)
    for (int j = 0; j < b; ++j) out.row(i * b + j) += grand - row_mean.row(i) - col_mean.row(j);
  return out;
}

}  // namespace

DesignTable::DesignTable(int levels_a, int levels_b, int reps, Matrix responses)
    : a_(levels_a), b_(levels_b), n_(reps), y_(std::move(responses)) {
  if (a_ < 1 || b_ < 1 || n_ < 1) throw Error(ErrorCode::UnbalancedDesign, "a, b and n must all be positive");
  if (y_.rows() != static_cast<Eigen::Index>(a_) * b_ * n_) {
    throw Error(ErrorCode::UnbalancedDesign, "expected a*b*n = " + std::to_string(a_ * b_ * n_) + " responses, got " +
                                                 std::to_string(y_.rows()));
  }
  if (y_.cols() < 1) throw Error(ErrorCode::UnbalancedDesign, "responses need at least one column");
  if (!y_.allFinite()) throw Error(ErrorCode::UnparseableValue, "responses must be finite");
}

DesignTable DesignTable::column(int c) const {
  DesignTable out(a_, b_, n_, y_.col(c));
  out.labels_a = labels_a;
  out.labels_b = labels_b;
  if (static_cast<std::size_t>(c) < response_names.size()) out.response_names = {response_names[c]};
  return out;
}

const char* to_string(Factor f) {
  switch (f) {
    case Factor::A: return "A";
    case Factor::B: return "B";
    case Factor::AB: return "AB";
  }
  return "?";
}

const char* to_string(StatisticFunctional f) {
  switch (f) {
    case StatisticFunctional::Wilks: return "wilks";
    case StatisticFunctional::Pillai: return "pillai";
    case StatisticFunctional::HotellingLawley: return "hotelling-lawley";
    case StatisticFunctional::Roy: return "roy";
  }
  return "?";
}

StatisticFunctional parse_functional(std::string_view name) {
  for (StatisticFunctional f : kFunctionals)
    if (name == to_string(f)) return f;
  throw Error(ErrorCode::InvalidSpec, "unknown functional '" + std::string(name) +
                                          "' (expected wilks, pillai, hotelling-lawley or roy)");
}

SopDecomposition compute_sop(const DesignTable& table) {
  const int a = table.levels_a();
  const int b = table.levels_b();
  const int n = table.reps();
  const int d = table.dim();
  if (n < 2) throw Error(ErrorCode::DegenerateDesign, "n >= 2 replicates per cell are required for SOP_E");

  // Shifting by one observation leaves every SOP unchanged and keeps
  // constant data exactly zero after centring.
  Matrix y = table.responses();
  y.rowwise() -= Eigen::RowVectorXd(y.row(0));

  Matrix cell(static_cast<Eigen::Index>(a) * b, d);
  for (int i = 0; i < a; ++i)
    for (int j = 0; j < b; ++j)
      cell.row(i * b + j) = y.middleRows(table.row(i, j, 0), n).colwise().mean();
  Matrix row_mean = Matrix::Zero(a, d);
  Matrix col_mean = Matrix::Zero(b, d);
  for (int i = 0; i < a; ++i) row_mean.row(i) = cell.middleRows(static_cast<Eigen::Index>(i) * b, b).colwise().mean();
  for (int j = 0; j < b; ++j) {
    Eigen::RowVectorXd s = Eigen::RowVectorXd::Zero(d);
    for (int i = 0; i < a; ++i) s += cell.row(i * b + j);
    col_mean.row(j) = s / a;
  }
  const Eigen::RowVectorXd grand = cell.colwise().mean();

  Matrix dev_total = y.rowwise() - grand;
  Matrix dev_error(y.rows(), d);
  for (int i = 0; i < a; ++i)
    for (int j = 0; j < b; ++j)
      for (int k = 0; k < n; ++k) dev_error.row(table.row(i, j, k)) = y.row(table.row(i, j, k)) - cell.row(i * b + j);
  Matrix dev_ab(cell.rows(), d);
  for (int i = 0; i < a; ++i)
    for (int j = 0; j < b; ++j) dev_ab.row(i * b + j) = cell.row(i * b + j) - row_mean.row(i) - col_mean.row(j) + grand;

  return SopDecomposition{
      outer_sum(row_mean.rowwise() - grand, static_cast<double>(b) * n),
      outer_sum(col_mean.rowwise() - grand, static_cast<double>(a) * n),
      outer_sum(dev_ab, n),
      outer_sum(dev_error, 1.0),
      outer_sum(dev_total, 1.0),
  };
}

const SymMat& numerator(const SopDecomposition& sop, Factor f) {
  switch (f) {
    case Factor::A: return sop.sop_a;
    case Factor::B: return sop.sop_b;
    case Factor::AB: return sop.sop_ab;
  }
  return sop.sop_a;
}

std::vector<double> test_statistic_eigs(const SymMat& numerator, const SymMat& sop_e, const SpdMat& sigma) {
  if (numerator.dim() != sop_e.dim() || sigma.dim() != sop_e.dim()) {
    throw Error(ErrorCode::DimensionMismatch, "numerator, SOP_E and sigma must share one dimension");
  }
  const auto d = static_cast<std::size_t>(sop_e.dim());
  // S V^{-1} = 0 for any invertible V; this also covers constant data where
  // SOP_E vanishes together with the numerator.
  if (numerator.matrix().isZero(0.0)) return std::vector<double>(d, 0.0);

  // Whiten with triangular solves against Cholesky factors; square roots
  // taken through eigendecompositions lose accuracy on badly scaled data.
  const Eigen::LLT<Matrix> sigma_llt(sigma.matrix());
  auto whiten = [&](const Matrix& m) {
    const Matrix half = sigma_llt.matrixL().solve(m);
    const Matrix full = sigma_llt.matrixL().solve(Matrix(half.transpose()));
    return Matrix(0.5 * (full + full.transpose()));
  };
  const Matrix v = whiten(sop_e.matrix());
  try {
    assert_strict_pd(SymMat(v));
  } catch (const Error&) {
    throw Error(ErrorCode::SingularErrorMatrix, "SOP_E is not positive definite; need ab(n-1) >= d");
  }
  const Eigen::LLT<Matrix> v_llt(v);
  const Matrix half = v_llt.matrixL().solve(whiten(numerator.matrix()));
  const Matrix reduced = v_llt.matrixL().solve(Matrix(half.transpose()));
  Eigen::SelfAdjointEigenSolver<Matrix> es(Matrix(0.5 * (reduced + reduced.transpose())), Eigen::EigenvaluesOnly);
  std::vector<double> out(d);
  for (std::size_t i = 0; i < d; ++i) out[i] = std::max(0.0, es.eigenvalues()(static_cast<Eigen::Index>(d - 1 - i)));
  return out;
}

double scalar_statistic(std::span<const double> eigs, StatisticFunctional functional) {
  switch (functional) {
    case StatisticFunctional::Wilks: {
      double v = 1.0;
      for (double l : eigs) v /= 1.0 + l;
      return v;
    }
    case StatisticFunctional::Pillai: {
      double v = 0.0;
      for (double l : eigs) v += l / (1.0 + l);
      return v;
    }
    case StatisticFunctional::HotellingLawley: {
      double v = 0.0;
      for (double l : eigs) v += l;
      return v;
    }
    case StatisticFunctional::Roy:
      return eigs.empty() ? 0.0 : *std::max_element(eigs.begin(), eigs.end());
  }
  return 0.0;
}

int DegreesOfFreedom::of(Factor f) const {
  switch (f) {
    case Factor::A: return a;
    case Factor::B: return b;
    case Factor::AB: return ab;
  }
  return 0;
}

DegreesOfFreedom dof_map(int a, int b, int n) {
  if (a < 2 || b < 2 || n < 2) {
    throw Error(ErrorCode::DegenerateDesign, "need a, b, n >= 2, got a=" + std::to_string(a) +
                                                 ", b=" + std::to_string(b) + ", n=" + std::to_string(n));
  }
  return {a - 1, b - 1, (a - 1) * (b - 1), a * b * (n - 1)};
}

double f_upper_tail(double f, double dof1, double dof2) {
  if (f <= 0.0) return 1.0;
  return boost::math::cdf(boost::math::complement(boost::math::fisher_f_distribution<double>(dof1, dof2), f));
}

FTestResult univariate_f_test(const DesignTable& table, Factor which) {
  if (table.dim() != 1) throw Error(ErrorCode::DimensionMismatch, "univariate F test needs d = 1");
  const DegreesOfFreedom dof = dof_map(table.levels_a(), table.levels_b(), table.reps());
  const SopDecomposition sop = compute_sop(table);
  const double ss = numerator(sop, which)(0, 0);
  const double sse = sop.sop_e(0, 0);
  if (ss == 0.0) return {0.0, 1.0};
  if (sse <= 0.0) throw Error(ErrorCode::DegenerateDesign, "error sum of squares is zero");
  const double f = (ss / dof.of(which)) / (sse / dof.error);
  return {f, f_upper_tail(f, dof.of(which), dof.error)};
}

void SimulationSpec::validate() const {
  if (a < 2 || b < 2 || n < 1) throw Error(ErrorCode::InvalidSpec, "simulation needs a, b >= 2 and n >= 1");
  if (!error_scale.is_pd()) throw Error(ErrorCode::InvalidSpec, "error scale must be positive definite");
  const int d = dim();
  check_effect(effect_a, a, d, "factor A");
  check_effect(effect_b, b, d, "factor B");
  check_effect(effect_ab, static_cast<Eigen::Index>(a) * b, d, "interaction AB");
  if (effect_a.mode == EffectMode::Fixed) check_zero_average(effect_a.fixed, "fixed A effects");
  if (effect_b.mode == EffectMode::Fixed) check_zero_average(effect_b.fixed, "fixed B effects");
  if (effect_ab.mode == EffectMode::Fixed) {
    const Matrix& m = effect_ab.fixed;
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    if ((double_centred(m, a, b) - m).cwiseAbs().maxCoeff() > 1e-12 * scale) {
      throw Error(ErrorCode::InvalidSpec, "fixed AB effects must average to zero over each row and column");
    }
  }
}

SimulationSpec SimulationSpec::null_model(int a, int b, int n, int d) {
  return SimulationSpec{a, b, n, SpdMat::identity(d), EffectSpec::none(), EffectSpec::none(), EffectSpec::none()};
}

DesignTable simulate_design(const SimulationSpec& spec, RngStream& rng) {
  spec.validate();
  const int a = spec.a;
  const int b = spec.b;
  const int n = spec.n;
  const int d = spec.dim();

  auto effect = [&](const EffectSpec& e, Eigen::Index rows, const std::function<Matrix(Matrix)>& centre) -> Matrix {
    switch (e.mode) {
      case EffectMode::None: return Matrix::Zero(rows, d);
      case EffectMode::Random: return centre(draw_random(*e.covariance, rows, rng));
      case EffectMode::Fixed: return e.fixed;
    }
    return Matrix::Zero(rows, d);
  };
  const Matrix alpha = effect(spec.effect_a, a, centred);
  const Matrix beta = effect(spec.effect_b, b, centred);
  const Matrix gamma = effect(spec.effect_ab, static_cast<Eigen::Index>(a) * b,
                              [&](Matrix m) { return double_centred(m, a, b); });

  const Matrix root = sym_sqrt(spec.error_scale).matrix();
  Matrix y = standard_normal(static_cast<Eigen::Index>(a) * b * n, d, rng) * root;
  DesignTable shape(a, b, n, Matrix::Zero(static_cast<Eigen::Index>(a) * b * n, d));
  for (int i = 0; i < a; ++i)
    for (int j = 0; j < b; ++j)
      for (int k = 0; k < n; ++k) y.row(shape.row(i, j, k)) += alpha.row(i) + beta.row(j) + gamma.row(i * b + j);
  return DesignTable(a, b, n, std::move(y));
}

int numerical_rank(const SymMat& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m.matrix(), Eigen::EigenvaluesOnly);
  const double scale = es.eigenvalues().cwiseAbs().maxCoeff();
  if (scale == 0.0) return 0;
  return static_cast<int>((es.eigenvalues().array() > 1e-9 * scale).count());
}

}  // namespace matvar
