#pragma once

#include <Eigen/Dense>

#include "matvar/error.hpp"

namespace matvar {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Eigenvalue tolerances, all relative to the largest eigenvalue.
struct Tolerances {
  double pd = 1e-12;   // PD requires every eigenvalue > pd * lambda_max
  double psd = 1e-10;  // PSD tolerates eigenvalues down to -psd * lambda_max
  double rec = 1e-8;   // reconstruction accuracy promised by sym_sqrt
};

const Tolerances& tolerances();
void set_tolerances(const Tolerances& tol);

/// Real symmetric d x d matrix. Only the upper triangle of the source is
/// read; the lower triangle is always its mirror.
class SymMat {
 public:
  SymMat() = default;
  explicit SymMat(const Matrix& m);

  static SymMat zero(Eigen::Index d);
  static SymMat identity(Eigen::Index d);
  static SymMat scalar(double v);
  static SymMat diagonal(const Vector& diag);

  Eigen::Index dim() const { return m_.rows(); }
  double operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }
  const Matrix& matrix() const { return m_; }
  double trace() const { return m_.trace(); }

  SymMat operator+(const SymMat& o) const;
  SymMat operator-(const SymMat& o) const;
  SymMat operator*(double s) const;

 private:
  Matrix m_;
};

inline SymMat operator*(double s, const SymMat& m) { return m * s; }

enum class Definiteness { PSD, PD };

/// A symmetric matrix whose spectrum has been checked. Eigenvalues in the
/// PSD tolerance band below zero are clipped to zero and the stored matrix is
/// rebuilt from the clipped spectrum.
class SpdMat {
 public:
  SpdMat() = default;

  const SymMat& sym() const { return base_; }
  const Matrix& matrix() const { return base_.matrix(); }
  double operator()(Eigen::Index i, Eigen::Index j) const { return base_(i, j); }
  Eigen::Index dim() const { return base_.dim(); }
  Definiteness kind() const { return kind_; }
  bool is_pd() const { return kind_ == Definiteness::PD; }

  /// Ascending eigenvalues (after clipping) and matching eigenvectors.
  const Vector& eigenvalues() const { return evals_; }
  const Matrix& eigenvectors() const { return evecs_; }

  /// Inverse; requires PD.
  SpdMat inverse() const;
  /// Symmetric inverse square root; requires PD.
  SpdMat inv_sqrt() const;
  double log_det() const;

  static SpdMat identity(Eigen::Index d);

 private:
  friend SpdMat assert_pd(const SymMat& m);
  friend SpdMat assert_strict_pd(const SymMat& m);
  friend SpdMat sym_sqrt(const SpdMat& p);
  static SpdMat from_spectrum(const Vector& evals, const Matrix& evecs);

  SymMat base_;
  Definiteness kind_ = Definiteness::PSD;
  Vector evals_;
  Matrix evecs_;
};

/// Classifies m as PD or PSD; throws NotPsd otherwise.
SpdMat assert_pd(const SymMat& m);
/// Same as assert_pd but throws NotPsd unless the result is PD.
SpdMat assert_strict_pd(const SymMat& m);

/// Symmetric square root via eigendecomposition.
SpdMat sym_sqrt(const SpdMat& p);

/// P^{1/2} R P^{1/2}.
SymMat conjugate(const SymMat& r, const SpdMat& p);

/// exp(tr(m)).
double etr(const Matrix& m);

/// Symmetrises an arbitrary square matrix as (m + m^T) / 2.
SymMat symmetrize(const Matrix& m);

/// Gamma_d(beta) argument; validated on construction.
class MultiGammaArg {
 public:
  MultiGammaArg(double beta, int dim);
  double beta() const { return beta_; }
  int dim() const { return dim_; }

 private:
  double beta_;
  int dim_;
};

/// log Gamma_d(beta) = d(d-1)/4 log(pi) + sum_j log Gamma(beta - (j-1)/2).
double log_multivariate_gamma(const MultiGammaArg& arg);
double multivariate_gamma(const MultiGammaArg& arg);

}  // namespace matvar
