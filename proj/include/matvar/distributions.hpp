#pragma once

#include <cstdint>

#include "matvar/rng.hpp"
#include "matvar/symmat.hpp"

namespace matvar {

/// N ~ N_{rows x d}(mean, I_rows (x) scale).
struct MatrixNormalParams {
  Matrix mean;
  SpdMat scale;

  MatrixNormalParams(Matrix mean, SpdMat scale);
  Eigen::Index rows() const { return mean.rows(); }
  Eigen::Index dim() const { return mean.cols(); }
};

/// W_d(dof, scale, Theta) with the noncentrality held as Delta = scale * Theta,
/// which is symmetric PSD.
class WishartParams {
 public:
  WishartParams(double dof, SpdMat scale, SpdMat noncentrality);
  /// Central W_d(dof, scale).
  WishartParams(double dof, SpdMat scale);

  double dof() const { return dof_; }
  const SpdMat& scale() const { return scale_; }
  const SpdMat& noncentrality() const { return delta_; }
  Eigen::Index dim() const { return scale_.dim(); }
  bool is_central() const;
  /// Theta = scale^{-1} Delta; generally not symmetric.
  Matrix theta() const;
  /// True when dof is an integer >= d, i.e. the outer-product construction applies.
  bool has_integer_dof() const;

 private:
  double dof_;
  SpdMat scale_;
  SpdMat delta_;
};

/// B_d(dof1/2, dof2/2), the matrix-variate F distribution.
struct BetaIIParams {
  double dof1;
  double dof2;
  int dim;

  BetaIIParams(double dof1, double dof2, int dim);
};

enum class WishartMethod {
  Auto,          // Bartlett when central, outer product otherwise
  Bartlett,      // central only, any real dof > d - 1
  OuterProduct,  // integer dof >= d
};

Matrix sample_matrix_normal(const MatrixNormalParams& params, RngStream& rng);

SpdMat sample_wishart(const WishartParams& params, RngStream& rng, WishartMethod method = WishartMethod::Auto);

/// Closed-form MGF E[etr(T X)]; throws OutsideDomain unless scale^{-1} - 2T is PD.
double wishart_mgf(const WishartParams& params, const SymMat& t);
double log_wishart_mgf(const WishartParams& params, const SymMat& t);

/// E[X] = dof * scale + Delta.
SymMat wishart_mean(const WishartParams& params);

SpdMat sample_beta2(const BetaIIParams& params, RngStream& rng);

/// One draw from the scalar noncentral chi-square with the given dof and
/// noncentrality, as a Poisson(noncen/2) mixture of central chi-squares.
double sample_noncentral_chisq(double dof, double noncen, RngStream& rng);

/// Random symmetric matrix Q diag(l) Q^T with Haar-random Q and eigenvalues
/// uniform on [min_eig, max_eig]. Used to generate test inputs.
SpdMat random_spd(Eigen::Index d, RngStream& rng, double min_eig, double max_eig);

}  // namespace matvar
